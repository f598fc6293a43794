#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/common.hpp"

namespace isel {

// Everything the model needs is rank-2; scalars are 1x1, column vectors Nx1.
// Storage is row-major f64.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(size_t(r) * size_t(c), 0.0) {}
    Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {}

    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.v[0] = x;
        return t;
    }
    static Tensor zeros(int r, int c) { return Tensor(r, c); }

    size_t numel() const { return v.size(); }
    double& at(int r, int c) { return v[size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[size_t(r) * cols + c]; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// Named parameter map used by checkpoints; deterministic order (sorted names).
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

void write_checkpoint(const std::string& bin_path, const std::string& manifest_path,
                      const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::string& bin_path,
                                         const std::string& manifest_path);

}  // namespace isel
