#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "isel/common.hpp"

// Hot inner loops, written twice: kernels:: runs the OpenMP versions used by
// the library, kernels::serial:: keeps plain reference loops for tests and the
// benchmark. Parallel variants assign every output element to exactly one
// thread and keep each element's reduction order fixed, so results are
// bit-identical to the serial versions at any thread count.
namespace isel::kernels {

void set_threads(int n);  // <=0 restores the OpenMP default
int thread_count();

// S = 1 - d for cosine distance, 1/(1+d) otherwise; cosine distance of a zero
// vector is defined as 1 (similarity 0).
inline double similarity(const double* u, const double* v, int d, Metric m) {
    switch (m) {
        case Metric::euclidean: {
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double t = u[i] - v[i];
                s += t * t;
            }
            return 1.0 / (1.0 + std::sqrt(s));
        }
        case Metric::cosine: {
            double dot = 0.0, nu = 0.0, nv = 0.0;
            for (int i = 0; i < d; ++i) {
                dot += u[i] * v[i];
                nu += u[i] * u[i];
                nv += v[i] * v[i];
            }
            if (nu == 0.0 || nv == 0.0) return 0.0;
            return dot / (std::sqrt(nu) * std::sqrt(nv));
        }
        case Metric::manhattan: {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += std::fabs(u[i] - v[i]);
            return 1.0 / (1.0 + s);
        }
    }
    return 0.0;
}

// C[m x n] = A[m x k] * B[k x n], row-major.
void matmul(const double* A, const double* B, double* C, int m, int k, int n);
// C[m x n] = A[m x k] * B^T, B given row-major as [n x k].
void matmul_transb(const double* A, const double* B, double* C, int m, int k, int n);

// Packed upper triangle of the pairwise similarity matrix of X rows idx[0..w):
// out must hold w*(w-1)/2 values, entry for (i<j) at i*w - i*(i+1)/2 + (j-i-1).
void pairwise_similarity(const double* X, int d, const std::vector<uint32_t>& idx,
                         Metric metric, double* out);

// Exact k nearest neighbours by Euclidean distance among rows idx, self
// excluded; ties broken toward the smaller row position. out_idx holds k
// neighbour positions (indices into idx) per query, row-major.
void knn_exact(const double* X, int d, const std::vector<uint32_t>& idx, int k,
               std::vector<uint32_t>& out_idx);

namespace serial {
void matmul(const double* A, const double* B, double* C, int m, int k, int n);
void matmul_transb(const double* A, const double* B, double* C, int m, int k, int n);
void pairwise_similarity(const double* X, int d, const std::vector<uint32_t>& idx,
                         Metric metric, double* out);
void knn_exact(const double* X, int d, const std::vector<uint32_t>& idx, int k,
               std::vector<uint32_t>& out_idx);
}  // namespace serial

}  // namespace isel::kernels
