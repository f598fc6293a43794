#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/common.hpp"

namespace isel {

// CSV as read from disk, cells untyped. target_col indexes column_names.
struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;
    int target_col = -1;
};

enum class FeatureKind { numeric, categorical };

struct Dataset {
    int n = 0;
    int d = 0;
    int classes = 0;
    std::vector<double> X;        // n x d row-major, min-max scaled to [0,1]
    std::vector<int> y;           // dense labels 0..classes-1, first-appearance order
    std::vector<std::string> feature_names;
    std::vector<FeatureKind> feature_kinds;
    std::vector<std::string> class_names;  // original label strings by code
    std::string target_name;
    std::vector<std::string> warnings;

    const double* row(int i) const { return X.data() + size_t(i) * d; }
};

struct SplitMasks {
    std::vector<int> train, valid, test;  // sorted dataset row indices
    std::vector<std::string> warnings;
};

// Header + comma-separated rows; no quoting support. Errors name the file,
// column, and 1-based data row.
RawTable load_csv(const std::string& path, const std::string& target);

// Column typing: a column where every cell parses as a finite double is
// numeric; a column where none do is categorical (first-appearance integer
// codes); anything mixed is an error naming the first offending cell. Empty
// cells are rejected. Numeric features then min-max scale to [0,1] (constant
// features map to 0). Labels re-index densely in file order of appearance.
Dataset preprocess(const RawTable& raw);

// Per-class seeded shuffle then slicing. Valid/test counts start at
// floor(fraction * class_count); the units needed to reach
// round(fraction * n_eligible) go to the classes with the largest fractional
// remainders (ties: fewer units already taken from that class, then lower
// class index); everything left is train. Classes with fewer than 3 instances
// go wholly to train with a warning.
SplitMasks stratified_split(const Dataset& ds, double train_frac, double valid_frac,
                            double test_frac, uint64_t seed);

// Bundle directory: X.f64le, y.u32le, masks.json, meta.json.
void write_bundle(const std::string& dir, const Dataset& ds, const SplitMasks& masks,
                  const std::string& source_csv);
struct Bundle {
    Dataset dataset;
    SplitMasks masks;
    std::string source_csv;
};
Bundle read_bundle(const std::string& dir);

}  // namespace isel
