#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/dataset.hpp"

namespace isel {

// Unscaled generated data. Rows are grouped by class in ascending class id so
// that label codes survive a CSV round trip through first-appearance coding.
struct RawData {
    std::string name;
    int n = 0, d = 0, classes = 0;
    std::vector<double> X;  // n x d row-major
    std::vector<int> y;
};

// Isotropic Gaussian clusters around uniform centers in [-5, 5]^d.
RawData make_blobs(int n, int d, int classes, double spread, uint64_t seed);

// Two interleaved crescents in the plane with Gaussian jitter.
RawData make_banana(int n, double noise, uint64_t seed);

// Two unit-variance Gaussians at +/- (2/sqrt(20)) * 1 in 20 dimensions.
RawData make_twonorm(int n, uint64_t seed);

// A wide Gaussian shell N(0, 4I) against a shifted unit Gaussian, 20 dims.
RawData make_ringnorm(int n, uint64_t seed);

// Two-class imbalanced mixture in 5 dimensions (about 71% / 29%).
RawData make_phoneme_like(int n, uint64_t seed);

// Seven clusters in 19 dimensions with class-dependent spread and a block of
// correlated columns.
RawData make_segment_like(int n, uint64_t seed);

// Same scaling rules as the CSV path: per-column min-max to [0, 1], constant
// columns to 0. Class names are the decimal label strings.
Dataset to_dataset(const RawData& raw);

// Header f0..f{d-1},label; feature cells printed with %.17g so the text round
// trip is exact.
std::string to_csv(const RawData& raw);

}  // namespace isel
