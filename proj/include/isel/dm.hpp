#pragma once

#include <cstdint>
#include <vector>

#include "isel/dataset.hpp"
#include "isel/graph.hpp"

namespace isel {

struct DmParams {
    int batch_count = 5;       // K
    int batch_cap = 7000;      // w_max
    double sample_fraction = 1.0;  // f_original
    Metric metric = Metric::euclidean;
    double percentile = 95.0;  // p; edges keep similarity strictly above the threshold
};

struct DmBatchStats {
    int size = 0;
    double threshold = 0.0;
    uint64_t edges = 0;  // undirected pairs above threshold
};

struct DmResult {
    MultiGraph graph;  // node_ids map graph nodes to dataset rows
    std::vector<DmBatchStats> batches;
    int leftover = 0;  // pool instances never sampled into any batch
    double gct_seconds = 0.0;
};

// Effective per-batch sampling fraction: min(w_max / n, f_original).
double sampling_fraction(int n, const DmParams& p);

// Linear-interpolation percentile of the values as given (values are copied
// and sorted). p in [0, 100].
double percentile_linear(std::vector<double> values, double p);

// Percentile of the full off-diagonal similarity matrix given its packed
// upper triangle: every unordered pair counts twice, matching the symmetric
// matrix without materializing it. tri is partially reordered in place.
double percentile_offdiag(std::vector<double>& tri, double p);

// Stratified sampling without replacement into at most K batches. Batch k
// targets round(f * |remaining|) capped at w_max; per-class counts are
// proportional to the class share of the remaining pool (floor, then largest
// remainder until the target is met). Returned batches hold pool positions.
std::vector<std::vector<uint32_t>> dm_batches(const std::vector<int>& labels_of_pool,
                                              const DmParams& p, uint64_t seed);

// pool holds dataset row indices (typically the train mask). Nodes of the
// result are the union of all batch members, ordered by dataset row.
DmResult build_dm_graph(const Dataset& ds, const std::vector<int>& pool, const DmParams& p,
                        uint64_t seed);

}  // namespace isel
