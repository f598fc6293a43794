#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/dataset.hpp"
#include "isel/graph.hpp"

namespace isel {

enum class LshFamily { angular, euclidean };

LshFamily lsh_family_from_string(const std::string& s);
std::string lsh_family_to_string(LshFamily f);

struct LshParams {
    LshFamily family = LshFamily::angular;
    int tables = 10;          // L
    int bits = 8;             // k projections per table
    double width = 4.0;       // w, euclidean quantization cell
    int split_threshold = 50; // theta: buckets above this split
    int merge_limit = 50;     // gamma: merge only when |B1|+|B2| < gamma
    int levels = 2;           // M, multi-level builds
    int views = 2;            // V, multi-view builds
};

struct Bucket {
    std::vector<int32_t> code;       // base hashes then split bits
    std::vector<uint32_t> members;   // node indices, ascending
    bool depth_capped = false;
};

struct HashTable {
    int view = 0;
    int level = 0;  // 0 for single-level tables
    int index = 0;
    std::vector<std::vector<double>> base_proj;   // k vectors of d entries, N(0,1)/sqrt(k)
    std::vector<double> shifts;                   // euclidean only, U[0, w)
    std::vector<std::vector<double>> split_proj;  // appended by splits, N(0,1)/sqrt(d)
    std::vector<Bucket> buckets;                  // final, sorted by (code length, code)
    std::vector<int32_t> bucket_of;               // final bucket per node
    uint64_t splits = 0, merges = 0, capped = 0;
};

struct LshIndex {
    uint32_t n = 0;
    LshFamily family = LshFamily::angular;
    std::vector<HashTable> tables;
};

struct LshBuildResult {
    MultiGraph graph;   // node_ids = pool rows (every pool member is a node)
    LshIndex index;
    double gct_seconds = 0.0;
    uint64_t splits = 0, merges = 0, capped_buckets = 0;
};

struct BucketQuality {
    double separation = 0.0;    // mean intra-bucket cosine sim / mean inter-bucket
    double purity = 0.0;        // size-weighted majority-class fraction
    double recall_at_5 = 0.0;   // true cosine 5-NN sharing >= 1 bucket
    double pearson_rho = 0.0;   // collision count vs cosine similarity
    double mean_bucket_size = 0.0;
    std::vector<std::string> warnings;
};

// Base hash of one point: angular sign bits (sign(0) counts as +), euclidean
// floor((p.x + b)/w) cells.
std::vector<int32_t> hash_point(const double* x, int d, const HashTable& t, LshFamily family,
                                double width);

// Single-level index: L tables at (view 0, level 0).
LshBuildResult build_sl_graph(const Dataset& ds, const std::vector<int>& pool,
                              const LshParams& p, uint64_t seed);
// Multi-level: levels m = 1..M with L*2^m tables of k*2^m projections and
// split threshold max(2, round(theta/2^m)); errors when k*2^m > 64*d.
LshBuildResult build_ml_graph(const Dataset& ds, const std::vector<int>& pool,
                              const LshParams& p, uint64_t seed);
// Multi-view multi-level: the ML construction per view with independent hash
// streams; V=1 reproduces build_ml_graph exactly for the same seed.
LshBuildResult build_mvml_graph(const Dataset& ds, const std::vector<int>& pool,
                                const LshParams& p, uint64_t seed);

// Quality metrics over the final buckets; pair sampling capped at 100k pairs,
// recall sampled over min(n, 200) query points.
BucketQuality bucket_quality(const LshIndex& index, const Dataset& ds,
                             const std::vector<uint32_t>& node_rows, uint64_t seed);

}  // namespace isel
