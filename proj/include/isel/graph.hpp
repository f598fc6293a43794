#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "isel/common.hpp"

namespace isel {

// Directed arcs tagged by (view, level). Arcs are stored sorted and deduped;
// self-arcs are never stored (models add self-loops themselves).
struct ArcSet {
    int view = 0;
    int level = 0;
    std::vector<std::pair<uint32_t, uint32_t>> arcs;
};

struct MultiGraph {
    uint32_t n = 0;
    std::vector<uint32_t> node_ids;  // dataset row per graph node; empty means identity
    std::vector<ArcSet> sets;        // sorted by (view, level)

    const ArcSet* find_set(int view, int level) const {
        for (const auto& s : sets)
            if (s.view == view && s.level == level) return &s;
        return nullptr;
    }
    size_t total_arcs() const {
        size_t t = 0;
        for (const auto& s : sets) t += s.arcs.size();
        return t;
    }
    // per-node in-degree summed over every arc set; the symmetric storage
    // makes this the undirected degree
    std::vector<uint32_t> degree_profile() const;
};

class GraphBuilder {
public:
    explicit GraphBuilder(uint32_t n) : n_(n) {}

    // Self-arcs are rejected (counted), duplicates ignored (counted).
    void add_arc(int view, int level, uint32_t u, uint32_t v);
    void add_undirected(int view, int level, uint32_t u, uint32_t v);
    void ensure_set(int view, int level);  // keeps empty arc sets in the output

    uint64_t self_loop_rejections() const { return self_rejected_; }
    uint64_t duplicate_arcs() const { return duplicates_; }

    MultiGraph build(std::vector<uint32_t> node_ids = {}) const;

private:
    uint32_t n_;
    std::map<std::pair<int, int>, std::unordered_set<uint64_t>> sets_;
    uint64_t self_rejected_ = 0;
    uint64_t duplicates_ = 0;
};

// Exact k-nearest-neighbour baseline: undirected arcs from every pool member
// to its k nearest by Euclidean distance (ties toward the smaller pool
// position), one arc set at (view 0, level 0). Graph nodes map to pool rows.
struct KnnGraphResult {
    MultiGraph graph;
    double gct_seconds = 0.0;
};
KnnGraphResult build_knn_graph(const double* X, int d, const std::vector<int>& pool, int k);

// Text format:
//   n <node_count> sets <arc_set_count>
//   set <view> <level> <arc_count>
//   u v            (arc_count lines)
// Sets ordered by (view, level), arcs lexicographically. One canonical form:
// serializing a graph read back from the file reproduces it byte for byte.
std::string write_graph_text(const MultiGraph& g);
void write_graph_file(const std::string& path, const MultiGraph& g);
MultiGraph read_graph_text(const std::string& text);
MultiGraph read_graph_file(const std::string& path);

}  // namespace isel
