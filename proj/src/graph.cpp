#include "isel/graph.hpp"

#include <algorithm>
#include <sstream>

#include "isel/kernels.hpp"

namespace isel {

std::vector<uint32_t> MultiGraph::degree_profile() const {
    // in-degree per node; equals the undirected degree because construction
    // stores both arc directions
    std::vector<uint32_t> deg(n, 0);
    for (const auto& s : sets)
        for (auto [u, v] : s.arcs) {
            (void)u;
            ++deg[v];
        }
    return deg;
}

void GraphBuilder::add_arc(int view, int level, uint32_t u, uint32_t v) {
    if (u >= n_ || v >= n_) throw DataError("arc endpoint out of range");
    if (u == v) {
        ++self_rejected_;
        return;
    }
    auto& s = sets_[{view, level}];
    uint64_t key = (uint64_t(u) << 32) | v;
    if (!s.insert(key).second) ++duplicates_;
}

void GraphBuilder::add_undirected(int view, int level, uint32_t u, uint32_t v) {
    add_arc(view, level, u, v);
    add_arc(view, level, v, u);
}

void GraphBuilder::ensure_set(int view, int level) { sets_[{view, level}]; }

MultiGraph GraphBuilder::build(std::vector<uint32_t> node_ids) const {
    MultiGraph g;
    g.n = n_;
    g.node_ids = std::move(node_ids);
    for (const auto& [key, arcset] : sets_) {
        ArcSet s;
        s.view = key.first;
        s.level = key.second;
        s.arcs.reserve(arcset.size());
        for (uint64_t k : arcset)
            s.arcs.emplace_back(uint32_t(k >> 32), uint32_t(k & 0xffffffffu));
        std::sort(s.arcs.begin(), s.arcs.end());
        g.sets.push_back(std::move(s));
    }
    return g;  // map iteration is already (view, level) sorted
}

std::string write_graph_text(const MultiGraph& g) {
    std::ostringstream out;
    out << "n " << g.n << " sets " << g.sets.size() << "\n";
    for (const auto& s : g.sets) {
        out << "set " << s.view << " " << s.level << " " << s.arcs.size() << "\n";
        for (auto [u, v] : s.arcs) out << u << " " << v << "\n";
    }
    return out.str();
}

void write_graph_file(const std::string& path, const MultiGraph& g) {
    write_file_text(path, write_graph_text(g));
}

MultiGraph read_graph_text(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    MultiGraph g;
    size_t set_count = 0;
    if (!(in >> tok) || tok != "n" || !(in >> g.n) || !(in >> tok) || tok != "sets" ||
        !(in >> set_count))
        throw DataError("graph file: malformed header");
    std::pair<int, int> prev_key{-1, -1};
    for (size_t s = 0; s < set_count; ++s) {
        int view, level;
        size_t arc_count;
        if (!(in >> tok) || tok != "set" || !(in >> view >> level >> arc_count))
            throw DataError("graph file: malformed set header");
        if (view < 0 || level < 0) throw DataError("graph file: negative view/level tag");
        std::pair<int, int> key{view, level};
        if (!(prev_key < key)) throw DataError("graph file: arc sets out of (view, level) order");
        prev_key = key;
        ArcSet as;
        as.view = view;
        as.level = level;
        as.arcs.reserve(arc_count);
        std::pair<uint32_t, uint32_t> prev{0, 0};
        for (size_t a = 0; a < arc_count; ++a) {
            uint32_t u, v;
            if (!(in >> u >> v)) throw DataError("graph file: truncated arc list");
            if (u >= g.n || v >= g.n) throw DataError("graph file: arc endpoint out of range");
            if (u == v) throw DataError("graph file: self-arc not allowed");
            std::pair<uint32_t, uint32_t> cur{u, v};
            if (a > 0 && !(prev < cur))
                throw DataError("graph file: arcs out of order or duplicated");
            prev = cur;
            as.arcs.push_back(cur);
        }
        g.sets.push_back(std::move(as));
    }
    if (in >> tok) throw DataError("graph file: trailing content");
    return g;
}

MultiGraph read_graph_file(const std::string& path) {
    return read_graph_text(read_file_text(path));
}

KnnGraphResult build_knn_graph(const double* X, int d, const std::vector<int>& pool, int k) {
    if (pool.empty()) throw ConfigError("cannot build a graph from an empty pool");
    if (k < 1) throw ConfigError("neighbour count must be positive");
    StopWatch watch;
    std::vector<uint32_t> idx(pool.begin(), pool.end());
    int keff = std::min<int>(k, int(idx.size()) - 1);
    KnnGraphResult res;
    GraphBuilder gb(uint32_t(idx.size()));
    if (keff > 0) {
        std::vector<uint32_t> nn;
        kernels::knn_exact(X, d, idx, keff, nn);
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < keff; ++j)
                gb.add_undirected(0, 0, uint32_t(i), nn[i * size_t(keff) + size_t(j)]);
    } else {
        gb.ensure_set(0, 0);
    }
    res.graph = gb.build(idx);
    res.gct_seconds = watch.seconds();
    return res;
}

}  // namespace isel
