#include "isel/dm.hpp"

#include <algorithm>
#include <cmath>

#include "isel/kernels.hpp"

namespace isel {

double sampling_fraction(int n, const DmParams& p) {
    if (n <= 0) throw DataError("sampling_fraction: empty pool");
    return std::min(double(p.batch_cap) / double(n), p.sample_fraction);
}

double percentile_linear(std::vector<double> values, double p) {
    if (values.empty()) throw NumericError("percentile of an empty value set");
    if (p < 0.0 || p > 100.0) throw ConfigError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    double rank = p / 100.0 * double(values.size() - 1);
    size_t lo = size_t(rank);
    double frac = rank - double(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double percentile_offdiag(std::vector<double>& tri, double p) {
    if (tri.empty()) throw NumericError("percentile of an empty value set");
    if (p < 0.0 || p > 100.0) throw ConfigError("percentile must lie in [0, 100]");
    // Duplicated multiset of size 2m; position q maps to sorted tri[q/2].
    size_t m2 = tri.size() * 2;
    double rank = p / 100.0 * double(m2 - 1);
    size_t lo = size_t(rank);
    double frac = rank - double(lo);
    size_t hi = std::min(lo + 1, m2 - 1);
    size_t i1 = lo / 2, i2 = hi / 2;
    std::nth_element(tri.begin(), tri.begin() + i1, tri.end());
    double v1 = tri[i1];
    double v2 = v1;
    if (i2 != i1) {
        // i2 == i1 + 1: the next order statistic is the minimum of the tail.
        v2 = *std::min_element(tri.begin() + i1 + 1, tri.end());
    }
    return v1 + frac * (v2 - v1);
}

std::vector<std::vector<uint32_t>> dm_batches(const std::vector<int>& labels_of_pool,
                                              const DmParams& p, uint64_t seed) {
    const int P = int(labels_of_pool.size());
    if (P == 0) throw DataError("dm_batches: empty pool");
    if (p.batch_count < 1) throw ConfigError("batch_count must be >= 1");
    if (p.batch_cap < 1) throw ConfigError("batch_cap must be >= 1");
    if (p.sample_fraction <= 0.0 || p.sample_fraction > 1.0)
        throw ConfigError("sample_fraction must lie in (0, 1]");
    const double f = sampling_fraction(P, p);

    int classes = 0;
    for (int c : labels_of_pool) classes = std::max(classes, c + 1);
    std::vector<std::vector<uint32_t>> members(classes);
    for (int i = 0; i < P; ++i) members[size_t(labels_of_pool[size_t(i)])].push_back(uint32_t(i));
    for (int c = 0; c < classes; ++c) {
        RngStream rng(seed, "dm_class", {c});
        rng.shuffle(members[size_t(c)]);
    }
    std::vector<size_t> next(size_t(classes), 0);  // consumed prefix per class

    int distinct = 0;
    for (int c = 0; c < classes; ++c)
        if (!members[size_t(c)].empty()) ++distinct;
    if (p.batch_cap < distinct) throw ConfigError("batch_cap must be at least the class count");

    std::vector<std::vector<uint32_t>> batches;
    int remaining = P;
    for (int k = 0; k < p.batch_count && remaining > 0; ++k) {
        std::vector<int> rem_c(classes);
        int present = 0;
        for (int c = 0; c < classes; ++c) {
            rem_c[size_t(c)] = int(members[size_t(c)].size() - next[size_t(c)]);
            if (rem_c[size_t(c)] > 0) ++present;
        }

        int target = int(std::llround(f * double(remaining)));
        // every live class must fit at least once, so the target never
        // drops below the live class count (cap >= classes was checked)
        target = std::max(target, present);
        target = std::min({target, p.batch_cap, remaining});
        if (target <= 0) break;

        std::vector<int> count(size_t(classes), 0);
        std::vector<double> fracs(size_t(classes), 0.0);
        int base_total = 0;
        for (int c = 0; c < classes; ++c) {
            double exact = double(target) * double(rem_c[size_t(c)]) / double(remaining);
            count[size_t(c)] = int(std::floor(exact));
            fracs[size_t(c)] = exact - std::floor(exact);
            base_total += count[size_t(c)];
        }
        std::vector<int> order(classes);
        for (int c = 0; c < classes; ++c) order[size_t(c)] = c;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            if (fracs[size_t(a)] != fracs[size_t(b)]) return fracs[size_t(a)] > fracs[size_t(b)];
            return a < b;
        });
        int need = target - base_total;
        for (size_t oi = 0; need > 0; oi = (oi + 1) % order.size()) {
            int c = order[oi];
            if (count[size_t(c)] < rem_c[size_t(c)]) {
                ++count[size_t(c)];
                --need;
            }
        }

        // a class whose share rounded to zero still contributes one member,
        // funded by the currently largest class so the total stays on target
        for (int c = 0; c < classes; ++c) {
            if (rem_c[size_t(c)] == 0 || count[size_t(c)] > 0) continue;
            int donor = -1;
            for (int d2 = 0; d2 < classes; ++d2)
                if (count[size_t(d2)] >= 2 && (donor < 0 || count[size_t(d2)] > count[size_t(donor)]))
                    donor = d2;
            if (donor < 0) break;
            --count[size_t(donor)];
            count[size_t(c)] = 1;
        }

        std::vector<uint32_t> batch;
        batch.reserve(size_t(target));
        for (int c = 0; c < classes; ++c) {
            for (int i = 0; i < count[size_t(c)]; ++i)
                batch.push_back(members[size_t(c)][next[size_t(c)] + size_t(i)]);
            next[size_t(c)] += size_t(count[size_t(c)]);
        }
        std::sort(batch.begin(), batch.end());
        remaining -= target;
        batches.push_back(std::move(batch));
    }
    return batches;
}

DmResult build_dm_graph(const Dataset& ds, const std::vector<int>& pool, const DmParams& p,
                        uint64_t seed) {
    StopWatch watch;
    std::vector<int> pool_labels(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) pool_labels[i] = ds.y[size_t(pool[i])];
    auto batches = dm_batches(pool_labels, p, seed);

    // graph nodes: union of batch members, ordered by dataset row
    std::vector<uint32_t> node_ids;
    for (const auto& b : batches)
        for (uint32_t pos : b) node_ids.push_back(uint32_t(pool[size_t(pos)]));
    std::sort(node_ids.begin(), node_ids.end());
    std::vector<uint32_t> row_to_node(size_t(ds.n), 0);
    for (size_t i = 0; i < node_ids.size(); ++i) row_to_node[size_t(node_ids[i])] = uint32_t(i);

    DmResult res;
    GraphBuilder gb(uint32_t(node_ids.size()));
    gb.ensure_set(0, 0);
    for (const auto& b : batches) {
        DmBatchStats st;
        st.size = int(b.size());
        std::vector<uint32_t> rows(b.size());
        for (size_t i = 0; i < b.size(); ++i) rows[i] = uint32_t(pool[size_t(b[i])]);
        std::sort(rows.begin(), rows.end());
        const int w = int(rows.size());
        if (w >= 2) {
            std::vector<double> tri(size_t(w) * (w - 1) / 2);
            kernels::pairwise_similarity(ds.X.data(), ds.d, rows, p.metric, tri.data());
            st.threshold = percentile_offdiag(tri, p.percentile);
            // tri was reordered by the percentile pass; recompute per pair so
            // only one triangle buffer is ever alive.
            for (int i = 0; i < w; ++i) {
                const double* u = ds.row(int(rows[size_t(i)]));
                for (int j = i + 1; j < w; ++j) {
                    double s = kernels::similarity(u, ds.row(int(rows[size_t(j)])), ds.d, p.metric);
                    if (s > st.threshold) {
                        gb.add_undirected(0, 0, row_to_node[size_t(rows[size_t(i)])],
                                          row_to_node[size_t(rows[size_t(j)])]);
                        ++st.edges;
                    }
                }
            }
        }
        res.batches.push_back(st);
    }
    int sampled = 0;
    for (const auto& b : batches) sampled += int(b.size());
    res.leftover = int(pool.size()) - sampled;
    res.graph = gb.build(std::move(node_ids));
    res.gct_seconds = watch.seconds();
    return res;
}

}  // namespace isel
