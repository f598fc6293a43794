#include "isel/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <unordered_map>

#include "isel/kernels.hpp"

namespace isel {

LshFamily lsh_family_from_string(const std::string& s) {
    if (s == "angular") return LshFamily::angular;
    if (s == "euclidean") return LshFamily::euclidean;
    throw ConfigError("unknown lsh family '" + s + "' (expected angular|euclidean)");
}

std::string lsh_family_to_string(LshFamily f) {
    return f == LshFamily::angular ? "angular" : "euclidean";
}

namespace {

double dot(const std::vector<double>& p, const double* x) {
    double s = 0.0;
    for (size_t i = 0; i < p.size(); ++i) s += p[i] * x[i];
    return s;
}

// code distance: differing-position count for angular codes, L1 for euclidean
// cells; codes of unequal length never merge.
int64_t code_distance(const std::vector<int32_t>& a, const std::vector<int32_t>& b,
                      LshFamily family) {
    if (a.size() != b.size()) return -1;
    int64_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (family == LshFamily::angular)
            d += a[i] != b[i] ? 1 : 0;
        else
            d += std::llabs(int64_t(a[i]) - int64_t(b[i]));
    }
    return d;
}

std::string wildcard_key(const std::vector<int32_t>& code, size_t hole) {
    std::string k;
    k.resize(code.size() * 4 + 8);
    uint32_t len = uint32_t(code.size()), h = uint32_t(hole);
    std::memcpy(k.data(), &len, 4);
    std::memcpy(k.data() + 4, &h, 4);
    for (size_t i = 0; i < code.size(); ++i) {
        int32_t v = i == hole ? 0 : code[i];
        std::memcpy(k.data() + 8 + i * 4, &v, 4);
    }
    return k;
}

struct WorkBucket {
    std::vector<int32_t> code;
    std::vector<uint32_t> members;
    bool depth_capped = false;
};

void split_recursive(WorkBucket cur, int depth, int threshold, const Dataset& ds,
                     const std::vector<uint32_t>& rows, HashTable& table, RngStream& rng,
                     std::vector<WorkBucket>& out) {
    if (int(cur.members.size()) <= threshold) {
        out.push_back(std::move(cur));
        return;
    }
    if (depth >= 10) {
        cur.depth_capped = true;
        ++table.capped;
        out.push_back(std::move(cur));
        return;
    }
    std::vector<double> proj(size_t(ds.d));
    double inv = 1.0 / std::sqrt(double(ds.d));
    for (double& v : proj) v = rng.normal() * inv;
    table.split_proj.push_back(proj);
    ++table.splits;

    WorkBucket neg, pos;
    neg.code = cur.code;
    neg.code.push_back(0);
    pos.code = cur.code;
    pos.code.push_back(1);
    for (uint32_t m : cur.members) {
        double s = dot(proj, ds.row(int(rows[m])));
        (s >= 0.0 ? pos : neg).members.push_back(m);  // sign(0) counts as +
    }
    if (!neg.members.empty()) split_recursive(std::move(neg), depth + 1, threshold, ds, rows, table, rng, out);
    if (!pos.members.empty()) split_recursive(std::move(pos), depth + 1, threshold, ds, rows, table, rng, out);
}

// One table: base hashing, adaptive splits, then a greedy ascending-size merge
// pass pairing each bucket with the first eligible later bucket (adjacent
// code, combined size under the merge limit); the merged bucket keeps the
// larger constituent's code and is not merged again.
HashTable build_table(const Dataset& ds, const std::vector<uint32_t>& rows, LshFamily family,
                      int view, int level, int table_index, int bits, double width,
                      int threshold, int merge_limit, uint64_t seed) {
    HashTable t;
    t.view = view;
    t.level = level;
    t.index = table_index;
    RngStream rng(seed, "lsh", {view, level, table_index});
    double inv = 1.0 / std::sqrt(double(bits));
    t.base_proj.assign(size_t(bits), std::vector<double>(size_t(ds.d)));
    for (auto& p : t.base_proj)
        for (double& v : p) v = rng.normal() * inv;
    if (family == LshFamily::euclidean) {
        t.shifts.resize(size_t(bits));
        for (double& b : t.shifts) b = rng.uniform(0.0, width);
    }

    std::map<std::vector<int32_t>, std::vector<uint32_t>> base;
    for (uint32_t i = 0; i < rows.size(); ++i) {
        auto code = hash_point(ds.row(int(rows[i])), ds.d, t, family, width);
        base[std::move(code)].push_back(i);
    }

    std::vector<WorkBucket> work;
    for (auto& [code, members] : base) {
        WorkBucket wb;
        wb.code = code;
        wb.members = std::move(members);
        split_recursive(std::move(wb), 0, threshold, ds, rows, t, rng, work);
    }

    // ascending (size, code) order; stable identity by position
    std::vector<int> order(work.size());
    for (size_t i = 0; i < work.size(); ++i) order[i] = int(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (work[size_t(a)].members.size() != work[size_t(b)].members.size())
            return work[size_t(a)].members.size() < work[size_t(b)].members.size();
        return work[size_t(a)].code < work[size_t(b)].code;
    });
    std::vector<int> rank(work.size());
    for (size_t i = 0; i < order.size(); ++i) rank[size_t(order[i])] = int(i);

    std::unordered_map<std::string, std::vector<int>> wild;  // values: sort positions
    for (size_t pos = 0; pos < order.size(); ++pos) {
        const auto& code = work[size_t(order[pos])].code;
        for (size_t h = 0; h < code.size(); ++h)
            wild[wildcard_key(code, h)].push_back(int(pos));
    }

    std::vector<bool> used(order.size(), false);
    std::vector<WorkBucket> final_buckets;
    for (size_t pos = 0; pos < order.size(); ++pos) {
        if (used[pos]) continue;
        WorkBucket& a = work[size_t(order[pos])];
        int partner = -1;  // smallest eligible sort position over every hole
        for (size_t h = 0; h < a.code.size(); ++h) {
            auto it = wild.find(wildcard_key(a.code, h));
            if (it == wild.end()) continue;
            for (int cand : it->second) {
                if (size_t(cand) <= pos || used[size_t(cand)]) continue;
                WorkBucket& b = work[size_t(order[size_t(cand)])];
                if (int(a.members.size() + b.members.size()) >= merge_limit) continue;
                int64_t cd = code_distance(a.code, b.code, family);
                if (cd < 0 || cd > 1) continue;
                if (partner < 0 || cand < partner) partner = cand;
            }
        }
        used[pos] = true;
        if (partner >= 0) {
            used[size_t(partner)] = true;
            WorkBucket& b = work[size_t(order[size_t(partner)])];
            WorkBucket merged;
            // larger constituent keeps the code; the pass sorted ascending, so
            // the partner (later position) is the larger on ties broken by code
            merged.code = a.members.size() > b.members.size() ? a.code : b.code;
            if (a.members.size() == b.members.size()) merged.code = a.code;
            merged.members = a.members;
            merged.members.insert(merged.members.end(), b.members.begin(), b.members.end());
            std::sort(merged.members.begin(), merged.members.end());
            merged.depth_capped = a.depth_capped || b.depth_capped;
            ++t.merges;
            final_buckets.push_back(std::move(merged));
        } else {
            final_buckets.push_back(a);
        }
    }

    std::sort(final_buckets.begin(), final_buckets.end(), [](const WorkBucket& x, const WorkBucket& y) {
        if (x.code.size() != y.code.size()) return x.code.size() < y.code.size();
        return x.code < y.code;
    });
    t.bucket_of.assign(rows.size(), -1);
    for (size_t b = 0; b < final_buckets.size(); ++b) {
        Bucket out;
        out.code = std::move(final_buckets[b].code);
        out.members = std::move(final_buckets[b].members);
        out.depth_capped = final_buckets[b].depth_capped;
        std::sort(out.members.begin(), out.members.end());
        for (uint32_t m : out.members) t.bucket_of[m] = int32_t(b);
        t.buckets.push_back(std::move(out));
    }
    return t;
}

void extract_edges(const HashTable& t, int threshold, GraphBuilder& gb, uint64_t seed) {
    int bucket_seq = 0;
    for (const auto& b : t.buckets) {
        const auto& m = b.members;
        const int sz = int(m.size());
        if (sz < 2) {
            ++bucket_seq;
            continue;
        }
        if (!b.depth_capped) {
            for (int i = 0; i < sz; ++i)
                for (int j = i + 1; j < sz; ++j)
                    gb.add_undirected(t.view, t.level, m[size_t(i)], m[size_t(j)]);
        } else {
            // capped buckets stay sparse: each member connects to at most
            // `threshold` sampled co-members
            RngStream rng(seed, "lsh_cap", {t.view, t.level, t.index, bucket_seq});
            int take = std::min(threshold, sz - 1);
            std::vector<uint32_t> others(m.begin(), m.end());
            for (int i = 0; i < sz; ++i) {
                // partial Fisher-Yates over the co-member list
                std::vector<uint32_t> cand;
                cand.reserve(size_t(sz) - 1);
                for (int j = 0; j < sz; ++j)
                    if (j != i) cand.push_back(m[size_t(j)]);
                for (int j = 0; j < take; ++j) {
                    int pick = j + int(rng.index(int64_t(cand.size()) - j));
                    std::swap(cand[size_t(j)], cand[size_t(pick)]);
                    gb.add_undirected(t.view, t.level, m[size_t(i)], cand[size_t(j)]);
                }
            }
        }
        ++bucket_seq;
    }
}

LshBuildResult build_views_levels(const Dataset& ds, const std::vector<int>& pool,
                                  const LshParams& p, uint64_t seed, int views,
                                  bool multi_level) {
    if (p.tables < 1) throw ConfigError("lsh: tables must be >= 1");
    if (p.bits < 1) throw ConfigError("lsh: bits must be >= 1");
    if (p.split_threshold < 2) throw ConfigError("lsh: split threshold must be >= 2");
    if (p.levels < 1) throw ConfigError("lsh: levels must be >= 1");
    if (p.family == LshFamily::euclidean && p.width <= 0.0)
        throw ConfigError("lsh: width must be positive");
    StopWatch watch;

    std::vector<uint32_t> rows(pool.size());
    for (size_t i = 0; i < pool.size(); ++i) rows[i] = uint32_t(pool[i]);
    std::sort(rows.begin(), rows.end());

    LshBuildResult res;
    res.index.n = uint32_t(rows.size());
    res.index.family = p.family;
    GraphBuilder gb(uint32_t(rows.size()));

    struct LevelSpec { int level, tables, bits, threshold; };
    std::vector<LevelSpec> levels;
    if (!multi_level) {
        levels.push_back({0, p.tables, p.bits, p.split_threshold});
    } else {
        for (int m = 1; m <= p.levels; ++m) {
            int lm = p.tables << m;
            int km = p.bits << m;
            int tm = std::max(2, int(std::llround(double(p.split_threshold) / double(1 << m))));
            if (km > 64 * ds.d)
                throw ConfigError("lsh: level " + std::to_string(m) + " needs " +
                                  std::to_string(km) + " projections, over the 64*d cap of " +
                                  std::to_string(64 * ds.d) + "; use fewer levels");
            levels.push_back({m, lm, km, tm});
        }
    }

    for (int v = 0; v < views; ++v) {
        for (const auto& spec : levels) {
            gb.ensure_set(v, spec.level);
            for (int ti = 0; ti < spec.tables; ++ti) {
                HashTable t = build_table(ds, rows, p.family, v, spec.level, ti, spec.bits,
                                          p.width, spec.threshold, p.merge_limit, seed);
                extract_edges(t, spec.threshold, gb, seed);
                res.splits += t.splits;
                res.merges += t.merges;
                res.capped_buckets += t.capped;
                res.index.tables.push_back(std::move(t));
            }
        }
    }
    res.graph = gb.build(std::move(rows));
    res.gct_seconds = watch.seconds();
    return res;
}

}  // namespace

std::vector<int32_t> hash_point(const double* x, int d, const HashTable& t, LshFamily family,
                                double width) {
    (void)d;
    std::vector<int32_t> code(t.base_proj.size());
    for (size_t j = 0; j < t.base_proj.size(); ++j) {
        double s = dot(t.base_proj[j], x);
        if (family == LshFamily::angular)
            code[j] = s >= 0.0 ? 1 : 0;  // sign(0) counts as +
        else
            code[j] = int32_t(std::floor((s + t.shifts[j]) / width));
    }
    return code;
}

LshBuildResult build_sl_graph(const Dataset& ds, const std::vector<int>& pool,
                              const LshParams& p, uint64_t seed) {
    return build_views_levels(ds, pool, p, seed, 1, false);
}

LshBuildResult build_ml_graph(const Dataset& ds, const std::vector<int>& pool,
                              const LshParams& p, uint64_t seed) {
    return build_views_levels(ds, pool, p, seed, 1, true);
}

LshBuildResult build_mvml_graph(const Dataset& ds, const std::vector<int>& pool,
                                const LshParams& p, uint64_t seed) {
    if (p.views < 1) throw ConfigError("lsh: views must be >= 1");
    return build_views_levels(ds, pool, p, seed, p.views, true);
}

BucketQuality bucket_quality(const LshIndex& index, const Dataset& ds,
                             const std::vector<uint32_t>& node_rows, uint64_t seed) {
    BucketQuality q;
    const uint32_t n = index.n;
    if (n == 0 || index.tables.empty()) throw DataError("bucket_quality: empty index");

    // size-weighted purity: sum(size * majority_frac) / sum(size) = sum(maj) / sum(size)
    uint64_t bucket_count = 0;
    uint64_t member_total = 0;
    double majority_total = 0.0;
    for (const auto& t : index.tables) {
        for (const auto& b : t.buckets) {
            if (b.members.empty()) continue;
            ++bucket_count;
            member_total += b.members.size();
            std::map<int, int> by_class;
            for (uint32_t m : b.members) ++by_class[ds.y[size_t(node_rows[m])]];
            int maj = 0;
            for (auto& [c, cnt] : by_class) maj = std::max(maj, cnt);
            majority_total += double(maj);
        }
    }
    q.mean_bucket_size = double(member_total) / double(bucket_count);
    q.purity = majority_total / double(member_total);

    auto cos = [&](uint32_t a, uint32_t b) {
        return kernels::similarity(ds.row(int(node_rows[a])), ds.row(int(node_rows[b])), ds.d,
                                   Metric::cosine);
    };

    RngStream rng(seed, "lsh_quality");
    // intra/inter sampled pair means
    std::vector<std::pair<int, int>> rich;  // (table, bucket) with >= 2 members
    for (size_t t = 0; t < index.tables.size(); ++t)
        for (size_t b = 0; b < index.tables[t].buckets.size(); ++b)
            if (index.tables[t].buckets[b].members.size() >= 2) rich.emplace_back(int(t), int(b));
    const int pair_budget = 50000;
    double intra_sum = 0.0;
    int64_t intra_cnt = 0;
    if (!rich.empty()) {
        for (int s = 0; s < pair_budget; ++s) {
            auto [t, b] = rich[size_t(rng.index(int64_t(rich.size())))];
            const auto& m = index.tables[size_t(t)].buckets[size_t(b)].members;
            int i = int(rng.index(int64_t(m.size())));
            int j = int(rng.index(int64_t(m.size()) - 1));
            if (j >= i) ++j;
            intra_sum += cos(m[size_t(i)], m[size_t(j)]);
            ++intra_cnt;
        }
    }
    double inter_sum = 0.0;
    int64_t inter_cnt = 0;
    if (n >= 2) {
        for (int s = 0; s < pair_budget; ++s) {
            uint32_t i = uint32_t(rng.index(int64_t(n)));
            uint32_t j = uint32_t(rng.index(int64_t(n) - 1));
            if (j >= i) ++j;
            const auto& t = index.tables[size_t(rng.index(int64_t(index.tables.size())))];
            if (t.bucket_of[i] == t.bucket_of[j]) continue;
            inter_sum += cos(i, j);
            ++inter_cnt;
        }
    }
    if (intra_cnt == 0 || inter_cnt == 0) {
        q.separation = std::numeric_limits<double>::quiet_NaN();
        q.warnings.push_back("degenerate hashing: no intra/inter pair sample available; "
                             "separation undefined");
    } else {
        q.separation = (intra_sum / double(intra_cnt)) / (inter_sum / double(inter_cnt));
    }

    // recall@5 against exact cosine neighbours
    int queries = int(std::min<uint32_t>(n, 200));
    std::vector<uint32_t> qpts(n);
    for (uint32_t i = 0; i < n; ++i) qpts[i] = i;
    rng.shuffle(qpts);
    qpts.resize(size_t(queries));
    double recall_sum = 0.0;
    for (uint32_t qi : qpts) {
        std::vector<std::pair<double, uint32_t>> best;  // (-sim, idx)
        for (uint32_t j = 0; j < n; ++j) {
            if (j == qi) continue;
            best.emplace_back(-cos(qi, j), j);
        }
        int topk = std::min<int>(5, int(best.size()));
        std::partial_sort(best.begin(), best.begin() + topk, best.end());
        int hit = 0;
        for (int r = 0; r < topk; ++r) {
            uint32_t j = best[size_t(r)].second;
            for (const auto& t : index.tables) {
                if (t.bucket_of[qi] == t.bucket_of[j]) {
                    ++hit;
                    break;
                }
            }
        }
        recall_sum += topk > 0 ? double(hit) / 5.0 : 0.0;
    }
    q.recall_at_5 = queries > 0 ? recall_sum / double(queries) : 0.0;

    // Pearson correlation: per-pair collision count across tables vs cosine sim
    const int rho_budget = 100000;
    std::vector<double> xs, ys;
    xs.reserve(rho_budget);
    ys.reserve(rho_budget);
    if (n >= 2) {
        for (int s = 0; s < rho_budget; ++s) {
            uint32_t i = uint32_t(rng.index(int64_t(n)));
            uint32_t j = uint32_t(rng.index(int64_t(n) - 1));
            if (j >= i) ++j;
            int coll = 0;
            for (const auto& t : index.tables)
                if (t.bucket_of[i] == t.bucket_of[j]) ++coll;
            xs.push_back(double(coll));
            ys.push_back(cos(i, j));
        }
    }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= double(xs.size());
        my /= double(ys.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
            syy += (ys[i] - my) * (ys[i] - my);
        }
        if (sxx == 0.0 || syy == 0.0) {
            q.pearson_rho = std::numeric_limits<double>::quiet_NaN();
            q.warnings.push_back("constant collision counts or similarities; correlation undefined");
        } else {
            q.pearson_rho = sxy / std::sqrt(sxx * syy);
        }
    } else {
        q.pearson_rho = std::numeric_limits<double>::quiet_NaN();
    }
    return q;
}

}  // namespace isel
