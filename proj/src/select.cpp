#include "isel/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace isel {

SelectStrategy select_strategy_from_string(const std::string& s) {
    if (s == "global") return SelectStrategy::global_top;
    if (s == "balanced") return SelectStrategy::balanced;
    if (s == "proportional") return SelectStrategy::proportional;
    throw ConfigError("unknown selection strategy '" + s +
                      "' (expected global, balanced or proportional)");
}

std::string select_strategy_to_string(SelectStrategy s) {
    switch (s) {
        case SelectStrategy::global_top: return "global";
        case SelectStrategy::balanced: return "balanced";
        case SelectStrategy::proportional: return "proportional";
    }
    return "?";
}

std::vector<double> importance_scores(const AttentionTrace& trace, const ImportanceConfig& cfg) {
    size_t n = trace.n;
    int L = int(trace.layers);
    if (L < 1) throw ConfigError("trace reports no layers");
    if (cfg.sender_weight < 0.0 || cfg.receiver_weight < 0.0 ||
        cfg.sender_weight + cfg.receiver_weight <= 0.0)
        throw ConfigError("sender/receiver weights must be non-negative with a positive sum");
    std::vector<double> beta(cfg.layer_weights);
    if (beta.empty()) beta.assign(size_t(L), 1.0);
    if (int(beta.size()) != L)
        throw ConfigError("layer weight count does not match the trace layer count");
    double bsum = 0.0;
    for (double b : beta) {
        if (b < 0.0) throw ConfigError("layer weights must be non-negative");
        bsum += b;
    }
    if (bsum <= 0.0) throw ConfigError("layer weights sum to zero");
    for (double& b : beta) b /= bsum;

    // Degrees from the layer-0, head-0 slice: each arc set contributes once.
    std::vector<double> dout(n, 0.0), din(n, 0.0);
    for (const auto& r : trace.records) {
        if (r.layer != 0 || r.head != 0) continue;
        dout[r.src] += 1.0;
        din[r.dst] += 1.0;
    }

    std::vector<double> send(n, 0.0), recv(n, 0.0);
    for (const auto& r : trace.records) {
        double w = beta[r.layer] * r.weight;
        send[r.src] += w;
        recv[r.dst] += w;
    }
    std::vector<double> out(n, 0.0);
    for (size_t i = 0; i < n; ++i)
        out[i] = cfg.sender_weight * send[i] / std::sqrt(dout[i] + 1.0) +
                 cfg.receiver_weight * recv[i] / std::sqrt(din[i] + 1.0);
    return out;
}

namespace {

// candidates ranked by score descending, ascending row on ties
std::vector<int> ranked(const std::vector<double>& score, const std::vector<int>& rows) {
    std::vector<int> r = rows;
    std::sort(r.begin(), r.end(), [&](int a, int b) {
        if (score[size_t(a)] != score[size_t(b)]) return score[size_t(a)] > score[size_t(b)];
        return a < b;
    });
    return r;
}

}  // namespace

SelectionResult select_instances(const std::vector<double>& score_by_row,
                                 const std::vector<char>& candidate_mask,
                                 const std::vector<int>& labels, SelectParams params) {
    if (!(params.ratio > 0.0 && params.ratio < 1.0))
        throw ConfigError("retention rate must lie strictly inside (0, 1)");
    if (score_by_row.size() != candidate_mask.size() || labels.size() != candidate_mask.size())
        throw ConfigError("selection inputs disagree on the row count");

    SelectionResult res;
    std::vector<int> pool;
    for (size_t i = 0; i < candidate_mask.size(); ++i)
        if (candidate_mask[i]) pool.push_back(int(i));
    if (pool.empty()) throw ConfigError("no candidate rows to select from");
    double N = double(pool.size());

    std::map<int, std::vector<int>> by_class;
    for (int r : pool) by_class[labels[size_t(r)]].push_back(r);

    if (params.strategy == SelectStrategy::global_top) {
        int quota = std::max<int>(1, int(std::llround(params.ratio * N)));
        quota = std::min<int>(quota, int(pool.size()));
        auto order = ranked(score_by_row, pool);
        res.selected.assign(order.begin(), order.begin() + quota);
    } else {
        for (auto& [c, rows] : by_class) {
            int quota;
            if (params.strategy == SelectStrategy::balanced)
                quota = std::max<int>(
                    1, int(std::floor(params.ratio * N / double(by_class.size()) + 1e-9)));
            else
                quota = std::max<int>(
                    1, int(std::floor(params.ratio * double(rows.size()) + 1e-9)));
            if (quota > int(rows.size())) {
                res.warnings.push_back("class " + std::to_string(c) + " has only " +
                                       std::to_string(rows.size()) + " candidates for a quota of " +
                                       std::to_string(quota));
                quota = int(rows.size());
            }
            auto order = ranked(score_by_row, rows);
            res.selected.insert(res.selected.end(), order.begin(), order.begin() + quota);
        }
    }
    std::sort(res.selected.begin(), res.selected.end());
    res.reduction_rate = 1.0 - double(res.selected.size()) / N;
    return res;
}

SelectionResult select_random_stratified(const std::vector<char>& candidate_mask,
                                         const std::vector<int>& labels, double ratio,
                                         uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("retention rate must lie strictly inside (0, 1)");
    SelectionResult res;
    std::vector<int> pool;
    for (size_t i = 0; i < candidate_mask.size(); ++i)
        if (candidate_mask[i]) pool.push_back(int(i));
    if (pool.empty()) throw ConfigError("no candidate rows to select from");
    double N = double(pool.size());

    std::map<int, std::vector<int>> by_class;
    for (int r : pool) by_class[labels[size_t(r)]].push_back(r);
    for (auto& [c, rows] : by_class) {
        int quota = std::max<int>(1, int(std::floor(ratio * double(rows.size()) + 1e-9)));
        quota = std::min<int>(quota, int(rows.size()));
        RngStream rng(seed, "random_baseline", {c});
        rng.shuffle(rows);
        res.selected.insert(res.selected.end(), rows.begin(), rows.begin() + quota);
    }
    std::sort(res.selected.begin(), res.selected.end());
    res.reduction_rate = 1.0 - double(res.selected.size()) / N;
    return res;
}

}  // namespace isel
