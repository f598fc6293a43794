#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/gat.hpp"

namespace isel {

struct ImportanceConfig {
    double sender_weight = 0.5;
    double receiver_weight = 0.5;
    std::vector<double> layer_weights;  // beta; empty means uniform, else length = layers
};

// Per-node importance from a trained attention trace. A node collects the
// coefficients of its outgoing arcs (sender role) and of its incoming arcs
// (receiver role) across heads, views and levels, each layer weighted by the
// normalized layer weights; both sums are damped by 1/sqrt(degree + 1) with
// degrees counted over one layer slice (self-loops included) and the roles
// mixed by the sender/receiver weights.
std::vector<double> importance_scores(const AttentionTrace& trace, const ImportanceConfig& cfg);

enum class SelectStrategy { global_top, balanced, proportional };

SelectStrategy select_strategy_from_string(const std::string& s);
std::string select_strategy_to_string(SelectStrategy s);

struct SelectParams {
    SelectStrategy strategy = SelectStrategy::proportional;
    double ratio = 0.1;  // retention rate, strictly inside (0, 1)
};

struct SelectionResult {
    std::vector<int> selected;  // dataset rows, ascending
    double reduction_rate = 0.0;  // 1 - |selected| / |candidates|
    std::vector<std::string> warnings;
};

// Candidates are the rows where candidate_mask is nonzero; score_by_row and
// labels cover every dataset row. Quotas:
//   global_top:   round(ratio * N) overall, at least 1
//   balanced:     max(1, floor(ratio * N / C)) per candidate class
//   proportional: max(1, floor(ratio * n_c)) per candidate class
// each capped at the class size (short classes warn); the floors absorb a
// 1e-9 representation nudge so decimal ratios land on their intended integer.
// Ranking is by score descending with ascending row index breaking ties, so
// any strictly increasing transform of the scores selects the same rows.
SelectionResult select_instances(const std::vector<double>& score_by_row,
                                 const std::vector<char>& candidate_mask,
                                 const std::vector<int>& labels, SelectParams params);

// Stratified uniform baseline: proportional quotas, members drawn with the
// stream (seed, "random_baseline", {class}).
SelectionResult select_random_stratified(const std::vector<char>& candidate_mask,
                                         const std::vector<int>& labels, double ratio,
                                         uint64_t seed);

}  // namespace isel
