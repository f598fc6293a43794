#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "isel/autograd.hpp"
#include "isel/graph.hpp"
#include "isel/optim.hpp"

namespace isel {

struct NystromConfig {
    bool enabled = false;
    int landmarks = 64;        // m, clamped to the node count
    double degree_ratio = 0.5; // share of landmarks taken by total degree, in (0,1]
};

struct GatConfig {
    int hidden = 64;  // total width of hidden layers; heads must divide it
    int heads = 4;
    int layers = 2;
    double leaky_slope = 0.2;
    double dropout = 0.0;
    double diversity_init = 0.1;  // r; lambda starts uniform in [r/2, r]
    bool self_loops = true;
    double lr = 5e-3;
    double weight_decay = 5e-4;
    int max_iters = 500;
    int early_stop_patience = 30;  // evaluations without improvement
    int sched_patience = 25;
    double sched_factor = 0.75;
    double min_lr = 1e-5;
    double improve_threshold = 1e-8;  // strict decrease required to count
    double internal_valid_fraction = 0.10;
    NystromConfig nystrom;
};

// One record per (arc incl. self-loop, layer, head); weight is the final
// attention coefficient after amplification and diversity renormalization.
struct TraceRecord {
    uint32_t src = 0, dst = 0, view = 0, level = 0, layer = 0, head = 0;
    double weight = 0.0;
};

struct AttentionTrace {
    uint32_t n = 0;
    uint32_t layers = 0, heads = 0;
    std::vector<TraceRecord> records;
};

// Binary: per record six u32 fields then one f64 weight, little-endian,
// 32 bytes per record; layout documented in the JSON manifest.
void write_trace(const std::string& bin_path, const std::string& manifest_path,
                 const AttentionTrace& trace);
AttentionTrace read_trace(const std::string& bin_path, const std::string& manifest_path);

struct TrainLogEntry {
    int iter = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double lr = 0.0;  // rate in effect for this iteration's update
};

struct TrainResult {
    std::vector<NamedTensor> best_params;
    AttentionTrace trace;  // recomputed at the best parameters
    std::vector<TrainLogEntry> log;
    int best_iter = 0;
    int final_iter = 0;
    double best_valid_loss = 0.0;
    double gtt_seconds = 0.0;
    std::vector<int> internal_valid_nodes;
};

// Multi-view multi-level attention network over a tagged multigraph. Per
// layer and view each head applies a shared transform across levels with a
// level-specific attention vector; per head
//   u = ELU((1/M) * sum_m aggregate_m), h = (1/V) * sum_v u,
// hidden layers concatenate heads, the final layer averages them. Attention
// coefficients go through softmax, head amplification with renormalization
// (value-identity, by construction), then diversity adjustment with
// renormalization. Optional cross-level attention against landmark nodes runs
// after the final layer and is gated against the standard output.
class GatModel {
public:
    GatModel(const MultiGraph& graph, const Tensor& node_features,
             const std::vector<int>& node_labels, int classes, GatConfig cfg, uint64_t seed);

    struct ForwardResult {
        Tape::Ref logits = -1;
        // probes for the cross-attention path; -1 when it is disabled
        Tape::Ref h_std = -1;        // final-layer head-mean output
        Tape::Ref h_cross = -1;      // landmark-attended embedding before gating
        Tape::Ref cross_input = -1;  // concatenated per-(view,level) embeddings
        std::vector<Tape::Ref> params;  // aligned with parameters() order
    };

    // Builds the computation on the given tape. When capture is non-null the
    // final per-arc coefficients are appended to it; records end up sorted by
    // (layer, view, level, head) with arcs in (dst, src) order inside each
    // group. drop_rng enables input dropout (training passes only).
    ForwardResult forward(Tape& tape, AttentionTrace* capture,
                          RngStream* drop_rng = nullptr) const;

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::vector<NamedTensor> named_parameters() const;
    void load_parameters(const std::vector<NamedTensor>& named);

    TrainResult train(uint64_t seed);

    int views() const { return int(view_tags_.size()); }
    int levels() const { return int(level_tags_.size()); }
    int classes() const { return classes_; }
    const std::vector<int>& landmarks() const { return landmarks_; }

    // Exposed for the cross-attention exactness check: per-head attention of
    // the final-layer concatenated level embeddings against the landmark set.
    friend struct GatTestAccess;

private:
    struct ArcBundle {
        std::vector<int> src, dst;                       // sorted by (dst, src)
        std::shared_ptr<std::vector<int>> seg_starts;    // n+1 entries
        int view_tag = 0, level_tag = 0;
    };

    void init_params(uint64_t seed);
    void select_landmarks(uint64_t seed);
    int head_out_dim(int layer) const;
    int layer_in_dim(int layer) const;

    GatConfig cfg_;
    int n_ = 0, in_dim_ = 0, classes_ = 0;
    Tensor X_;
    std::vector<int> labels_;
    std::vector<uint32_t> degrees_;  // stored arcs only, no self-loops
    std::vector<int> view_tags_, level_tags_;
    std::vector<std::vector<ArcBundle>> arcs_;  // [view][level]

    // parameters: [layer][view][head]
    std::vector<std::vector<std::vector<Tensor>>> W_, gamma_, lambda_;
    // attention vectors: [layer][view][level][head]
    std::vector<std::vector<std::vector<std::vector<Tensor>>>> attn_;
    // cross-level attention
    std::vector<Tensor> WQ_, WK_, WV_;  // per head
    Tensor Wg_, bg_;
    std::vector<int> landmarks_;
};

}  // namespace isel
