#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isel/dataset.hpp"
#include "isel/dm.hpp"
#include "isel/eval.hpp"
#include "isel/gat.hpp"
#include "isel/lsh.hpp"
#include "isel/select.hpp"

namespace isel {

// Split-aware label access. Rows outside the unlocked splits read as -1, and
// test labels stay sealed until unlock_test() is called with a reason; every
// unlock lands in the log that the run manifest records. Stages before the
// final evaluation only ever see train and validation labels.
class SplitLabels {
public:
    SplitLabels(std::vector<int> y, const SplitMasks& masks);

    int visible(int row) const { return visible_[size_t(row)]; }
    const std::vector<int>& visible_all() const { return visible_; }
    const std::vector<int>& unlock_test(const std::string& reason);
    bool test_unlocked() const { return unlocked_; }
    const std::vector<std::string>& unlock_log() const { return log_; }

private:
    std::vector<int> visible_, full_;
    std::vector<std::string> log_;
    bool unlocked_ = false;
};

struct MethodConfig {
    std::string name = "dm";  // dm | sl-lsh | ml-lsh | mvml-lsh
    DmParams dm;
    LshParams lsh;
};

struct EvalConfig {
    std::string downstream = "logreg";  // logreg | knn
    int knn_k = 3;
    LogRegConfig logreg;
    bool compare_random = true;  // also score the stratified random baseline
};

struct PipelineConfig {
    std::string csv_path;
    std::string target = "label";
    double train_frac = 0.8, valid_frac = 0.1, test_frac = 0.1;
    MethodConfig method;
    GatConfig model;
    ImportanceConfig importance;
    SelectParams selection;
    EvalConfig eval;
    uint64_t seed = 0;
};

// Strict parse: unknown keys anywhere raise ConfigError naming the key path.
PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);
// Every field, defaults filled in, keys sorted; hashing this makes the config
// hash independent of input formatting.
std::string canonical_config_json(const PipelineConfig& cfg);
uint64_t config_hash(const PipelineConfig& cfg);

struct StageTimings {
    double preprocess_seconds = 0.0;
    double gct_seconds = 0.0;  // graph construction
    double gtt_seconds = 0.0;  // attention training
    double ist_seconds = 0.0;  // importance + selection
    double mlt_seconds = 0.0;  // downstream model learning + scoring
};

struct MetricsReport {
    double accuracy = 0.0, macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double reduction = 0.0, effectiveness = 0.0, effectiveness_f1 = 0.0;
};

struct PipelineOutcome {
    MetricsReport gais;
    MetricsReport random_baseline;  // valid when eval.compare_random
    bool has_baseline = false;
    StageTimings timings;
    int selected_count = 0;
    int candidate_count = 0;
    int absent_from_graph = 0;  // train rows the graph never sampled
    std::string run_dir;
    std::vector<std::string> warnings;
};

// preprocess -> build-graph -> train -> select -> evaluate, all artifacts
// under run_dir: bundle/, graph.txt, build_info.json, checkpoint.bin/.json,
// trace.bin/.json, train_log.jsonl, selection.json, reduced.csv,
// metrics.json, timings.csv, comparison.csv, manifest.json. A stage failure
// is rethrown with the stage name prefixed.
PipelineOutcome run_pipeline(const PipelineConfig& cfg, const std::string& run_dir);

// Single stages over on-disk artifacts, shared by the step-by-step commands.
void stage_preprocess(const PipelineConfig& cfg, const std::string& bundle_dir);
struct GraphStageOut {
    MultiGraph graph;
    double gct_seconds = 0.0;
    std::string info_json;
};
GraphStageOut stage_build_graph(const Bundle& bundle, const MethodConfig& method, uint64_t seed);
struct TrainStageOut {
    TrainResult result;
    int graph_nodes = 0;
};
TrainStageOut stage_train(const Bundle& bundle, const MultiGraph& graph, const GatConfig& gcfg,
                          uint64_t seed, const std::string& out_dir);
SelectionResult stage_select(const Bundle& bundle, const MultiGraph& graph,
                             const AttentionTrace& trace, const ImportanceConfig& icfg,
                             SelectParams params, int* absent_out,
                             std::vector<double>* scores_out = nullptr);
void write_selection_json(const std::string& path, const SelectionResult& sel,
                          SelectParams params, int candidates, int absent);
SelectionResult read_selection_json(const std::string& path, SelectParams* params_out = nullptr);

// Rows of the source CSV restricted to the selected ids, header kept, lines
// copied verbatim.
void write_reduced_csv(const std::string& src_csv, const std::vector<int>& selected,
                       const std::string& out_path);

MetricsReport evaluate_subset(const Bundle& bundle, const std::vector<int>& train_subset,
                              const std::vector<int>& eval_rows, const std::vector<int>& labels,
                              const EvalConfig& ecfg, double reduction,
                              std::vector<std::string>* warnings);

// Deterministic metrics JSON (sorted keys, no wall-clock content). baseline
// may be null.
std::string metrics_json_text(const PipelineConfig& cfg, const Bundle& bundle,
                              const MetricsReport& gais, const MetricsReport* baseline,
                              int candidates, int selected, int absent,
                              const std::vector<std::string>& warnings);

// Grid sweep scored on the validation split; the test split stays sealed
// unless confirm_test is set, which reruns the winning cell end to end.
struct SweepSpec {
    PipelineConfig base;
    std::vector<double> ratios;
    std::vector<std::string> strategies;
    std::vector<std::string> methods;
    std::vector<uint64_t> seeds;
};
SweepSpec parse_sweep_config(const std::string& json_text);

struct SweepCell {
    std::string method;
    std::string strategy;
    double ratio = 0.0;
    double mean_valid_effectiveness = 0.0;
    double std_valid_effectiveness = 0.0;
    double mean_valid_accuracy = 0.0;
    double mean_reduction = 0.0;
};

struct SweepOutcome {
    std::vector<SweepCell> ranked;  // best first; ties prefer lower ratio
    bool test_confirmed = false;
    MetricsReport confirmed_mean;  // over seeds, when confirmed
    std::string out_dir;
};
SweepOutcome run_sweep(const SweepSpec& spec, const std::string& out_dir, bool confirm_test);

}  // namespace isel
