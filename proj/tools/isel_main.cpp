// Command-line front end. Every subcommand shares --config/--out/--seed;
// errors map to exit codes 2 (config), 3 (data), 4 (numerics).
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isel/pipeline.hpp"
#include "isel/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
    auto* opt = sub->add_option("--config", c.config, "JSON config file");
    if (config_required) opt->required();
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "root seed; overrides the config")
        ->each([&c](const std::string&) { c.seed_given = true; });
}

isel::PipelineConfig load_cfg(const Common& c) {
    isel::PipelineConfig cfg = isel::load_pipeline_config(c.config);
    if (c.seed_given) cfg.seed = c.seed;
    return cfg;
}

// graph.txt stores arcs only; the node -> dataset row map rides in the build
// sidecar.
isel::MultiGraph load_graph_with_rows(const std::string& out_dir) {
    isel::MultiGraph g = isel::read_graph_file(out_dir + "/graph.txt");
    json info = json::parse(isel::read_file_text(out_dir + "/build_info.json"));
    g.node_ids = info.at("node_rows").get<std::vector<uint32_t>>();
    if (g.node_ids.size() != g.n)
        throw isel::DataError("build_info.json node_rows does not match graph.txt");
    return g;
}

void print_report(const char* tag, const isel::MetricsReport& r) {
    std::printf("%s  AC=%.4f  F1=%.4f  R=%.4f  E=%.4f  E_F1=%.4f\n", tag, r.accuracy,
                r.macro_f1, r.reduction, r.effectiveness, r.effectiveness_f1);
}

int cmd_preprocess(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::stage_preprocess(cfg, c.out + "/bundle");
    isel::Bundle b = isel::read_bundle(c.out + "/bundle");
    std::printf("preprocessed %s: n=%d d=%d classes=%d  train/valid/test = %zu/%zu/%zu\n",
                cfg.csv_path.c_str(), b.dataset.n, b.dataset.d, b.dataset.classes,
                b.masks.train.size(), b.masks.valid.size(), b.masks.test.size());
    for (const auto& w : b.dataset.warnings) std::printf("warning: %s\n", w.c_str());
    for (const auto& w : b.masks.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

int cmd_build_graph(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::Bundle b = isel::read_bundle(c.out + "/bundle");
    isel::GraphStageOut g = isel::stage_build_graph(b, cfg.method, cfg.seed);
    isel::write_graph_file(c.out + "/graph.txt", g.graph);
    isel::write_file_text(c.out + "/build_info.json", g.info_json);
    std::printf("built %s graph: %u nodes, %zu arcs, %zu arc sets, GCT %.3fs\n",
                cfg.method.name.c_str(), g.graph.n, g.graph.total_arcs(), g.graph.sets.size(),
                g.gct_seconds);
    return 0;
}

int cmd_train(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::Bundle b = isel::read_bundle(c.out + "/bundle");
    isel::MultiGraph g = load_graph_with_rows(c.out);
    isel::TrainStageOut t = isel::stage_train(b, g, cfg.model, cfg.seed, c.out);
    std::printf("trained %d iterations (best %d, valid loss %.6f), GTT %.3fs\n",
                t.result.final_iter, t.result.best_iter, t.result.best_valid_loss,
                t.result.gtt_seconds);
    return 0;
}

int cmd_select(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::Bundle b = isel::read_bundle(c.out + "/bundle");
    isel::MultiGraph g = load_graph_with_rows(c.out);
    isel::AttentionTrace trace = isel::read_trace(c.out + "/trace.bin", c.out + "/trace.json");
    int absent = 0;
    isel::SelectionResult sel =
        isel::stage_select(b, g, trace, cfg.importance, cfg.selection, &absent);
    isel::write_selection_json(c.out + "/selection.json", sel, cfg.selection,
                               int(b.masks.train.size()), absent);
    isel::write_reduced_csv(cfg.csv_path, sel.selected, c.out + "/reduced.csv");
    std::printf("selected %zu of %zu candidates (R=%.4f)\n", sel.selected.size(),
                b.masks.train.size(), sel.reduction_rate);
    for (const auto& w : sel.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

int cmd_evaluate(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::Bundle b = isel::read_bundle(c.out + "/bundle");
    isel::SelectParams sp = cfg.selection;
    isel::SelectionResult sel = isel::read_selection_json(c.out + "/selection.json", &sp);
    cfg.selection = sp;
    std::vector<std::string> warnings = sel.warnings;

    isel::SplitLabels vault(b.dataset.y, b.masks);
    const std::vector<int>& full = vault.unlock_test("evaluate command on the test split");
    isel::MetricsReport gais = isel::evaluate_subset(b, sel.selected, b.masks.test, full,
                                                     cfg.eval, sel.reduction_rate, &warnings);
    isel::MetricsReport rnd;
    bool has_rnd = cfg.eval.compare_random;
    if (has_rnd) {
        std::vector<char> mask(size_t(b.dataset.n), 0);
        for (int r : b.masks.train) mask[size_t(r)] = 1;
        isel::SelectionResult rs =
            isel::select_random_stratified(mask, vault.visible_all(), sp.ratio, cfg.seed);
        rnd = isel::evaluate_subset(b, rs.selected, b.masks.test, full, cfg.eval,
                                    rs.reduction_rate, &warnings);
    }
    isel::write_file_text(c.out + "/metrics.json",
                          isel::metrics_json_text(cfg, b, gais, has_rnd ? &rnd : nullptr,
                                                  int(b.masks.train.size()),
                                                  int(sel.selected.size()), 0, warnings));
    print_report("gais  ", gais);
    if (has_rnd) print_report("random", rnd);
    return 0;
}

int cmd_pipeline(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    isel::PipelineOutcome out = isel::run_pipeline(cfg, c.out);
    std::printf("pipeline %s on %s: selected %d/%d\n", cfg.method.name.c_str(),
                cfg.csv_path.c_str(), out.selected_count, out.candidate_count);
    print_report("gais  ", out.gais);
    if (out.has_baseline) print_report("random", out.random_baseline);
    std::printf("timings  preprocess=%.3fs GCT=%.3fs GTT=%.3fs IST=%.3fs MLT=%.3fs\n",
                out.timings.preprocess_seconds, out.timings.gct_seconds,
                out.timings.gtt_seconds, out.timings.ist_seconds, out.timings.mlt_seconds);
    for (const auto& w : out.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

int cmd_sweep(const Common& c, bool confirm) {
    std::string text;
    try {
        text = isel::read_file_text(c.config);
    } catch (const isel::DataError& e) {
        throw isel::ConfigError(e.what());
    }
    isel::SweepSpec spec = isel::parse_sweep_config(text);
    if (c.seed_given) spec.base.seed = c.seed;
    isel::SweepOutcome out = isel::run_sweep(spec, c.out, confirm);
    std::printf("%-4s %-9s %-12s %-6s %-12s %-10s\n", "rank", "method", "strategy", "ratio",
                "mean_valid_E", "std");
    for (size_t i = 0; i < out.ranked.size() && i < 15; ++i) {
        const auto& cell = out.ranked[i];
        std::printf("%-4zu %-9s %-12s %-6.3f %-12.4f %-10.4f\n", i + 1, cell.method.c_str(),
                    cell.strategy.c_str(), cell.ratio, cell.mean_valid_effectiveness,
                    cell.std_valid_effectiveness);
    }
    if (out.test_confirmed) {
        std::printf("confirmed on the test split (mean over seeds):\n");
        print_report("best  ", out.confirmed_mean);
    }
    return 0;
}

int cmd_bench_graph(const Common& c, std::vector<int> sizes, std::vector<std::string> methods,
                    int repeats, int dim, int classes, int knn_k, isel::DmParams dmp,
                    isel::LshParams lshp) {
    if (sizes.empty()) throw isel::ConfigError("bench-graph needs at least one size");
    if (methods.empty()) throw isel::ConfigError("bench-graph needs at least one method");
    if (repeats < 1) throw isel::ConfigError("repeats must be positive");
    fs::create_directories(c.out);
    std::string csv = "method,n,repeats,mean_seconds,std_seconds\n";
    std::printf("%-10s %-9s %-14s %-12s\n", "method", "n", "mean_seconds", "std_seconds");
    for (int n : sizes) {
        isel::RawData raw = isel::make_blobs(n, dim, classes, 1.0, c.seed);
        isel::Dataset ds = isel::to_dataset(raw);
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[size_t(i)] = i;
        for (const auto& method : methods) {
            std::vector<double> times;
            for (int rep = 0; rep < repeats; ++rep) {
                uint64_t seed = c.seed + uint64_t(rep);
                double secs = 0.0;
                if (method == "dm") {
                    secs = isel::build_dm_graph(ds, pool, dmp, seed).gct_seconds;
                } else if (method == "exact-knn") {
                    secs = isel::build_knn_graph(ds.X.data(), ds.d, pool, knn_k).gct_seconds;
                } else if (method == "sl-lsh") {
                    secs = isel::build_sl_graph(ds, pool, lshp, seed).gct_seconds;
                } else if (method == "ml-lsh") {
                    secs = isel::build_ml_graph(ds, pool, lshp, seed).gct_seconds;
                } else if (method == "mvml-lsh") {
                    secs = isel::build_mvml_graph(ds, pool, lshp, seed).gct_seconds;
                } else {
                    throw isel::ConfigError("unknown bench method '" + method + "'");
                }
                times.push_back(secs);
            }
            double mean = 0.0;
            for (double t : times) mean += t;
            mean /= double(times.size());
            double var = 0.0;
            for (double t : times) var += (t - mean) * (t - mean);
            double sd = std::sqrt(var / double(times.size()));
            csv += method + "," + std::to_string(n) + "," + std::to_string(repeats) + "," +
                   std::to_string(mean) + "," + std::to_string(sd) + "\n";
            std::printf("%-10s %-9d %-14.4f %-12.4f\n", method.c_str(), n, mean, sd);
        }
    }
    isel::write_file_text(c.out + "/bench_graph.csv", csv);
    return 0;
}

int cmd_lsh_quality(const Common& c) {
    isel::PipelineConfig cfg = load_cfg(c);
    if (cfg.method.name == "dm")
        throw isel::ConfigError("lsh-quality needs an lsh method (sl-lsh, ml-lsh or mvml-lsh)");
    isel::RawTable raw = isel::load_csv(cfg.csv_path, cfg.target);
    isel::Dataset ds = isel::preprocess(raw);
    isel::SplitMasks masks = isel::stratified_split(ds, cfg.train_frac, cfg.valid_frac,
                                                    cfg.test_frac, cfg.seed);
    isel::LshBuildResult r;
    if (cfg.method.name == "sl-lsh")
        r = isel::build_sl_graph(ds, masks.train, cfg.method.lsh, cfg.seed);
    else if (cfg.method.name == "ml-lsh")
        r = isel::build_ml_graph(ds, masks.train, cfg.method.lsh, cfg.seed);
    else
        r = isel::build_mvml_graph(ds, masks.train, cfg.method.lsh, cfg.seed);
    isel::BucketQuality q = isel::bucket_quality(r.index, ds, r.graph.node_ids, cfg.seed);

    json j;
    j["method"] = cfg.method.name;
    j["dataset"] = fs::path(cfg.csv_path).filename().string();
    j["nodes"] = r.graph.n;
    j["tables"] = r.index.tables.size();
    j["splits"] = r.splits;
    j["merges"] = r.merges;
    j["capped_buckets"] = r.capped_buckets;
    j["separation"] = q.separation;
    j["purity"] = q.purity;
    j["recall_at_5"] = q.recall_at_5;
    j["pearson_rho"] = q.pearson_rho;
    j["mean_bucket_size"] = q.mean_bucket_size;
    j["warnings"] = q.warnings;
    fs::create_directories(c.out);
    isel::write_file_text(c.out + "/lsh_quality.json", j.dump(2) + "\n");
    std::printf(
        "%s buckets: purity=%.4f separation=%.4f recall@5=%.4f rho=%.4f mean_size=%.2f\n",
        cfg.method.name.c_str(), q.purity, q.separation, q.recall_at_5, q.pearson_rho,
        q.mean_bucket_size);
    for (const auto& w : q.warnings) std::printf("warning: %s\n", w.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph-attention instance selection experiments"};
    app.require_subcommand(1);

    Common c;
    auto* p_pre = app.add_subcommand("preprocess", "load a CSV, scale, split, write the bundle");
    add_common(p_pre, c, true);
    auto* p_graph = app.add_subcommand("build-graph", "build the instance graph from a bundle");
    add_common(p_graph, c, true);
    auto* p_train = app.add_subcommand("train", "train the attention model on a built graph");
    add_common(p_train, c, true);
    auto* p_select = app.add_subcommand("select", "score nodes and pick the retained subset");
    add_common(p_select, c, true);
    auto* p_eval = app.add_subcommand("evaluate", "score the selection on the test split");
    add_common(p_eval, c, true);
    auto* p_pipe = app.add_subcommand("pipeline", "run every stage into one run directory");
    add_common(p_pipe, c, true);

    auto* p_sweep = app.add_subcommand("sweep", "grid search scored on the validation split");
    add_common(p_sweep, c, true);
    bool confirm = false;
    p_sweep->add_flag("--confirm", confirm, "rerun the winning cell on the test split");

    auto* p_bench = app.add_subcommand("bench-graph", "time graph construction on blobs");
    add_common(p_bench, c, false);
    std::vector<int> sizes{10000, 100000};
    std::vector<std::string> methods{"dm", "exact-knn"};
    int repeats = 3, dim = 4, classes = 3, knn_k = 10;
    isel::DmParams dmp;
    dmp.batch_count = 5;
    dmp.batch_cap = 2000;
    isel::LshParams lshp;
    p_bench->add_option("--sizes", sizes, "dataset sizes");
    p_bench->add_option("--methods", methods, "dm, exact-knn, sl-lsh, ml-lsh, mvml-lsh");
    p_bench->add_option("--repeats", repeats, "repeats per cell");
    p_bench->add_option("--dim", dim, "blob dimensionality");
    p_bench->add_option("--classes", classes, "blob class count");
    p_bench->add_option("--knn-k", knn_k, "neighbours for exact-knn");
    p_bench->add_option("--batch-count", dmp.batch_count, "mini-batch count");
    p_bench->add_option("--batch-cap", dmp.batch_cap, "mini-batch cap");
    p_bench->add_option("--percentile", dmp.percentile, "similarity percentile");

    auto* p_lshq = app.add_subcommand("lsh-quality", "bucket quality diagnostics for an index");
    add_common(p_lshq, c, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (p_pre->parsed()) return cmd_preprocess(c);
        if (p_graph->parsed()) return cmd_build_graph(c);
        if (p_train->parsed()) return cmd_train(c);
        if (p_select->parsed()) return cmd_select(c);
        if (p_eval->parsed()) return cmd_evaluate(c);
        if (p_pipe->parsed()) return cmd_pipeline(c);
        if (p_sweep->parsed()) return cmd_sweep(c, confirm);
        if (p_bench->parsed())
            return cmd_bench_graph(c, sizes, methods, repeats, dim, classes, knn_k, dmp, lshp);
        if (p_lshq->parsed()) return cmd_lsh_quality(c);
    } catch (const isel::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const isel::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const isel::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
