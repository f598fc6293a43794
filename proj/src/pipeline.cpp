#include "isel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <tuple>

#include "json.hpp"

namespace fs = std::filesystem;

namespace isel {

using nlohmann::json;

SplitLabels::SplitLabels(std::vector<int> y, const SplitMasks& masks) : full_(std::move(y)) {
    visible_ = full_;
    for (int r : masks.test) visible_[size_t(r)] = -1;
}

const std::vector<int>& SplitLabels::unlock_test(const std::string& reason) {
    if (!unlocked_) {
        unlocked_ = true;
        log_.push_back("test labels unlocked: " + reason);
    }
    return full_;
}

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T jval(const json& o, const std::string& where, const char* k, T dflt) {
    if (!o.contains(k)) return dflt;
    try {
        return o.at(k).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("key '" + std::string(k) + "' in " + where + " has the wrong type");
    }
}

template <typename F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(name + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(name + ": " + e.what());
    }
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void parse_method_name(const std::string& name) {
    if (name != "dm" && name != "sl-lsh" && name != "ml-lsh" && name != "mvml-lsh")
        throw ConfigError("unknown method '" + name +
                          "' (expected dm, sl-lsh, ml-lsh or mvml-lsh)");
}

DmParams parse_dm(const json& o) {
    check_keys(o, "dm",
               {"batch_count", "batch_cap", "sample_fraction", "metric", "percentile"});
    DmParams p;
    p.batch_count = jval(o, "dm", "batch_count", p.batch_count);
    p.batch_cap = jval(o, "dm", "batch_cap", p.batch_cap);
    p.sample_fraction = jval(o, "dm", "sample_fraction", p.sample_fraction);
    p.metric = metric_from_string(jval<std::string>(o, "dm", "metric", metric_to_string(p.metric)));
    p.percentile = jval(o, "dm", "percentile", p.percentile);
    return p;
}

LshParams parse_lsh(const json& o) {
    check_keys(o, "lsh",
               {"family", "tables", "bits", "width", "split_threshold", "merge_limit", "levels",
                "views"});
    LshParams p;
    p.family =
        lsh_family_from_string(jval<std::string>(o, "lsh", "family", lsh_family_to_string(p.family)));
    p.tables = jval(o, "lsh", "tables", p.tables);
    p.bits = jval(o, "lsh", "bits", p.bits);
    p.width = jval(o, "lsh", "width", p.width);
    p.split_threshold = jval(o, "lsh", "split_threshold", p.split_threshold);
    p.merge_limit = jval(o, "lsh", "merge_limit", p.merge_limit);
    p.levels = jval(o, "lsh", "levels", p.levels);
    p.views = jval(o, "lsh", "views", p.views);
    return p;
}

GatConfig parse_model(const json& o) {
    check_keys(o, "model",
               {"hidden", "heads", "layers", "dropout", "leaky_slope", "diversity_init",
                "self_loops", "lr", "weight_decay", "max_iters", "early_stop_patience",
                "sched_patience", "sched_factor", "min_lr", "improve_threshold",
                "internal_valid_fraction", "nystrom"});
    GatConfig g;
    g.hidden = jval(o, "model", "hidden", g.hidden);
    g.heads = jval(o, "model", "heads", g.heads);
    g.layers = jval(o, "model", "layers", g.layers);
    g.dropout = jval(o, "model", "dropout", g.dropout);
    g.leaky_slope = jval(o, "model", "leaky_slope", g.leaky_slope);
    g.diversity_init = jval(o, "model", "diversity_init", g.diversity_init);
    g.self_loops = jval(o, "model", "self_loops", g.self_loops);
    g.lr = jval(o, "model", "lr", g.lr);
    g.weight_decay = jval(o, "model", "weight_decay", g.weight_decay);
    g.max_iters = jval(o, "model", "max_iters", g.max_iters);
    g.early_stop_patience = jval(o, "model", "early_stop_patience", g.early_stop_patience);
    g.sched_patience = jval(o, "model", "sched_patience", g.sched_patience);
    g.sched_factor = jval(o, "model", "sched_factor", g.sched_factor);
    g.min_lr = jval(o, "model", "min_lr", g.min_lr);
    g.improve_threshold = jval(o, "model", "improve_threshold", g.improve_threshold);
    g.internal_valid_fraction =
        jval(o, "model", "internal_valid_fraction", g.internal_valid_fraction);
    if (o.contains("nystrom")) {
        const json& ny = o.at("nystrom");
        check_keys(ny, "model.nystrom", {"enabled", "landmarks", "degree_ratio"});
        g.nystrom.enabled = jval(ny, "model.nystrom", "enabled", g.nystrom.enabled);
        g.nystrom.landmarks = jval(ny, "model.nystrom", "landmarks", g.nystrom.landmarks);
        g.nystrom.degree_ratio = jval(ny, "model.nystrom", "degree_ratio", g.nystrom.degree_ratio);
    }
    return g;
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "config",
               {"dataset", "method", "dm", "lsh", "model", "importance", "selection", "evaluate",
                "seed"});
    PipelineConfig cfg;
    if (!root.contains("dataset")) throw ConfigError("config needs a dataset object");
    const json& dsj = root.at("dataset");
    check_keys(dsj, "dataset", {"csv", "target", "splits"});
    cfg.csv_path = jval<std::string>(dsj, "dataset", "csv", "");
    if (cfg.csv_path.empty()) throw ConfigError("dataset.csv is required");
    cfg.target = jval<std::string>(dsj, "dataset", "target", cfg.target);
    if (dsj.contains("splits")) {
        auto sp = jval<std::vector<double>>(dsj, "dataset", "splits", {});
        if (sp.size() != 3) throw ConfigError("dataset.splits must hold three fractions");
        cfg.train_frac = sp[0];
        cfg.valid_frac = sp[1];
        cfg.test_frac = sp[2];
    }
    cfg.method.name = jval<std::string>(root, "config", "method", cfg.method.name);
    parse_method_name(cfg.method.name);
    if (root.contains("dm")) cfg.method.dm = parse_dm(root.at("dm"));
    if (root.contains("lsh")) cfg.method.lsh = parse_lsh(root.at("lsh"));
    if (root.contains("model")) cfg.model = parse_model(root.at("model"));
    if (root.contains("importance")) {
        const json& io = root.at("importance");
        check_keys(io, "importance", {"sender_weight", "receiver_weight", "layer_weights"});
        cfg.importance.sender_weight =
            jval(io, "importance", "sender_weight", cfg.importance.sender_weight);
        cfg.importance.receiver_weight =
            jval(io, "importance", "receiver_weight", cfg.importance.receiver_weight);
        cfg.importance.layer_weights =
            jval(io, "importance", "layer_weights", cfg.importance.layer_weights);
    }
    if (root.contains("selection")) {
        const json& so = root.at("selection");
        check_keys(so, "selection", {"strategy", "ratio"});
        cfg.selection.strategy = select_strategy_from_string(
            jval<std::string>(so, "selection", "strategy",
                              select_strategy_to_string(cfg.selection.strategy)));
        cfg.selection.ratio = jval(so, "selection", "ratio", cfg.selection.ratio);
    }
    if (root.contains("evaluate")) {
        const json& eo = root.at("evaluate");
        check_keys(eo, "evaluate", {"downstream", "knn_k", "logreg", "compare_random"});
        cfg.eval.downstream = jval<std::string>(eo, "evaluate", "downstream", cfg.eval.downstream);
        if (cfg.eval.downstream != "logreg" && cfg.eval.downstream != "knn")
            throw ConfigError("evaluate.downstream must be logreg or knn");
        cfg.eval.knn_k = jval(eo, "evaluate", "knn_k", cfg.eval.knn_k);
        if (eo.contains("logreg")) {
            const json& lo = eo.at("logreg");
            check_keys(lo, "evaluate.logreg", {"lr", "epochs", "l2"});
            cfg.eval.logreg.lr = jval(lo, "evaluate.logreg", "lr", cfg.eval.logreg.lr);
            cfg.eval.logreg.epochs = jval(lo, "evaluate.logreg", "epochs", cfg.eval.logreg.epochs);
            cfg.eval.logreg.l2 = jval(lo, "evaluate.logreg", "l2", cfg.eval.logreg.l2);
        }
        cfg.eval.compare_random = jval(eo, "evaluate", "compare_random", cfg.eval.compare_random);
    }
    cfg.seed = jval<uint64_t>(root, "config", "seed", cfg.seed);
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::string text;
    try {
        text = read_file_text(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());  // a missing config file is a config problem
    }
    return parse_pipeline_config(text);
}

std::string canonical_config_json(const PipelineConfig& cfg) {
    json j;
    j["dataset"]["csv"] = cfg.csv_path;
    j["dataset"]["target"] = cfg.target;
    j["dataset"]["splits"] = {cfg.train_frac, cfg.valid_frac, cfg.test_frac};
    j["method"] = cfg.method.name;
    j["dm"] = {{"batch_count", cfg.method.dm.batch_count},
               {"batch_cap", cfg.method.dm.batch_cap},
               {"sample_fraction", cfg.method.dm.sample_fraction},
               {"metric", metric_to_string(cfg.method.dm.metric)},
               {"percentile", cfg.method.dm.percentile}};
    j["lsh"] = {{"family", lsh_family_to_string(cfg.method.lsh.family)},
                {"tables", cfg.method.lsh.tables},
                {"bits", cfg.method.lsh.bits},
                {"width", cfg.method.lsh.width},
                {"split_threshold", cfg.method.lsh.split_threshold},
                {"merge_limit", cfg.method.lsh.merge_limit},
                {"levels", cfg.method.lsh.levels},
                {"views", cfg.method.lsh.views}};
    j["model"] = {{"hidden", cfg.model.hidden},
                  {"heads", cfg.model.heads},
                  {"layers", cfg.model.layers},
                  {"dropout", cfg.model.dropout},
                  {"leaky_slope", cfg.model.leaky_slope},
                  {"diversity_init", cfg.model.diversity_init},
                  {"self_loops", cfg.model.self_loops},
                  {"lr", cfg.model.lr},
                  {"weight_decay", cfg.model.weight_decay},
                  {"max_iters", cfg.model.max_iters},
                  {"early_stop_patience", cfg.model.early_stop_patience},
                  {"sched_patience", cfg.model.sched_patience},
                  {"sched_factor", cfg.model.sched_factor},
                  {"min_lr", cfg.model.min_lr},
                  {"improve_threshold", cfg.model.improve_threshold},
                  {"internal_valid_fraction", cfg.model.internal_valid_fraction},
                  {"nystrom",
                   {{"enabled", cfg.model.nystrom.enabled},
                    {"landmarks", cfg.model.nystrom.landmarks},
                    {"degree_ratio", cfg.model.nystrom.degree_ratio}}}};
    j["importance"] = {{"sender_weight", cfg.importance.sender_weight},
                       {"receiver_weight", cfg.importance.receiver_weight},
                       {"layer_weights", cfg.importance.layer_weights}};
    j["selection"] = {{"strategy", select_strategy_to_string(cfg.selection.strategy)},
                      {"ratio", cfg.selection.ratio}};
    j["evaluate"] = {{"downstream", cfg.eval.downstream},
                     {"knn_k", cfg.eval.knn_k},
                     {"logreg",
                      {{"lr", cfg.eval.logreg.lr},
                       {"epochs", cfg.eval.logreg.epochs},
                       {"l2", cfg.eval.logreg.l2}}},
                     {"compare_random", cfg.eval.compare_random}};
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

uint64_t config_hash(const PipelineConfig& cfg) {
    return fnv1a64_str(canonical_config_json(cfg));
}

void stage_preprocess(const PipelineConfig& cfg, const std::string& bundle_dir) {
    run_stage("preprocess", [&] {
        RawTable raw = load_csv(cfg.csv_path, cfg.target);
        Dataset ds = preprocess(raw);
        SplitMasks masks =
            stratified_split(ds, cfg.train_frac, cfg.valid_frac, cfg.test_frac, cfg.seed);
        write_bundle(bundle_dir, ds, masks, cfg.csv_path);
        return 0;
    });
}

GraphStageOut stage_build_graph(const Bundle& bundle, const MethodConfig& method, uint64_t seed) {
    return run_stage("build-graph", [&]() -> GraphStageOut {
        parse_method_name(method.name);
        GraphStageOut out;
        json info;
        info["method"] = method.name;
        if (method.name == "dm") {
            DmResult r = build_dm_graph(bundle.dataset, bundle.masks.train, method.dm, seed);
            out.graph = std::move(r.graph);
            out.gct_seconds = r.gct_seconds;
            json batches = json::array();
            for (const auto& b : r.batches)
                batches.push_back(
                    {{"size", b.size}, {"threshold", b.threshold}, {"edges", b.edges}});
            info["batches"] = batches;
            info["leftover"] = r.leftover;
        } else {
            LshBuildResult r;
            if (method.name == "sl-lsh")
                r = build_sl_graph(bundle.dataset, bundle.masks.train, method.lsh, seed);
            else if (method.name == "ml-lsh")
                r = build_ml_graph(bundle.dataset, bundle.masks.train, method.lsh, seed);
            else
                r = build_mvml_graph(bundle.dataset, bundle.masks.train, method.lsh, seed);
            out.graph = std::move(r.graph);
            out.gct_seconds = r.gct_seconds;
            info["splits"] = r.splits;
            info["merges"] = r.merges;
            info["capped_buckets"] = r.capped_buckets;
            info["tables"] = r.index.tables.size();
        }
        info["nodes"] = out.graph.n;
        info["arcs"] = out.graph.total_arcs();
        info["arc_sets"] = out.graph.sets.size();
        info["node_rows"] = out.graph.node_ids;  // graph file carries arcs only
        out.info_json = info.dump(2) + "\n";
        return out;
    });
}

TrainStageOut stage_train(const Bundle& bundle, const MultiGraph& graph, const GatConfig& gcfg,
                          uint64_t seed, const std::string& out_dir) {
    return run_stage("train", [&]() -> TrainStageOut {
        const Dataset& ds = bundle.dataset;
        std::vector<char> in_train(size_t(ds.n), 0);
        for (int r : bundle.masks.train) in_train[size_t(r)] = 1;
        SplitLabels vault(ds.y, bundle.masks);

        int n = int(graph.n);
        Tensor X(n, ds.d);
        std::vector<int> y(size_t(n), 0);
        for (int i = 0; i < n; ++i) {
            int row = graph.node_ids.empty() ? i : int(graph.node_ids[size_t(i)]);
            if (row < 0 || row >= ds.n) throw DataError("graph node maps outside the dataset");
            if (!in_train[size_t(row)])
                throw DataError("graph node " + std::to_string(i) +
                                " maps to row " + std::to_string(row) +
                                " outside the train split");
            std::copy_n(ds.row(row), ds.d, X.v.begin() + size_t(i) * size_t(ds.d));
            y[size_t(i)] = vault.visible(row);
        }

        GatModel model(graph, X, y, ds.classes, gcfg, seed);
        TrainStageOut out;
        out.graph_nodes = n;
        out.result = model.train(seed);

        fs::create_directories(out_dir);
        write_checkpoint(out_dir + "/checkpoint.bin", out_dir + "/checkpoint.json",
                         out.result.best_params);
        write_trace(out_dir + "/trace.bin", out_dir + "/trace.json", out.result.trace);
        std::string log;
        for (const auto& e : out.result.log) {
            json line = {{"iter", e.iter},
                         {"train_loss", e.train_loss},
                         {"valid_loss", e.valid_loss},
                         {"lr", e.lr}};
            log += line.dump() + "\n";
        }
        write_file_text(out_dir + "/train_log.jsonl", log);
        return out;
    });
}

SelectionResult stage_select(const Bundle& bundle, const MultiGraph& graph,
                             const AttentionTrace& trace, const ImportanceConfig& icfg,
                             SelectParams params, int* absent_out,
                             std::vector<double>* scores_out) {
    return run_stage("select", [&]() -> SelectionResult {
        const Dataset& ds = bundle.dataset;
        std::vector<double> node_scores = importance_scores(trace, icfg);
        if (node_scores.size() != graph.n)
            throw DataError("trace node count does not match the graph");
        std::vector<double> score_by_row(size_t(ds.n), 0.0);
        std::vector<char> in_graph(size_t(ds.n), 0);
        for (uint32_t i = 0; i < graph.n; ++i) {
            int row = graph.node_ids.empty() ? int(i) : int(graph.node_ids[size_t(i)]);
            score_by_row[size_t(row)] = node_scores[size_t(i)];
            in_graph[size_t(row)] = 1;
        }
        std::vector<char> mask(size_t(ds.n), 0);
        int absent = 0;
        for (int r : bundle.masks.train) {
            mask[size_t(r)] = 1;
            if (!in_graph[size_t(r)]) ++absent;
        }
        SplitLabels vault(ds.y, bundle.masks);
        SelectionResult sel =
            select_instances(score_by_row, mask, vault.visible_all(), params);
        if (absent > 0)
            sel.warnings.push_back(std::to_string(absent) +
                                   " train rows were never sampled into the graph; their "
                                   "importance is 0");
        if (absent_out) *absent_out = absent;
        if (scores_out) *scores_out = std::move(score_by_row);
        return sel;
    });
}

void write_selection_json(const std::string& path, const SelectionResult& sel,
                          SelectParams params, int candidates, int absent) {
    json j;
    j["strategy"] = select_strategy_to_string(params.strategy);
    j["ratio"] = params.ratio;
    j["candidates"] = candidates;
    j["selected_count"] = sel.selected.size();
    j["reduction_rate"] = sel.reduction_rate;
    j["absent_from_graph"] = absent;
    j["selected"] = sel.selected;
    j["warnings"] = sel.warnings;
    write_file_text(path, j.dump(2) + "\n");
}

SelectionResult read_selection_json(const std::string& path, SelectParams* params_out) {
    json j;
    try {
        j = json::parse(read_file_text(path));
    } catch (const json::exception& e) {
        throw DataError("bad selection file " + path + ": " + e.what());
    }
    SelectionResult sel;
    sel.selected = j.at("selected").get<std::vector<int>>();
    sel.reduction_rate = j.at("reduction_rate").get<double>();
    sel.warnings = j.value("warnings", std::vector<std::string>{});
    if (params_out) {
        params_out->strategy = select_strategy_from_string(j.at("strategy").get<std::string>());
        params_out->ratio = j.at("ratio").get<double>();
    }
    return sel;
}

void write_reduced_csv(const std::string& src_csv, const std::vector<int>& selected,
                       const std::string& out_path) {
    std::string text = read_file_text(src_csv);
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw DataError("source csv " + src_csv + " is empty");
    std::string out = lines[0] + "\n";
    for (int r : selected) {
        size_t at = size_t(r) + 1;
        if (at >= lines.size())
            throw DataError("selected row " + std::to_string(r) + " is outside " + src_csv);
        out += lines[at];
        out += "\n";
    }
    write_file_text(out_path, out);
}

MetricsReport evaluate_subset(const Bundle& bundle, const std::vector<int>& train_subset,
                              const std::vector<int>& eval_rows, const std::vector<int>& labels,
                              const EvalConfig& ecfg, double reduction,
                              std::vector<std::string>* warnings) {
    const Dataset& ds = bundle.dataset;
    if (train_subset.empty()) throw ConfigError("empty training subset");
    if (eval_rows.empty()) throw ConfigError("empty evaluation split");
    std::set<int> distinct;
    for (int r : train_subset) distinct.insert(labels[size_t(r)]);
    if (distinct.size() < 2 && warnings)
        warnings->push_back("downstream training subset holds a single class; the model "
                            "predicts a constant");

    std::vector<int> preds;
    if (ecfg.downstream == "logreg") {
        LogRegModel m =
            train_logreg(ds.X.data(), labels, train_subset, ds.d, ds.classes, ecfg.logreg);
        preds = predict_logreg(m, ds.X.data(), eval_rows, ds.d);
    } else if (ecfg.downstream == "knn") {
        preds = predict_knn(ds.X.data(), ds.d, train_subset, labels, eval_rows, ecfg.knn_k);
    } else {
        throw ConfigError("unknown downstream model '" + ecfg.downstream + "'");
    }
    std::vector<int> truth;
    truth.reserve(eval_rows.size());
    for (int r : eval_rows) {
        if (labels[size_t(r)] < 0)
            throw ConfigError("evaluation row " + std::to_string(r) + " has a sealed label");
        truth.push_back(labels[size_t(r)]);
    }
    Metrics m = classification_metrics(truth, preds, ds.classes);
    MetricsReport rep;
    rep.accuracy = m.accuracy;
    rep.macro_precision = m.macro_precision;
    rep.macro_recall = m.macro_recall;
    rep.macro_f1 = m.macro_f1;
    rep.reduction = reduction;
    rep.effectiveness = effectiveness(m.accuracy, reduction);
    rep.effectiveness_f1 = effectiveness_f1(m.macro_f1, reduction);
    return rep;
}

namespace {

json report_json(const MetricsReport& r) {
    return {{"AC", r.accuracy},      {"PR", r.macro_precision}, {"RE", r.macro_recall},
            {"F1", r.macro_f1},      {"R", r.reduction},        {"E", r.effectiveness},
            {"E_F1", r.effectiveness_f1}};
}

}  // namespace

std::string metrics_json_text(const PipelineConfig& cfg, const Bundle& bundle,
                              const MetricsReport& gais, const MetricsReport* baseline,
                              int candidates, int selected, int absent,
                              const std::vector<std::string>& warnings) {
    json mj;
    mj["dataset"] = {{"source", fs::path(cfg.csv_path).filename().string()},
                     {"n", bundle.dataset.n},
                     {"d", bundle.dataset.d},
                     {"classes", bundle.dataset.classes}};
    mj["method"] = cfg.method.name;
    mj["downstream"] = cfg.eval.downstream;
    mj["seed"] = cfg.seed;
    mj["selection"] = {{"strategy", select_strategy_to_string(cfg.selection.strategy)},
                       {"ratio", cfg.selection.ratio},
                       {"candidates", candidates},
                       {"selected", selected},
                       {"absent_from_graph", absent}};
    mj["gais"] = report_json(gais);
    if (baseline) mj["random_baseline"] = report_json(*baseline);
    mj["warnings"] = warnings;
    return mj.dump(2) + "\n";
}

namespace {

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_comparison_csv(const std::string& path, const std::string& dataset_name,
                          const std::string& method, const PipelineOutcome& out) {
    std::string csv = "method,dataset,AC,F1,R,E,E_F1,GCT,GTT,IST,MLT\n";
    auto row = [&](const std::string& name, const MetricsReport& r, const StageTimings& t) {
        csv += name + "," + dataset_name + "," + csv_double(r.accuracy) + "," +
               csv_double(r.macro_f1) + "," + csv_double(r.reduction) + "," +
               csv_double(r.effectiveness) + "," + csv_double(r.effectiveness_f1) + "," +
               csv_double(t.gct_seconds) + "," + csv_double(t.gtt_seconds) + "," +
               csv_double(t.ist_seconds) + "," + csv_double(t.mlt_seconds) + "\n";
    };
    row("gais-" + method, out.gais, out.timings);
    if (out.has_baseline) row("random", out.random_baseline, StageTimings{});
    write_file_text(path, csv);
}

uint64_t file_hash(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& cfg, const std::string& run_dir) {
    PipelineOutcome out;
    out.run_dir = run_dir;
    fs::create_directories(run_dir);

    StopWatch sw;
    stage_preprocess(cfg, run_dir + "/bundle");
    out.timings.preprocess_seconds = sw.seconds();

    Bundle bundle = read_bundle(run_dir + "/bundle");
    for (const auto& w : bundle.dataset.warnings) out.warnings.push_back(w);
    for (const auto& w : bundle.masks.warnings) out.warnings.push_back(w);

    GraphStageOut g = stage_build_graph(bundle, cfg.method, cfg.seed);
    out.timings.gct_seconds = g.gct_seconds;
    write_graph_file(run_dir + "/graph.txt", g.graph);
    write_file_text(run_dir + "/build_info.json", g.info_json);

    TrainStageOut tr = stage_train(bundle, g.graph, cfg.model, cfg.seed, run_dir);
    out.timings.gtt_seconds = tr.result.gtt_seconds;

    StopWatch ist;
    SelectionResult sel = stage_select(bundle, g.graph, tr.result.trace, cfg.importance,
                                       cfg.selection, &out.absent_from_graph);
    out.timings.ist_seconds = ist.seconds();
    out.selected_count = int(sel.selected.size());
    out.candidate_count = int(bundle.masks.train.size());
    for (const auto& w : sel.warnings) out.warnings.push_back(w);
    write_selection_json(run_dir + "/selection.json", sel, cfg.selection, out.candidate_count,
                         out.absent_from_graph);
    write_reduced_csv(cfg.csv_path, sel.selected, run_dir + "/reduced.csv");

    run_stage("evaluate", [&] {
        StopWatch mlt;
        SplitLabels vault(bundle.dataset.y, bundle.masks);
        const std::vector<int>& full =
            vault.unlock_test("final evaluation of the held-out test split");
        out.gais = evaluate_subset(bundle, sel.selected, bundle.masks.test, full, cfg.eval,
                                   sel.reduction_rate, &out.warnings);
        if (cfg.eval.compare_random) {
            std::vector<char> mask(size_t(bundle.dataset.n), 0);
            for (int r : bundle.masks.train) mask[size_t(r)] = 1;
            SelectionResult rnd = select_random_stratified(mask, vault.visible_all(),
                                                           cfg.selection.ratio, cfg.seed);
            out.random_baseline = evaluate_subset(bundle, rnd.selected, bundle.masks.test, full,
                                                  cfg.eval, rnd.reduction_rate, &out.warnings);
            out.has_baseline = true;
        }
        out.timings.mlt_seconds = mlt.seconds();

        write_file_text(run_dir + "/metrics.json",
                        metrics_json_text(cfg, bundle, out.gais,
                                          out.has_baseline ? &out.random_baseline : nullptr,
                                          out.candidate_count, out.selected_count,
                                          out.absent_from_graph, out.warnings));

        std::string tcsv = "stage,seconds\n";
        tcsv += "preprocess," + csv_double(out.timings.preprocess_seconds) + "\n";
        tcsv += "gct," + csv_double(out.timings.gct_seconds) + "\n";
        tcsv += "gtt," + csv_double(out.timings.gtt_seconds) + "\n";
        tcsv += "ist," + csv_double(out.timings.ist_seconds) + "\n";
        tcsv += "mlt," + csv_double(out.timings.mlt_seconds) + "\n";
        write_file_text(run_dir + "/timings.csv", tcsv);

        write_comparison_csv(run_dir + "/comparison.csv",
                             fs::path(cfg.csv_path).filename().string(), cfg.method.name, out);

        json manifest;
        manifest["format"] = 1;
        manifest["config_hash"] = hex64(config_hash(cfg));
        manifest["seed"] = cfg.seed;
        json arts;
        for (const char* name :
             {"bundle/X.f64le", "bundle/y.u32le", "bundle/masks.json", "bundle/meta.json",
              "graph.txt", "build_info.json", "checkpoint.bin", "checkpoint.json", "trace.bin",
              "trace.json", "train_log.jsonl", "selection.json", "reduced.csv", "metrics.json",
              "comparison.csv"})
            arts[name] = "fnv1a64:" + hex64(file_hash(run_dir + "/" + name));
        manifest["artifacts"] = arts;
        manifest["timings_excluded"] = true;  // wall clock lives in timings.csv only
        manifest["unlocks"] = vault.unlock_log();
        write_file_text(run_dir + "/manifest.json", manifest.dump(2) + "\n");
        return 0;
    });
    return out;
}

SweepSpec parse_sweep_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep config is not valid JSON: ") + e.what());
    }
    check_keys(root, "sweep config", {"pipeline", "sweep"});
    if (!root.contains("pipeline")) throw ConfigError("sweep config needs a pipeline object");
    SweepSpec spec;
    spec.base = parse_pipeline_config(root.at("pipeline").dump());
    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        check_keys(s, "sweep", {"ratios", "strategies", "methods", "seeds"});
        spec.ratios = jval<std::vector<double>>(s, "sweep", "ratios", {});
        spec.strategies = jval<std::vector<std::string>>(s, "sweep", "strategies", {});
        spec.methods = jval<std::vector<std::string>>(s, "sweep", "methods", {});
        spec.seeds = jval<std::vector<uint64_t>>(s, "sweep", "seeds", {});
    }
    for (const auto& m : spec.methods) parse_method_name(m);
    for (const auto& s : spec.strategies) select_strategy_from_string(s);
    return spec;
}

SweepOutcome run_sweep(const SweepSpec& spec, const std::string& out_dir, bool confirm_test) {
    SweepOutcome out;
    out.out_dir = out_dir;
    fs::create_directories(out_dir);

    std::vector<std::string> methods =
        spec.methods.empty() ? std::vector<std::string>{spec.base.method.name} : spec.methods;
    std::vector<double> ratios =
        spec.ratios.empty() ? std::vector<double>{spec.base.selection.ratio} : spec.ratios;
    std::vector<std::string> strategies =
        spec.strategies.empty()
            ? std::vector<std::string>{select_strategy_to_string(spec.base.selection.strategy)}
            : spec.strategies;
    std::vector<uint64_t> seeds =
        spec.seeds.empty() ? std::vector<uint64_t>{spec.base.seed} : spec.seeds;
    if (ratios.empty() || methods.empty() || strategies.empty() || seeds.empty())
        throw ConfigError("sweep grid is empty");

    RawTable raw = load_csv(spec.base.csv_path, spec.base.target);
    Dataset ds = preprocess(raw);

    struct CellKey {
        std::string method, strategy;
        double ratio;
        bool operator<(const CellKey& o) const {
            return std::tie(method, strategy, ratio) < std::tie(o.method, o.strategy, o.ratio);
        }
    };
    std::map<CellKey, std::vector<double>> cell_e, cell_ac, cell_r;

    for (uint64_t seed : seeds) {
        PipelineConfig c = spec.base;
        c.seed = seed;
        SplitMasks masks =
            stratified_split(ds, c.train_frac, c.valid_frac, c.test_frac, seed);
        Bundle bundle;
        bundle.dataset = ds;
        bundle.masks = masks;
        bundle.source_csv = c.csv_path;
        SplitLabels vault(ds.y, masks);

        for (const auto& method : methods) {
            MethodConfig mc = c.method;
            mc.name = method;
            GraphStageOut g = stage_build_graph(bundle, mc, seed);

            // train once per (method, seed); selection cells reuse the scores
            std::vector<char> in_train(size_t(ds.n), 0);
            for (int r : masks.train) in_train[size_t(r)] = 1;
            int n = int(g.graph.n);
            Tensor X(n, ds.d);
            std::vector<int> y(size_t(n), 0);
            for (int i = 0; i < n; ++i) {
                int row = g.graph.node_ids.empty() ? i : int(g.graph.node_ids[size_t(i)]);
                if (!in_train[size_t(row)])
                    throw DataError("sweep graph node outside the train split");
                std::copy_n(ds.row(row), ds.d, X.v.begin() + size_t(i) * size_t(ds.d));
                y[size_t(i)] = vault.visible(row);
            }
            GatModel model(g.graph, X, y, ds.classes, c.model, seed);
            TrainResult tr = model.train(seed);
            std::vector<double> node_scores = importance_scores(tr.trace, c.importance);
            std::vector<double> score_by_row(size_t(ds.n), 0.0);
            for (uint32_t i = 0; i < g.graph.n; ++i) {
                int row = g.graph.node_ids.empty() ? int(i) : int(g.graph.node_ids[size_t(i)]);
                score_by_row[size_t(row)] = node_scores[size_t(i)];
            }
            std::vector<char> mask(size_t(ds.n), 0);
            for (int r : masks.train) mask[size_t(r)] = 1;

            for (const auto& strategy : strategies)
                for (double ratio : ratios) {
                    SelectParams sp{select_strategy_from_string(strategy), ratio};
                    SelectionResult sel =
                        select_instances(score_by_row, mask, vault.visible_all(), sp);
                    MetricsReport rep =
                        evaluate_subset(bundle, sel.selected, masks.valid, vault.visible_all(),
                                        c.eval, sel.reduction_rate, nullptr);
                    CellKey key{method, strategy, ratio};
                    cell_e[key].push_back(rep.effectiveness);
                    cell_ac[key].push_back(rep.accuracy);
                    cell_r[key].push_back(rep.reduction);
                }
        }
    }

    for (const auto& [key, es] : cell_e) {
        SweepCell cell;
        cell.method = key.method;
        cell.strategy = key.strategy;
        cell.ratio = key.ratio;
        double n = double(es.size());
        for (double e : es) cell.mean_valid_effectiveness += e;
        cell.mean_valid_effectiveness /= n;
        double var = 0.0;
        for (double e : es) {
            double d = e - cell.mean_valid_effectiveness;
            var += d * d;
        }
        cell.std_valid_effectiveness = std::sqrt(var / n);
        for (double a : cell_ac[key]) cell.mean_valid_accuracy += a;
        cell.mean_valid_accuracy /= n;
        for (double r : cell_r[key]) cell.mean_reduction += r;
        cell.mean_reduction /= n;
        out.ranked.push_back(cell);
    }
    std::sort(out.ranked.begin(), out.ranked.end(), [](const SweepCell& a, const SweepCell& b) {
        if (a.mean_valid_effectiveness != b.mean_valid_effectiveness)
            return a.mean_valid_effectiveness > b.mean_valid_effectiveness;
        if (a.ratio != b.ratio) return a.ratio < b.ratio;  // smaller subsets win ties
        if (a.strategy != b.strategy) return a.strategy < b.strategy;
        return a.method < b.method;
    });

    std::string csv = "rank,method,strategy,ratio,mean_valid_E,std_valid_E,mean_valid_AC,mean_R\n";
    json cells = json::array();
    for (size_t i = 0; i < out.ranked.size(); ++i) {
        const SweepCell& cell = out.ranked[i];
        csv += std::to_string(i + 1) + "," + cell.method + "," + cell.strategy + "," +
               csv_double(cell.ratio) + "," + csv_double(cell.mean_valid_effectiveness) + "," +
               csv_double(cell.std_valid_effectiveness) + "," +
               csv_double(cell.mean_valid_accuracy) + "," + csv_double(cell.mean_reduction) +
               "\n";
        cells.push_back({{"rank", i + 1},
                         {"method", cell.method},
                         {"strategy", cell.strategy},
                         {"ratio", cell.ratio},
                         {"mean_valid_E", cell.mean_valid_effectiveness},
                         {"std_valid_E", cell.std_valid_effectiveness},
                         {"mean_valid_AC", cell.mean_valid_accuracy},
                         {"mean_R", cell.mean_reduction}});
    }
    write_file_text(out_dir + "/sweep.csv", csv);

    const SweepCell& best = out.ranked.front();
    PipelineConfig best_cfg = spec.base;
    best_cfg.method.name = best.method;
    best_cfg.selection.strategy = select_strategy_from_string(best.strategy);
    best_cfg.selection.ratio = best.ratio;
    write_file_text(out_dir + "/best_config.json", canonical_config_json(best_cfg));

    json sj;
    sj["cells"] = cells;
    sj["seeds"] = seeds;
    sj["best"] = cells.empty() ? json() : cells[0];

    if (confirm_test) {
        out.test_confirmed = true;
        json confirmed = json::array();
        MetricsReport mean;
        for (uint64_t seed : seeds) {
            PipelineConfig c = best_cfg;
            c.seed = seed;
            PipelineOutcome po =
                run_pipeline(c, out_dir + "/confirm-seed" + std::to_string(seed));
            confirmed.push_back({{"seed", seed}, {"gais", report_json(po.gais)}});
            mean.accuracy += po.gais.accuracy;
            mean.macro_precision += po.gais.macro_precision;
            mean.macro_recall += po.gais.macro_recall;
            mean.macro_f1 += po.gais.macro_f1;
            mean.reduction += po.gais.reduction;
            mean.effectiveness += po.gais.effectiveness;
            mean.effectiveness_f1 += po.gais.effectiveness_f1;
        }
        double k = double(seeds.size());
        mean.accuracy /= k;
        mean.macro_precision /= k;
        mean.macro_recall /= k;
        mean.macro_f1 /= k;
        mean.reduction /= k;
        mean.effectiveness /= k;
        mean.effectiveness_f1 /= k;
        out.confirmed_mean = mean;
        sj["confirmed_test"] = {{"runs", confirmed}, {"mean", report_json(mean)}};
    }
    write_file_text(out_dir + "/sweep.json", sj.dump(2) + "\n");
    return out;
}

}  // namespace isel
