#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isel/pipeline.hpp"
#include "isel/synth.hpp"
#include "json.hpp"

using namespace isel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
    auto d = fs::temp_directory_path() / "isel_test_pipeline";
    fs::create_directories(d);
    return d;
}

std::string hex64_local(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string hash_tag(const std::string& path) {
    auto bytes = read_file_bytes(path);
    return "fnv1a64:" + hex64_local(fnv1a64(bytes.data(), bytes.size()));
}

bool same_bytes(const std::string& a, const std::string& b) {
    return read_file_bytes(a) == read_file_bytes(b);
}

// Small two-blob CSV shared by the end-to-end cases. batch_cap 60 under a
// ~96-row train split leaves rows out of the graph on purpose, so the
// "never sampled" path gets exercised too.
std::string blobs_csv_path() {
    static std::string path;
    if (path.empty()) {
        auto p = tmp_root() / "blobs.csv";
        write_file_text(p.string(), to_csv(make_blobs(120, 3, 2, 0.6, 7)));
        path = p.string();
    }
    return path;
}

std::string quick_config_text(const std::string& csv, double percentile = 90.0,
                              uint64_t seed = 11) {
    std::ostringstream os;
    os << R"({
  "dataset": {"csv": ")" << csv << R"(", "target": "label", "splits": [0.8, 0.1, 0.1]},
  "method": "dm",
  "dm": {"batch_count": 2, "batch_cap": 60, "sample_fraction": 1.0,
         "metric": "euclidean", "percentile": )" << percentile << R"(},
  "model": {"hidden": 8, "heads": 2, "layers": 2, "max_iters": 8,
            "early_stop_patience": 30, "lr": 0.005},
  "selection": {"strategy": "proportional", "ratio": 0.3},
  "evaluate": {"downstream": "logreg", "logreg": {"lr": 0.5, "epochs": 40, "l2": 0.0001},
               "compare_random": true},
  "seed": )" << seed << R"(
})";
    return os.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

TEST_CASE("config parser rejects unknown keys with their path") {
    CHECK_THROWS_WITH_AS(parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"bogus":1})"),
                         doctest::Contains("unknown key 'bogus' in config"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"dm":{"batches":3}})"),
        doctest::Contains("unknown key 'batches' in dm"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(
            R"({"dataset":{"csv":"a.csv"},"model":{"nystrom":{"landmark":4}}})"),
        doctest::Contains("unknown key 'landmark' in model.nystrom"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(
            R"({"dataset":{"csv":"a.csv"},"evaluate":{"logreg":{"rate":1}}})"),
        doctest::Contains("unknown key 'rate' in evaluate.logreg"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv","path":"x"}})"),
        doctest::Contains("unknown key 'path' in dataset"), ConfigError);
}

TEST_CASE("config parser rejects wrong value types naming the key") {
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"dm":{"percentile":"high"}})"),
        doctest::Contains("key 'percentile' in dm has the wrong type"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"seed":"zero"})"),
                         doctest::Contains("key 'seed' in config has the wrong type"),
                         ConfigError);
}

TEST_CASE("config parser validates required fields and enums") {
    CHECK_THROWS_WITH_AS(parse_pipeline_config("{}"),
                         doctest::Contains("config needs a dataset object"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config(R"({"dataset":{}})"),
                         doctest::Contains("dataset.csv is required"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv","splits":[0.8,0.2]}})"),
        doctest::Contains("dataset.splits must hold three fractions"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"method":"kmeans"})"),
        doctest::Contains("unknown method 'kmeans'"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_pipeline_config(R"({"dataset":{"csv":"a.csv"},"evaluate":{"downstream":"svm"}})"),
        doctest::Contains("evaluate.downstream must be logreg or knn"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_pipeline_config("{nope"),
                         doctest::Contains("config is not valid JSON"), ConfigError);
    CHECK_THROWS_AS(load_pipeline_config((tmp_root() / "missing_config.json").string()),
                    ConfigError);
}

TEST_CASE("minimal config fills documented defaults") {
    PipelineConfig cfg = parse_pipeline_config(R"({"dataset":{"csv":"a.csv"}})");
    CHECK(cfg.csv_path == "a.csv");
    CHECK(cfg.target == "label");
    CHECK(cfg.method.name == "dm");
    CHECK(cfg.model.hidden == 64);
    CHECK(cfg.model.heads == 4);
    CHECK(cfg.selection.ratio == doctest::Approx(0.1));
    CHECK(cfg.eval.downstream == "logreg");
    CHECK(cfg.eval.compare_random);
    CHECK(cfg.seed == 0);
    CHECK(cfg.train_frac == doctest::Approx(0.8));
}

TEST_CASE("canonical config json is a fixpoint and the hash ignores formatting") {
    std::string a = R"({
        "dataset": {"csv": "a.csv", "target": "label"},
        "seed": 3,
        "selection": {"ratio": 0.2, "strategy": "balanced"}
    })";
    std::string b =
        R"({"selection":{"strategy":"balanced","ratio":0.2},"seed":3,"dataset":{"target":"label","csv":"a.csv"}})";
    PipelineConfig ca = parse_pipeline_config(a);
    PipelineConfig cb = parse_pipeline_config(b);

    std::string canon_a = canonical_config_json(ca);
    std::string canon_b = canonical_config_json(cb);
    CHECK(canon_a == canon_b);
    CHECK(config_hash(ca) == config_hash(cb));
    CHECK(canon_a.back() == '\n');

    // round trip through the canonical text lands on the same text
    PipelineConfig cc = parse_pipeline_config(canon_a);
    CHECK(canonical_config_json(cc) == canon_a);
    CHECK(config_hash(cc) == config_hash(ca));

    // content changes do move the hash
    PipelineConfig cd = ca;
    cd.seed = 4;
    CHECK(config_hash(cd) != config_hash(ca));

    // canonical text carries defaults for everything left unset
    json j = json::parse(canon_a);
    CHECK(j.at("method").get<std::string>() == "dm");
    CHECK(j.at("model").at("hidden").get<int>() == 64);
    CHECK(j.at("evaluate").at("downstream").get<std::string>() == "logreg");
}

TEST_CASE("split label vault seals test rows until unlocked once") {
    std::vector<int> y = {0, 1, 0, 1, 0, 1};
    SplitMasks masks;
    masks.train = {0, 1, 2};
    masks.valid = {3};
    masks.test = {4, 5};
    SplitLabels vault(y, masks);

    CHECK(vault.visible(0) == 0);
    CHECK(vault.visible(3) == 1);
    CHECK(vault.visible(4) == -1);
    CHECK(vault.visible(5) == -1);
    CHECK_FALSE(vault.test_unlocked());
    CHECK(vault.unlock_log().empty());

    const std::vector<int>& full = vault.unlock_test("peek at the end");
    CHECK(full == y);
    CHECK(vault.test_unlocked());
    REQUIRE(vault.unlock_log().size() == 1);
    CHECK(vault.unlock_log()[0] == "test labels unlocked: peek at the end");

    // a second unlock neither re-logs nor changes anything
    vault.unlock_test("again");
    CHECK(vault.unlock_log().size() == 1);
    // the masked view stays masked even after the unlock
    CHECK(vault.visible(4) == -1);
    CHECK(vault.visible_all()[5] == -1);
}

TEST_CASE("pipeline run produces the full artifact set with a verifiable manifest") {
    std::string csv = blobs_csv_path();
    PipelineConfig cfg = parse_pipeline_config(quick_config_text(csv));
    std::string dir = (tmp_root() / "run1").string();
    fs::remove_all(dir);

    PipelineOutcome out = run_pipeline(cfg, dir);

    CHECK(out.run_dir == dir);
    CHECK(out.candidate_count > 0);
    CHECK(out.selected_count > 0);
    CHECK(out.selected_count < out.candidate_count);
    CHECK(out.has_baseline);
    CHECK(out.gais.effectiveness ==
          doctest::Approx(out.gais.accuracy * out.gais.reduction).epsilon(1e-12));
    CHECK(out.gais.effectiveness_f1 ==
          doctest::Approx(out.gais.macro_f1 * out.gais.reduction).epsilon(1e-12));
    CHECK(out.random_baseline.effectiveness ==
          doctest::Approx(out.random_baseline.accuracy * out.random_baseline.reduction)
              .epsilon(1e-12));

    // batch_cap 60 over ~96 train rows cannot cover everyone
    CHECK(out.absent_from_graph > 0);
    bool warned = false;
    for (const auto& w : out.warnings)
        if (w.find("never sampled into the graph") != std::string::npos) warned = true;
    CHECK(warned);

    const char* names[] = {"bundle/X.f64le", "bundle/y.u32le",  "bundle/masks.json",
                           "bundle/meta.json", "graph.txt",      "build_info.json",
                           "checkpoint.bin",   "checkpoint.json", "trace.bin",
                           "trace.json",       "train_log.jsonl", "selection.json",
                           "reduced.csv",      "metrics.json",    "comparison.csv"};
    for (const char* n : names) CHECK(fs::exists(dir + "/" + std::string(n)));
    CHECK(fs::exists(dir + "/timings.csv"));
    CHECK(fs::exists(dir + "/manifest.json"));

    json manifest = json::parse(read_file_text(dir + "/manifest.json"));
    CHECK(manifest.at("format").get<int>() == 1);
    CHECK(manifest.at("seed").get<uint64_t>() == 11);
    CHECK(manifest.at("config_hash").get<std::string>() == hex64_local(config_hash(cfg)));
    CHECK(manifest.at("timings_excluded").get<bool>());
    auto unlocks = manifest.at("unlocks").get<std::vector<std::string>>();
    REQUIRE(unlocks.size() == 1);
    CHECK(unlocks[0] == "test labels unlocked: final evaluation of the held-out test split");

    // every recorded checksum recomputes from the bytes on disk
    const json& arts = manifest.at("artifacts");
    CHECK(arts.size() == 15);
    for (const char* n : names)
        CHECK(arts.at(std::string(n)).get<std::string>() == hash_tag(dir + "/" + std::string(n)));
    CHECK_FALSE(arts.contains("timings.csv"));
    CHECK_FALSE(arts.contains("manifest.json"));
}

TEST_CASE("pipeline reruns are byte-identical on every manifest artifact") {
    std::string csv = blobs_csv_path();
    PipelineConfig cfg = parse_pipeline_config(quick_config_text(csv));
    std::string d1 = (tmp_root() / "det1").string();
    std::string d2 = (tmp_root() / "det2").string();
    fs::remove_all(d1);
    fs::remove_all(d2);

    PipelineOutcome o1 = run_pipeline(cfg, d1);
    PipelineOutcome o2 = run_pipeline(cfg, d2);
    CHECK(o1.gais.accuracy == o2.gais.accuracy);
    CHECK(o1.selected_count == o2.selected_count);

    const char* names[] = {"bundle/X.f64le", "bundle/y.u32le",  "bundle/masks.json",
                           "bundle/meta.json", "graph.txt",      "build_info.json",
                           "checkpoint.bin",   "checkpoint.json", "trace.bin",
                           "trace.json",       "train_log.jsonl", "selection.json",
                           "reduced.csv",      "metrics.json",    "comparison.csv"};
    for (const char* n : names)
        CHECK_MESSAGE(same_bytes(d1 + "/" + std::string(n), d2 + "/" + std::string(n)),
                      "artifact differs between reruns: " << n);
    CHECK(same_bytes(d1 + "/manifest.json", d2 + "/manifest.json"));
}

TEST_CASE("metrics json carries the dataset, the scores and the baseline") {
    std::string dir = (tmp_root() / "run1").string();
    REQUIRE(fs::exists(dir + "/metrics.json"));  // produced by the artifact case

    json m = json::parse(read_file_text(dir + "/metrics.json"));
    CHECK(m.at("dataset").at("source").get<std::string>() == "blobs.csv");
    CHECK(m.at("dataset").at("n").get<int>() == 120);
    CHECK(m.at("dataset").at("d").get<int>() == 3);
    CHECK(m.at("dataset").at("classes").get<int>() == 2);
    CHECK(m.at("method").get<std::string>() == "dm");
    CHECK(m.at("downstream").get<std::string>() == "logreg");
    CHECK(m.at("seed").get<uint64_t>() == 11);
    CHECK(m.at("selection").at("strategy").get<std::string>() == "proportional");
    CHECK(m.at("selection").at("ratio").get<double>() == doctest::Approx(0.3));
    CHECK(m.contains("random_baseline"));

    const json& g = m.at("gais");
    double ac = g.at("AC").get<double>();
    double f1 = g.at("F1").get<double>();
    double r = g.at("R").get<double>();
    CHECK(g.at("E").get<double>() == doctest::Approx(ac * r).epsilon(1e-12));
    CHECK(g.at("E_F1").get<double>() == doctest::Approx(f1 * r).epsilon(1e-12));
    CHECK(r > 0.0);
    CHECK(r < 1.0);

    // no wall clock anywhere in the deterministic report
    std::string text = read_file_text(dir + "/metrics.json");
    CHECK(text.find("seconds") == std::string::npos);
    CHECK(text.find("time") == std::string::npos);
}

TEST_CASE("train log holds one json record per iteration") {
    std::string dir = (tmp_root() / "run1").string();
    REQUIRE(fs::exists(dir + "/train_log.jsonl"));

    auto lines = split_lines(read_file_text(dir + "/train_log.jsonl"));
    REQUIRE(!lines.empty());
    int expect_iter = 1;
    for (const auto& line : lines) {
        json rec = json::parse(line);
        CHECK(rec.at("iter").get<int>() == expect_iter++);
        CHECK(std::isfinite(rec.at("train_loss").get<double>()));
        CHECK(std::isfinite(rec.at("valid_loss").get<double>()));
        CHECK(rec.at("lr").get<double>() > 0.0);
    }
    CHECK(lines.size() <= 8);  // max_iters in the quick config
}

TEST_CASE("selection artifact round trips and matches the run") {
    std::string dir = (tmp_root() / "run1").string();
    REQUIRE(fs::exists(dir + "/selection.json"));

    SelectParams params;
    SelectionResult sel = read_selection_json(dir + "/selection.json", &params);
    CHECK(params.strategy == SelectStrategy::proportional);
    CHECK(params.ratio == doctest::Approx(0.3));
    CHECK(std::is_sorted(sel.selected.begin(), sel.selected.end()));
    CHECK(!sel.selected.empty());

    json sj = json::parse(read_file_text(dir + "/selection.json"));
    CHECK(sj.at("selected_count").get<int>() == int(sel.selected.size()));
    CHECK(sj.at("candidates").get<int>() > int(sel.selected.size()));

    // reduced csv is the source header plus the selected lines verbatim
    auto src_lines = split_lines(read_file_text(blobs_csv_path()));
    auto red_lines = split_lines(read_file_text(dir + "/reduced.csv"));
    REQUIRE(red_lines.size() == sel.selected.size() + 1);
    CHECK(red_lines[0] == src_lines[0]);
    for (size_t i = 0; i < sel.selected.size(); ++i)
        CHECK(red_lines[i + 1] == src_lines[size_t(sel.selected[i]) + 1]);
}

TEST_CASE("selection json writer round trips through the reader") {
    SelectionResult sel;
    sel.selected = {3, 5, 9};
    sel.reduction_rate = 0.7;
    sel.warnings = {"class 1 has only 1 candidates for a quota of 2"};
    SelectParams params;
    params.strategy = SelectStrategy::balanced;
    params.ratio = 0.25;

    std::string path = (tmp_root() / "sel_rt.json").string();
    write_selection_json(path, sel, params, 10, 2);

    SelectParams back;
    SelectionResult got = read_selection_json(path, &back);
    CHECK(got.selected == sel.selected);
    CHECK(got.reduction_rate == doctest::Approx(0.7));
    REQUIRE(got.warnings.size() == 1);
    CHECK(got.warnings[0] == sel.warnings[0]);
    CHECK(back.strategy == SelectStrategy::balanced);
    CHECK(back.ratio == doctest::Approx(0.25));

    json sj = json::parse(read_file_text(path));
    CHECK(sj.at("candidates").get<int>() == 10);
    CHECK(sj.at("absent_from_graph").get<int>() == 2);
    CHECK(sj.at("selected_count").get<int>() == 3);

    std::string bad = (tmp_root() / "sel_bad.json").string();
    write_file_text(bad, "{not json");
    CHECK_THROWS_WITH_AS(read_selection_json(bad), doctest::Contains("bad selection file"),
                         DataError);
}

TEST_CASE("reduced csv writer keeps lines verbatim and rejects bad rows") {
    std::string src = (tmp_root() / "verbatim.csv").string();
    // windows line endings and a trailing blank line should both disappear
    write_file_text(src, "a,b,label\r\n1.50,2,x\r\n3,4.25,y\r\n5,6,x\r\n\r\n");

    std::string out = (tmp_root() / "verbatim_out.csv").string();
    write_reduced_csv(src, {0, 2}, out);
    auto lines = split_lines(read_file_text(out));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "a,b,label");
    CHECK(lines[1] == "1.50,2,x");
    CHECK(lines[2] == "5,6,x");

    CHECK_THROWS_WITH_AS(write_reduced_csv(src, {3}, out), doctest::Contains("outside"),
                         DataError);

    std::string empty = (tmp_root() / "empty.csv").string();
    write_file_text(empty, "");
    CHECK_THROWS_AS(write_reduced_csv(empty, {0}, out), DataError);
}

TEST_CASE("stage failures come back with the stage name prefixed") {
    std::string csv = blobs_csv_path();
    PipelineConfig cfg = parse_pipeline_config(quick_config_text(csv, 200.0));
    std::string dir = (tmp_root() / "prefix_run").string();
    fs::remove_all(dir);
    CHECK_THROWS_WITH_AS(run_pipeline(cfg, dir), doctest::Contains("build-graph: "),
                         ConfigError);
}

TEST_CASE("evaluate subset refuses sealed labels and empty inputs") {
    Dataset ds = to_dataset(make_blobs(60, 2, 2, 0.5, 3));
    SplitMasks masks = stratified_split(ds, 0.8, 0.1, 0.1, 3);
    Bundle bundle;
    bundle.dataset = ds;
    bundle.masks = masks;
    SplitLabels vault(ds.y, masks);
    EvalConfig ecfg;
    ecfg.logreg.epochs = 20;

    // evaluating on test rows against the masked view hits the seal
    std::vector<int> subset(masks.train.begin(), masks.train.begin() + 10);
    CHECK_THROWS_WITH_AS(evaluate_subset(bundle, subset, masks.test, vault.visible_all(), ecfg,
                                         0.5, nullptr),
                         doctest::Contains("sealed label"), ConfigError);

    // unlocked labels work and the effectiveness identities hold exactly
    const std::vector<int>& full = vault.unlock_test("test");
    std::vector<std::string> warnings;
    MetricsReport rep = evaluate_subset(bundle, subset, masks.test, full, ecfg, 0.5, &warnings);
    CHECK(rep.reduction == doctest::Approx(0.5));
    CHECK(rep.effectiveness == doctest::Approx(rep.accuracy * 0.5).epsilon(1e-12));
    CHECK(rep.effectiveness_f1 == doctest::Approx(rep.macro_f1 * 0.5).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate_subset(bundle, {}, masks.test, full, ecfg, 0.5, nullptr),
                    ConfigError);
    CHECK_THROWS_AS(evaluate_subset(bundle, subset, {}, full, ecfg, 0.5, nullptr), ConfigError);

    // a one-class subset still evaluates, with a warning about the constant
    std::vector<int> one_class;
    for (int r : masks.train)
        if (full[size_t(r)] == 0) one_class.push_back(r);
    warnings.clear();
    evaluate_subset(bundle, one_class, masks.test, full, ecfg, 0.5, &warnings);
    bool constant_warned = false;
    for (const auto& w : warnings)
        if (w.find("single class") != std::string::npos) constant_warned = true;
    CHECK(constant_warned);
}

TEST_CASE("sweep config parser validates its grid") {
    CHECK_THROWS_WITH_AS(parse_sweep_config(R"({"sweep":{}})"),
                         doctest::Contains("sweep config needs a pipeline object"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_sweep_config("{oops"),
                         doctest::Contains("sweep config is not valid JSON"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_sweep_config(
            R"({"pipeline":{"dataset":{"csv":"a.csv"}},"sweep":{"ratio":[0.1]}})"),
        doctest::Contains("unknown key 'ratio' in sweep"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_sweep_config(
            R"({"pipeline":{"dataset":{"csv":"a.csv"}},"sweep":{"methods":["dbscan"]}})"),
        doctest::Contains("unknown method 'dbscan'"), ConfigError);
    CHECK_THROWS_AS(
        parse_sweep_config(
            R"({"pipeline":{"dataset":{"csv":"a.csv"}},"sweep":{"strategies":["best"]}})"),
        ConfigError);

    SweepSpec spec = parse_sweep_config(
        R"({"pipeline":{"dataset":{"csv":"a.csv"}},"sweep":{"ratios":[0.1,0.2],"seeds":[1,2]}})");
    CHECK(spec.base.csv_path == "a.csv");
    CHECK(spec.ratios == std::vector<double>{0.1, 0.2});
    CHECK(spec.seeds == std::vector<uint64_t>{1, 2});
    CHECK(spec.methods.empty());
}

TEST_CASE("sweep ranks cells on validation effectiveness and keeps the test split sealed") {
    std::string csv = blobs_csv_path();
    std::ostringstream os;
    os << R"({"pipeline":)" << quick_config_text(csv) << R"(,
         "sweep": {"ratios": [0.2, 0.4], "strategies": ["proportional"], "seeds": [5]}})";
    SweepSpec spec = parse_sweep_config(os.str());

    std::string dir = (tmp_root() / "sweep1").string();
    fs::remove_all(dir);
    SweepOutcome out = run_sweep(spec, dir, false);

    REQUIRE(out.ranked.size() == 2);
    CHECK_FALSE(out.test_confirmed);
    CHECK(out.ranked[0].mean_valid_effectiveness >= out.ranked[1].mean_valid_effectiveness);
    if (out.ranked[0].mean_valid_effectiveness == out.ranked[1].mean_valid_effectiveness)
        CHECK(out.ranked[0].ratio < out.ranked[1].ratio);
    for (const SweepCell& cell : out.ranked) {
        CHECK(cell.method == "dm");
        CHECK(cell.strategy == "proportional");
        CHECK((cell.ratio == doctest::Approx(0.2) || cell.ratio == doctest::Approx(0.4)));
        CHECK(cell.mean_reduction > 0.0);
    }

    REQUIRE(fs::exists(dir + "/sweep.csv"));
    auto lines = split_lines(read_file_text(dir + "/sweep.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "rank,method,strategy,ratio,mean_valid_E,std_valid_E,mean_valid_AC,mean_R");
    CHECK(lines[1].rfind("1,dm,proportional,", 0) == 0);

    REQUIRE(fs::exists(dir + "/best_config.json"));
    PipelineConfig best = load_pipeline_config(dir + "/best_config.json");
    CHECK(best.selection.ratio == doctest::Approx(out.ranked[0].ratio));

    json sj = json::parse(read_file_text(dir + "/sweep.json"));
    CHECK(sj.at("cells").size() == 2);
    CHECK_FALSE(sj.contains("confirmed_test"));
    // no confirm flag means no pipeline run, hence no unlock anywhere
    CHECK_FALSE(fs::exists(dir + "/confirm-seed5"));
}
