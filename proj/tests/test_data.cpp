#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "isel/dataset.hpp"

using namespace isel;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    auto d = fs::temp_directory_path() / "isel_test_data";
    fs::create_directories(d);
    return d;
}

std::string write_tmp(const std::string& name, const std::string& text) {
    auto p = tmp_dir() / name;
    write_file_text(p.string(), text);
    return p.string();
}

RawTable table_from(const std::string& text, const std::string& target = "label") {
    return load_csv(write_tmp("t.csv", text), target);
}

}  // namespace

TEST_CASE("load_csv reads shape and finds the target column") {
    auto t = table_from("a,b,label\n1,2,x\n3,4,y\n5,6,x\n");
    CHECK(t.rows.size() == 3);
    CHECK(t.column_names.size() == 3);
    CHECK(t.target_col == 2);
}

TEST_CASE("load_csv error taxonomy") {
    CHECK_THROWS_AS(load_csv("/definitely/not/here.csv", "label"), DataError);
    CHECK_THROWS_WITH_AS(table_from("a,b,label\n1,2\n"), doctest::Contains("row 1"),
                         DataError);
    CHECK_THROWS_WITH_AS(table_from("a,b,label\n1,2,x\n", "target"),
                         doctest::Contains("target"), DataError);
    CHECK_THROWS_AS(table_from(""), DataError);
    CHECK_THROWS_AS(table_from("a,b,label\n"), DataError);  // header only
    // missing cell rejected, not imputed
    CHECK_THROWS_WITH_AS(table_from("a,b,label\n1,,x\n"), doctest::Contains("'b'"), DataError);
}

TEST_CASE("bundled banana csv has the documented shape") {
    auto t = load_csv(std::string(ISEL_SOURCE_DIR) + "/data/banana.csv", "label");
    CHECK(t.rows.size() == 5300);
    CHECK(t.column_names.size() == 3);  // two features plus target
}

TEST_CASE("preprocess scales numeric columns to [0,1]") {
    auto ds = preprocess(table_from("a,label\n2,x\n4,y\n6,x\n"));
    CHECK(ds.d == 1);
    CHECK(ds.X == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(ds.feature_kinds[0] == FeatureKind::numeric);
    CHECK(ds.y == std::vector<int>{0, 1, 0});  // first-appearance label codes
    CHECK(ds.class_names == std::vector<std::string>{"x", "y"});
}

TEST_CASE("preprocess maps constant columns to zero") {
    auto ds = preprocess(table_from("a,b,label\n5,1,x\n5,2,y\n5,3,x\n"));
    CHECK(ds.X[0] == 0.0);
    CHECK(ds.X[2] == 0.0);
    CHECK(ds.X[4] == 0.0);
}

TEST_CASE("preprocess label-encodes categorical columns by first appearance") {
    auto ds = preprocess(table_from("c,label\nred,x\nblue,y\nred,x\n"));
    CHECK(ds.feature_kinds[0] == FeatureKind::categorical);
    CHECK(ds.X == std::vector<double>{0.0, 1.0, 0.0});  // encoded then min-max scaled
}

TEST_CASE("preprocess rejects mixed numeric and non-numeric columns") {
    CHECK_THROWS_WITH_AS(preprocess(table_from("a,label\n1,x\noops,y\n3,x\n")),
                         doctest::Contains("'a'"), DataError);
    CHECK_THROWS_WITH_AS(preprocess(table_from("a,label\n1,x\noops,y\n3,x\n")),
                         doctest::Contains("row 2"), DataError);
}

TEST_CASE("every non-constant column spans exactly [0,1] after preprocessing") {
    auto t = load_csv(std::string(ISEL_SOURCE_DIR) + "/data/segment.csv", "label");
    auto ds = preprocess(t);
    for (int j = 0; j < ds.d; ++j) {
        double lo = ds.X[size_t(j)], hi = lo;
        for (int i = 1; i < ds.n; ++i) {
            double v = ds.X[size_t(i) * ds.d + j];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) {
            CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(lo >= 0.0);
        CHECK(hi <= 1.0);
    }
}

namespace {

Dataset tiny_dataset(const std::vector<int>& labels) {
    Dataset ds;
    ds.n = int(labels.size());
    ds.d = 1;
    ds.y = labels;
    ds.classes = 1 + *std::max_element(labels.begin(), labels.end());
    ds.X.assign(size_t(ds.n), 0.5);
    for (int c = 0; c < ds.classes; ++c) ds.class_names.push_back(std::to_string(c));
    ds.feature_names = {"f0"};
    ds.feature_kinds = {FeatureKind::numeric};
    ds.target_name = "label";
    return ds;
}

}  // namespace

TEST_CASE("stratified split: 10 instances, 2 balanced classes -> 8/1/1") {
    auto ds = tiny_dataset({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    auto m = stratified_split(ds, 0.8, 0.1, 0.1, 0);
    CHECK(m.train.size() == 8);
    CHECK(m.valid.size() == 1);
    CHECK(m.test.size() == 1);
    int c0 = 0;
    for (int i : m.train) c0 += ds.y[size_t(i)] == 0 ? 1 : 0;
    CHECK(c0 == 4);  // 4 + 4 in train
}

TEST_CASE("stratified split is deterministic per seed") {
    auto ds = tiny_dataset({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    auto a = stratified_split(ds, 0.8, 0.1, 0.1, 7);
    auto b = stratified_split(ds, 0.8, 0.1, 0.1, 7);
    CHECK(a.train == b.train);
    CHECK(a.valid == b.valid);
    CHECK(a.test == b.test);
    auto c = stratified_split(ds, 0.8, 0.1, 0.1, 8);
    CHECK((a.train != c.train || a.valid != c.valid || a.test != c.test));
}

TEST_CASE("stratified split: masks are disjoint and exhaustive across 100 seeds") {
    std::vector<int> labels;
    for (int i = 0; i < 57; ++i) labels.push_back(i % 3 == 0 ? 0 : (i % 3));
    auto ds = tiny_dataset(labels);
    for (uint64_t seed = 0; seed < 100; ++seed) {
        auto m = stratified_split(ds, 0.8, 0.1, 0.1, seed);
        std::set<int> seen;
        for (const auto* part : {&m.train, &m.valid, &m.test})
            for (int i : *part) {
                CHECK(seen.insert(i).second);
            }
        CHECK(seen.size() == size_t(ds.n));
    }
}

TEST_CASE("stratified split: per-class counts stay within one of exact proportions") {
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) labels.push_back(0);
    for (int i = 0; i < 13; ++i) labels.push_back(1);
    for (int i = 0; i < 7; ++i) labels.push_back(2);
    auto ds = tiny_dataset(labels);
    const double fr[3] = {0.8, 0.1, 0.1};
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto m = stratified_split(ds, fr[0], fr[1], fr[2], seed);
        const std::vector<int>* parts[3] = {&m.train, &m.valid, &m.test};
        for (int p = 0; p < 3; ++p) {
            int count[3] = {0, 0, 0};
            for (int i : *parts[p]) ++count[ds.y[size_t(i)]];
            const int sizes[3] = {40, 13, 7};
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(count[c] - fr[p] * sizes[c]) <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("classes with fewer than three instances go wholly to train with a warning") {
    auto ds = tiny_dataset({0, 0, 0, 0, 0, 0, 1, 1});
    // class 1 has 2 members but 2 >= 3 is false only below 3
    auto m = stratified_split(ds, 0.8, 0.1, 0.1, 3);
    int in_train = 0;
    for (int i : m.train) in_train += ds.y[size_t(i)] == 1 ? 1 : 0;
    CHECK(in_train == 2);
    REQUIRE(m.warnings.size() == 1);
    CHECK(m.warnings[0].find("'1'") != std::string::npos);
}

TEST_CASE("split fraction validation") {
    auto ds = tiny_dataset({0, 0, 0, 1, 1, 1});
    CHECK_THROWS_AS(stratified_split(ds, 0.8, 0.1, 0.2, 0), ConfigError);
    CHECK_THROWS_AS(stratified_split(ds, -0.1, 0.55, 0.55, 0), ConfigError);
}

TEST_CASE("bundle round-trip is exact") {
    auto t = table_from("a,b,label\n1,9,x\n2,8,y\n3,7,x\n4,6,y\n5,5,x\n6,4,y\n");
    auto ds = preprocess(t);
    auto m = stratified_split(ds, 0.8, 0.1, 0.1, 5);
    auto dir = (tmp_dir() / "bundle").string();
    write_bundle(dir, ds, m, "src.csv");
    auto b = read_bundle(dir);
    CHECK(b.dataset.n == ds.n);
    CHECK(b.dataset.d == ds.d);
    CHECK(b.dataset.classes == ds.classes);
    CHECK(b.dataset.X == ds.X);  // bitwise through the f64le codec
    CHECK(b.dataset.y == ds.y);
    CHECK(b.dataset.feature_names == ds.feature_names);
    CHECK(b.dataset.class_names == ds.class_names);
    CHECK(b.dataset.target_name == ds.target_name);
    CHECK(b.masks.train == m.train);
    CHECK(b.masks.valid == m.valid);
    CHECK(b.masks.test == m.test);
    CHECK(b.source_csv == "src.csv");
    fs::remove_all(tmp_dir());
}
