#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "isel/gat.hpp"
#include "isel/synth.hpp"

using namespace isel;

namespace {

Tensor rand_features(int n, int d, uint64_t seed) {
    Tensor x(n, d);
    RngStream rng(seed, "feat");
    for (auto& v : x.v) v = rng.uniform(0.0, 1.0);
    return x;
}

std::vector<int> alternating_labels(int n, int classes) {
    std::vector<int> y(size_t(n), 0);
    for (int i = 0; i < n; ++i) y[size_t(i)] = i % classes;
    return y;
}

MultiGraph random_graph(int n, const std::vector<std::pair<int, int>>& tags, int undirected,
                        uint64_t seed) {
    GraphBuilder gb{uint32_t(n)};
    RngStream rng(seed, "rand_graph");
    for (auto [v, m] : tags) {
        gb.ensure_set(v, m);
        int added = 0;
        while (added < undirected) {
            int a = int(rng.index(n)), b = int(rng.index(n));
            if (a == b) continue;
            gb.add_undirected(v, m, uint32_t(a), uint32_t(b));
            ++added;
        }
    }
    return gb.build();
}

Tensor& named_ref(std::vector<NamedTensor>& v, const std::string& name) {
    for (auto& nt : v)
        if (nt.name == name) return nt.tensor;
    throw std::runtime_error("no parameter named " + name);
}

const Tensor& named_cref(const std::vector<NamedTensor>& v, const std::string& name) {
    for (const auto& nt : v)
        if (nt.name == name) return nt.tensor;
    throw std::runtime_error("no parameter named " + name);
}

double elu_ref(double x) { return x > 0.0 ? x : std::expm1(x); }

GatConfig tiny_cfg(int hidden, int heads, int layers) {
    GatConfig cfg;
    cfg.hidden = hidden;
    cfg.heads = heads;
    cfg.layers = layers;
    cfg.dropout = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("diversity adjustment reproduces the two-node hand computation") {
    GraphBuilder gb(2);
    gb.add_undirected(0, 0, 0, 1);
    auto g = gb.build();
    Tensor x(2, 1);
    x.v = {std::log(9.0), 0.0};
    GatModel model(g, x, {0, 1}, 2, tiny_cfg(1, 1, 2), 3);

    auto named = model.named_parameters();
    named_ref(named, "layer0.view0.head0.weight") = Tensor(1, 1, {1.0});
    named_ref(named, "layer0.view0.head0.level0.attn") = Tensor(2, 1, {0.0, 1.0});
    named_ref(named, "layer0.view0.head0.lambda") = Tensor::scalar(0.1);
    model.load_parameters(named);

    // softmax of (ln 9, 0) is (0.9, 0.1); both entries sit 0.4 from the mean
    double dlt = 0.4 / (0.5 + 1e-8);
    double denom = 1.0 + 0.2 * dlt;
    double w_hi = (0.9 + 0.1 * dlt) / denom;
    double w_lo = (0.1 + 0.1 * dlt) / denom;

    Tape tape;
    AttentionTrace tr;
    model.forward(tape, &tr);
    std::map<std::pair<uint32_t, uint32_t>, double> w;  // (dst, src) -> weight
    for (const auto& r : tr.records)
        if (r.layer == 0) w[{r.dst, r.src}] = r.weight;
    REQUIRE(w.size() == 4);
    CHECK(w[{0, 0}] == doctest::Approx(w_hi).epsilon(1e-12));
    CHECK(w[{0, 1}] == doctest::Approx(w_lo).epsilon(1e-12));
    CHECK(w[{1, 0}] == doctest::Approx(w_hi).epsilon(1e-12));
    CHECK(w[{1, 1}] == doctest::Approx(w_lo).epsilon(1e-12));
    // the idealized fractions 0.98/1.16 and 0.18/1.16
    CHECK(w[{0, 0}] == doctest::Approx(0.98 / 1.16).epsilon(1e-7));
    CHECK(w[{0, 1}] == doctest::Approx(0.18 / 1.16).epsilon(1e-7));
}

TEST_CASE("a single self-looped node maps to ELU of its transform") {
    GraphBuilder gb(1);
    gb.ensure_set(0, 0);
    auto g = gb.build();
    Tensor x(1, 2);
    x.v = {0.3, 0.7};
    GatModel model(g, x, {0}, 2, tiny_cfg(4, 1, 1), 5);

    const auto named = model.named_parameters();
    const Tensor& W = named_cref(named, "layer0.view0.head0.weight");  // [2 classes, 2]
    REQUIRE(W.rows == 2);
    REQUIRE(W.cols == 2);

    Tape tape;
    AttentionTrace tr;
    auto fr = model.forward(tape, &tr);
    const Tensor& logits = tape.val(fr.logits);
    REQUIRE(logits.rows == 1);
    REQUIRE(logits.cols == 2);
    for (int c = 0; c < 2; ++c) {
        double z = W.at(c, 0) * 0.3 + W.at(c, 1) * 0.7;
        CHECK(logits.at(0, c) == doctest::Approx(elu_ref(z)).epsilon(1e-12));
    }
    REQUIRE(tr.records.size() == 1);  // the self-loop is the only arc
    CHECK(tr.records[0].weight == 1.0);
}

TEST_CASE("identical neighbors share attention equally") {
    GraphBuilder gb(2);
    gb.add_undirected(0, 0, 0, 1);
    auto g = gb.build();
    Tensor x(2, 3);
    for (auto& v : x.v) v = 0.4;  // both nodes identical
    GatModel model(g, x, {0, 1}, 2, tiny_cfg(4, 2, 2), 8);
    Tape tape;
    AttentionTrace tr;
    model.forward(tape, &tr);
    for (const auto& r : tr.records)
        CHECK(r.weight == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("amplification is a value identity and gives gamma a null gradient") {
    auto g = random_graph(6, {{0, 0}}, 8, 13);
    Tensor x = rand_features(6, 3, 13);
    auto labels = alternating_labels(6, 2);
    GatModel model(g, x, labels, 2, tiny_cfg(4, 2, 2), 13);

    Tape t0;
    AttentionTrace tr0;
    model.forward(t0, &tr0);

    auto named = model.named_parameters();
    for (auto& nt : named)
        if (nt.name.size() > 6 && nt.name.substr(nt.name.size() - 6) == ".gamma")
            nt.tensor = Tensor::scalar(0.7);
    model.load_parameters(named);

    Tape t1;
    AttentionTrace tr1;
    auto fr = model.forward(t1, &tr1);
    REQUIRE(tr0.records.size() == tr1.records.size());
    for (size_t i = 0; i < tr0.records.size(); ++i)
        CHECK(tr0.records[i].weight == doctest::Approx(tr1.records[i].weight).epsilon(1e-12));

    // gradient through the renormalized rescale vanishes
    auto labels_sp = std::make_shared<const std::vector<int>>(labels);
    std::vector<int> rows = {0, 1, 2, 3, 4, 5};
    auto rows_sp = std::make_shared<const std::vector<int>>(rows);
    Tape::Ref loss = t1.cross_entropy(fr.logits, labels_sp, rows_sp);
    t1.backward(loss);
    auto names = model.parameter_names();
    REQUIRE(names.size() == fr.params.size());
    bool saw_gamma = false;
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i].size() > 6 && names[i].substr(names[i].size() - 6) == ".gamma") {
            saw_gamma = true;
            CHECK(std::fabs(t1.grad(fr.params[i]).v[0]) < 1e-12);
        }
    CHECK(saw_gamma);
}

namespace {

std::string replaced(std::string s, const std::string& from, const std::string& to) {
    auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
    return s;
}

}  // namespace

TEST_CASE("duplicated levels with shared attention reproduce the single-level model") {
    const int n = 8;
    RngStream rng(17, "arcs");
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    for (int i = 0; i < 12; ++i) {
        uint32_t a = uint32_t(rng.index(n)), b = uint32_t(rng.index(n));
        if (a != b) pairs.emplace_back(a, b);
    }
    GraphBuilder ga(n), gb2(n);
    ga.ensure_set(0, 0);
    gb2.ensure_set(0, 0);
    gb2.ensure_set(0, 1);
    for (auto [a, b] : pairs) {
        ga.add_undirected(0, 0, a, b);
        gb2.add_undirected(0, 0, a, b);
        gb2.add_undirected(0, 1, a, b);
    }
    Tensor x = rand_features(n, 3, 17);
    auto labels = alternating_labels(n, 2);
    GatModel single(ga.build(), x, labels, 2, tiny_cfg(4, 2, 2), 17);
    GatModel twice(gb2.build(), x, labels, 2, tiny_cfg(4, 2, 2), 18);

    auto src = single.named_parameters();
    auto dst = twice.named_parameters();
    for (auto& nt : dst) nt.tensor = named_cref(src, replaced(nt.name, ".level1.", ".level0."));
    twice.load_parameters(dst);

    Tape ta, tb;
    auto fa = single.forward(ta, nullptr);
    auto fb = twice.forward(tb, nullptr);
    const Tensor& la = ta.val(fa.logits);
    const Tensor& lb = tb.val(fb.logits);
    REQUIRE(la.numel() == lb.numel());
    for (size_t i = 0; i < la.v.size(); ++i)
        CHECK(la.v[i] == doctest::Approx(lb.v[i]).epsilon(1e-12));
}

TEST_CASE("duplicated views with shared parameters reproduce the single-view model") {
    const int n = 8;
    RngStream rng(19, "arcs");
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    for (int i = 0; i < 12; ++i) {
        uint32_t a = uint32_t(rng.index(n)), b = uint32_t(rng.index(n));
        if (a != b) pairs.emplace_back(a, b);
    }
    GraphBuilder ga(n), gb2(n);
    ga.ensure_set(0, 0);
    gb2.ensure_set(0, 0);
    gb2.ensure_set(1, 0);
    for (auto [a, b] : pairs) {
        ga.add_undirected(0, 0, a, b);
        gb2.add_undirected(0, 0, a, b);
        gb2.add_undirected(1, 0, a, b);
    }
    Tensor x = rand_features(n, 3, 19);
    auto labels = alternating_labels(n, 2);
    GatModel single(ga.build(), x, labels, 2, tiny_cfg(4, 2, 2), 19);
    GatModel twice(gb2.build(), x, labels, 2, tiny_cfg(4, 2, 2), 20);

    auto src = single.named_parameters();
    auto dst = twice.named_parameters();
    for (auto& nt : dst) nt.tensor = named_cref(src, replaced(nt.name, ".view1.", ".view0."));
    twice.load_parameters(dst);

    Tape ta, tb;
    auto fa = single.forward(ta, nullptr);
    auto fb = twice.forward(tb, nullptr);
    const Tensor& la = ta.val(fa.logits);
    const Tensor& lb = tb.val(fb.logits);
    for (size_t i = 0; i < la.v.size(); ++i)
        CHECK(la.v[i] == doctest::Approx(lb.v[i]).epsilon(1e-12));
}

TEST_CASE("trace is row-stochastic per (layer, view, level, head, destination)") {
    const int n = 12;
    auto g = random_graph(n, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 16, 23);
    Tensor x = rand_features(n, 4, 23);
    GatModel model(g, x, alternating_labels(n, 3), 3, tiny_cfg(4, 2, 2), 23);
    Tape tape;
    AttentionTrace tr;
    model.forward(tape, &tr);
    CHECK(tr.n == uint32_t(n));
    CHECK(tr.layers == 2);
    CHECK(tr.heads == 2);

    std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t, uint32_t>, double> sums;
    for (const auto& r : tr.records) sums[{r.layer, r.view, r.level, r.head, r.dst}] += r.weight;
    // self-loops guarantee every destination appears in every bundle
    CHECK(sums.size() == size_t(2 * 2 * 2 * 2 * n));
    for (const auto& [key, s] : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));

    // records arrive grouped by (layer, view, level, head) with (dst, src) runs
    for (size_t i = 1; i < tr.records.size(); ++i) {
        const auto& a = tr.records[i - 1];
        const auto& b = tr.records[i];
        auto ka = std::tuple{a.layer, a.view, a.level, a.head, a.dst, a.src};
        auto kb = std::tuple{b.layer, b.view, b.level, b.head, b.dst, b.src};
        CHECK(ka < kb);
    }
}

TEST_CASE("self-loop opt-out demands full in-coverage") {
    GraphBuilder gb(4);
    gb.add_undirected(0, 0, 0, 1);
    gb.add_undirected(0, 0, 1, 3);
    auto g = gb.build();
    Tensor x = rand_features(4, 2, 29);
    auto labels = alternating_labels(4, 2);
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.self_loops = false;
    CHECK_THROWS_WITH_AS(GatModel(g, x, labels, 2, cfg, 29), doctest::Contains("node 2"),
                         ConfigError);
    GatModel ok(g, x, labels, 2, tiny_cfg(4, 2, 2), 29);  // loops restore coverage
    Tape tape;
    CHECK(tape.val(ok.forward(tape, nullptr).logits).rows == 4);
}

TEST_CASE("forward is equivariant under node relabeling") {
    const int n = 10;
    RngStream rng(31, "arcs");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 18; ++i) {
        int a = int(rng.index(n)), b = int(rng.index(n));
        if (a != b) pairs.emplace_back(a, b);
    }
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[size_t(i)] = i;
    rng.shuffle(perm);

    GraphBuilder ga(n), gb2(n);
    ga.ensure_set(0, 0);
    gb2.ensure_set(0, 0);
    Tensor xa = rand_features(n, 3, 31);
    Tensor xb(n, 3);
    std::vector<int> la = alternating_labels(n, 2), lb(size_t(n), 0);
    for (auto [a, b] : pairs) {
        ga.add_undirected(0, 0, uint32_t(a), uint32_t(b));
        gb2.add_undirected(0, 0, uint32_t(perm[size_t(a)]), uint32_t(perm[size_t(b)]));
    }
    for (int i = 0; i < n; ++i) {
        lb[size_t(perm[size_t(i)])] = la[size_t(i)];
        for (int j = 0; j < 3; ++j) xb.at(perm[size_t(i)], j) = xa.at(i, j);
    }

    GatModel ma(ga.build(), xa, la, 2, tiny_cfg(4, 2, 2), 31);
    GatModel mb(gb2.build(), xb, lb, 2, tiny_cfg(4, 2, 2), 31);  // same init draws
    Tape ta, tb;
    const Tensor& oa = ta.val(ma.forward(ta, nullptr).logits);
    const Tensor& ob = tb.val(mb.forward(tb, nullptr).logits);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 2; ++c)
            CHECK(oa.at(i, c) == doctest::Approx(ob.at(perm[size_t(i)], c)).epsilon(1e-10));
}

TEST_CASE("cross attention with every node as landmark matches the dense computation") {
    const int n = 12;
    auto g = random_graph(n, {{0, 0}}, 20, 37);
    Tensor x = rand_features(n, 4, 37);
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.nystrom.enabled = true;
    cfg.nystrom.landmarks = n;
    GatModel model(g, x, alternating_labels(n, 2), 2, cfg, 37);

    std::vector<int> want(n);
    for (int i = 0; i < n; ++i) want[size_t(i)] = i;
    REQUIRE(model.landmarks() == want);

    Tape tape;
    auto fr = model.forward(tape, nullptr);
    REQUIRE(fr.cross_input >= 0);
    REQUIRE(fr.h_cross >= 0);
    const Tensor& C = tape.val(fr.cross_input);
    const Tensor& got = tape.val(fr.h_cross);
    auto named = model.named_parameters();

    const int heads = 2, classes = 2;
    Tensor H(n, classes);
    for (int k = 0; k < heads; ++k) {
        const Tensor& WQ = named_cref(named, "cross.head" + std::to_string(k) + ".query");
        const Tensor& WK = named_cref(named, "cross.head" + std::to_string(k) + ".key");
        const Tensor& WV = named_cref(named, "cross.head" + std::to_string(k) + ".value");
        int dq = WQ.rows;
        auto proj = [&](const Tensor& W, int i, int r) {
            double s = 0.0;
            for (int c = 0; c < C.cols; ++c) s += C.at(i, c) * W.at(r, c);
            return s;
        };
        for (int i = 0; i < n; ++i) {
            std::vector<double> scores(size_t(n), 0.0);
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int r = 0; r < dq; ++r) s += proj(WQ, i, r) * proj(WK, j, r);
                scores[size_t(j)] = s / std::sqrt(double(dq));
            }
            double mx = *std::max_element(scores.begin(), scores.end());
            double z = 0.0;
            for (double& s : scores) {
                s = std::exp(s - mx);
                z += s;
            }
            for (int c = 0; c < classes; ++c) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc += scores[size_t(j)] / z * proj(WV, j, c);
                H.at(i, c) += acc / double(heads);
            }
        }
    }
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < classes; ++c)
            CHECK(got.at(i, c) == doctest::Approx(H.at(i, c)).epsilon(1e-10));

    // gate mixes the two paths
    const Tensor& hs = tape.val(fr.h_std);
    const Tensor& lg = tape.val(fr.logits);
    const Tensor& Wg = named_cref(named, "cross.gate.weight");
    const Tensor& bgv = named_cref(named, "cross.gate.bias");
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < classes; ++c) {
            double s = bgv.at(0, c);
            for (int j = 0; j < classes; ++j) s += hs.at(i, j) * Wg.at(c, j);
            for (int j = 0; j < classes; ++j) s += got.at(i, j) * Wg.at(c, classes + j);
            double gate = 1.0 / (1.0 + std::exp(-s));
            double wantv = gate * hs.at(i, c) + (1.0 - gate) * got.at(i, c);
            CHECK(lg.at(i, c) == doctest::Approx(wantv).epsilon(1e-10));
        }
}

TEST_CASE("landmarks take degree leaders first, then a seeded fill, sorted") {
    GraphBuilder gb(10);
    for (uint32_t i = 1; i <= 9; ++i) gb.add_undirected(0, 0, 0, i);
    gb.add_undirected(0, 0, 1, 2);
    auto g = gb.build();
    Tensor x = rand_features(10, 2, 41);
    auto labels = alternating_labels(10, 2);

    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.nystrom.enabled = true;
    cfg.nystrom.landmarks = 4;
    cfg.nystrom.degree_ratio = 0.5;
    GatModel m1(g, x, labels, 2, cfg, 41);
    auto lm = m1.landmarks();
    REQUIRE(lm.size() == 4);
    CHECK(std::is_sorted(lm.begin(), lm.end()));
    CHECK(std::find(lm.begin(), lm.end(), 0) != lm.end());  // hub, degree 9
    CHECK(std::find(lm.begin(), lm.end(), 1) != lm.end());  // degree 2, wins tie on index
    GatModel m2(g, x, labels, 2, cfg, 41);
    CHECK(m2.landmarks() == lm);

    cfg.nystrom.landmarks = 3;
    cfg.nystrom.degree_ratio = 1.0;  // pure degree ranking
    GatModel m3(g, x, labels, 2, cfg, 41);
    CHECK(m3.landmarks() == std::vector<int>{0, 1, 2});

    cfg.nystrom.degree_ratio = 0.0;
    CHECK_THROWS_AS(GatModel(g, x, labels, 2, cfg, 41), ConfigError);
    cfg.nystrom.degree_ratio = 0.5;
    cfg.nystrom.landmarks = 0;
    CHECK_THROWS_AS(GatModel(g, x, labels, 2, cfg, 41), ConfigError);
}

TEST_CASE("frozen loss walks the full stop and schedule protocol") {
    const int n = 20;
    GraphBuilder gb(n);
    for (uint32_t i = 0; i < uint32_t(n); ++i)
        gb.add_undirected(0, 0, i, (i + 1) % uint32_t(n));
    auto g = gb.build();
    Tensor x(n, 2);  // all-zero features freeze the logits at zero
    std::vector<int> labels(size_t(n), 0);
    for (int i = n / 2; i < n; ++i) labels[size_t(i)] = 1;

    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.max_iters = 100;
    GatModel model(g, x, labels, 2, cfg, 47);
    auto res = model.train(47);

    const double ln2 = std::log(2.0);
    CHECK(res.internal_valid_nodes.size() == 2);  // floor(0.1 * 10) per class
    CHECK(res.best_iter == 1);
    CHECK(res.final_iter == 31);  // patience 30 runs out 30 iters after the best
    REQUIRE(res.log.size() == 31);
    CHECK(res.best_valid_loss == doctest::Approx(ln2).epsilon(1e-12));
    for (const auto& e : res.log) {
        CHECK(e.train_loss == doctest::Approx(ln2).epsilon(1e-12));
        CHECK(e.valid_loss == doctest::Approx(ln2).epsilon(1e-12));
    }
    // plateau patience 25: the 26th stale step (iteration 27) cuts the rate
    CHECK(res.log[25].lr == doctest::Approx(5e-3).epsilon(1e-15));
    CHECK(res.log[26].lr == doctest::Approx(3.75e-3).epsilon(1e-15));
    CHECK(res.log[30].lr == doctest::Approx(3.75e-3).epsilon(1e-15));
    for (int i = 0; i <= 25; ++i) CHECK(res.log[size_t(i)].iter == i + 1);
}

TEST_CASE("non-finite loss reports the learning-rate hint") {
    const int n = 4;
    auto g = random_graph(n, {{0, 0}}, 6, 53);
    Tensor x = rand_features(n, 2, 53);
    x.v[0] = std::numeric_limits<double>::infinity();
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.max_iters = 5;
    GatModel model(g, x, alternating_labels(n, 2), 2, cfg, 53);
    CHECK_THROWS_WITH_AS(model.train(53), doctest::Contains("lower learning rate"),
                         NumericError);
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto data = to_dataset(make_blobs(24, 2, 2, 0.4, 59));
    std::vector<int> pool(size_t(data.n));
    for (int i = 0; i < data.n; ++i) pool[size_t(i)] = i;
    auto knn = build_knn_graph(data.X.data(), data.d, pool, 3);
    Tensor x(data.n, data.d, data.X);
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.max_iters = 12;
    cfg.dropout = 0.2;  // exercises the per-iteration mask stream

    GatModel a(knn.graph, x, data.y, data.classes, cfg, 59);
    GatModel b(knn.graph, x, data.y, data.classes, cfg, 59);
    auto ra = a.train(59);
    auto rb = b.train(59);
    REQUIRE(ra.log.size() == rb.log.size());
    for (size_t i = 0; i < ra.log.size(); ++i) {
        CHECK(ra.log[i].train_loss == rb.log[i].train_loss);
        CHECK(ra.log[i].valid_loss == rb.log[i].valid_loss);
        CHECK(ra.log[i].lr == rb.log[i].lr);
    }
    REQUIRE(ra.best_params.size() == rb.best_params.size());
    for (size_t i = 0; i < ra.best_params.size(); ++i) {
        CHECK(ra.best_params[i].name == rb.best_params[i].name);
        CHECK(ra.best_params[i].tensor.v == rb.best_params[i].tensor.v);
    }
    REQUIRE(ra.trace.records.size() == rb.trace.records.size());
    for (size_t i = 0; i < ra.trace.records.size(); ++i)
        CHECK(ra.trace.records[i].weight == rb.trace.records[i].weight);
}

TEST_CASE("separable blobs train to an accurate classifier") {
    auto data = to_dataset(make_blobs(40, 2, 2, 0.2, 61));
    std::vector<int> pool(size_t(data.n));
    for (int i = 0; i < data.n; ++i) pool[size_t(i)] = i;
    auto knn = build_knn_graph(data.X.data(), data.d, pool, 3);
    Tensor x(data.n, data.d, data.X);
    GatConfig cfg = tiny_cfg(8, 2, 2);
    cfg.max_iters = 60;
    GatModel model(knn.graph, x, data.y, data.classes, cfg, 61);
    auto res = model.train(61);
    CHECK(res.best_valid_loss < std::log(2.0));

    // the model is left holding the best snapshot
    Tape tape;
    const Tensor& lg = tape.val(model.forward(tape, nullptr).logits);
    int hits = 0;
    for (int i = 0; i < data.n; ++i) {
        int arg = 0;
        for (int c = 1; c < data.classes; ++c)
            if (lg.at(i, c) > lg.at(i, arg)) arg = c;
        hits += arg == data.y[size_t(i)] ? 1 : 0;
    }
    CHECK(hits >= 36);
    CHECK(res.gtt_seconds >= 0.0);
}

TEST_CASE("tiny graphs fall back to a single held-out validation node") {
    GraphBuilder gb(5);
    for (uint32_t i = 0; i + 1 < 5; ++i) gb.add_undirected(0, 0, i, i + 1);
    auto g = gb.build();
    Tensor x = rand_features(5, 2, 67);
    std::vector<int> labels = {0, 0, 0, 1, 1};  // floors are all zero
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.max_iters = 3;
    GatModel model(g, x, labels, 2, cfg, 67);
    auto res = model.train(67);
    CHECK(res.internal_valid_nodes.size() == 1);
    CHECK(res.final_iter == 3);
}

TEST_CASE("named parameters round-trip into a fresh model") {
    const int n = 10;
    auto g = random_graph(n, {{0, 0}}, 14, 71);
    Tensor x = rand_features(n, 3, 71);
    auto labels = alternating_labels(n, 2);
    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.max_iters = 8;
    GatModel trained(g, x, labels, 2, cfg, 71);
    trained.train(71);

    GatModel fresh(g, x, labels, 2, cfg, 72);  // different init, then overwritten
    fresh.load_parameters(trained.named_parameters());
    Tape ta, tb;
    const Tensor& la = ta.val(trained.forward(ta, nullptr).logits);
    const Tensor& lb = tb.val(fresh.forward(tb, nullptr).logits);
    CHECK(la.v == lb.v);
}

TEST_CASE("load_parameters rejects bad checkpoints") {
    auto g = random_graph(6, {{0, 0}}, 8, 73);
    Tensor x = rand_features(6, 2, 73);
    GatModel model(g, x, alternating_labels(6, 2), 2, tiny_cfg(4, 2, 2), 73);
    auto named = model.named_parameters();

    auto extra = named;
    extra.push_back({"stray", Tensor::scalar(1.0)});
    CHECK_THROWS_AS(model.load_parameters(extra), DataError);

    auto renamed = named;
    renamed[0].name = "not.a.parameter";
    CHECK_THROWS_AS(model.load_parameters(renamed), DataError);

    auto reshaped = named;
    reshaped[0].tensor = Tensor(1, 1);
    CHECK_THROWS_AS(model.load_parameters(reshaped), DataError);
}

TEST_CASE("model construction validates its configuration") {
    auto g = random_graph(6, {{0, 0}}, 8, 79);
    Tensor x = rand_features(6, 2, 79);
    auto labels = alternating_labels(6, 2);

    GatConfig cfg = tiny_cfg(4, 2, 2);
    cfg.heads = 3;  // 4 % 3 != 0
    CHECK_THROWS_AS(GatModel(g, x, labels, 2, cfg, 0), ConfigError);
    cfg = tiny_cfg(4, 2, 2);
    cfg.dropout = 1.0;
    CHECK_THROWS_AS(GatModel(g, x, labels, 2, cfg, 0), ConfigError);
    cfg = tiny_cfg(4, 2, 2);
    cfg.layers = 0;
    CHECK_THROWS_AS(GatModel(g, x, labels, 2, cfg, 0), ConfigError);
    cfg = tiny_cfg(4, 2, 2);
    CHECK_THROWS_AS(GatModel(g, x, labels, 1, cfg, 0), ConfigError);
    CHECK_THROWS_AS(GatModel(g, rand_features(5, 2, 0), labels, 2, cfg, 0), ConfigError);
    CHECK_THROWS_AS(GatModel(g, x, {0, 1, 0, 1, 0, 5}, 2, cfg, 0), ConfigError);
    CHECK_THROWS_AS(GatModel(g, x, {0, 1}, 2, cfg, 0), ConfigError);

    // views must carry matching level grids
    GraphBuilder mixed(4);
    mixed.add_undirected(0, 0, 0, 1);
    mixed.add_undirected(1, 2, 2, 3);
    CHECK_THROWS_AS(GatModel(mixed.build(), rand_features(4, 2, 0),
                             alternating_labels(4, 2), 2, cfg, 0),
                    ConfigError);
}

TEST_CASE("attention trace round-trips through its binary form") {
    GraphBuilder gb(3);
    gb.add_undirected(0, 0, 0, 1);
    gb.add_undirected(0, 0, 1, 2);
    auto g = gb.build();
    Tensor x = rand_features(3, 2, 83);
    GatModel model(g, x, {0, 1, 0}, 2, tiny_cfg(4, 2, 2), 83);
    Tape tape;
    AttentionTrace tr;
    model.forward(tape, &tr);
    REQUIRE(!tr.records.empty());

    auto dir = std::filesystem::temp_directory_path();
    auto bin = (dir / "isel_test_trace.bin").string();
    auto man = (dir / "isel_test_trace.json").string();
    write_trace(bin, man, tr);
    auto back = read_trace(bin, man);
    CHECK(back.n == tr.n);
    CHECK(back.layers == tr.layers);
    CHECK(back.heads == tr.heads);
    REQUIRE(back.records.size() == tr.records.size());
    for (size_t i = 0; i < tr.records.size(); ++i) {
        CHECK(back.records[i].src == tr.records[i].src);
        CHECK(back.records[i].dst == tr.records[i].dst);
        CHECK(back.records[i].view == tr.records[i].view);
        CHECK(back.records[i].level == tr.records[i].level);
        CHECK(back.records[i].layer == tr.records[i].layer);
        CHECK(back.records[i].head == tr.records[i].head);
        CHECK(back.records[i].weight == tr.records[i].weight);
    }

    // a truncated blob no longer matches the manifest record count
    std::ifstream in(bin, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    in.close();
    bytes.resize(bytes.size() - 8);
    std::ofstream out(bin, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.close();
    CHECK_THROWS_AS(read_trace(bin, man), DataError);
    std::filesystem::remove(bin);
    std::filesystem::remove(man);
}
