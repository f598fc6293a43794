#include "isel/gat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "json.hpp"

namespace isel {

using nlohmann::json;

namespace {

void glorot_fill(Tensor& t, int fan_in, int fan_out, RngStream& rng) {
    double s = std::sqrt(6.0 / double(fan_in + fan_out));
    for (auto& x : t.v) x = rng.uniform(-s, s);
}

}  // namespace

GatModel::GatModel(const MultiGraph& graph, const Tensor& node_features,
                   const std::vector<int>& node_labels, int classes, GatConfig cfg,
                   uint64_t seed)
    : cfg_(cfg), n_(int(graph.n)), classes_(classes), X_(node_features),
      labels_(node_labels) {
    if (cfg_.heads < 1 || cfg_.layers < 1) throw ConfigError("heads and layers must be positive");
    if (cfg_.hidden < 1 || cfg_.hidden % cfg_.heads != 0)
        throw ConfigError("hidden width must be a positive multiple of the head count");
    if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
    if (cfg_.diversity_init <= 0.0) throw ConfigError("diversity init constant must be positive");
    if (classes_ < 2) throw ConfigError("attention model needs at least two classes");
    if (X_.rows != n_) throw ConfigError("feature matrix row count does not match the graph");
    if (int(labels_.size()) != n_) throw ConfigError("label count does not match the graph");
    for (int y : labels_)
        if (y < 0 || y >= classes_) throw ConfigError("node label out of range");
    in_dim_ = X_.cols;
    if (in_dim_ < 1) throw ConfigError("feature matrix has no columns");
    if (graph.sets.empty()) throw ConfigError("graph has no arc sets");

    std::map<int, std::vector<int>> levels_by_view;
    for (const auto& s : graph.sets) levels_by_view[s.view].push_back(s.level);
    for (auto& [v, ls] : levels_by_view) std::sort(ls.begin(), ls.end());
    level_tags_ = levels_by_view.begin()->second;
    for (const auto& [v, ls] : levels_by_view) {
        view_tags_.push_back(v);
        if (ls != level_tags_)
            throw ConfigError("graph views carry different level sets; the model needs a uniform grid");
    }

    degrees_ = graph.degree_profile();
    arcs_.resize(view_tags_.size());
    for (size_t vi = 0; vi < view_tags_.size(); ++vi) {
        arcs_[vi].resize(level_tags_.size());
        for (size_t mi = 0; mi < level_tags_.size(); ++mi) {
            const ArcSet* s = graph.find_set(view_tags_[vi], level_tags_[mi]);
            ArcBundle& b = arcs_[vi][mi];
            b.view_tag = view_tags_[vi];
            b.level_tag = level_tags_[mi];
            std::vector<std::pair<int, int>> ds;  // (dst, src), self-loops added here
            ds.reserve(s->arcs.size() + size_t(n_));
            for (const auto& [u, v] : s->arcs) ds.emplace_back(int(v), int(u));
            if (cfg_.self_loops)
                for (int i = 0; i < n_; ++i) ds.emplace_back(i, i);
            std::sort(ds.begin(), ds.end());
            b.src.reserve(ds.size());
            b.dst.reserve(ds.size());
            for (const auto& [d, u] : ds) {
                b.dst.push_back(d);
                b.src.push_back(u);
            }
            auto seg = std::make_shared<std::vector<int>>(size_t(n_) + 1, 0);
            for (int d : b.dst) ++(*seg)[size_t(d) + 1];
            for (int i = 0; i < n_; ++i) (*seg)[size_t(i) + 1] += (*seg)[size_t(i)];
            if (!cfg_.self_loops)
                for (int i = 0; i < n_; ++i)
                    if ((*seg)[size_t(i)] == (*seg)[size_t(i) + 1])
                        throw ConfigError(
                            "node " + std::to_string(i) +
                            " has no incoming arcs; attention needs self loops enabled");
            b.seg_starts = std::move(seg);
        }
    }

    init_params(seed);
    if (cfg_.nystrom.enabled) select_landmarks(seed);
}

int GatModel::head_out_dim(int layer) const {
    return layer == cfg_.layers - 1 ? classes_ : cfg_.hidden / cfg_.heads;
}

int GatModel::layer_in_dim(int layer) const { return layer == 0 ? in_dim_ : cfg_.hidden; }

void GatModel::init_params(uint64_t seed) {
    RngStream rng(seed, "gat_init", {});
    int L = cfg_.layers, V = views(), M = levels(), K = cfg_.heads;
    W_.assign(size_t(L), {});
    gamma_.assign(size_t(L), {});
    lambda_.assign(size_t(L), {});
    attn_.assign(size_t(L), {});
    for (int l = 0; l < L; ++l) {
        int din = layer_in_dim(l), dout = head_out_dim(l);
        W_[l].assign(size_t(V), std::vector<Tensor>(size_t(K)));
        gamma_[l] = W_[l];
        lambda_[l] = W_[l];
        attn_[l].assign(size_t(V), std::vector<std::vector<Tensor>>(
                                       size_t(M), std::vector<Tensor>(size_t(K))));
        for (int v = 0; v < V; ++v)
            for (int k = 0; k < K; ++k) {
                W_[l][v][k] = Tensor(dout, din);
                glorot_fill(W_[l][v][k], din, dout, rng);
                for (int m = 0; m < M; ++m) {
                    attn_[l][v][m][k] = Tensor(2 * dout, 1);
                    glorot_fill(attn_[l][v][m][k], 2 * dout, 1, rng);
                }
                gamma_[l][v][k] = Tensor::scalar(0.0);
                lambda_[l][v][k] =
                    Tensor::scalar(rng.uniform(0.5 * cfg_.diversity_init, cfg_.diversity_init));
            }
    }
    if (cfg_.nystrom.enabled) {
        int Dc = V * M * classes_;
        int dq = std::max(1, cfg_.hidden / cfg_.heads);
        WQ_.resize(size_t(K));
        WK_.resize(size_t(K));
        WV_.resize(size_t(K));
        for (int k = 0; k < K; ++k) {
            WQ_[k] = Tensor(dq, Dc);
            glorot_fill(WQ_[k], Dc, dq, rng);
            WK_[k] = Tensor(dq, Dc);
            glorot_fill(WK_[k], Dc, dq, rng);
            WV_[k] = Tensor(classes_, Dc);
            glorot_fill(WV_[k], Dc, classes_, rng);
        }
        Wg_ = Tensor(classes_, 2 * classes_);
        glorot_fill(Wg_, 2 * classes_, classes_, rng);
        bg_ = Tensor(1, classes_);
        for (auto& x : bg_.v) x = 1.0;  // gate starts open toward the standard path
    }
}

void GatModel::select_landmarks(uint64_t seed) {
    if (cfg_.nystrom.landmarks < 1) throw ConfigError("landmark count must be positive");
    if (!(cfg_.nystrom.degree_ratio > 0.0 && cfg_.nystrom.degree_ratio <= 1.0))
        throw ConfigError("landmark degree ratio must lie in (0,1]");
    int m = std::min(cfg_.nystrom.landmarks, n_);
    int by_degree = std::min(m, int(std::ceil(cfg_.nystrom.degree_ratio * double(m))));

    std::vector<int> order(n_);
    for (int i = 0; i < n_; ++i) order[size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (degrees_[size_t(a)] != degrees_[size_t(b)]) return degrees_[size_t(a)] > degrees_[size_t(b)];
        return a < b;
    });
    std::vector<char> taken(size_t(n_), 0);
    landmarks_.assign(order.begin(), order.begin() + by_degree);
    for (int i : landmarks_) taken[size_t(i)] = 1;

    std::vector<int> rest;
    rest.reserve(size_t(n_ - by_degree));
    for (int i = 0; i < n_; ++i)
        if (!taken[size_t(i)]) rest.push_back(i);
    RngStream rng(seed, "nystrom", {});
    rng.shuffle(rest);
    for (int i = 0; i < m - by_degree; ++i) landmarks_.push_back(rest[size_t(i)]);
    std::sort(landmarks_.begin(), landmarks_.end());
}

std::vector<const Tensor*> GatModel::parameters() const {
    std::vector<const Tensor*> out;
    int L = cfg_.layers, V = views(), M = levels(), K = cfg_.heads;
    for (int l = 0; l < L; ++l)
        for (int v = 0; v < V; ++v)
            for (int k = 0; k < K; ++k) {
                out.push_back(&W_[l][v][k]);
                for (int m = 0; m < M; ++m) out.push_back(&attn_[l][v][m][k]);
                out.push_back(&gamma_[l][v][k]);
                out.push_back(&lambda_[l][v][k]);
            }
    if (cfg_.nystrom.enabled) {
        for (int k = 0; k < K; ++k) {
            out.push_back(&WQ_[k]);
            out.push_back(&WK_[k]);
            out.push_back(&WV_[k]);
        }
        out.push_back(&Wg_);
        out.push_back(&bg_);
    }
    return out;
}

std::vector<Tensor*> GatModel::parameters() {
    auto c = static_cast<const GatModel*>(this)->parameters();
    std::vector<Tensor*> out;
    out.reserve(c.size());
    for (const Tensor* t : c) out.push_back(const_cast<Tensor*>(t));
    return out;
}

std::vector<std::string> GatModel::parameter_names() const {
    std::vector<std::string> out;
    int L = cfg_.layers, V = views(), M = levels(), K = cfg_.heads;
    for (int l = 0; l < L; ++l)
        for (int v = 0; v < V; ++v)
            for (int k = 0; k < K; ++k) {
                std::string base = "layer" + std::to_string(l) + ".view" +
                                   std::to_string(view_tags_[size_t(v)]) + ".head" +
                                   std::to_string(k);
                out.push_back(base + ".weight");
                for (int m = 0; m < M; ++m)
                    out.push_back(base + ".level" + std::to_string(level_tags_[size_t(m)]) +
                                  ".attn");
                out.push_back(base + ".gamma");
                out.push_back(base + ".lambda");
            }
    if (cfg_.nystrom.enabled) {
        for (int k = 0; k < K; ++k) {
            std::string base = "cross.head" + std::to_string(k);
            out.push_back(base + ".query");
            out.push_back(base + ".key");
            out.push_back(base + ".value");
        }
        out.push_back("cross.gate.weight");
        out.push_back("cross.gate.bias");
    }
    return out;
}

std::vector<NamedTensor> GatModel::named_parameters() const {
    auto names = parameter_names();
    auto ps = parameters();
    std::vector<NamedTensor> out;
    out.reserve(names.size());
    for (size_t i = 0; i < names.size(); ++i) out.push_back({names[i], *ps[i]});
    return out;
}

void GatModel::load_parameters(const std::vector<NamedTensor>& named) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& nt : named) by_name[nt.name] = &nt.tensor;
    auto names = parameter_names();
    auto ps = parameters();
    if (by_name.size() != names.size())
        throw DataError("checkpoint holds " + std::to_string(by_name.size()) +
                        " tensors, model expects " + std::to_string(names.size()));
    for (size_t i = 0; i < names.size(); ++i) {
        auto it = by_name.find(names[i]);
        if (it == by_name.end()) throw DataError("checkpoint is missing tensor " + names[i]);
        if (!it->second->same_shape(*ps[i]))
            throw DataError("checkpoint tensor " + names[i] + " has the wrong shape");
        *ps[i] = *it->second;
    }
}

GatModel::ForwardResult GatModel::forward(Tape& tape, AttentionTrace* capture,
                                          RngStream* drop_rng) const {
    int L = cfg_.layers, V = views(), M = levels(), K = cfg_.heads;
    ForwardResult fr;

    // Parameter leaves in parameters() order, then lookups by structure.
    std::vector<std::vector<std::vector<Tape::Ref>>> rW(L), rGamma(L),
        rLambda(L);
    std::vector<std::vector<std::vector<std::vector<Tape::Ref>>>> rAttn(L);
    std::vector<Tape::Ref> rWQ, rWK, rWV;
    Tape::Ref rWg = -1, rBg = -1;
    for (int l = 0; l < L; ++l) {
        rW[l].assign(size_t(V), std::vector<Tape::Ref>(size_t(K), -1));
        rGamma[l] = rW[l];
        rLambda[l] = rW[l];
        rAttn[l].assign(size_t(V), std::vector<std::vector<Tape::Ref>>(
                                       size_t(M), std::vector<Tape::Ref>(size_t(K), -1)));
        for (int v = 0; v < V; ++v)
            for (int k = 0; k < K; ++k) {
                rW[l][v][k] = tape.input(W_[l][v][k]);
                fr.params.push_back(rW[l][v][k]);
                for (int m = 0; m < M; ++m) {
                    rAttn[l][v][m][k] = tape.input(attn_[l][v][m][k]);
                    fr.params.push_back(rAttn[l][v][m][k]);
                }
                rGamma[l][v][k] = tape.input(gamma_[l][v][k]);
                fr.params.push_back(rGamma[l][v][k]);
                rLambda[l][v][k] = tape.input(lambda_[l][v][k]);
                fr.params.push_back(rLambda[l][v][k]);
            }
    }
    if (cfg_.nystrom.enabled) {
        for (int k = 0; k < K; ++k) {
            rWQ.push_back(tape.input(WQ_[k]));
            fr.params.push_back(rWQ.back());
            rWK.push_back(tape.input(WK_[k]));
            fr.params.push_back(rWK.back());
            rWV.push_back(tape.input(WV_[k]));
            fr.params.push_back(rWV.back());
        }
        rWg = tape.input(Wg_);
        fr.params.push_back(rWg);
        rBg = tape.input(bg_);
        fr.params.push_back(rBg);
    }

    Tape::Ref h = tape.constant(X_);
    // final-layer per (view, level, head) aggregates, kept for cross attention
    std::vector<std::vector<std::vector<Tape::Ref>>> final_msg;
    Tape::Ref h_std = -1;

    for (int l = 0; l < L; ++l) {
        bool last = l == L - 1;
        if (drop_rng && cfg_.dropout > 0.0) {
            Tensor mask(tape.val(h).rows, tape.val(h).cols);
            double keep = 1.0 - cfg_.dropout;
            for (auto& x : mask.v) x = drop_rng->uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
            h = tape.mul(h, tape.constant(std::move(mask)));
        }
        if (last && cfg_.nystrom.enabled)
            final_msg.assign(size_t(V), std::vector<std::vector<Tape::Ref>>(
                                            size_t(M), std::vector<Tape::Ref>(size_t(K), -1)));
        std::vector<Tape::Ref> head_out(size_t(K), -1);
        for (int k = 0; k < K; ++k) {
            Tape::Ref view_acc = -1;
            for (int v = 0; v < V; ++v) {
                Tape::Ref z = tape.matmul_tb(h, rW[l][v][k]);
                Tape::Ref level_acc = -1;
                for (int m = 0; m < M; ++m) {
                    const ArcBundle& b = arcs_[size_t(v)][size_t(m)];
                    Tape::Ref zd = tape.gather_rows(z, b.dst);
                    Tape::Ref zs = tape.gather_rows(z, b.src);
                    Tape::Ref cat = tape.concat_cols({zd, zs});
                    Tape::Ref logit =
                        tape.leaky_relu(tape.matmul(cat, rAttn[l][v][m][k]), cfg_.leaky_slope);
                    Tape::Ref alpha = tape.segment_softmax(logit, b.seg_starts);
                    // amplification: a uniform per-head rescale, undone by the
                    // renormalization that follows (the value map is identity)
                    Tape::Ref amp = tape.affine(tape.sigmoid(rGamma[l][v][k]), 1.0, 1.0);
                    Tape::Ref a1 = tape.broadcast_mul(alpha, amp);
                    a1 = tape.div(a1,
                                  tape.expand_segments(tape.segment_sum(a1, b.seg_starts),
                                                       b.seg_starts));
                    // diversity: push weights away from the neighborhood mean
                    Tape::Ref abar = tape.expand_segments(
                        tape.segment_mean(a1, b.seg_starts), b.seg_starts);
                    Tape::Ref delta =
                        tape.div(tape.abs_op(tape.sub(a1, abar)), tape.affine(abar, 1.0, 1e-8));
                    Tape::Ref a2 =
                        tape.add(a1, tape.broadcast_mul(delta, rLambda[l][v][k]));
                    Tape::Ref afin = tape.div(
                        a2, tape.expand_segments(tape.segment_sum(a2, b.seg_starts),
                                                 b.seg_starts));
                    if (capture) {
                        const Tensor& av = tape.val(afin);
                        for (size_t e = 0; e < b.src.size(); ++e)
                            capture->records.push_back({uint32_t(b.src[e]), uint32_t(b.dst[e]),
                                                        uint32_t(b.view_tag),
                                                        uint32_t(b.level_tag), uint32_t(l),
                                                        uint32_t(k), av.v[e]});
                    }
                    Tape::Ref msg = tape.scatter_add_rows(
                        tape.scale_rows(tape.gather_rows(z, b.src), afin), b.dst, n_);
                    if (last && cfg_.nystrom.enabled) final_msg[v][m][k] = msg;
                    level_acc = level_acc < 0 ? msg : tape.add(level_acc, msg);
                }
                Tape::Ref u = tape.elu(tape.affine(level_acc, 1.0 / double(M), 0.0));
                view_acc = view_acc < 0 ? u : tape.add(view_acc, u);
            }
            head_out[size_t(k)] = tape.affine(view_acc, 1.0 / double(V), 0.0);
        }
        if (!last) {
            h = K == 1 ? head_out[0] : tape.concat_cols(head_out);
        } else {
            Tape::Ref acc = head_out[0];
            for (int k = 1; k < K; ++k) acc = tape.add(acc, head_out[size_t(k)]);
            h_std = tape.affine(acc, 1.0 / double(K), 0.0);
        }
    }

    fr.h_std = h_std;
    if (!cfg_.nystrom.enabled) {
        fr.logits = h_std;
    } else {
        // landmark cross attention over the concatenated level embeddings
        std::vector<Tape::Ref> parts;
        for (int v = 0; v < V; ++v)
            for (int m = 0; m < M; ++m) {
                Tape::Ref acc = final_msg[v][m][0];
                for (int k = 1; k < K; ++k) acc = tape.add(acc, final_msg[v][m][k]);
                parts.push_back(tape.elu(tape.affine(acc, 1.0 / double(K), 0.0)));
            }
        Tape::Ref c = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
        fr.cross_input = c;
        int dq = std::max(1, cfg_.hidden / cfg_.heads);
        Tape::Ref ht = -1;
        for (int k = 0; k < K; ++k) {
            Tape::Ref q = tape.matmul_tb(c, rWQ[size_t(k)]);
            Tape::Ref kk = tape.gather_rows(tape.matmul_tb(c, rWK[size_t(k)]), landmarks_);
            Tape::Ref vv = tape.gather_rows(tape.matmul_tb(c, rWV[size_t(k)]), landmarks_);
            Tape::Ref scores =
                tape.affine(tape.matmul_tb(q, kk), 1.0 / std::sqrt(double(dq)), 0.0);
            Tape::Ref a = tape.row_softmax(scores);
            Tape::Ref hk = tape.matmul(a, vv);
            ht = ht < 0 ? hk : tape.add(ht, hk);
        }
        ht = tape.affine(ht, 1.0 / double(K), 0.0);
        fr.h_cross = ht;
        Tape::Ref gate = tape.sigmoid(
            tape.add_rowvec(tape.matmul_tb(tape.concat_cols({h_std, ht}), rWg), rBg));
        fr.logits = tape.add(tape.mul(gate, h_std),
                             tape.mul(tape.affine(gate, -1.0, 1.0), ht));
    }

    if (capture) {
        std::stable_sort(capture->records.begin(), capture->records.end(),
                         [](const TraceRecord& a, const TraceRecord& b) {
                             return std::tie(a.layer, a.view, a.level, a.head) <
                                    std::tie(b.layer, b.view, b.level, b.head);
                         });
        capture->n = uint32_t(n_);
        capture->layers = uint32_t(L);
        capture->heads = uint32_t(K);
    }
    return fr;
}

TrainResult GatModel::train(uint64_t seed) {
    StopWatch watch;
    std::vector<std::vector<int>> by_class(classes_);
    for (int i = 0; i < n_; ++i) by_class[size_t(labels_[size_t(i)])].push_back(i);
    RngStream ival(seed, "ival", {});
    std::vector<char> in_valid(size_t(n_), 0);
    for (int c = 0; c < classes_; ++c) {
        auto rows = by_class[size_t(c)];
        ival.shuffle(rows);
        int take = int(std::floor(cfg_.internal_valid_fraction * double(rows.size())));
        for (int i = 0; i < take; ++i) in_valid[size_t(rows[size_t(i)])] = 1;
    }
    auto valid_rows = std::make_shared<std::vector<int>>();
    auto train_rows = std::make_shared<std::vector<int>>();
    for (int i = 0; i < n_; ++i) (in_valid[size_t(i)] ? *valid_rows : *train_rows).push_back(i);
    if (valid_rows->empty() && n_ >= 2) {
        // tiny graphs: hold out the last training node so the stop rule has a signal
        valid_rows->push_back(train_rows->back());
        train_rows->pop_back();
    }
    if (train_rows->empty()) throw ConfigError("graph too small to train on");
    auto labels_sp = std::make_shared<const std::vector<int>>(labels_);
    std::shared_ptr<const std::vector<int>> train_sp = train_rows, valid_sp = valid_rows;

    auto params = parameters();
    std::vector<size_t> sizes;
    for (Tensor* p : params) sizes.push_back(p->numel());
    Adam adam(sizes, AdamConfig{cfg_.lr, cfg_.weight_decay, 0.9, 0.999, 1e-8});
    PlateauScheduler sched(cfg_.lr, cfg_.sched_factor, cfg_.sched_patience, cfg_.min_lr,
                           cfg_.improve_threshold);

    TrainResult res;
    res.internal_valid_nodes = *valid_rows;
    double best = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snapshot;
    int wait = 0;

    for (int iter = 1; iter <= cfg_.max_iters; ++iter) {
        Tape tape;
        RngStream drop(seed, "dropout", {int64_t(iter)});
        auto fr = forward(tape, nullptr, cfg_.dropout > 0.0 ? &drop : nullptr);
        Tape::Ref tce = tape.cross_entropy(fr.logits, labels_sp, train_sp);
        Tape::Ref vce = tape.cross_entropy(fr.logits, labels_sp, valid_sp);
        double tl = tape.val(tce).v[0], vl = tape.val(vce).v[0];
        if (!std::isfinite(tl) || !std::isfinite(vl))
            throw NumericError("training loss is not finite at iteration " +
                               std::to_string(iter) + "; try a lower learning rate");

        if (vl <= best - cfg_.improve_threshold) {
            best = vl;
            res.best_iter = iter;
            wait = 0;
            best_snapshot.clear();
            for (Tensor* p : params) best_snapshot.push_back(*p);
        } else {
            ++wait;
        }
        sched.step(vl);
        res.log.push_back({iter, tl, vl, sched.lr()});
        res.final_iter = iter;
        if (wait >= cfg_.early_stop_patience) break;
        if (iter == cfg_.max_iters) break;

        tape.backward(tce);
        std::vector<const Tensor*> grads;
        grads.reserve(fr.params.size());
        for (Tape::Ref r : fr.params) grads.push_back(&tape.grad(r));
        adam.step(params, grads, sched.lr());
    }

    res.best_valid_loss = best;
    if (!best_snapshot.empty())
        for (size_t i = 0; i < params.size(); ++i) *params[i] = best_snapshot[i];
    res.best_params = named_parameters();

    Tape trace_tape;
    forward(trace_tape, &res.trace, nullptr);
    res.gtt_seconds = watch.seconds();
    return res;
}

void write_trace(const std::string& bin_path, const std::string& manifest_path,
                 const AttentionTrace& trace) {
    std::vector<unsigned char> blob;
    blob.reserve(trace.records.size() * 32);
    for (const auto& r : trace.records) {
        store_u32le(blob, r.src);
        store_u32le(blob, r.dst);
        store_u32le(blob, r.view);
        store_u32le(blob, r.level);
        store_u32le(blob, r.layer);
        store_u32le(blob, r.head);
        store_f64le(blob, r.weight);
    }
    write_file_bytes(bin_path, blob);

    json manifest;
    manifest["format"] = 1;
    manifest["record_bytes"] = 32;
    manifest["fields"] = {"src", "dst", "view", "level", "layer", "head", "weight"};
    manifest["encoding"] = "six u32 little-endian, then one f64 little-endian";
    manifest["n"] = trace.n;
    manifest["layers"] = trace.layers;
    manifest["heads"] = trace.heads;
    manifest["records"] = trace.records.size();
    write_file_text(manifest_path, manifest.dump(2) + "\n");
}

AttentionTrace read_trace(const std::string& bin_path, const std::string& manifest_path) {
    json manifest;
    try {
        manifest = json::parse(read_file_text(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("bad trace manifest " + manifest_path + ": " + e.what());
    }
    if (!manifest.is_object() || manifest.value("format", 0) != 1 ||
        manifest.value("record_bytes", 0) != 32)
        throw DataError("unsupported trace manifest " + manifest_path);
    AttentionTrace t;
    t.n = manifest.value("n", 0u);
    t.layers = manifest.value("layers", 0u);
    t.heads = manifest.value("heads", 0u);
    size_t count = manifest.value("records", size_t(0));
    auto blob = read_file_bytes(bin_path);
    if (blob.size() != count * 32)
        throw DataError("trace record blob size does not match its manifest");
    size_t at = 0;
    t.records.resize(count);
    for (auto& r : t.records) {
        r.src = load_u32le(blob, at);
        r.dst = load_u32le(blob, at + 4);
        r.view = load_u32le(blob, at + 8);
        r.level = load_u32le(blob, at + 12);
        r.layer = load_u32le(blob, at + 16);
        r.head = load_u32le(blob, at + 20);
        r.weight = load_f64le(blob, at + 24);
        at += 32;
        if (r.src >= t.n || r.dst >= t.n) throw DataError("trace record node out of range");
    }
    return t;
}

}  // namespace isel
