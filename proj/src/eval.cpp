#include "isel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isel/kernels.hpp"

namespace isel {

Metrics classification_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                               int classes) {
    if (y_true.size() != y_pred.size()) throw ConfigError("prediction count mismatch");
    if (y_true.empty()) throw ConfigError("no instances to score");
    std::vector<double> tp(size_t(classes), 0.0), fp(size_t(classes), 0.0),
        fn(size_t(classes), 0.0);
    std::vector<char> present(size_t(classes), 0);
    size_t correct = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= classes || p < 0 || p >= classes)
            throw ConfigError("label outside the class range");
        present[size_t(t)] = 1;
        if (t == p) {
            ++correct;
            tp[size_t(t)] += 1.0;
        } else {
            fn[size_t(t)] += 1.0;
            fp[size_t(p)] += 1.0;
        }
    }
    Metrics m;
    m.accuracy = double(correct) / double(y_true.size());
    int used = 0;
    for (int c = 0; c < classes; ++c) {
        if (!present[size_t(c)]) continue;
        ++used;
        double pd = tp[size_t(c)] + fp[size_t(c)];
        double rd = tp[size_t(c)] + fn[size_t(c)];
        double prec = pd > 0.0 ? tp[size_t(c)] / pd : 0.0;
        double rec = rd > 0.0 ? tp[size_t(c)] / rd : 0.0;
        double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        m.macro_precision += prec;
        m.macro_recall += rec;
        m.macro_f1 += f1;
    }
    m.macro_precision /= double(used);
    m.macro_recall /= double(used);
    m.macro_f1 /= double(used);
    return m;
}

LogRegModel train_logreg(const double* X, const std::vector<int>& y,
                         const std::vector<int>& rows, int d, int classes, LogRegConfig cfg) {
    if (rows.empty()) throw ConfigError("cannot fit a classifier on zero rows");
    int m = int(rows.size()), C = classes;
    std::vector<double> Xs(size_t(m) * size_t(d));
    for (int i = 0; i < m; ++i)
        std::copy_n(X + size_t(rows[size_t(i)]) * size_t(d), size_t(d),
                    Xs.begin() + size_t(i) * size_t(d));

    LogRegModel model{Tensor(C, d), Tensor(1, C)};
    std::vector<double> logits(size_t(m) * size_t(C));
    std::vector<double> gW(size_t(C) * size_t(d)), gB(C);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        kernels::matmul_transb(Xs.data(), model.W.v.data(), logits.data(), m, d, C);
        std::fill(gW.begin(), gW.end(), 0.0);
        std::fill(gB.begin(), gB.end(), 0.0);
        for (int i = 0; i < m; ++i) {
            double* row = logits.data() + size_t(i) * size_t(C);
            double mx = row[0] + model.b.v[0];
            for (int c = 0; c < C; ++c) {
                row[c] += model.b.v[size_t(c)];
                mx = std::max(mx, row[c]);
            }
            double z = 0.0;
            for (int c = 0; c < C; ++c) z += std::exp(row[c] - mx);
            const double* xi = Xs.data() + size_t(i) * size_t(d);
            for (int c = 0; c < C; ++c) {
                double p = std::exp(row[c] - mx) / z;
                double g = (p - (y[size_t(rows[size_t(i)])] == c ? 1.0 : 0.0)) / double(m);
                gB[size_t(c)] += g;
                double* gw = gW.data() + size_t(c) * size_t(d);
                for (int j = 0; j < d; ++j) gw[size_t(j)] += g * xi[size_t(j)];
            }
        }
        for (int c = 0; c < C; ++c) {
            for (int j = 0; j < d; ++j) {
                size_t at = size_t(c) * size_t(d) + size_t(j);
                model.W.v[at] -= cfg.lr * (gW[at] + cfg.l2 * model.W.v[at]);
            }
            model.b.v[size_t(c)] -= cfg.lr * gB[size_t(c)];
        }
    }
    return model;
}

std::vector<int> predict_logreg(const LogRegModel& m, const double* X,
                                const std::vector<int>& rows, int d) {
    int C = m.W.rows;
    std::vector<int> out(rows.size(), 0);
    for (size_t i = 0; i < rows.size(); ++i) {
        const double* xi = X + size_t(rows[i]) * size_t(d);
        int best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < C; ++c) {
            double s = m.b.v[size_t(c)];
            const double* w = m.W.v.data() + size_t(c) * size_t(d);
            for (int j = 0; j < d; ++j) s += w[size_t(j)] * xi[size_t(j)];
            if (s > bv) {
                bv = s;
                best = c;
            }
        }
        out[i] = best;
    }
    return out;
}

std::vector<int> predict_knn(const double* X, int d, const std::vector<int>& train_rows,
                             const std::vector<int>& y, const std::vector<int>& query_rows,
                             int k) {
    if (train_rows.empty()) throw ConfigError("k-nearest-neighbour needs train rows");
    int keff = std::min<int>(k, int(train_rows.size()));
    std::vector<int> out(query_rows.size(), 0);
    std::vector<std::pair<double, int>> top(keff);
    for (size_t qi = 0; qi < query_rows.size(); ++qi) {
        const double* q = X + size_t(query_rows[qi]) * size_t(d);
        int filled = 0;
        for (size_t t = 0; t < train_rows.size(); ++t) {
            const double* p = X + size_t(train_rows[t]) * size_t(d);
            double dist = 0.0;
            for (int j = 0; j < d; ++j) {
                double diff = q[size_t(j)] - p[size_t(j)];
                dist += diff * diff;
            }
            std::pair<double, int> cand{dist, int(t)};
            if (filled < keff) {
                int at = filled++;
                while (at > 0 && cand < top[size_t(at) - 1]) {
                    top[size_t(at)] = top[size_t(at) - 1];
                    --at;
                }
                top[size_t(at)] = cand;
            } else if (cand < top[size_t(keff) - 1]) {
                int at = keff - 1;
                while (at > 0 && cand < top[size_t(at) - 1]) {
                    top[size_t(at)] = top[size_t(at) - 1];
                    --at;
                }
                top[size_t(at)] = cand;
            }
        }
        std::vector<int> votes;
        for (int i = 0; i < keff; ++i) {
            int cls = y[size_t(train_rows[size_t(top[size_t(i)].second)])];
            if (cls >= int(votes.size())) votes.resize(size_t(cls) + 1, 0);
            ++votes[size_t(cls)];
        }
        int best = 0;
        for (size_t c = 1; c < votes.size(); ++c)
            if (votes[c] > votes[size_t(best)]) best = int(c);
        out[qi] = best;
    }
    return out;
}

}  // namespace isel
