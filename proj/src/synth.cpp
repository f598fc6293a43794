#include "isel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace isel {

namespace {

constexpr double kPi = 3.14159265358979323846;

RawData shell(std::string name, int n, int d, int classes) {
    RawData r;
    r.name = std::move(name);
    r.n = n;
    r.d = d;
    r.classes = classes;
    r.X.assign(size_t(n) * size_t(d), 0.0);
    r.y.assign(size_t(n), 0);
    return r;
}

// class sizes: n split as evenly as possible, earlier classes take the slack
std::vector<int> even_counts(int n, int classes) {
    std::vector<int> c(size_t(classes), n / classes);
    for (int i = 0; i < n % classes; ++i) ++c[size_t(i)];
    return c;
}

}  // namespace

RawData make_blobs(int n, int d, int classes, double spread, uint64_t seed) {
    if (n < classes || d < 1 || classes < 2) throw ConfigError("bad blob shape");
    RawData r = shell("blobs", n, d, classes);
    RngStream centers_rng(seed, "blobs_centers", {});
    std::vector<double> centers(size_t(classes) * size_t(d));
    for (auto& c : centers) c = centers_rng.uniform(-5.0, 5.0);
    RngStream rng(seed, "blobs", {});
    auto counts = even_counts(n, classes);
    int at = 0;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < counts[size_t(c)]; ++i, ++at) {
            r.y[size_t(at)] = c;
            for (int j = 0; j < d; ++j)
                r.X[size_t(at) * size_t(d) + size_t(j)] =
                    centers[size_t(c) * size_t(d) + size_t(j)] + spread * rng.normal();
        }
    return r;
}

RawData make_banana(int n, double noise, uint64_t seed) {
    if (n < 2) throw ConfigError("bad banana shape");
    RawData r = shell("banana", n, 2, 2);
    RngStream rng(seed, "banana", {});
    auto counts = even_counts(n, 2);
    int at = 0;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < counts[size_t(c)]; ++i, ++at) {
            double t = kPi * rng.uniform();
            double x, y;
            if (c == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            r.y[size_t(at)] = c;
            r.X[size_t(at) * 2] = x + noise * rng.normal();
            r.X[size_t(at) * 2 + 1] = y + noise * rng.normal();
        }
    return r;
}

RawData make_twonorm(int n, uint64_t seed) {
    const int d = 20;
    RawData r = shell("twonorm", n, d, 2);
    RngStream rng(seed, "twonorm", {});
    double a = 2.0 / std::sqrt(double(d));
    auto counts = even_counts(n, 2);
    int at = 0;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < counts[size_t(c)]; ++i, ++at) {
            r.y[size_t(at)] = c;
            double mu = c == 0 ? a : -a;
            for (int j = 0; j < d; ++j)
                r.X[size_t(at) * size_t(d) + size_t(j)] = mu + rng.normal();
        }
    return r;
}

RawData make_ringnorm(int n, uint64_t seed) {
    const int d = 20;
    RawData r = shell("ringnorm", n, d, 2);
    RngStream rng(seed, "ringnorm", {});
    double a = 2.0 / std::sqrt(double(d));
    auto counts = even_counts(n, 2);
    int at = 0;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < counts[size_t(c)]; ++i, ++at) {
            r.y[size_t(at)] = c;
            for (int j = 0; j < d; ++j)
                r.X[size_t(at) * size_t(d) + size_t(j)] =
                    c == 0 ? 2.0 * rng.normal() : a + rng.normal();
        }
    return r;
}

RawData make_phoneme_like(int n, uint64_t seed) {
    const int d = 5;
    RawData r = shell("phoneme", n, d, 2);
    RngStream rng(seed, "phoneme", {});
    int n0 = int(std::lround(0.7065 * double(n)));
    n0 = std::min(std::max(n0, 1), n - 1);
    static const double c0a[d] = {0.8, -0.4, 0.3, 0.0, -0.6};
    static const double c0b[d] = {-0.7, 0.6, -0.2, 0.5, 0.4};
    static const double c1[d] = {0.1, 0.2, -0.5, -0.4, 0.9};
    int at = 0;
    for (int i = 0; i < n0; ++i, ++at) {
        const double* c = rng.uniform() < 0.55 ? c0a : c0b;
        r.y[size_t(at)] = 0;
        for (int j = 0; j < d; ++j)
            r.X[size_t(at) * size_t(d) + size_t(j)] = c[j] + 0.55 * rng.normal();
    }
    for (int i = n0; i < n; ++i, ++at) {
        r.y[size_t(at)] = 1;
        for (int j = 0; j < d; ++j) {
            double s = j == 4 ? 1.1 : 0.5;  // elongated along the last axis
            r.X[size_t(at) * size_t(d) + size_t(j)] = c1[j] + s * rng.normal();
        }
    }
    return r;
}

RawData make_segment_like(int n, uint64_t seed) {
    const int d = 19, classes = 7;
    if (n < classes) throw ConfigError("bad segment shape");
    RawData r = shell("segment", n, d, classes);
    RngStream centers_rng(seed, "segment_centers", {});
    std::vector<double> centers(size_t(classes) * size_t(d));
    for (auto& c : centers) c = centers_rng.uniform(-4.0, 4.0);
    RngStream rng(seed, "segment", {});
    auto counts = even_counts(n, classes);
    int at = 0;
    for (int c = 0; c < classes; ++c) {
        double spread = 0.6 + 0.15 * double(c);
        for (int i = 0; i < counts[size_t(c)]; ++i, ++at) {
            r.y[size_t(at)] = c;
            double* row = r.X.data() + size_t(at) * size_t(d);
            for (int j = 0; j < d; ++j)
                row[size_t(j)] = centers[size_t(c) * size_t(d) + size_t(j)] +
                                 spread * rng.normal();
            for (int j = 14; j < d; ++j) row[size_t(j)] += 0.5 * row[0];
        }
    }
    return r;
}

Dataset to_dataset(const RawData& raw) {
    Dataset ds;
    ds.n = raw.n;
    ds.d = raw.d;
    ds.classes = raw.classes;
    ds.X = raw.X;
    ds.y = raw.y;
    ds.target_name = "label";
    for (int j = 0; j < raw.d; ++j) {
        ds.feature_names.push_back("f" + std::to_string(j));
        ds.feature_kinds.push_back(FeatureKind::numeric);
        double lo = ds.X[size_t(j)], hi = lo;
        for (int i = 1; i < raw.n; ++i) {
            double v = ds.X[size_t(i) * size_t(raw.d) + size_t(j)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (int i = 0; i < raw.n; ++i) {
            double& v = ds.X[size_t(i) * size_t(raw.d) + size_t(j)];
            v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        }
    }
    for (int c = 0; c < raw.classes; ++c) ds.class_names.push_back(std::to_string(c));
    return ds;
}

std::string to_csv(const RawData& raw) {
    std::string out;
    out.reserve(size_t(raw.n) * size_t(raw.d) * 20);
    for (int j = 0; j < raw.d; ++j) out += "f" + std::to_string(j) + ",";
    out += "label\n";
    char buf[64];
    for (int i = 0; i < raw.n; ++i) {
        for (int j = 0; j < raw.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,", raw.X[size_t(i) * size_t(raw.d) + size_t(j)]);
            out += buf;
        }
        out += std::to_string(raw.y[size_t(i)]);
        out += "\n";
    }
    return out;
}

}  // namespace isel
