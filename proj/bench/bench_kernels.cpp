// Serial vs OpenMP kernel timing. Prints one row per kernel and thread count;
// outputs are checked to be bit-identical before timings are reported.
#include <cstdio>
#include <cstring>
#include <vector>

#include "isel/common.hpp"
#include "isel/kernels.hpp"

using namespace isel;

namespace {

double best_of(int reps, double (*fn)(const void*), const void* arg) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        double t = fn(arg);
        if (t < best) best = t;
    }
    return best;
}

struct MatmulArgs {
    const std::vector<double>*A, *B;
    std::vector<double>* C;
    int m, k, n;
    bool serial;
};

double run_matmul(const void* p) {
    const auto& a = *static_cast<const MatmulArgs*>(p);
    StopWatch w;
    if (a.serial)
        kernels::serial::matmul(a.A->data(), a.B->data(), a.C->data(), a.m, a.k, a.n);
    else
        kernels::matmul(a.A->data(), a.B->data(), a.C->data(), a.m, a.k, a.n);
    return w.seconds();
}

struct PairArgs {
    const std::vector<double>* X;
    const std::vector<uint32_t>* idx;
    std::vector<double>* out;
    int d;
    bool serial;
};

double run_pairwise(const void* p) {
    const auto& a = *static_cast<const PairArgs*>(p);
    StopWatch w;
    if (a.serial)
        kernels::serial::pairwise_similarity(a.X->data(), a.d, *a.idx, Metric::euclidean,
                                             a.out->data());
    else
        kernels::pairwise_similarity(a.X->data(), a.d, *a.idx, Metric::euclidean,
                                     a.out->data());
    return w.seconds();
}

struct KnnArgs {
    const std::vector<double>* X;
    const std::vector<uint32_t>* idx;
    std::vector<uint32_t>* out;
    int d, k;
    bool serial;
};

double run_knn(const void* p) {
    const auto& a = *static_cast<const KnnArgs*>(p);
    StopWatch w;
    if (a.serial)
        kernels::serial::knn_exact(a.X->data(), a.d, *a.idx, a.k, *a.out);
    else
        kernels::knn_exact(a.X->data(), a.d, *a.idx, a.k, *a.out);
    return w.seconds();
}

}  // namespace

int main() {
    RngStream rng(7, "bench", {});
    const int reps = 3;

    {
        int m = 384, k = 256, n = 384;
        std::vector<double> A(size_t(m) * k), B(size_t(k) * n), Cs(size_t(m) * n),
            Cp(size_t(m) * n);
        for (auto& x : A) x = rng.normal();
        for (auto& x : B) x = rng.normal();
        MatmulArgs s{&A, &B, &Cs, m, k, n, true}, p{&A, &B, &Cp, m, k, n, false};
        double ts = best_of(reps, run_matmul, &s);
        double tp = best_of(reps, run_matmul, &p);
        bool same = std::memcmp(Cs.data(), Cp.data(), Cs.size() * 8) == 0;
        std::printf("matmul %dx%dx%d        serial %.4fs  omp(%d) %.4fs  speedup %.2fx  %s\n",
                    m, k, n, ts, kernels::thread_count(), tp, ts / tp,
                    same ? "bit-identical" : "MISMATCH");
    }
    {
        int n = 3000, d = 16;
        std::vector<double> X(size_t(n) * d);
        for (auto& x : X) x = rng.normal();
        std::vector<uint32_t> idx(n);
        for (int i = 0; i < n; ++i) idx[size_t(i)] = uint32_t(i);
        std::vector<double> outs(size_t(n) * (n - 1) / 2), outp(outs.size());
        PairArgs s{&X, &idx, &outs, d, true}, p{&X, &idx, &outp, d, false};
        double ts = best_of(reps, run_pairwise, &s);
        double tp = best_of(reps, run_pairwise, &p);
        bool same = std::memcmp(outs.data(), outp.data(), outs.size() * 8) == 0;
        std::printf("pairwise n=%d d=%d     serial %.4fs  omp(%d) %.4fs  speedup %.2fx  %s\n",
                    n, d, ts, kernels::thread_count(), tp, ts / tp,
                    same ? "bit-identical" : "MISMATCH");
    }
    {
        int n = 4000, d = 8, k = 10;
        std::vector<double> X(size_t(n) * d);
        for (auto& x : X) x = rng.normal();
        std::vector<uint32_t> idx(n);
        for (int i = 0; i < n; ++i) idx[size_t(i)] = uint32_t(i);
        std::vector<uint32_t> outs, outp;
        KnnArgs s{&X, &idx, &outs, d, k, true}, p{&X, &idx, &outp, d, k, false};
        double ts = best_of(reps, run_knn, &s);
        double tp = best_of(reps, run_knn, &p);
        bool same = outs == outp;
        std::printf("knn n=%d d=%d k=%d      serial %.4fs  omp(%d) %.4fs  speedup %.2fx  %s\n",
                    n, d, k, ts, kernels::thread_count(), tp, ts / tp,
                    same ? "bit-identical" : "MISMATCH");
    }
    return 0;
}
