#include "isel/kernels.hpp"

#include <algorithm>
#include <omp.h>

namespace isel::kernels {

namespace {
int g_threads = 0;  // 0: leave OpenMP default
}

void set_threads(int n) { g_threads = n > 0 ? n : 0; }

int thread_count() {
    if (g_threads > 0) return g_threads;
    return omp_get_max_threads();
}

namespace serial {

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += A[size_t(i) * k + t] * B[size_t(t) * n + j];
            C[size_t(i) * n + j] = acc;
        }
    }
}

void matmul_transb(const double* A, const double* B, double* C, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* a = A + size_t(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* b = B + size_t(j) * k;
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += a[t] * b[t];
            C[size_t(i) * n + j] = acc;
        }
    }
}

void pairwise_similarity(const double* X, int d, const std::vector<uint32_t>& idx,
                         Metric metric, double* out) {
    const int w = int(idx.size());
    for (int i = 0; i < w; ++i) {
        const double* u = X + size_t(idx[i]) * d;
        size_t base = size_t(i) * w - size_t(i) * (i + 1) / 2;
        for (int j = i + 1; j < w; ++j) {
            out[base + size_t(j - i - 1)] = similarity(u, X + size_t(idx[j]) * d, d, metric);
        }
    }
}

void knn_exact(const double* X, int d, const std::vector<uint32_t>& idx, int k,
               std::vector<uint32_t>& out_idx) {
    const int n = int(idx.size());
    out_idx.assign(size_t(n) * k, 0);
    std::vector<double> bd(size_t(k), 0.0);
    std::vector<uint32_t> bi(size_t(k), 0);
    for (int q = 0; q < n; ++q) {
        int filled = 0;
        const double* xq = X + size_t(idx[q]) * d;
        for (int j = 0; j < n; ++j) {
            if (j == q) continue;
            const double* xj = X + size_t(idx[j]) * d;
            double s = 0.0;
            for (int t = 0; t < d; ++t) {
                double diff = xq[t] - xj[t];
                s += diff * diff;
            }
            if (filled == k && s >= bd[size_t(k) - 1]) {
                if (s > bd[size_t(k) - 1] || uint32_t(j) >= bi[size_t(k) - 1]) continue;
            }
            int pos = filled < k ? filled : k - 1;
            while (pos > 0 && (bd[pos - 1] > s || (bd[pos - 1] == s && bi[pos - 1] > uint32_t(j)))) {
                if (pos < k) { bd[pos] = bd[pos - 1]; bi[pos] = bi[pos - 1]; }
                --pos;
            }
            if (pos < k) { bd[pos] = s; bi[pos] = uint32_t(j); }
            if (filled < k) ++filled;
        }
        for (int t = 0; t < filled; ++t) out_idx[size_t(q) * k + t] = bi[t];
        for (int t = filled; t < k; ++t) out_idx[size_t(q) * k + t] = uint32_t(q);
    }
}

}  // namespace serial

void matmul(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += A[size_t(i) * k + t] * B[size_t(t) * n + j];
            C[size_t(i) * n + j] = acc;
        }
    }
}

void matmul_transb(const double* A, const double* B, double* C, int m, int k, int n) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int i = 0; i < m; ++i) {
        const double* a = A + size_t(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* b = B + size_t(j) * k;
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += a[t] * b[t];
            C[size_t(i) * n + j] = acc;
        }
    }
}

void pairwise_similarity(const double* X, int d, const std::vector<uint32_t>& idx,
                         Metric metric, double* out) {
    const int w = int(idx.size());
#pragma omp parallel for schedule(dynamic, 16) num_threads(thread_count())
    for (int i = 0; i < w; ++i) {
        const double* u = X + size_t(idx[i]) * d;
        size_t base = size_t(i) * w - size_t(i) * (i + 1) / 2;
        for (int j = i + 1; j < w; ++j) {
            out[base + size_t(j - i - 1)] = similarity(u, X + size_t(idx[j]) * d, d, metric);
        }
    }
}

void knn_exact(const double* X, int d, const std::vector<uint32_t>& idx, int k,
               std::vector<uint32_t>& out_idx) {
    const int n = int(idx.size());
    out_idx.assign(size_t(n) * k, 0);
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> bd(size_t(k), 0.0);
        std::vector<uint32_t> bi(size_t(k), 0);
#pragma omp for schedule(dynamic, 64)
        for (int q = 0; q < n; ++q) {
            int filled = 0;
            const double* xq = X + size_t(idx[q]) * d;
            for (int j = 0; j < n; ++j) {
                if (j == q) continue;
                const double* xj = X + size_t(idx[j]) * d;
                double s = 0.0;
                for (int t = 0; t < d; ++t) {
                    double diff = xq[t] - xj[t];
                    s += diff * diff;
                }
                if (filled == k && s >= bd[size_t(k) - 1]) {
                    if (s > bd[size_t(k) - 1] || uint32_t(j) >= bi[size_t(k) - 1]) continue;
                }
                int pos = filled < k ? filled : k - 1;
                while (pos > 0 && (bd[pos - 1] > s || (bd[pos - 1] == s && bi[pos - 1] > uint32_t(j)))) {
                    if (pos < k) { bd[pos] = bd[pos - 1]; bi[pos] = bi[pos - 1]; }
                    --pos;
                }
                if (pos < k) { bd[pos] = s; bi[pos] = uint32_t(j); }
                if (filled < k) ++filled;
            }
            for (int t = 0; t < filled; ++t) out_idx[size_t(q) * k + t] = bi[t];
            for (int t = filled; t < k; ++t) out_idx[size_t(q) * k + t] = uint32_t(q);
        }
    }
}

}  // namespace isel::kernels
