#include "isel/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "isel/kernels.hpp"

namespace isel {

Tape::Ref Tape::push(Tensor value, bool needs_grad, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad = Tensor(n.value.rows, n.value.cols);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Ref(nodes_.size() - 1);
}

Tape::Ref Tape::input(Tensor t) { return push(std::move(t), true); }
Tape::Ref Tape::constant(Tensor t) { return push(std::move(t), false); }

Tape::Ref Tape::matmul(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.rows) throw NumericError("matmul: inner dimensions disagree");
    Tensor C(A.rows, B.cols);
    kernels::matmul(A.v.data(), B.v.data(), C.v.data(), A.rows, A.cols, B.cols);
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (nodes_[a].needs_grad) {
            Tensor da(A.rows, A.cols);
            kernels::matmul_transb(g.v.data(), B.v.data(), da.v.data(), A.rows, B.cols, A.cols);
            Tensor& acc = grad_mut(a);
            for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += da.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (int t = 0; t < B.rows; ++t)
                for (int j = 0; j < B.cols; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < A.rows; ++i)
                        acc += A.at(i, t) * g.at(i, j);
                    db.at(t, j) += acc;
                }
        }
    };
    return out;
}

Tape::Ref Tape::matmul_tb(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (A.cols != B.cols) throw NumericError("matmul_tb: inner dimensions disagree");
    Tensor C(A.rows, B.rows);
    kernels::matmul_transb(A.v.data(), B.v.data(), C.v.data(), A.rows, A.cols, B.rows);
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);  // [m, n] where n = B.rows
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (nodes_[a].needs_grad) {
            Tensor da(A.rows, A.cols);
            kernels::matmul(g.v.data(), B.v.data(), da.v.data(), A.rows, B.rows, B.cols);
            Tensor& acc = grad_mut(a);
            for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += da.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (int j = 0; j < B.rows; ++j)
                for (int t = 0; t < B.cols; ++t) {
                    double acc = 0.0;
                    for (int i = 0; i < A.rows; ++i)
                        acc += g.at(i, j) * A.at(i, t);
                    db.at(j, t) += acc;
                }
        }
    };
    return out;
}

Tape::Ref Tape::add(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) throw NumericError("add: shape mismatch");
    Tensor C = A;
    for (size_t i = 0; i < C.v.size(); ++i) C.v[i] += B.v[i];
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);
        if (nodes_[a].needs_grad) {
            Tensor& da = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i];
        }
    };
    return out;
}

Tape::Ref Tape::sub(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) throw NumericError("sub: shape mismatch");
    Tensor C = A;
    for (size_t i = 0; i < C.v.size(); ++i) C.v[i] -= B.v[i];
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);
        if (nodes_[a].needs_grad) {
            Tensor& da = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (size_t i = 0; i < g.v.size(); ++i) db.v[i] -= g.v[i];
        }
    };
    return out;
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) throw NumericError("mul: shape mismatch");
    Tensor C = A;
    for (size_t i = 0; i < C.v.size(); ++i) C.v[i] *= B.v[i];
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (nodes_[a].needs_grad) {
            Tensor& da = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * B.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i] * A.v[i];
        }
    };
    return out;
}

Tape::Ref Tape::div(Ref a, Ref b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    if (!A.same_shape(B)) throw NumericError("div: shape mismatch");
    Tensor C = A;
    for (size_t i = 0; i < C.v.size(); ++i) C.v[i] /= B.v[i];
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[b].needs_grad);
    nodes_[out].back = [this, a, b, out] {
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        const Tensor& B = val(b);
        if (nodes_[a].needs_grad) {
            Tensor& da = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] / B.v[i];
        }
        if (nodes_[b].needs_grad) {
            Tensor& db = grad_mut(b);
            for (size_t i = 0; i < g.v.size(); ++i)
                db.v[i] -= g.v[i] * A.v[i] / (B.v[i] * B.v[i]);
        }
    };
    return out;
}

Tape::Ref Tape::add_rowvec(Ref m, Ref v) {
    const Tensor& M = val(m);
    const Tensor& V = val(v);
    if (V.rows != 1 || V.cols != M.cols) throw NumericError("add_rowvec: shape mismatch");
    Tensor C = M;
    for (int i = 0; i < C.rows; ++i)
        for (int j = 0; j < C.cols; ++j) C.at(i, j) += V.v[size_t(j)];
    Ref out = push(std::move(C), nodes_[m].needs_grad || nodes_[v].needs_grad);
    nodes_[out].back = [this, m, v, out] {
        const Tensor& g = grad(out);
        if (nodes_[m].needs_grad) {
            Tensor& dm = grad_mut(m);
            for (size_t i = 0; i < g.v.size(); ++i) dm.v[i] += g.v[i];
        }
        if (nodes_[v].needs_grad) {
            Tensor& dv = grad_mut(v);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) dv.v[size_t(j)] += g.at(i, j);
        }
    };
    return out;
}

Tape::Ref Tape::affine(Ref a, double scale, double shift) {
    Tensor C = val(a);
    for (double& x : C.v) x = scale * x + shift;
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out, scale] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += scale * g.v[i];
    };
    return out;
}

Tape::Ref Tape::broadcast_mul(Ref a, Ref s) {
    const Tensor& A = val(a);
    const Tensor& S = val(s);
    if (S.rows != 1 || S.cols != 1) throw NumericError("broadcast_mul: scalar expected");
    Tensor C = A;
    for (double& x : C.v) x *= S.v[0];
    Ref out = push(std::move(C), nodes_[a].needs_grad || nodes_[s].needs_grad);
    nodes_[out].back = [this, a, s, out] {
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        double sv = val(s).v[0];
        if (nodes_[a].needs_grad) {
            Tensor& da = grad_mut(a);
            for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * sv;
        }
        if (nodes_[s].needs_grad) {
            double acc = 0.0;
            for (size_t i = 0; i < g.v.size(); ++i) acc += g.v[i] * A.v[i];
            grad_mut(s).v[0] += acc;
        }
    };
    return out;
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw NumericError("concat_cols: no inputs");
    int rows = val(parts[0]).rows;
    int cols = 0;
    bool ng = false;
    for (Ref p : parts) {
        if (val(p).rows != rows) throw NumericError("concat_cols: row mismatch");
        cols += val(p).cols;
        ng = ng || nodes_[p].needs_grad;
    }
    Tensor C(rows, cols);
    int off = 0;
    for (Ref p : parts) {
        const Tensor& P = val(p);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < P.cols; ++j) C.at(i, off + j) = P.at(i, j);
        off += P.cols;
    }
    Ref out = push(std::move(C), ng);
    std::vector<Ref> ps = parts;
    nodes_[out].back = [this, ps, out] {
        const Tensor& g = grad(out);
        int off = 0;
        for (Ref p : ps) {
            const Tensor& P = val(p);
            if (nodes_[p].needs_grad) {
                Tensor& dp = grad_mut(p);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < P.cols; ++j) dp.at(i, j) += g.at(i, off + j);
            }
            off += P.cols;
        }
    };
    return out;
}

Tape::Ref Tape::gather_rows(Ref a, std::vector<int> idx) {
    const Tensor& A = val(a);
    Tensor C(int(idx.size()), A.cols);
    for (size_t e = 0; e < idx.size(); ++e)
        for (int j = 0; j < A.cols; ++j) C.at(int(e), j) = A.at(idx[e], j);
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    auto ids = std::make_shared<std::vector<int>>(std::move(idx));
    nodes_[out].back = [this, a, out, ids] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& da = grad_mut(a);
        for (size_t e = 0; e < ids->size(); ++e)
            for (int j = 0; j < g.cols; ++j) da.at((*ids)[e], j) += g.at(int(e), j);
    };
    return out;
}

Tape::Ref Tape::scatter_add_rows(Ref a, std::vector<int> dst, int out_rows) {
    const Tensor& A = val(a);
    if (int(dst.size()) != A.rows) throw NumericError("scatter_add_rows: index count mismatch");
    Tensor C(out_rows, A.cols);
    for (size_t e = 0; e < dst.size(); ++e)
        for (int j = 0; j < A.cols; ++j) C.at(dst[e], j) += A.at(int(e), j);
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    auto ids = std::make_shared<std::vector<int>>(std::move(dst));
    nodes_[out].back = [this, a, out, ids] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& da = grad_mut(a);
        for (size_t e = 0; e < ids->size(); ++e)
            for (int j = 0; j < g.cols; ++j) da.at(int(e), j) += g.at((*ids)[e], j);
    };
    return out;
}

Tape::Ref Tape::scale_rows(Ref m, Ref s) {
    const Tensor& M = val(m);
    const Tensor& S = val(s);
    if (S.cols != 1 || S.rows != M.rows) throw NumericError("scale_rows: shape mismatch");
    Tensor C = M;
    for (int i = 0; i < C.rows; ++i)
        for (int j = 0; j < C.cols; ++j) C.at(i, j) *= S.v[size_t(i)];
    Ref out = push(std::move(C), nodes_[m].needs_grad || nodes_[s].needs_grad);
    nodes_[out].back = [this, m, s, out] {
        const Tensor& g = grad(out);
        const Tensor& M = val(m);
        const Tensor& S = val(s);
        if (nodes_[m].needs_grad) {
            Tensor& dm = grad_mut(m);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) dm.at(i, j) += g.at(i, j) * S.v[size_t(i)];
        }
        if (nodes_[s].needs_grad) {
            Tensor& ds = grad_mut(s);
            for (int i = 0; i < g.rows; ++i) {
                double acc = 0.0;
                for (int j = 0; j < g.cols; ++j) acc += g.at(i, j) * M.at(i, j);
                ds.v[size_t(i)] += acc;
            }
        }
    };
    return out;
}

Tape::Ref Tape::segment_softmax(Ref logits, std::shared_ptr<const std::vector<int>> seg) {
    const Tensor& L = val(logits);
    if (L.cols != 1) throw NumericError("segment_softmax: column vector expected");
    const auto& st = *seg;
    Tensor C(L.rows, 1);
    for (size_t s = 0; s + 1 < st.size(); ++s) {
        int lo = st[s], hi = st[s + 1];
        if (lo == hi) continue;
        double mx = L.v[size_t(lo)];
        for (int e = lo + 1; e < hi; ++e) mx = std::max(mx, L.v[size_t(e)]);
        double tot = 0.0;
        for (int e = lo; e < hi; ++e) {
            C.v[size_t(e)] = std::exp(L.v[size_t(e)] - mx);
            tot += C.v[size_t(e)];
        }
        for (int e = lo; e < hi; ++e) C.v[size_t(e)] /= tot;
    }
    Ref out = push(std::move(C), nodes_[logits].needs_grad);
    nodes_[out].back = [this, logits, out, seg] {
        if (!nodes_[logits].needs_grad) return;
        const Tensor& y = val(out);
        const Tensor& g = grad(out);
        Tensor& dl = grad_mut(logits);
        const auto& st = *seg;
        for (size_t s = 0; s + 1 < st.size(); ++s) {
            int lo = st[s], hi = st[s + 1];
            double dot = 0.0;
            for (int e = lo; e < hi; ++e) dot += y.v[size_t(e)] * g.v[size_t(e)];
            for (int e = lo; e < hi; ++e)
                dl.v[size_t(e)] += y.v[size_t(e)] * (g.v[size_t(e)] - dot);
        }
    };
    return out;
}

Tape::Ref Tape::segment_sum(Ref vals, std::shared_ptr<const std::vector<int>> seg) {
    const Tensor& V = val(vals);
    if (V.cols != 1) throw NumericError("segment_sum: column vector expected");
    const auto& st = *seg;
    Tensor C(int(st.size()) - 1, 1);
    for (size_t s = 0; s + 1 < st.size(); ++s) {
        double acc = 0.0;
        for (int e = st[s]; e < st[s + 1]; ++e) acc += V.v[size_t(e)];
        C.v[s] = acc;
    }
    Ref out = push(std::move(C), nodes_[vals].needs_grad);
    nodes_[out].back = [this, vals, out, seg] {
        if (!nodes_[vals].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& dv = grad_mut(vals);
        const auto& st = *seg;
        for (size_t s = 0; s + 1 < st.size(); ++s)
            for (int e = st[s]; e < st[s + 1]; ++e) dv.v[size_t(e)] += g.v[s];
    };
    return out;
}

Tape::Ref Tape::segment_mean(Ref vals, std::shared_ptr<const std::vector<int>> seg) {
    const Tensor& V = val(vals);
    if (V.cols != 1) throw NumericError("segment_mean: column vector expected");
    const auto& st = *seg;
    Tensor C(int(st.size()) - 1, 1);
    for (size_t s = 0; s + 1 < st.size(); ++s) {
        int len = st[s + 1] - st[s];
        double acc = 0.0;
        for (int e = st[s]; e < st[s + 1]; ++e) acc += V.v[size_t(e)];
        C.v[s] = len > 0 ? acc / len : 0.0;
    }
    Ref out = push(std::move(C), nodes_[vals].needs_grad);
    nodes_[out].back = [this, vals, out, seg] {
        if (!nodes_[vals].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& dv = grad_mut(vals);
        const auto& st = *seg;
        for (size_t s = 0; s + 1 < st.size(); ++s) {
            int len = st[s + 1] - st[s];
            if (len == 0) continue;
            double gs = g.v[s] / len;
            for (int e = st[s]; e < st[s + 1]; ++e) dv.v[size_t(e)] += gs;
        }
    };
    return out;
}

Tape::Ref Tape::expand_segments(Ref per_seg, std::shared_ptr<const std::vector<int>> seg) {
    const Tensor& P = val(per_seg);
    const auto& st = *seg;
    if (P.cols != 1 || P.rows != int(st.size()) - 1)
        throw NumericError("expand_segments: shape mismatch");
    Tensor C(st.back(), 1);
    for (size_t s = 0; s + 1 < st.size(); ++s)
        for (int e = st[s]; e < st[s + 1]; ++e) C.v[size_t(e)] = P.v[s];
    Ref out = push(std::move(C), nodes_[per_seg].needs_grad);
    nodes_[out].back = [this, per_seg, out, seg] {
        if (!nodes_[per_seg].needs_grad) return;
        const Tensor& g = grad(out);
        Tensor& dp = grad_mut(per_seg);
        const auto& st = *seg;
        for (size_t s = 0; s + 1 < st.size(); ++s) {
            double acc = 0.0;
            for (int e = st[s]; e < st[s + 1]; ++e) acc += g.v[size_t(e)];
            dp.v[s] += acc;
        }
    };
    return out;
}

Tape::Ref Tape::row_softmax(Ref a) {
    const Tensor& A = val(a);
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
        double mx = A.at(i, 0);
        for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
        double tot = 0.0;
        for (int j = 0; j < A.cols; ++j) {
            C.at(i, j) = std::exp(A.at(i, j) - mx);
            tot += C.at(i, j);
        }
        for (int j = 0; j < A.cols; ++j) C.at(i, j) /= tot;
    }
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& y = val(out);
        const Tensor& g = grad(out);
        Tensor& da = grad_mut(a);
        for (int i = 0; i < y.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols; ++j) dot += y.at(i, j) * g.at(i, j);
            for (int j = 0; j < y.cols; ++j)
                da.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
        }
    };
    return out;
}

Tape::Ref Tape::leaky_relu(Ref a, double slope) {
    Tensor C = val(a);
    for (double& x : C.v) x = x >= 0.0 ? x : slope * x;
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out, slope] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i)
            da.v[i] += g.v[i] * (A.v[i] >= 0.0 ? 1.0 : slope);
    };
    return out;
}

Tape::Ref Tape::elu(Ref a) {
    Tensor C = val(a);
    for (double& x : C.v) x = x >= 0.0 ? x : std::expm1(x);
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i)
            da.v[i] += g.v[i] * (A.v[i] >= 0.0 ? 1.0 : std::exp(A.v[i]));
    };
    return out;
}

Tape::Ref Tape::sigmoid(Ref a) {
    Tensor C = val(a);
    for (double& x : C.v) x = 1.0 / (1.0 + std::exp(-x));
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        const Tensor& y = val(out);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i)
            da.v[i] += g.v[i] * y.v[i] * (1.0 - y.v[i]);
    };
    return out;
}

Tape::Ref Tape::sqrt_op(Ref a) {
    Tensor C = val(a);
    for (double& x : C.v) x = std::sqrt(x);
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        const Tensor& y = val(out);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * 0.5 / y.v[i];
    };
    return out;
}

Tape::Ref Tape::abs_op(Ref a) {
    Tensor C = val(a);
    for (double& x : C.v) x = std::fabs(x);
    Ref out = push(std::move(C), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        const Tensor& g = grad(out);
        const Tensor& A = val(a);
        Tensor& da = grad_mut(a);
        for (size_t i = 0; i < g.v.size(); ++i) {
            double s = A.v[i] > 0.0 ? 1.0 : (A.v[i] < 0.0 ? -1.0 : 0.0);
            da.v[i] += g.v[i] * s;
        }
    };
    return out;
}

Tape::Ref Tape::mean_all(Ref a) {
    const Tensor& A = val(a);
    double acc = 0.0;
    for (double x : A.v) acc += x;
    Ref out = push(Tensor::scalar(A.v.empty() ? 0.0 : acc / double(A.v.size())),
                   nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        double g = grad(out).v[0];
        Tensor& da = grad_mut(a);
        double s = g / double(da.v.size());
        for (double& x : da.v) x += s;
    };
    return out;
}

Tape::Ref Tape::sum_all(Ref a) {
    const Tensor& A = val(a);
    double acc = 0.0;
    for (double x : A.v) acc += x;
    Ref out = push(Tensor::scalar(acc), nodes_[a].needs_grad);
    nodes_[out].back = [this, a, out] {
        if (!nodes_[a].needs_grad) return;
        double g = grad(out).v[0];
        Tensor& da = grad_mut(a);
        for (double& x : da.v) x += g;
    };
    return out;
}

Tape::Ref Tape::cross_entropy(Ref logits, std::shared_ptr<const std::vector<int>> labels,
                              std::shared_ptr<const std::vector<int>> rows) {
    const Tensor& L = val(logits);
    if (rows->empty()) throw NumericError("cross_entropy: empty row subset");
    double loss = 0.0;
    for (int r : *rows) {
        double mx = L.at(r, 0);
        for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L.at(r, j));
        double tot = 0.0;
        for (int j = 0; j < L.cols; ++j) tot += std::exp(L.at(r, j) - mx);
        int y = (*labels)[size_t(r)];
        loss += std::log(tot) + mx - L.at(r, y);
    }
    loss /= double(rows->size());
    Ref out = push(Tensor::scalar(loss), nodes_[logits].needs_grad);
    nodes_[out].back = [this, logits, out, labels, rows] {
        if (!nodes_[logits].needs_grad) return;
        double g = grad(out).v[0] / double(rows->size());
        const Tensor& L = val(logits);
        Tensor& dl = grad_mut(logits);
        for (int r : *rows) {
            double mx = L.at(r, 0);
            for (int j = 1; j < L.cols; ++j) mx = std::max(mx, L.at(r, j));
            double tot = 0.0;
            for (int j = 0; j < L.cols; ++j) tot += std::exp(L.at(r, j) - mx);
            int y = (*labels)[size_t(r)];
            for (int j = 0; j < L.cols; ++j) {
                double smax = std::exp(L.at(r, j) - mx) / tot;
                dl.at(r, j) += g * (smax - (j == y ? 1.0 : 0.0));
            }
        }
    };
    return out;
}

void Tape::backward(Ref loss) {
    Tensor& g = grad_mut(loss);
    if (g.numel() != 1) throw NumericError("backward: loss must be scalar");
    g.v[0] = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back && nodes_[i].needs_grad) nodes_[i].back();
    }
}

}  // namespace isel
