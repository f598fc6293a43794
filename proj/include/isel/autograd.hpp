#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "isel/tensor.hpp"

namespace isel {

// Reverse-mode tape. Ops append nodes; backward() replays closures in reverse
// creation order. Reduction order inside every op is fixed, so repeated runs
// are bit-identical. Segment ops require their segment index arrays to be
// sorted ascending (arc lists are pre-sorted by destination).
class Tape {
public:
    using Ref = int;

    Ref input(Tensor t);                 // leaf that accumulates gradient
    Ref constant(Tensor t);              // leaf without gradient

    const Tensor& val(Ref r) const { return nodes_[size_t(r)].value; }
    const Tensor& grad(Ref r) const { return nodes_[size_t(r)].grad; }

    Ref matmul(Ref a, Ref b);            // [m,k] x [k,n]
    Ref matmul_tb(Ref a, Ref b);         // [m,k] x [n,k]^T -> [m,n]
    Ref add(Ref a, Ref b);
    Ref sub(Ref a, Ref b);
    Ref mul(Ref a, Ref b);               // elementwise
    Ref div(Ref a, Ref b);               // elementwise
    Ref add_rowvec(Ref m, Ref v);        // v is [1,n], broadcast over rows
    Ref affine(Ref a, double scale, double shift);  // scale*x + shift
    Ref broadcast_mul(Ref a, Ref s);     // s is 1x1
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref gather_rows(Ref a, std::vector<int> idx);
    // out[dst[e]] += a[e]; dst sorted ascending; out has out_rows rows.
    Ref scatter_add_rows(Ref a, std::vector<int> dst, int out_rows);
    Ref scale_rows(Ref m, Ref s);        // s is [rows,1]; row i scaled by s[i]

    // Segment ops over an [E,1] column; seg_starts has S+1 entries, segment s
    // spans [seg_starts[s], seg_starts[s+1]).
    Ref segment_softmax(Ref logits, std::shared_ptr<const std::vector<int>> seg_starts);
    Ref segment_sum(Ref vals, std::shared_ptr<const std::vector<int>> seg_starts);
    Ref segment_mean(Ref vals, std::shared_ptr<const std::vector<int>> seg_starts);
    Ref expand_segments(Ref per_seg, std::shared_ptr<const std::vector<int>> seg_starts);

    Ref row_softmax(Ref a);              // softmax across each row
    Ref leaky_relu(Ref a, double slope);
    Ref elu(Ref a);
    Ref sigmoid(Ref a);
    Ref sqrt_op(Ref a);
    Ref abs_op(Ref a);
    Ref mean_all(Ref a);                 // 1x1
    Ref sum_all(Ref a);                  // 1x1
    // Mean cross-entropy of rows[i] against labels[i]; softmax folded in.
    Ref cross_entropy(Ref logits, std::shared_ptr<const std::vector<int>> labels,
                      std::shared_ptr<const std::vector<int>> rows);

    void backward(Ref loss);
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back;  // empty for leaves/constants
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;

    Ref push(Tensor value, bool needs_grad, std::function<void()> back = {});
    Tensor& grad_mut(Ref r) { return nodes_[size_t(r)].grad; }
    friend struct TapeTestAccess;
};

}  // namespace isel
