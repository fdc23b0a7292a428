#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "rarf/tensor.hpp"

namespace rarf {

class Tape;

namespace detail {
struct Node {
    Tensor val;
    Tensor grad; // allocated when needs_grad
    bool needs_grad = false;
    std::function<void()> back;
};
} // namespace detail

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
/// tape_/node_ are implementation detail shared with the op free functions.
struct Var {
    Var() = default;
    Var(Tape* t, detail::Node* n) : tape_(t), node_(n) {}

    const Tensor& value() const { return node_->val; }
    const Tensor& grad() const { return node_->grad; }
    bool needs_grad() const { return node_ && node_->needs_grad; }
    bool valid() const { return node_ != nullptr; }

    Tape* tape_ = nullptr;
    detail::Node* node_ = nullptr;
};

/// Define-by-run reverse-mode tape. Nodes are created in topological order,
/// so backward() is a single reverse sweep over creation order. A tape is
/// confined to one thread; independent tapes may run concurrently.
class Tape {
public:
    /// Differentiable leaf (parameters, inputs under test).
    Var leaf(Tensor v);
    /// Non-differentiable constant.
    Var constant(Tensor v);

    /// Seeds d(loss)=1 and accumulates exact gradients into every
    /// needs_grad node. `loss` must be scalar.
    void backward(Var loss);

    std::size_t node_count() const { return nodes_.size(); }

    /// Internal node factory used by the op free functions.
    Var make(Tensor val, bool needs_grad, std::function<void()> back);

private:
    std::deque<detail::Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var tanh_op(Var a);
Var relu(Var a);
Var exp_op(Var a);
Var log_op(Var a);
Var sqrt_op(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
Var matvec(Var m, Var v);
Var reshape(Var a, std::vector<std::size_t> shape);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var concat_vec(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t start, std::size_t len);
Var slice_cols(Var a, std::size_t start, std::size_t len);
Var slice_vec(Var a, std::size_t start, std::size_t len);
Var broadcast_rows(Var v, std::size_t rows);
Var broadcast_cols(Var v, std::size_t cols);
Var sum(Var a);
Var mean(Var a);
Var row_mean(Var a);
Var col_mean(Var a);
Var softmax_rows(Var a);
Var softmax_vec(Var a);

} // namespace rarf
