#include "rarf/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rarf/error.hpp"

namespace rarf {

using detail::Node;

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a.value().same_shape(b.value()))
        throw invalid_error(std::string(op) + ": shape mismatch " + a.value().shape_str() +
                            " vs " + b.value().shape_str());
}

} // namespace

Var Tape::make(Tensor val, bool needs_grad, std::function<void()> back) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.val = std::move(val);
    n.needs_grad = needs_grad;
    if (needs_grad) {
        n.grad = Tensor(n.val.shape);
        n.back = std::move(back);
    }
    return Var(this, &n);
}

Var Tape::leaf(Tensor v) { return make(std::move(v), true, nullptr); }

Var Tape::constant(Tensor v) { return make(std::move(v), false, nullptr); }

void Tape::backward(Var loss) {
    if (loss.value().size() != 1) throw invalid_error("backward: loss must be scalar");
    if (!loss.needs_grad()) throw invalid_error("backward: loss does not require gradients");
    loss.node_->grad.data[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->needs_grad && it->back) it->back();
    }
}

// ---------------------------------------------------------------- elementwise

namespace {

template <typename Fwd, typename Bwd>
Var unary_op(Var a, const char* /*name*/, Fwd fwd, Bwd bwd) {
    Tape* tape = a.tape_;
    const Tensor& av = a.value();
    Tensor out(av.shape);
    for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = fwd(av.data[i]);
    Node* an = a.node_;
    // capture the output node after creation via mutable slot
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node* rn = res.node_;
        rn->back = [an, rn, bwd]() {
            for (std::size_t i = 0; i < an->grad.size(); ++i)
                an->grad.data[i] += rn->grad.data[i] * bwd(an->val.data[i], rn->val.data[i]);
        };
    }
    return res;
}

} // namespace

Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Tape* tape = a.tape_;
    Tensor out(a.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = a.value().data[i] + b.value().data[i];
    bool ng = a.needs_grad() || b.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *an = a.node_, *bn = b.node_, *rn = res.node_;
        rn->back = [an, bn, rn]() {
            if (an->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    an->grad.data[i] += rn->grad.data[i];
            if (bn->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    bn->grad.data[i] += rn->grad.data[i];
        };
    }
    return res;
}

Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Tape* tape = a.tape_;
    Tensor out(a.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = a.value().data[i] - b.value().data[i];
    bool ng = a.needs_grad() || b.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *an = a.node_, *bn = b.node_, *rn = res.node_;
        rn->back = [an, bn, rn]() {
            if (an->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    an->grad.data[i] += rn->grad.data[i];
            if (bn->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    bn->grad.data[i] -= rn->grad.data[i];
        };
    }
    return res;
}

Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Tape* tape = a.tape_;
    Tensor out(a.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = a.value().data[i] * b.value().data[i];
    bool ng = a.needs_grad() || b.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *an = a.node_, *bn = b.node_, *rn = res.node_;
        rn->back = [an, bn, rn]() {
            if (an->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    an->grad.data[i] += rn->grad.data[i] * bn->val.data[i];
            if (bn->needs_grad)
                for (std::size_t i = 0; i < rn->grad.size(); ++i)
                    bn->grad.data[i] += rn->grad.data[i] * an->val.data[i];
        };
    }
    return res;
}

Var div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Tape* tape = a.tape_;
    Tensor out(a.value().shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = a.value().data[i] / b.value().data[i];
    bool ng = a.needs_grad() || b.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *an = a.node_, *bn = b.node_, *rn = res.node_;
        rn->back = [an, bn, rn]() {
            for (std::size_t i = 0; i < rn->grad.size(); ++i) {
                const double inv = 1.0 / bn->val.data[i];
                if (an->needs_grad) an->grad.data[i] += rn->grad.data[i] * inv;
                if (bn->needs_grad)
                    bn->grad.data[i] -= rn->grad.data[i] * an->val.data[i] * inv * inv;
            }
        };
    }
    return res;
}

Var scale(Var a, double c) {
    return unary_op(a, "scale", [c](double x) { return c * x; },
                    [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
    return unary_op(a, "add_scalar", [c](double x) { return x + c; },
                    [](double, double) { return 1.0; });
}

Var tanh_op(Var a) {
    return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
    return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp_op(Var a) {
    return unary_op(a, "exp", [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Var log_op(Var a) {
    return unary_op(a, "log", [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Var sqrt_op(Var a) {
    return unary_op(a, "sqrt", [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Var sigmoid(Var a) {
    return unary_op(a, "sigmoid",
                    [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                                   : std::exp(x) / (1.0 + std::exp(x)); },
                    [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
    // numerically stable log(1 + e^x)
    return unary_op(a, "softplus",
                    [](double x) { return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0))); },
                    [](double x, double) {
                        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                        : std::exp(x) / (1.0 + std::exp(x));
                    });
}

// ------------------------------------------------------------- linear algebra

namespace {

// out(+)= op(A) * op(B)
void mm(const Tensor& A, bool ta, const Tensor& B, bool tb, Tensor& out, bool accumulate) {
    const std::size_t m = ta ? A.shape[1] : A.shape[0];
    const std::size_t k = ta ? A.shape[0] : A.shape[1];
    const std::size_t kb = tb ? B.shape[1] : B.shape[0];
    const std::size_t n = tb ? B.shape[0] : B.shape[1];
    if (k != kb)
        throw invalid_error("matmul: inner dimensions disagree " + A.shape_str() + " vs " +
                            B.shape_str());
    if (!accumulate) {
        out = Tensor({m, n});
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ta ? A.data[p * A.shape[1] + i] : A.data[i * A.shape[1] + p];
            if (av == 0.0) continue;
            const double* brow;
            if (!tb) {
                brow = &B.data[p * B.shape[1]];
                double* orow = &out.data[i * n];
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
            } else {
                double* orow = &out.data[i * n];
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * B.data[j * B.shape[1] + p];
            }
        }
    }
}

} // namespace

Var matmul(Var a, Var b, bool trans_a, bool trans_b) {
    if (a.value().rank() != 2 || b.value().rank() != 2)
        throw invalid_error("matmul: operands must be rank-2");
    Tape* tape = a.tape_;
    Tensor out;
    mm(a.value(), trans_a, b.value(), trans_b, out, false);
    bool ng = a.needs_grad() || b.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *an = a.node_, *bn = b.node_, *rn = res.node_;
        rn->back = [an, bn, rn, trans_a, trans_b]() {
            const Tensor& g = rn->grad;
            if (an->needs_grad) {
                if (!trans_a && !trans_b) mm(g, false, bn->val, true, an->grad, true);
                else if (trans_a && !trans_b) mm(bn->val, false, g, true, an->grad, true);
                else if (!trans_a && trans_b) mm(g, false, bn->val, false, an->grad, true);
                else mm(bn->val, true, g, true, an->grad, true);
            }
            if (bn->needs_grad) {
                if (!trans_a && !trans_b) mm(an->val, true, g, false, bn->grad, true);
                else if (trans_a && !trans_b) mm(an->val, false, g, false, bn->grad, true);
                else if (!trans_a && trans_b) mm(g, true, an->val, false, bn->grad, true);
                else mm(g, true, an->val, true, bn->grad, true);
            }
        };
    }
    return res;
}

Var matvec(Var m, Var v) {
    if (m.value().rank() != 2 || v.value().rank() != 1)
        throw invalid_error("matvec: expected matrix and vector");
    if (m.value().shape[1] != v.value().shape[0])
        throw invalid_error("matvec: shape mismatch " + m.value().shape_str() + " vs " +
                            v.value().shape_str());
    Tape* tape = m.tape_;
    const std::size_t r = m.value().shape[0], c = m.value().shape[1];
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += m.value().data[i * c + j] * v.value().data[j];
        out.data[i] = acc;
    }
    bool ng = m.needs_grad() || v.needs_grad();
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        Node *mn = m.node_, *vn = v.node_, *rn = res.node_;
        rn->back = [mn, vn, rn, r, c]() {
            for (std::size_t i = 0; i < r; ++i) {
                const double gi = rn->grad.data[i];
                if (gi == 0.0) continue;
                if (mn->needs_grad)
                    for (std::size_t j = 0; j < c; ++j)
                        mn->grad.data[i * c + j] += gi * vn->val.data[j];
                if (vn->needs_grad)
                    for (std::size_t j = 0; j < c; ++j)
                        vn->grad.data[j] += gi * mn->val.data[i * c + j];
            }
        };
    }
    return res;
}

// ---------------------------------------------------------------------- shape

Var reshape(Var a, std::vector<std::size_t> shape) {
    if (Tensor::count(shape) != a.value().size())
        throw invalid_error("reshape: element count mismatch");
    Tape* tape = a.tape_;
    Tensor out(shape, a.value().data);
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn]() {
            for (std::size_t i = 0; i < rn->grad.size(); ++i)
                an->grad.data[i] += rn->grad.data[i];
        };
    }
    return res;
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw invalid_error("concat_rows: empty list");
    Tape* tape = parts[0].tape_;
    const std::size_t c = parts[0].value().cols();
    std::size_t r = 0;
    bool ng = false;
    for (const Var& p : parts) {
        if (p.value().rank() != 2 || p.value().shape[1] != c)
            throw invalid_error("concat_rows: column mismatch");
        r += p.value().shape[0];
        ng = ng || p.needs_grad();
    }
    Tensor out({r, c});
    std::size_t off = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + off);
        off += p.value().size();
    }
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        std::vector<Node*> pn;
        for (const Var& p : parts) pn.push_back(p.node_);
        Node* rn = res.node_;
        rn->back = [pn, rn]() {
            std::size_t off = 0;
            for (Node* p : pn) {
                if (p->needs_grad)
                    for (std::size_t i = 0; i < p->grad.size(); ++i)
                        p->grad.data[i] += rn->grad.data[off + i];
                off += p->val.size();
            }
        };
    }
    return res;
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw invalid_error("concat_cols: empty list");
    Tape* tape = parts[0].tape_;
    const std::size_t r = parts[0].value().rows();
    std::size_t c = 0;
    bool ng = false;
    for (const Var& p : parts) {
        if (p.value().rank() != 2 || p.value().shape[0] != r)
            throw invalid_error("concat_cols: row mismatch");
        c += p.value().shape[1];
        ng = ng || p.needs_grad();
    }
    Tensor out({r, c});
    std::size_t coff = 0;
    for (const Var& p : parts) {
        const std::size_t pc = p.value().shape[1];
        for (std::size_t i = 0; i < r; ++i)
            std::copy(p.value().data.begin() + i * pc, p.value().data.begin() + (i + 1) * pc,
                      out.data.begin() + i * c + coff);
        coff += pc;
    }
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        std::vector<Node*> pn;
        for (const Var& p : parts) pn.push_back(p.node_);
        Node* rn = res.node_;
        rn->back = [pn, rn, r, c]() {
            std::size_t coff = 0;
            for (Node* p : pn) {
                const std::size_t pc = p->val.shape[1];
                if (p->needs_grad)
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < pc; ++j)
                            p->grad.data[i * pc + j] += rn->grad.data[i * c + coff + j];
                coff += pc;
            }
        };
    }
    return res;
}

Var concat_vec(const std::vector<Var>& parts) {
    if (parts.empty()) throw invalid_error("concat_vec: empty list");
    Tape* tape = parts[0].tape_;
    std::size_t n = 0;
    bool ng = false;
    for (const Var& p : parts) {
        if (p.value().rank() != 1) throw invalid_error("concat_vec: operands must be rank-1");
        n += p.value().size();
        ng = ng || p.needs_grad();
    }
    Tensor out({n});
    std::size_t off = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + off);
        off += p.value().size();
    }
    Var res = tape->make(std::move(out), ng, nullptr);
    if (ng) {
        std::vector<Node*> pn;
        for (const Var& p : parts) pn.push_back(p.node_);
        Node* rn = res.node_;
        rn->back = [pn, rn]() {
            std::size_t off = 0;
            for (Node* p : pn) {
                if (p->needs_grad)
                    for (std::size_t i = 0; i < p->grad.size(); ++i)
                        p->grad.data[i] += rn->grad.data[off + i];
                off += p->val.size();
            }
        };
    }
    return res;
}

Var slice_rows(Var a, std::size_t start, std::size_t len) {
    if (a.value().rank() != 2) throw invalid_error("slice_rows: operand must be rank-2");
    const std::size_t r = a.value().shape[0], c = a.value().shape[1];
    if (start + len > r) throw invalid_error("slice_rows: range out of bounds");
    Tape* tape = a.tape_;
    Tensor out({len, c});
    std::copy(a.value().data.begin() + start * c, a.value().data.begin() + (start + len) * c,
              out.data.begin());
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, start, c]() {
            for (std::size_t i = 0; i < rn->grad.size(); ++i)
                an->grad.data[start * c + i] += rn->grad.data[i];
        };
    }
    return res;
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
    if (a.value().rank() != 2) throw invalid_error("slice_cols: operand must be rank-2");
    const std::size_t r = a.value().shape[0], c = a.value().shape[1];
    if (start + len > c) throw invalid_error("slice_cols: range out of bounds");
    Tape* tape = a.tape_;
    Tensor out({r, len});
    for (std::size_t i = 0; i < r; ++i)
        std::copy(a.value().data.begin() + i * c + start,
                  a.value().data.begin() + i * c + start + len, out.data.begin() + i * len);
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, start, c, r, len]() {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < len; ++j)
                    an->grad.data[i * c + start + j] += rn->grad.data[i * len + j];
        };
    }
    return res;
}

Var slice_vec(Var a, std::size_t start, std::size_t len) {
    if (a.value().rank() != 1) throw invalid_error("slice_vec: operand must be rank-1");
    if (start + len > a.value().size()) throw invalid_error("slice_vec: range out of bounds");
    Tape* tape = a.tape_;
    Tensor out({len});
    std::copy(a.value().data.begin() + start, a.value().data.begin() + start + len,
              out.data.begin());
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, start]() {
            for (std::size_t i = 0; i < rn->grad.size(); ++i)
                an->grad.data[start + i] += rn->grad.data[i];
        };
    }
    return res;
}

Var broadcast_rows(Var v, std::size_t rows) {
    if (v.value().rank() != 1) throw invalid_error("broadcast_rows: operand must be rank-1");
    const std::size_t c = v.value().size();
    Tape* tape = v.tape_;
    Tensor out({rows, c});
    for (std::size_t i = 0; i < rows; ++i)
        std::copy(v.value().data.begin(), v.value().data.end(), out.data.begin() + i * c);
    Var res = tape->make(std::move(out), v.needs_grad(), nullptr);
    if (v.needs_grad()) {
        Node *vn = v.node_, *rn = res.node_;
        rn->back = [vn, rn, rows, c]() {
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    vn->grad.data[j] += rn->grad.data[i * c + j];
        };
    }
    return res;
}

Var broadcast_cols(Var v, std::size_t cols) {
    if (v.value().rank() != 1) throw invalid_error("broadcast_cols: operand must be rank-1");
    const std::size_t r = v.value().size();
    Tape* tape = v.tape_;
    Tensor out({r, cols});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < cols; ++j) out.data[i * cols + j] = v.value().data[i];
    Var res = tape->make(std::move(out), v.needs_grad(), nullptr);
    if (v.needs_grad()) {
        Node *vn = v.node_, *rn = res.node_;
        rn->back = [vn, rn, r, cols]() {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < cols; ++j)
                    vn->grad.data[i] += rn->grad.data[i * cols + j];
        };
    }
    return res;
}

// ------------------------------------------------------- reductions & softmax

Var sum(Var a) {
    Tape* tape = a.tape_;
    double acc = 0.0;
    for (double v : a.value().data) acc += v;
    Var res = tape->make(Tensor::scalar(acc), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn]() {
            const double g = rn->grad.data[0];
            for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad.data[i] += g;
        };
    }
    return res;
}

Var mean(Var a) {
    if (a.value().size() == 0) throw invalid_error("mean: empty operand");
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var row_mean(Var a) {
    if (a.value().rank() != 2) throw invalid_error("row_mean: operand must be rank-2");
    const std::size_t r = a.value().shape[0], c = a.value().shape[1];
    if (c == 0) throw invalid_error("row_mean: zero columns");
    Tape* tape = a.tape_;
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += a.value().data[i * c + j];
        out.data[i] = acc / static_cast<double>(c);
    }
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, r, c]() {
            for (std::size_t i = 0; i < r; ++i) {
                const double g = rn->grad.data[i] / static_cast<double>(c);
                for (std::size_t j = 0; j < c; ++j) an->grad.data[i * c + j] += g;
            }
        };
    }
    return res;
}

Var col_mean(Var a) {
    if (a.value().rank() != 2) throw invalid_error("col_mean: operand must be rank-2");
    const std::size_t r = a.value().shape[0], c = a.value().shape[1];
    if (r == 0) throw invalid_error("col_mean: zero rows");
    Tape* tape = a.tape_;
    Tensor out({c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.data[j] += a.value().data[i * c + j];
    for (std::size_t j = 0; j < c; ++j) out.data[j] /= static_cast<double>(r);
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, r, c]() {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j)
                    an->grad.data[i * c + j] += rn->grad.data[j] / static_cast<double>(r);
        };
    }
    return res;
}

namespace {

// softmax over the trailing axis of each row span [base, base+n)
void softmax_span(const double* in, double* out, std::size_t n) {
    if (n == 0) return;
    double mx = in[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(in[i] - mx);
        denom += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= denom;
}

} // namespace

Var softmax_rows(Var a) {
    if (a.value().rank() != 2) throw invalid_error("softmax_rows: operand must be rank-2");
    const std::size_t r = a.value().shape[0], c = a.value().shape[1];
    Tape* tape = a.tape_;
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i)
        softmax_span(&a.value().data[i * c], &out.data[i * c], c);
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, r, c]() {
            for (std::size_t i = 0; i < r; ++i) {
                const double* y = &rn->val.data[i * c];
                const double* gy = &rn->grad.data[i * c];
                double dot = 0.0;
                for (std::size_t j = 0; j < c; ++j) dot += y[j] * gy[j];
                for (std::size_t j = 0; j < c; ++j)
                    an->grad.data[i * c + j] += y[j] * (gy[j] - dot);
            }
        };
    }
    return res;
}

Var softmax_vec(Var a) {
    if (a.value().rank() != 1) throw invalid_error("softmax_vec: operand must be rank-1");
    const std::size_t n = a.value().size();
    Tape* tape = a.tape_;
    Tensor out({n});
    softmax_span(a.value().data.data(), out.data.data(), n);
    Var res = tape->make(std::move(out), a.needs_grad(), nullptr);
    if (a.needs_grad()) {
        Node *an = a.node_, *rn = res.node_;
        rn->back = [an, rn, n]() {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += rn->val.data[j] * rn->grad.data[j];
            for (std::size_t j = 0; j < n; ++j)
                an->grad.data[j] += rn->val.data[j] * (rn->grad.data[j] - dot);
        };
    }
    return res;
}

} // namespace rarf
