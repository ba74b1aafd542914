#include "pointprompt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace pointprompt {

namespace detail {

struct TensorNode {
    Shape shape;
    ArrayX values;
    ArrayX grad;  // allocated lazily, only when needs_grad
    bool requires_grad = false;  // leaf flag or derived from parents
    bool is_leaf = true;
    bool backward_ran = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    Index size() const { return static_cast<Index>(values.size()); }

    void accum_grad_init() {
        if (grad.size() != values.size()) grad = ArrayX::Zero(values.size());
    }
};

}  // namespace detail

using detail::TensorNode;

namespace {

std::string shape_to_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

void require_rank2(const Tensor& a, const char* op) {
    if (a.rank() != 2) {
        throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + a.shape_str());
    }
}

void require_rank1(const Tensor& a, const char* op) {
    if (a.rank() != 1) {
        throw ShapeError(std::string(op) + ": expected rank-1 tensor, got " + a.shape_str());
    }
}

// Accumulate `g` into the parent's gradient if that parent participates in
// differentiation.
void accum(TensorNode& parent, const ArrayX& g) {
    if (!parent.requires_grad) return;
    parent.accum_grad_init();
    parent.grad += g;
}

ConstMatMap mat_of(const TensorNode& n) {
    return ConstMatMap(n.values.data(), n.shape[0], n.shape[1]);
}

ConstMatMap grad_mat_of(const TensorNode& n) {
    return ConstMatMap(n.grad.data(), n.shape[0], n.shape[1]);
}

}  // namespace

// --- handle plumbing ---------------------------------------------------------

detail::TensorNode& node_of(const Tensor& t);

Tensor make_op(Shape shape, ArrayX values, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    if (shape_size(shape) != static_cast<Index>(values.size())) {
        throw ShapeError("make_op: value count does not match shape " + shape_to_str(shape));
    }
    node->shape = std::move(shape);
    node->values = std::move(values);
    bool needs = false;
    for (const Tensor& t : inputs) {
        if (t.requires_grad()) {
            needs = true;
            break;
        }
    }
    if (needs) {
        node->requires_grad = true;
        node->is_leaf = false;
        node->parents.reserve(inputs.size());
        for (Tensor& t : inputs) node->parents.push_back(t.node_);
        node->backward_fn = std::move(backward_fn);
    }
    Tensor out;
    out.node_ = std::move(node);
    return out;
}

detail::TensorNode& node_of(const Tensor& t) { return *t.node_; }

namespace {

Tensor make_value(Shape shape, ArrayX values) {
    return make_op(std::move(shape), std::move(values), {}, nullptr);
}

}  // namespace

Tensor Tensor::zeros(Shape shape) {
    const Index n = shape_size(shape);
    return make_value(std::move(shape), ArrayX::Zero(n));
}

Tensor Tensor::constant(Shape shape, Scalar value) {
    const Index n = shape_size(shape);
    return make_value(std::move(shape), ArrayX::Constant(n, value));
}

Tensor Tensor::from_values(Shape shape, ArrayX values) {
    return make_value(std::move(shape), std::move(values));
}

Tensor Tensor::scalar(Scalar value) { return make_value({1}, ArrayX::Constant(1, value)); }

Tensor Tensor::vector(std::initializer_list<Scalar> values) {
    ArrayX v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar s : values) v[i++] = s;
    return make_value({static_cast<Index>(values.size())}, std::move(v));
}

Tensor Tensor::from_matrix(const MatrixR& m) {
    ArrayX v(m.size());
    MatMap(v.data(), m.rows(), m.cols()) = m;
    return make_value({m.rows(), m.cols()}, std::move(v));
}

Tensor Tensor::randn(Shape shape, Rng& rng, Scalar mean, Scalar stddev) {
    ArrayX v(shape_size(shape));
    for (Index i = 0; i < v.size(); ++i) v[i] = rng.gaussian(mean, stddev);
    return make_value(std::move(shape), std::move(v));
}

const Shape& Tensor::shape() const {
    if (!node_) throw ContractError("Tensor: undefined handle");
    return node_->shape;
}

Index Tensor::size() const { return node_ ? node_->size() : 0; }

Index Tensor::rows() const {
    require_rank2(*this, "rows");
    return node_->shape[0];
}

Index Tensor::cols() const {
    require_rank2(*this, "cols");
    return node_->shape[1];
}

std::string Tensor::shape_str() const { return shape_to_str(shape()); }

const ArrayX& Tensor::values() const {
    if (!node_) throw ContractError("Tensor: undefined handle");
    return node_->values;
}

Scalar Tensor::value() const {
    if (size() != 1) throw ContractError("Tensor::value: tensor is not scalar, " + shape_str());
    return node_->values[0];
}

Scalar Tensor::operator()(Index i) const { return values()[i]; }

Scalar Tensor::operator()(Index r, Index c) const {
    require_rank2(*this, "operator()");
    return node_->values[r * node_->shape[1] + c];
}

ConstMatMap Tensor::matrix() const {
    require_rank2(*this, "matrix");
    return mat_of(*node_);
}

ConstVecMap Tensor::as_vector() const {
    require_rank1(*this, "as_vector");
    return ConstVecMap(node_->values.data(), node_->values.size());
}

ArrayX& Tensor::values_mut() {
    if (!node_) throw ContractError("Tensor: undefined handle");
    if (!node_->is_leaf) throw ContractError("values_mut: only leaf tensors may be mutated");
    return node_->values;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
    if (!node_) throw ContractError("Tensor: undefined handle");
    if (!node_->is_leaf) throw ContractError("set_requires_grad: only valid on leaf tensors");
    node_->requires_grad = v;
    return *this;
}

bool Tensor::is_leaf() const { return node_ && node_->is_leaf; }

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->values.size(); }

const ArrayX& Tensor::grad() const {
    if (!has_grad()) throw ContractError("Tensor::grad: no gradient present");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_ && node_->grad.size() > 0) node_->grad.setZero();
}

Tensor Tensor::detach() const {
    ArrayX copy = values();
    return make_value(shape(), std::move(copy));
}

std::size_t Tensor::parent_count() const { return node_ ? node_->parents.size() : 0; }

void Tensor::backward() const {
    if (!node_) throw ContractError("backward: undefined tensor");
    if (size() != 1) throw ContractError("backward: loss must be scalar, got " + shape_str());
    if (node_->backward_ran) {
        throw ContractError(
            "backward: already run on this graph; rebuild the forward pass before "
            "differentiating again");
    }
    node_->backward_ran = true;
    if (!node_->requires_grad) return;  // nothing trainable reachable

    // Topological order, each node visited exactly once.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            TensorNode* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    // `order` is children-after-parents; walk it backwards so every node's
    // gradient is complete before its backward rule fires.
    node_->accum_grad_init();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn && n->grad.size() == n->values.size()) n->backward_fn(*n);
    }
}

// --- elementwise ops ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    ArrayX v = a.values() + b.values();
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad);
        accum(*self.parents[1], self.grad);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    ArrayX v = a.values() - b.values();
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad);
        accum(*self.parents[1], -self.grad);
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    ArrayX v = a.values() * b.values();
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad * self.parents[1]->values);
        accum(*self.parents[1], self.grad * self.parents[0]->values);
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    ArrayX v = a.values() / b.values();
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
        const ArrayX& bv = self.parents[1]->values;
        accum(*self.parents[0], self.grad / bv);
        accum(*self.parents[1], -self.grad * self.parents[0]->values / (bv * bv));
    });
}

Tensor neg(const Tensor& a) {
    ArrayX v = -a.values();
    return make_op(a.shape(), std::move(v), {a},
                   [](TensorNode& self) { accum(*self.parents[0], -self.grad); });
}

Tensor add_scalar(const Tensor& a, Scalar c) {
    ArrayX v = a.values() + c;
    return make_op(a.shape(), std::move(v), {a},
                   [](TensorNode& self) { accum(*self.parents[0], self.grad); });
}

Tensor mul_scalar(const Tensor& a, Scalar c) {
    ArrayX v = a.values() * c;
    return make_op(a.shape(), std::move(v), {a},
                   [c](TensorNode& self) { accum(*self.parents[0], ArrayX(self.grad * c)); });
}

Tensor exp(const Tensor& a) {
    ArrayX v = a.values().exp();
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad * self.values);
    });
}

Tensor log(const Tensor& a) {
    ArrayX v = a.values().log();
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad / self.parents[0]->values);
    });
}

Tensor sqrt(const Tensor& a) {
    ArrayX v = a.values().sqrt();
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad / (2.0 * self.values));
    });
}

Tensor tanh(const Tensor& a) {
    ArrayX v = a.values().tanh();
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
        accum(*self.parents[0], self.grad * (1.0 - self.values.square()));
    });
}

Tensor erf(const Tensor& a) {
    ArrayX v(a.size());
    const ArrayX& x = a.values();
    for (Index i = 0; i < x.size(); ++i) v[i] = std::erf(x[i]);
    return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
        const Scalar two_over_sqrt_pi = 2.0 / std::sqrt(M_PI);
        accum(*self.parents[0],
              self.grad * two_over_sqrt_pi * (-self.parents[0]->values.square()).exp());
    });
}

Tensor clamp_min(const Tensor& a, Scalar c) {
    ArrayX v = a.values().max(c);
    return make_op(a.shape(), std::move(v), {a}, [c](TensorNode& self) {
        const ArrayX& x = self.parents[0]->values;
        ArrayX g = self.grad;
        for (Index i = 0; i < g.size(); ++i)
            if (x[i] < c) g[i] = 0.0;
        accum(*self.parents[0], g);
    });
}

namespace {
constexpr Scalar kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr Scalar kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& a, GeluMode mode) {
    const ArrayX& x = a.values();
    ArrayX v(x.size());
    if (mode == GeluMode::kTanh) {
        for (Index i = 0; i < x.size(); ++i) {
            const Scalar u = kGeluC * (x[i] + kGeluA * x[i] * x[i] * x[i]);
            v[i] = 0.5 * x[i] * (1.0 + std::tanh(u));
        }
    } else {
        for (Index i = 0; i < x.size(); ++i)
            v[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * M_SQRT1_2));
    }
    return make_op(a.shape(), std::move(v), {a}, [mode](TensorNode& self) {
        const ArrayX& x = self.parents[0]->values;
        ArrayX d(x.size());
        if (mode == GeluMode::kTanh) {
            for (Index i = 0; i < x.size(); ++i) {
                const Scalar u = kGeluC * (x[i] + kGeluA * x[i] * x[i] * x[i]);
                const Scalar t = std::tanh(u);
                const Scalar du = kGeluC * (1.0 + 3.0 * kGeluA * x[i] * x[i]);
                d[i] = 0.5 * (1.0 + t) + 0.5 * x[i] * (1.0 - t * t) * du;
            }
        } else {
            for (Index i = 0; i < x.size(); ++i) {
                const Scalar phi = std::exp(-0.5 * x[i] * x[i]) / std::sqrt(2.0 * M_PI);
                const Scalar Phi = 0.5 * (1.0 + std::erf(x[i] * M_SQRT1_2));
                d[i] = Phi + x[i] * phi;
            }
        }
        accum(*self.parents[0], ArrayX(self.grad * d));
    });
}

// --- linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner extents differ, " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    const Index m = a.rows(), n = b.cols();
    ArrayX v(m * n);
    MatMap(v.data(), m, n).noalias() = a.matrix() * b.matrix();
    return make_op({m, n}, std::move(v), {a, b}, [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        ConstMatMap G = grad_mat_of(self);
        if (A.requires_grad) {
            A.accum_grad_init();
            MatMap(A.grad.data(), A.shape[0], A.shape[1]).noalias() += G * mat_of(B).transpose();
        }
        if (B.requires_grad) {
            B.accum_grad_init();
            MatMap(B.grad.data(), B.shape[0], B.shape[1]).noalias() += mat_of(A).transpose() * G;
        }
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: trailing extents differ, " + a.shape_str() + " vs " +
                         b.shape_str());
    }
    const Index m = a.rows(), n = b.rows();
    ArrayX v(m * n);
    MatMap(v.data(), m, n).noalias() = a.matrix() * b.matrix().transpose();
    return make_op({m, n}, std::move(v), {a, b}, [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        ConstMatMap G = grad_mat_of(self);
        if (A.requires_grad) {
            A.accum_grad_init();
            MatMap(A.grad.data(), A.shape[0], A.shape[1]).noalias() += G * mat_of(B);
        }
        if (B.requires_grad) {
            B.accum_grad_init();
            MatMap(B.grad.data(), B.shape[0], B.shape[1]).noalias() += G.transpose() * mat_of(A);
        }
    });
}

Tensor dot(const Tensor& u, const Tensor& v) {
    require_rank1(u, "dot");
    require_rank1(v, "dot");
    require_same_shape(u, v, "dot");
    ArrayX out(1);
    out[0] = (u.values() * v.values()).sum();
    return make_op({1}, std::move(out), {u, v}, [](TensorNode& self) {
        const Scalar g = self.grad[0];
        accum(*self.parents[0], ArrayX(g * self.parents[1]->values));
        accum(*self.parents[1], ArrayX(g * self.parents[0]->values));
    });
}

// --- reductions -----------------------------------------------------------------

Tensor sum(const Tensor& a) {
    ArrayX out(1);
    out[0] = a.values().sum();
    return make_op({1}, std::move(out), {a}, [](TensorNode& self) {
        accum(*self.parents[0],
              ArrayX(ArrayX::Constant(self.parents[0]->size(), self.grad[0])));
    });
}

Tensor mean(const Tensor& a) {
    const Scalar inv_n = 1.0 / static_cast<Scalar>(a.size());
    ArrayX out(1);
    out[0] = a.values().sum() * inv_n;
    return make_op({1}, std::move(out), {a}, [inv_n](TensorNode& self) {
        accum(*self.parents[0],
              ArrayX(ArrayX::Constant(self.parents[0]->size(), self.grad[0] * inv_n)));
    });
}

Tensor max_over_rows(const Tensor& a) {
    require_rank2(a, "max_over_rows");
    const Index n = a.rows(), d = a.cols();
    ArrayX out(d);
    std::vector<Index> arg(static_cast<std::size_t>(d), 0);
    ConstMatMap m = a.matrix();
    for (Index j = 0; j < d; ++j) {
        Index best = 0;
        for (Index i = 1; i < n; ++i)
            if (m(i, j) > m(best, j)) best = i;  // strict > keeps the lowest index on ties
        arg[static_cast<std::size_t>(j)] = best;
        out[j] = m(best, j);
    }
    return make_op({d}, std::move(out), {a}, [arg, d](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        MatMap g(A.grad.data(), A.shape[0], A.shape[1]);
        for (Index j = 0; j < d; ++j) g(arg[static_cast<std::size_t>(j)], j) += self.grad[j];
    });
}

Tensor mean_over_rows(const Tensor& a) {
    require_rank2(a, "mean_over_rows");
    const Index n = a.rows(), d = a.cols();
    const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
    ArrayX out(d);
    VecMap(out.data(), d) = a.matrix().colwise().sum() * inv_n;
    return make_op({d}, std::move(out), {a}, [inv_n](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        MatMap g(A.grad.data(), A.shape[0], A.shape[1]);
        g.rowwise() += (inv_n * ConstVecMap(self.grad.data(), self.grad.size())).transpose();
    });
}

// --- structure ------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_size(shape) != a.size()) {
        throw ShapeError("reshape: cannot view " + a.shape_str() + " as " + shape_to_str(shape));
    }
    ArrayX v = a.values();
    return make_op(std::move(shape), std::move(v), {a},
                   [](TensorNode& self) { accum(*self.parents[0], self.grad); });
}

Tensor slice_rows(const Tensor& a, Index r0, Index n) {
    require_rank2(a, "slice_rows");
    if (r0 < 0 || n < 0 || r0 + n > a.rows()) {
        throw ShapeError("slice_rows: range out of bounds for " + a.shape_str());
    }
    const Index d = a.cols();
    ArrayX v = a.values().segment(r0 * d, n * d);
    return make_op({n, d}, std::move(v), {a}, [r0, n, d](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        A.grad.segment(r0 * d, n * d) += self.grad;
    });
}

Tensor slice_cols(const Tensor& a, Index c0, Index n) {
    require_rank2(a, "slice_cols");
    if (c0 < 0 || n < 0 || c0 + n > a.cols()) {
        throw ShapeError("slice_cols: range out of bounds for " + a.shape_str());
    }
    const Index rows = a.rows();
    ArrayX v(rows * n);
    MatMap(v.data(), rows, n) = a.matrix().middleCols(c0, n);
    return make_op({rows, n}, std::move(v), {a}, [c0, n](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        MatMap(A.grad.data(), A.shape[0], A.shape[1]).middleCols(c0, n) +=
            ConstMatMap(self.grad.data(), self.shape[0], self.shape[1]);
    });
}

Tensor get_row(const Tensor& a, Index r) {
    require_rank2(a, "get_row");
    if (r < 0 || r >= a.rows()) throw ShapeError("get_row: row out of bounds");
    const Index d = a.cols();
    ArrayX v = a.values().segment(r * d, d);
    return make_op({d}, std::move(v), {a}, [r, d](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        A.grad.segment(r * d, d) += self.grad;
    });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ArgumentError("concat_rows: no parts");
    Index d = -1, total = 0;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_rows");
        if (d < 0) d = p.cols();
        if (p.cols() != d) throw ShapeError("concat_rows: column count mismatch");
        total += p.rows();
    }
    ArrayX v(total * d);
    Index off = 0;
    std::vector<Tensor> inputs;
    inputs.reserve(parts.size());
    std::vector<Index> row_offsets;
    for (const Tensor& p : parts) {
        v.segment(off * d, p.rows() * d) = p.values();
        row_offsets.push_back(off);
        off += p.rows();
        inputs.push_back(p);
    }
    return make_op({total, d}, std::move(v), std::move(inputs),
                   [row_offsets, d](TensorNode& self) {
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                           TensorNode& P = *self.parents[i];
                           if (!P.requires_grad) continue;
                           P.accum_grad_init();
                           P.grad += self.grad.segment(row_offsets[i] * d, P.size());
                       }
                   });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ArgumentError("concat_cols: no parts");
    Index rows = -1, total = 0;
    for (const Tensor& p : parts) {
        require_rank2(p, "concat_cols");
        if (rows < 0) rows = p.rows();
        if (p.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
        total += p.cols();
    }
    ArrayX v(rows * total);
    MatMap out(v.data(), rows, total);
    Index off = 0;
    std::vector<Tensor> inputs;
    std::vector<Index> col_offsets;
    for (const Tensor& p : parts) {
        out.middleCols(off, p.cols()) = p.matrix();
        col_offsets.push_back(off);
        off += p.cols();
        inputs.push_back(p);
    }
    return make_op({rows, total}, std::move(v), std::move(inputs),
                   [col_offsets](TensorNode& self) {
                       ConstMatMap G(self.grad.data(), self.shape[0], self.shape[1]);
                       for (std::size_t i = 0; i < self.parents.size(); ++i) {
                           TensorNode& P = *self.parents[i];
                           if (!P.requires_grad) continue;
                           P.accum_grad_init();
                           MatMap(P.grad.data(), P.shape[0], P.shape[1]) +=
                               G.middleCols(col_offsets[i], P.shape[1]);
                       }
                   });
}

Tensor gather_rows(const Tensor& table, const std::vector<Index>& indices) {
    require_rank2(table, "gather_rows");
    const Index d = table.cols();
    for (Index i : indices) {
        if (i < 0 || i >= table.rows())
            throw ShapeError("gather_rows: index out of range for " + table.shape_str());
    }
    ArrayX v(static_cast<Index>(indices.size()) * d);
    for (std::size_t r = 0; r < indices.size(); ++r)
        v.segment(static_cast<Index>(r) * d, d) = table.values().segment(indices[r] * d, d);
    return make_op({static_cast<Index>(indices.size()), d}, std::move(v), {table},
                   [indices, d](TensorNode& self) {
                       TensorNode& T = *self.parents[0];
                       if (!T.requires_grad) return;
                       T.accum_grad_init();
                       for (std::size_t r = 0; r < indices.size(); ++r)
                           T.grad.segment(indices[r] * d, d) +=
                               self.grad.segment(static_cast<Index>(r) * d, d);
                   });
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
    require_rank2(a, "add_rowvec");
    require_rank1(b, "add_rowvec");
    if (a.cols() != b.size()) {
        throw ShapeError("add_rowvec: width mismatch, " + a.shape_str() + " vs " + b.shape_str());
    }
    ArrayX v(a.size());
    MatMap(v.data(), a.rows(), a.cols()) =
        a.matrix().rowwise() + b.as_vector().transpose();
    return make_op(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        TensorNode& B = *self.parents[1];
        accum(A, self.grad);
        if (B.requires_grad) {
            B.accum_grad_init();
            VecMap(B.grad.data(), B.grad.size()) +=
                ConstMatMap(self.grad.data(), self.shape[0], self.shape[1])
                    .colwise()
                    .sum()
                    .transpose();
        }
    });
}

// --- normalization / probability ---------------------------------------------

namespace {

void check_finite(const Tensor& a, const char* op) {
    if (!a.values().isFinite().all()) {
        throw NumericError(std::string(op) + ": input contains NaN or Inf");
    }
}

// Softmax over contiguous slices of length `len`, `count` of them, with slice
// stride selection handled by the callers (row-major layout).
void softmax_rows_inplace(ArrayX& v, Index count, Index len) {
    for (Index s = 0; s < count; ++s) {
        auto seg = v.segment(s * len, len);
        const Scalar m = seg.maxCoeff();
        seg = (seg - m).exp();
        seg /= seg.sum();
    }
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
    check_finite(a, "softmax");
    if (a.rank() == 1) {
        if (a.size() < 1) throw ShapeError("softmax: empty input");
        ArrayX v = a.values();
        softmax_rows_inplace(v, 1, v.size());
        return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
            const ArrayX& y = self.values;
            const Scalar s = (self.grad * y).sum();
            accum(*self.parents[0], ArrayX(y * (self.grad - s)));
        });
    }
    require_rank2(a, "softmax");
    const Index rows = a.rows(), cols = a.cols();
    if (axis != 0 && axis != 1) throw ArgumentError("softmax: axis must be 0 or 1 for rank-2");
    ArrayX v = a.values();
    if (axis == 1) {
        softmax_rows_inplace(v, rows, cols);
    } else {
        MatMap m(v.data(), rows, cols);
        for (Index j = 0; j < cols; ++j) {
            ArrayX col = m.col(j).array();
            const Scalar mx = col.maxCoeff();
            col = (col - mx).exp();
            m.col(j) = (col / col.sum()).matrix();
        }
    }
    return make_op(a.shape(), std::move(v), {a}, [axis, rows, cols](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        ConstMatMap y(self.values.data(), rows, cols);
        ConstMatMap g(self.grad.data(), rows, cols);
        MatMap out(A.grad.data(), rows, cols);
        if (axis == 1) {
            for (Index i = 0; i < rows; ++i) {
                const Scalar s = (g.row(i).array() * y.row(i).array()).sum();
                out.row(i).array() += y.row(i).array() * (g.row(i).array() - s);
            }
        } else {
            for (Index j = 0; j < cols; ++j) {
                const Scalar s = (g.col(j).array() * y.col(j).array()).sum();
                out.col(j).array() += y.col(j).array() * (g.col(j).array() - s);
            }
        }
    });
}

Tensor log_softmax(const Tensor& a, int axis) {
    check_finite(a, "log_softmax");
    auto logsm_slice = [](ArrayX& v, Index count, Index len) {
        for (Index s = 0; s < count; ++s) {
            auto seg = v.segment(s * len, len);
            const Scalar m = seg.maxCoeff();
            const Scalar lse = std::log((seg - m).exp().sum());
            seg = seg - m - lse;
        }
    };
    if (a.rank() == 1) {
        ArrayX v = a.values();
        logsm_slice(v, 1, v.size());
        return make_op(a.shape(), std::move(v), {a}, [](TensorNode& self) {
            const ArrayX sm = self.values.exp();
            const Scalar gsum = self.grad.sum();
            accum(*self.parents[0], ArrayX(self.grad - sm * gsum));
        });
    }
    require_rank2(a, "log_softmax");
    if (axis != 0 && axis != 1) throw ArgumentError("log_softmax: axis must be 0 or 1");
    const Index rows = a.rows(), cols = a.cols();
    ArrayX v = a.values();
    if (axis == 1) {
        logsm_slice(v, rows, cols);
    } else {
        MatMap m(v.data(), rows, cols);
        for (Index j = 0; j < cols; ++j) {
            ArrayX col = m.col(j).array();
            const Scalar mx = col.maxCoeff();
            const Scalar lse = std::log((col - mx).exp().sum());
            m.col(j) = (col - mx - lse).matrix();
        }
    }
    return make_op(a.shape(), std::move(v), {a}, [axis, rows, cols](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        ConstMatMap y(self.values.data(), rows, cols);
        ConstMatMap g(self.grad.data(), rows, cols);
        MatMap out(A.grad.data(), rows, cols);
        if (axis == 1) {
            for (Index i = 0; i < rows; ++i) {
                const Scalar gsum = g.row(i).sum();
                out.row(i).array() +=
                    g.row(i).array() - y.row(i).array().exp() * gsum;
            }
        } else {
            for (Index j = 0; j < cols; ++j) {
                const Scalar gsum = g.col(j).sum();
                out.col(j).array() +=
                    g.col(j).array() - y.col(j).array().exp() * gsum;
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps) {
    require_rank1(gamma, "layer_norm");
    require_rank1(beta, "layer_norm");
    if (eps <= 0) throw ArgumentError("layer_norm: eps must be positive");
    const Index d = gamma.size();
    if (beta.size() != d) throw ShapeError("layer_norm: gamma/beta size mismatch");
    const Index rows = (x.rank() == 1) ? 1 : x.rows();
    const Index width = (x.rank() == 1) ? x.size() : x.cols();
    if (width != d) {
        throw ShapeError("layer_norm: last axis " + x.shape_str() + " does not match gamma " +
                         gamma.shape_str());
    }
    ArrayX v(x.size());
    ArrayX xhat(x.size());
    ArrayX inv_std(rows);
    for (Index r = 0; r < rows; ++r) {
        auto seg = x.values().segment(r * d, d);
        const Scalar mu = seg.sum() / static_cast<Scalar>(d);
        const Scalar var = (seg - mu).square().sum() / static_cast<Scalar>(d);
        const Scalar is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        xhat.segment(r * d, d) = (seg - mu) * is;
        v.segment(r * d, d) = xhat.segment(r * d, d) * gamma.values() + beta.values();
    }
    return make_op(x.shape(), std::move(v), {x, gamma, beta},
                   [xhat, inv_std, rows, d](TensorNode& self) {
                       TensorNode& X = *self.parents[0];
                       TensorNode& G = *self.parents[1];
                       TensorNode& B = *self.parents[2];
                       const ArrayX& gm = G.values;
                       if (B.requires_grad) {
                           B.accum_grad_init();
                           for (Index r = 0; r < rows; ++r) B.grad += self.grad.segment(r * d, d);
                       }
                       if (G.requires_grad) {
                           G.accum_grad_init();
                           for (Index r = 0; r < rows; ++r)
                               G.grad += self.grad.segment(r * d, d) * xhat.segment(r * d, d);
                       }
                       if (X.requires_grad) {
                           X.accum_grad_init();
                           for (Index r = 0; r < rows; ++r) {
                               const ArrayX dxhat = self.grad.segment(r * d, d) * gm;
                               const ArrayX xh = xhat.segment(r * d, d);
                               const Scalar m1 = dxhat.sum() / static_cast<Scalar>(d);
                               const Scalar m2 = (dxhat * xh).sum() / static_cast<Scalar>(d);
                               X.grad.segment(r * d, d) += inv_std[r] * (dxhat - m1 - xh * m2);
                           }
                       }
                   });
}

Tensor normalize_rows(const Tensor& a) {
    require_rank2(a, "normalize_rows");
    const Index rows = a.rows(), d = a.cols();
    ArrayX v(a.size());
    ArrayX norms(rows);
    for (Index r = 0; r < rows; ++r) {
        auto seg = a.values().segment(r * d, d);
        const Scalar n = std::sqrt(seg.square().sum());
        if (n <= 0.0) {
            throw DegenerateVectorError("normalize_rows: zero-norm row " + std::to_string(r));
        }
        norms[r] = n;
        v.segment(r * d, d) = seg / n;
    }
    return make_op(a.shape(), std::move(v), {a}, [norms, rows, d](TensorNode& self) {
        TensorNode& A = *self.parents[0];
        if (!A.requires_grad) return;
        A.accum_grad_init();
        for (Index r = 0; r < rows; ++r) {
            const ArrayX y = self.values.segment(r * d, d);
            const ArrayX g = self.grad.segment(r * d, d);
            const Scalar gy = (g * y).sum();
            A.grad.segment(r * d, d) += (g - y * gy) / norms[r];
        }
    });
}

Tensor cosine_similarity(const Tensor& u, const Tensor& v) {
    require_rank1(u, "cosine_similarity");
    require_rank1(v, "cosine_similarity");
    require_same_shape(u, v, "cosine_similarity");
    const Scalar nu = std::sqrt(u.values().square().sum());
    const Scalar nv = std::sqrt(v.values().square().sum());
    if (nu <= 0.0 || nv <= 0.0) {
        throw DegenerateVectorError("cosine_similarity: zero-norm input vector");
    }
    // Composed from primitive ops so the gradient falls out of the graph.
    Tensor ud = dot(u, v);
    Tensor denom = mul(sqrt(dot(u, u)), sqrt(dot(v, v)));
    return div(ud, denom);
}

// --- gradient checking ---------------------------------------------------------

Scalar grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, Scalar h) {
    if (h <= 0) throw ArgumentError("grad_check: h must be positive");
    // Analytic gradient on a fresh leaf.
    Tensor leaf = Tensor::from_values(x.shape(), ArrayX(x.values()));
    leaf.set_requires_grad(true);
    Tensor out = f(leaf);
    if (out.size() != 1) throw ContractError("grad_check: f must be scalar-valued");
    out.backward();
    ArrayX analytic =
        leaf.has_grad() ? ArrayX(leaf.grad()) : ArrayX(ArrayX::Zero(x.size()));

    // Central differences, evaluated with gradients off.
    Scalar worst = 0.0;
    ArrayX base = x.values();
    for (Index i = 0; i < base.size(); ++i) {
        ArrayX vp = base, vm = base;
        vp[i] += h;
        vm[i] -= h;
        const Scalar fp = f(Tensor::from_values(x.shape(), std::move(vp))).value();
        const Scalar fm = f(Tensor::from_values(x.shape(), std::move(vm))).value();
        const Scalar numeric = (fp - fm) / (2.0 * h);
        const Scalar rel =
            std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace pointprompt
