#pragma once

#include "pointprompt/errors.hpp"
#include "pointprompt/rng.hpp"
#include "pointprompt/types.hpp"

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pointprompt {

namespace detail {
struct TensorNode;
}

/// Dense tensor of 64-bit reals with an optional reverse-mode gradient.
///
/// A Tensor is a cheap handle onto a graph node holding shape, row-major
/// values, an optional gradient buffer and the producing operation's parents.
/// Operations on tensors whose inputs require gradients record a backward
/// closure; the graph is rebuilt on every forward pass and torn down when the
/// last handle goes away.
///
/// Semantics pinned here and relied on by the rest of the project:
///   - values are immutable once created, except for leaf parameters updated
///     between graphs through values_mut();
///   - backward() may be invoked once per graph root; a second call on the
///     same root throws ContractError (it does not silently accumulate);
///   - leaf gradients accumulate additively across graphs until zero_grad().
class Tensor {
public:
    Tensor() = default;

    // --- constructors -----------------------------------------------------
    static Tensor zeros(Shape shape);
    static Tensor constant(Shape shape, Scalar value);
    static Tensor from_values(Shape shape, ArrayX values);
    static Tensor scalar(Scalar value);
    static Tensor vector(std::initializer_list<Scalar> values);
    static Tensor from_matrix(const MatrixR& m);
    // I.i.d. Gaussian(mean, stddev^2) entries, row-major draw order.
    static Tensor randn(Shape shape, Rng& rng, Scalar mean = 0.0, Scalar stddev = 1.0);

    // --- metadata ----------------------------------------------------------
    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    Index rank() const { return static_cast<Index>(shape().size()); }
    Index size() const;
    Index rows() const;  // rank-2 only
    Index cols() const;  // rank-2 only
    std::string shape_str() const;

    // --- value access ------------------------------------------------------
    const ArrayX& values() const;
    Scalar value() const;  // scalar tensors
    Scalar operator()(Index i) const;
    Scalar operator()(Index r, Index c) const;
    ConstMatMap matrix() const;  // rank-2 view of the flat buffer
    ConstVecMap as_vector() const;  // rank-1 view

    // Mutable access to a leaf's storage. Only valid between graphs (optimizer
    // updates, checkpoint restore); mutating a tensor that participates in a
    // live graph is outside the contract.
    ArrayX& values_mut();

    // --- autodiff ----------------------------------------------------------
    bool requires_grad() const;
    Tensor& set_requires_grad(bool v);  // leaves only
    bool is_leaf() const;
    bool has_grad() const;
    const ArrayX& grad() const;
    void zero_grad();
    /// Reverse-mode sweep from a scalar root. Populates grad on every leaf
    /// that requires it; visits each node exactly once.
    void backward() const;
    /// Same values, detached from the graph, requires_grad = false.
    Tensor detach() const;

    // Internal: number of graph parents (used by tests).
    std::size_t parent_count() const;

private:
    friend Tensor make_op(Shape shape, ArrayX values, std::vector<Tensor> inputs,
                          std::function<void(detail::TensorNode&)> backward_fn);
    friend detail::TensorNode& node_of(const Tensor& t);

    std::shared_ptr<detail::TensorNode> node_;
};

// --- operations -------------------------------------------------------------
// Free functions; each records its backward rule when any input needs it.

// Elementwise (same shape).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor add_scalar(const Tensor& a, Scalar c);
Tensor mul_scalar(const Tensor& a, Scalar c);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor erf(const Tensor& a);
// max(a, c) elementwise; gradient passes where a >= c.
Tensor clamp_min(const Tensor& a, Scalar c);

// Gaussian error linear unit. Tanh approximation by default; exact phi-based
// form selectable (recorded in run metadata by the config layer).
enum class GeluMode { kTanh, kExact };
Tensor gelu(const Tensor& a, GeluMode mode = GeluMode::kTanh);

// Linear algebra (rank-2 x rank-2).
Tensor matmul(const Tensor& a, const Tensor& b);
// a [m x d] * b^T [d x n] without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor dot(const Tensor& u, const Tensor& v);  // rank-1, returns scalar

// Reductions.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor max_over_rows(const Tensor& a);   // [n x d] -> [d], ties to lowest row
Tensor mean_over_rows(const Tensor& a);  // [n x d] -> [d]

// Structure.
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice_rows(const Tensor& a, Index r0, Index n);
Tensor slice_cols(const Tensor& a, Index c0, Index n);
Tensor get_row(const Tensor& a, Index r);  // [n x d] -> [d]
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
// rows of `table` selected by index; backward scatter-adds.
Tensor gather_rows(const Tensor& table, const std::vector<Index>& indices);
// a [n x d] + b [d] broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& b);

// Normalization / probability.
// Stable softmax along `axis` (rank-1: axis ignored; rank-2: 0 = down
// columns, 1 = along rows). Rejects NaN/Inf input with NumericError.
Tensor softmax(const Tensor& a, int axis = -1);
Tensor log_softmax(const Tensor& a, int axis = -1);
// Per-last-axis standardization then affine. gamma/beta are rank-1 [d].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Scalar eps);
// Rows rescaled to unit Euclidean norm; zero rows raise DegenerateVectorError.
Tensor normalize_rows(const Tensor& a);
// u . v / (|u||v|), scalar output, differentiable w.r.t. both inputs.
Tensor cosine_similarity(const Tensor& u, const Tensor& v);

// Operator sugar for the elementwise ops.
inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, Scalar c) { return mul_scalar(a, c); }
inline Tensor operator*(Scalar c, const Tensor& a) { return mul_scalar(a, c); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|)
/// for a scalar-valued function of one tensor. The finite-difference side
/// never touches the autodiff path being checked.
Scalar grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  Scalar h = 1e-5);

}  // namespace pointprompt
