#pragma once

#include "pointprompt/nn.hpp"

#include <memory>
#include <string>

namespace pointprompt {

enum class AdapterKind { kNone, kFfn, kPtb };

AdapterKind parse_adapter_kind(const std::string& s);
const char* adapter_kind_name(AdapterKind k);

/// Residual two-layer MLP on the pooled point feature:
/// h + W2 gelu(W1 layernorm(h) + b1) + b2. Dimension preserving.
class FfnAdapter {
public:
    FfnAdapter(Index dim, Index mlp_ratio, Rng& rng, Scalar init_std = 0.02,
               GeluMode gelu_mode = GeluMode::kTanh);

    Tensor forward(const Tensor& h) const;  // [dim] -> [dim]
    Index dim() const { return dim_; }
    void visit(const ParamVisitor& v);

private:
    Index dim_;
    GeluMode gelu_mode_;
    LayerNorm ln_;
    Linear in_;
    Linear out_;
};

/// One transformer block applied to the pooled point feature treated as a
/// single-token sequence. With one token the attention weights are exactly 1.
class PtbAdapter {
public:
    PtbAdapter(Index dim, Index heads, Index mlp_ratio, Rng& rng, Scalar init_std = 0.02,
               GeluMode gelu_mode = GeluMode::kTanh);

    Tensor forward(const Tensor& h) const;  // [dim] -> [dim]
    // Post-softmax attention weights from the last forward of `x`, for tests.
    Tensor forward_with_weights(const Tensor& h, std::vector<MatrixR>& weights) const;
    Index dim() const { return dim_; }
    void visit(const ParamVisitor& v);

private:
    Index dim_;
    TransformerBlock block_;
};

/// Either adapter variant (or none) behind one handle.
class PointAdapter {
public:
    static PointAdapter make(AdapterKind kind, Index dim, Index heads, Index mlp_ratio,
                             Rng& rng, Scalar init_std = 0.02,
                             GeluMode gelu_mode = GeluMode::kTanh);

    AdapterKind kind() const { return kind_; }
    // Identity for kNone.
    Tensor forward(const Tensor& h) const;
    void visit(const ParamVisitor& v);

private:
    AdapterKind kind_ = AdapterKind::kNone;
    std::unique_ptr<FfnAdapter> ffn_;
    std::unique_ptr<PtbAdapter> ptb_;
};

/// Exact count of trainable scalars for an adapter configuration, including
/// biases and layer-norm affines. Closed-form; the independent cross-check
/// for the optimizer's enumeration.
Index adapter_param_count(AdapterKind kind, Index dim, Index heads, Index mlp_ratio = 4);

}  // namespace pointprompt
