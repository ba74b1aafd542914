#pragma once

#include "pointprompt/parameter.hpp"
#include "pointprompt/rng.hpp"
#include "pointprompt/tensor.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pointprompt {

constexpr Scalar kLayerNormEps = 1e-5;

/// Dense layer y = x W + b over row-major token matrices.
struct Linear {
    Parameter weight;  // [in x out]
    Parameter bias;    // [out]

    Linear() = default;
    Linear(const std::string& name, Index in, Index out, Rng& rng, Scalar init_std);

    Tensor forward(const Tensor& x) const;  // x: [n x in]
    void visit(const ParamVisitor& v);
};

struct LayerNorm {
    Parameter gamma;  // init 1
    Parameter beta;   // init 0

    LayerNorm() = default;
    LayerNorm(const std::string& name, Index dim);

    Tensor forward(const Tensor& x) const;
    void visit(const ParamVisitor& v);
};

/// Multi-head self-attention over one token matrix [L x dim].
/// `bias` is an optional additive [L x L] mask (0 for visible keys, a large
/// negative constant for masked ones).
struct MultiHeadAttention {
    Index dim = 0;
    Index heads = 0;
    Linear qkv;   // [dim x 3*dim]
    Linear out;   // [dim x dim]

    MultiHeadAttention() = default;
    MultiHeadAttention(const std::string& name, Index dim, Index heads, Rng& rng,
                       Scalar init_std);

    // attn_weights, when given, receives the post-softmax weights per head
    // (detached values, for inspection/tests).
    Tensor forward(const Tensor& x, const std::optional<Tensor>& bias = std::nullopt,
                   std::vector<MatrixR>* attn_weights = nullptr) const;
    void visit(const ParamVisitor& v);
};

/// Pre-layer-norm transformer block: MSA and a 2-layer MLP, each with a
/// residual connection.
struct TransformerBlock {
    LayerNorm ln1;
    MultiHeadAttention attn;
    LayerNorm ln2;
    Linear mlp_in;   // [dim x mlp_ratio*dim]
    Linear mlp_out;  // [mlp_ratio*dim x dim]
    GeluMode gelu_mode = GeluMode::kTanh;

    TransformerBlock() = default;
    TransformerBlock(const std::string& name, Index dim, Index heads, Index mlp_ratio,
                     Rng& rng, Scalar init_std, GeluMode gelu_mode);

    Tensor forward(const Tensor& x, const std::optional<Tensor>& bias = std::nullopt,
                   std::vector<MatrixR>* attn_weights = nullptr) const;
    void visit(const ParamVisitor& v);
};

// Additive attention bias from a key-visibility mask: 0 where visible,
// -1e30 where masked. Constant tensor (no gradient).
Tensor attention_bias(const std::vector<bool>& key_mask);

}  // namespace pointprompt
