#include "pointprompt/nn.hpp"

#include "pointprompt/errors.hpp"

#include <cmath>

namespace pointprompt {

Linear::Linear(const std::string& name, Index in, Index out, Rng& rng, Scalar init_std)
    : weight(name + ".w", Tensor::randn({in, out}, rng, 0.0, init_std)),
      bias(name + ".b", Tensor::zeros({out})) {}

Tensor Linear::forward(const Tensor& x) const {
    return add_rowvec(matmul(x, weight.tensor), bias.tensor);
}

void Linear::visit(const ParamVisitor& v) {
    v(weight);
    v(bias);
}

LayerNorm::LayerNorm(const std::string& name, Index dim)
    : gamma(name + ".gamma", Tensor::constant({dim}, 1.0)),
      beta(name + ".beta", Tensor::zeros({dim})) {}

Tensor LayerNorm::forward(const Tensor& x) const {
    return layer_norm(x, gamma.tensor, beta.tensor, kLayerNormEps);
}

void LayerNorm::visit(const ParamVisitor& v) {
    v(gamma);
    v(beta);
}

MultiHeadAttention::MultiHeadAttention(const std::string& name, Index dim, Index heads,
                                       Rng& rng, Scalar init_std)
    : dim(dim),
      heads(heads),
      qkv(name + ".qkv", dim, 3 * dim, rng, init_std),
      out(name + ".out", dim, dim, rng, init_std) {
    if (heads <= 0 || dim % heads != 0) {
        throw ConfigError("attention: width " + std::to_string(dim) +
                          " not divisible by head count " + std::to_string(heads));
    }
}

Tensor MultiHeadAttention::forward(const Tensor& x, const std::optional<Tensor>& bias,
                                   std::vector<MatrixR>* attn_weights) const {
    const Index head_dim = dim / heads;
    const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(head_dim));

    Tensor proj = qkv.forward(x);  // [L x 3*dim]
    Tensor q = slice_cols(proj, 0, dim);
    Tensor k = slice_cols(proj, dim, dim);
    Tensor v = slice_cols(proj, 2 * dim, dim);

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
        Tensor qh = slice_cols(q, h * head_dim, head_dim);
        Tensor kh = slice_cols(k, h * head_dim, head_dim);
        Tensor vh = slice_cols(v, h * head_dim, head_dim);
        Tensor scores = mul_scalar(matmul_nt(qh, kh), scale);
        if (bias) scores = add(scores, *bias);
        Tensor weights = softmax(scores, 1);
        if (attn_weights) {
            attn_weights->push_back(MatrixR(weights.matrix()));
        }
        head_outputs.push_back(matmul(weights, vh));
    }
    Tensor merged = concat_cols(head_outputs);
    return out.forward(merged);
}

void MultiHeadAttention::visit(const ParamVisitor& v) {
    qkv.visit(v);
    out.visit(v);
}

TransformerBlock::TransformerBlock(const std::string& name, Index dim, Index heads,
                                   Index mlp_ratio, Rng& rng, Scalar init_std,
                                   GeluMode gelu_mode)
    : ln1(name + ".ln1", dim),
      attn(name + ".attn", dim, heads, rng, init_std),
      ln2(name + ".ln2", dim),
      mlp_in(name + ".mlp_in", dim, mlp_ratio * dim, rng, init_std),
      mlp_out(name + ".mlp_out", mlp_ratio * dim, dim, rng, init_std),
      gelu_mode(gelu_mode) {}

Tensor TransformerBlock::forward(const Tensor& x, const std::optional<Tensor>& bias,
                                 std::vector<MatrixR>* attn_weights) const {
    Tensor h = add(x, attn.forward(ln1.forward(x), bias, attn_weights));
    Tensor m = mlp_out.forward(gelu(mlp_in.forward(ln2.forward(h)), gelu_mode));
    return add(h, m);
}

void TransformerBlock::visit(const ParamVisitor& v) {
    ln1.visit(v);
    attn.visit(v);
    ln2.visit(v);
    mlp_in.visit(v);
    mlp_out.visit(v);
}

Tensor attention_bias(const std::vector<bool>& key_mask) {
    const Index n = static_cast<Index>(key_mask.size());
    ArrayX v(n * n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            v[i * n + j] = key_mask[static_cast<std::size_t>(j)] ? 0.0 : -1e30;
    return Tensor::from_values({n, n}, std::move(v));
}

}  // namespace pointprompt
