#include "pointprompt/adapters.hpp"

#include "pointprompt/errors.hpp"

namespace pointprompt {

AdapterKind parse_adapter_kind(const std::string& s) {
    if (s == "none") return AdapterKind::kNone;
    if (s == "ffn") return AdapterKind::kFfn;
    if (s == "ptb") return AdapterKind::kPtb;
    throw ArgumentError("unknown adapter kind '" + s + "' (none|ffn|ptb)");
}

const char* adapter_kind_name(AdapterKind k) {
    switch (k) {
        case AdapterKind::kNone: return "none";
        case AdapterKind::kFfn: return "ffn";
        case AdapterKind::kPtb: return "ptb";
    }
    return "?";
}

FfnAdapter::FfnAdapter(Index dim, Index mlp_ratio, Rng& rng, Scalar init_std,
                       GeluMode gelu_mode)
    : dim_(dim),
      gelu_mode_(gelu_mode),
      ln_("adapter.ln", dim),
      in_("adapter.in", dim, mlp_ratio * dim, rng, init_std),
      out_("adapter.out", mlp_ratio * dim, dim, rng, init_std) {}

Tensor FfnAdapter::forward(const Tensor& h) const {
    if (h.rank() != 1 || h.size() != dim_) {
        throw ShapeError("ffn adapter: expected [" + std::to_string(dim_) + "], got " +
                         h.shape_str());
    }
    Tensor x = reshape(h, {1, dim_});
    Tensor branch = out_.forward(gelu(in_.forward(ln_.forward(x)), gelu_mode_));
    return reshape(add(x, branch), {dim_});
}

void FfnAdapter::visit(const ParamVisitor& v) {
    ln_.visit(v);
    in_.visit(v);
    out_.visit(v);
}

PtbAdapter::PtbAdapter(Index dim, Index heads, Index mlp_ratio, Rng& rng, Scalar init_std,
                       GeluMode gelu_mode)
    : dim_(dim),
      block_("adapter.block", dim, heads, mlp_ratio, rng, init_std, gelu_mode) {}

Tensor PtbAdapter::forward(const Tensor& h) const {
    if (h.rank() != 1 || h.size() != dim_) {
        throw ShapeError("ptb adapter: expected [" + std::to_string(dim_) + "], got " +
                         h.shape_str());
    }
    Tensor x = reshape(h, {1, dim_});
    return reshape(block_.forward(x), {dim_});
}

Tensor PtbAdapter::forward_with_weights(const Tensor& h, std::vector<MatrixR>& weights) const {
    Tensor x = reshape(h, {1, dim_});
    return reshape(block_.forward(x, std::nullopt, &weights), {dim_});
}

void PtbAdapter::visit(const ParamVisitor& v) { block_.visit(v); }

PointAdapter PointAdapter::make(AdapterKind kind, Index dim, Index heads, Index mlp_ratio,
                                Rng& rng, Scalar init_std, GeluMode gelu_mode) {
    PointAdapter a;
    a.kind_ = kind;
    switch (kind) {
        case AdapterKind::kNone:
            break;
        case AdapterKind::kFfn:
            a.ffn_ = std::make_unique<FfnAdapter>(dim, mlp_ratio, rng, init_std, gelu_mode);
            break;
        case AdapterKind::kPtb:
            a.ptb_ = std::make_unique<PtbAdapter>(dim, heads, mlp_ratio, rng, init_std,
                                                  gelu_mode);
            break;
    }
    return a;
}

Tensor PointAdapter::forward(const Tensor& h) const {
    switch (kind_) {
        case AdapterKind::kNone: return h;
        case AdapterKind::kFfn: return ffn_->forward(h);
        case AdapterKind::kPtb: return ptb_->forward(h);
    }
    return h;
}

void PointAdapter::visit(const ParamVisitor& v) {
    if (ffn_) ffn_->visit(v);
    if (ptb_) ptb_->visit(v);
}

Index adapter_param_count(AdapterKind kind, Index dim, Index heads, Index mlp_ratio) {
    switch (kind) {
        case AdapterKind::kNone:
            return 0;
        case AdapterKind::kFfn:
            // input LN + two linear layers with bias.
            return 2 * dim + (dim * mlp_ratio * dim + mlp_ratio * dim) +
                   (mlp_ratio * dim * dim + dim);
        case AdapterKind::kPtb: {
            if (heads <= 0 || dim % heads != 0) {
                throw ConfigError("adapter_param_count: width not divisible by heads");
            }
            const Index qkv = dim * 3 * dim + 3 * dim;
            const Index attn_out = dim * dim + dim;
            const Index mlp = (dim * mlp_ratio * dim + mlp_ratio * dim) +
                              (mlp_ratio * dim * dim + dim);
            const Index norms = 2 * (2 * dim);
            return qkv + attn_out + mlp + norms;
        }
    }
    return 0;
}

}  // namespace pointprompt
