#include "pointprompt/encoders.hpp"

#include "pointprompt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pointprompt {

// --- text ---------------------------------------------------------------------

TextEncoder::TextEncoder(const EncoderConfig& cfg, std::vector<std::string> vocab_words,
                         Rng& rng)
    : cfg_(cfg), vocab_(std::move(vocab_words), cfg.shared_dim, rng, cfg.init_std) {
    pos_embedding_ = Parameter("text.pos_embedding",
                               Tensor::randn({cfg.max_seq, cfg.shared_dim}, rng, 0.0,
                                             cfg.init_std));
    blocks_.reserve(static_cast<std::size_t>(cfg.text_blocks));
    for (Index b = 0; b < cfg.text_blocks; ++b) {
        blocks_.emplace_back("text.block" + std::to_string(b), cfg.shared_dim, cfg.text_heads,
                             cfg.mlp_ratio, rng, cfg.init_std, cfg.gelu_mode);
    }
    final_ln_ = LayerNorm("text.final_ln", cfg.shared_dim);
    projection_ = Parameter("text.projection",
                            Tensor::randn({cfg.shared_dim, cfg.shared_dim}, rng, 0.0,
                                          cfg.init_std));
}

Tensor TextEncoder::encode(const TokenSequence& seq) const {
    const Index L = seq.embeddings.rows();
    if (L > cfg_.max_seq) {
        throw ShapeError("text_encode: sequence length " + std::to_string(L) +
                         " exceeds position capacity " + std::to_string(cfg_.max_seq));
    }
    if (static_cast<Index>(seq.mask.size()) != L) {
        throw ShapeError("text_encode: mask length does not match sequence");
    }
    if (seq.end_pos < 0 || seq.end_pos >= L) {
        throw ShapeError("text_encode: pooling position out of range");
    }
    Tensor x = add(seq.embeddings, slice_rows(pos_embedding_.tensor, 0, L));
    Tensor bias = attention_bias(seq.mask);
    for (const auto& block : blocks_) x = block.forward(x, bias);
    x = final_ln_.forward(x);
    Tensor pooled = get_row(x, seq.end_pos);  // [D]
    Tensor projected = matmul(reshape(pooled, {1, cfg_.shared_dim}), projection_.tensor);
    return reshape(projected, {cfg_.shared_dim});
}

TokenSequence TextEncoder::embed_text(const std::string& text, Index pad_to) const {
    TokenIds toks = tokenize(text, vocab_, pad_to);
    TokenSequence seq;
    seq.embeddings = vocab_.embed_rows(toks.ids);
    seq.mask = toks.mask;
    seq.end_pos = toks.end_pos;
    seq.class_pos = -1;
    return seq;
}

void TextEncoder::visit(const ParamVisitor& v) {
    v(vocab_.embedding());
    v(pos_embedding_);
    for (auto& b : blocks_) b.visit(v);
    final_ln_.visit(v);
    v(projection_);
}

// --- image --------------------------------------------------------------------

ImageEncoder::ImageEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    if (cfg.image_size % cfg.image_patch != 0) {
        throw ConfigError("image encoder: image size not divisible by patch size");
    }
    const Index per_side = cfg.image_size / cfg.image_patch;
    tokens_ = per_side * per_side;
    const Index patch_len = cfg.image_patch * cfg.image_patch;
    patch_embed_ = Linear("image.patch_embed", patch_len, cfg.image_dim, rng, cfg.init_std);
    pos_embedding_ = Parameter("image.pos_embedding",
                               Tensor::randn({tokens_, cfg.image_dim}, rng, 0.0, cfg.init_std));
    blocks_.reserve(static_cast<std::size_t>(cfg.image_blocks));
    for (Index b = 0; b < cfg.image_blocks; ++b) {
        blocks_.emplace_back("image.block" + std::to_string(b), cfg.image_dim, cfg.image_heads,
                             cfg.mlp_ratio, rng, cfg.init_std, cfg.gelu_mode);
    }
    final_ln_ = LayerNorm("image.final_ln", cfg.image_dim);
    projection_ = Parameter("image.projection",
                            Tensor::randn({cfg.image_dim, cfg.shared_dim}, rng, 0.0,
                                          cfg.init_std));
}

Tensor ImageEncoder::encode(const MatrixR& image) const {
    if (image.rows() != cfg_.image_size || image.cols() != cfg_.image_size) {
        throw ShapeError("image_encode: expected " + std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_size) + " image, got " +
                         std::to_string(image.rows()) + "x" + std::to_string(image.cols()));
    }
    const Index p = cfg_.image_patch;
    const Index per_side = cfg_.image_size / p;
    ArrayX flat(tokens_ * p * p);
    Index row = 0;
    for (Index by = 0; by < per_side; ++by) {
        for (Index bx = 0; bx < per_side; ++bx) {
            for (Index y = 0; y < p; ++y)
                for (Index x = 0; x < p; ++x)
                    flat[row * p * p + y * p + x] = image(by * p + y, bx * p + x);
            ++row;
        }
    }
    Tensor patches = Tensor::from_values({tokens_, p * p}, std::move(flat));
    Tensor x = add(patch_embed_.forward(patches), pos_embedding_.tensor);
    for (const auto& block : blocks_) x = block.forward(x);
    x = final_ln_.forward(x);
    Tensor pooled = mean_over_rows(x);
    Tensor projected = matmul(reshape(pooled, {1, cfg_.image_dim}), projection_.tensor);
    return reshape(projected, {cfg_.shared_dim});
}

void ImageEncoder::visit(const ParamVisitor& v) {
    patch_embed_.visit(v);
    v(pos_embedding_);
    for (auto& b : blocks_) b.visit(v);
    final_ln_.visit(v);
    v(projection_);
}

// --- point sampling -------------------------------------------------------------

std::vector<Index> fps(const MatrixR& points, Index G, Index seed_index) {
    const Index n = points.rows();
    if (G < 1 || G > n) {
        throw ArgumentError("fps: requested " + std::to_string(G) + " centers from " +
                            std::to_string(n) + " points");
    }
    if (seed_index < 0 || seed_index >= n) throw ArgumentError("fps: seed index out of range");
    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(G));
    picked.push_back(seed_index);
    VectorX min_dist(n);
    for (Index i = 0; i < n; ++i)
        min_dist[i] = (points.row(i) - points.row(seed_index)).norm();
    while (static_cast<Index>(picked.size()) < G) {
        Index best = 0;
        for (Index i = 1; i < n; ++i)
            if (min_dist[i] > min_dist[best]) best = i;  // strict > ties to lowest index
        picked.push_back(best);
        for (Index i = 0; i < n; ++i)
            min_dist[i] = std::min(min_dist[i], (points.row(i) - points.row(best)).norm());
    }
    return picked;
}

std::vector<MatrixR> knn_group(const MatrixR& points, const std::vector<Index>& centers,
                               Index k) {
    const Index n = points.rows();
    if (k < 1 || k > n) {
        throw ArgumentError("knn_group: requested " + std::to_string(k) + " neighbors from " +
                            std::to_string(n) + " points");
    }
    std::vector<MatrixR> patches;
    patches.reserve(centers.size());
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index c : centers) {
        if (c < 0 || c >= n) throw ArgumentError("knn_group: center index out of range");
        std::iota(order.begin(), order.end(), Index{0});
        const Eigen::RowVector3d center = points.row(c);
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Index a, Index b) {
            const Scalar da = (points.row(a) - center).squaredNorm();
            const Scalar db = (points.row(b) - center).squaredNorm();
            if (da != db) return da < db;
            return a < b;
        });
        MatrixR patch(k, 3);
        for (Index i = 0; i < k; ++i) patch.row(i) = points.row(order[static_cast<std::size_t>(i)]) - center;
        patches.push_back(std::move(patch));
    }
    return patches;
}

// --- point encoder ---------------------------------------------------------------

PointEncoder::PointEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
    patch_in_ = Linear("point.patch_embed.in", 3, 128, rng, cfg.init_std);
    patch_out_ = Linear("point.patch_embed.out", 128, cfg.point_dim, rng, cfg.init_std);
    center_embed_ = Linear("point.center_embed", 3, cfg.point_dim, rng, cfg.init_std);
    class_token_ = Parameter("point.class_token",
                             Tensor::randn({1, cfg.point_dim}, rng, 0.0, cfg.init_std));
    class_pos_ = Parameter("point.class_pos",
                           Tensor::randn({1, cfg.point_dim}, rng, 0.0, cfg.init_std));
    blocks_.reserve(static_cast<std::size_t>(cfg.point_blocks));
    for (Index b = 0; b < cfg.point_blocks; ++b) {
        blocks_.emplace_back("point.block" + std::to_string(b), cfg.point_dim, cfg.point_heads,
                             cfg.mlp_ratio, rng, cfg.init_std, cfg.gelu_mode);
    }
    final_ln_ = LayerNorm("point.final_ln", cfg.point_dim);
    projection_ = Parameter("point.projection",
                            Tensor::randn({cfg.point_dim, cfg.shared_dim}, rng, 0.0,
                                          cfg.init_std));
}

Tensor PointEncoder::encode_pooled(const PointCloud& pc) const {
    const Index n = pc.count();
    if (n < cfg_.patches || n < cfg_.neighbors) {
        throw ArgumentError("point_encode: cloud of " + std::to_string(n) +
                            " points is smaller than patch/neighbor configuration");
    }
    // Canonicalize so encoding is invariant to input point order.
    PointCloud sorted = pc;
    canonical_sort(sorted);

    std::vector<Index> centers = fps(sorted.points, cfg_.patches, 0);
    std::vector<MatrixR> patches = knn_group(sorted.points, centers, cfg_.neighbors);

    // Per-patch mini network: pointwise MLP then max pool over the patch.
    std::vector<Tensor> tokens;
    tokens.reserve(patches.size() + 1);
    MatrixR center_coords(cfg_.patches, 3);
    for (Index g = 0; g < cfg_.patches; ++g)
        center_coords.row(g) = sorted.points.row(centers[static_cast<std::size_t>(g)]);

    Tensor cls = add(class_token_.tensor, class_pos_.tensor);
    tokens.push_back(cls);
    Tensor center_pos = center_embed_.forward(Tensor::from_matrix(center_coords));  // [G x D_p]
    for (Index g = 0; g < cfg_.patches; ++g) {
        Tensor local = Tensor::from_matrix(patches[static_cast<std::size_t>(g)]);  // [k x 3]
        Tensor feat = patch_out_.forward(gelu(patch_in_.forward(local), cfg_.gelu_mode));
        Tensor pooled = max_over_rows(feat);  // [D_point]
        Tensor token = add(reshape(pooled, {1, cfg_.point_dim}), slice_rows(center_pos, g, 1));
        tokens.push_back(token);
    }
    Tensor x = concat_rows(tokens);  // [(G+1) x D_point]
    for (const auto& block : blocks_) x = block.forward(x);
    x = final_ln_.forward(x);
    return get_row(x, 0);  // class token
}

Tensor PointEncoder::project(const Tensor& pooled) const {
    return reshape(matmul(reshape(pooled, {1, cfg_.point_dim}), projection_.tensor),
                   {cfg_.shared_dim});
}

void PointEncoder::visit(const ParamVisitor& v) {
    patch_in_.visit(v);
    patch_out_.visit(v);
    center_embed_.visit(v);
    v(class_token_);
    v(class_pos_);
    for (auto& b : blocks_) b.visit(v);
    final_ln_.visit(v);
    v(projection_);
}

// --- stack -----------------------------------------------------------------------

EncoderStack::EncoderStack(const EncoderConfig& cfg, std::vector<std::string> vocab_words,
                           Rng& rng)
    : config(cfg) {
    text = std::make_unique<TextEncoder>(cfg, std::move(vocab_words), rng);
    image = std::make_unique<ImageEncoder>(cfg, rng);
    point = std::make_unique<PointEncoder>(cfg, rng);
    // Backbones start frozen; training loops unfreeze exactly what they own.
    set_frozen(*this, true);
}

void EncoderStack::visit(const ParamVisitor& v) {
    text->visit(v);
    image->visit(v);
    point->visit(v);
}

void EncoderStack::visit_text_image(const ParamVisitor& v) {
    text->visit(v);
    image->visit(v);
}

void EncoderStack::visit_point(const ParamVisitor& v) { point->visit(v); }

void set_frozen(EncoderStack& stack, bool frozen) {
    stack.visit([frozen](Parameter& p) { p.set_trainable(!frozen); });
}

}  // namespace pointprompt
