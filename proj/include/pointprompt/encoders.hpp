#pragma once

#include "pointprompt/geometry.hpp"
#include "pointprompt/nn.hpp"
#include "pointprompt/vocab.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pointprompt {

/// Embedded token sequence ready for the text encoder. `embeddings` may be
/// graph-connected (prompt composition feeds learnable rows through here).
struct TokenSequence {
    Tensor embeddings;        // [L x D]
    std::vector<bool> mask;   // content mask; pads are false
    Index end_pos = 0;        // pooling position (<end>)
    Index class_pos = -1;     // content-block index of the class embedding, -1 if n/a
};

struct EncoderConfig {
    Index shared_dim = 512;   // D: shared embedding space and text width
    Index point_dim = 384;    // D_point
    Index image_dim = 256;
    Index text_heads = 8;
    Index point_heads = 6;
    Index image_heads = 4;
    Index text_blocks = 2;
    Index point_blocks = 2;
    Index image_blocks = 2;
    Index mlp_ratio = 4;
    Index max_seq = 80;       // text position capacity
    Index patches = 16;       // G
    Index neighbors = 8;      // k
    Index image_size = 32;    // H = W
    Index image_patch = 8;    // non-overlapping patch side
    Scalar init_std = 0.02;
    GeluMode gelu_mode = GeluMode::kTanh;
};

/// Transformer over embedded word tokens, pooled at <end>, projected to D.
class TextEncoder {
public:
    TextEncoder(const EncoderConfig& cfg, std::vector<std::string> vocab_words, Rng& rng);

    Tensor encode(const TokenSequence& seq) const;
    // Convenience: tokenize + embed + encode a raw string.
    TokenSequence embed_text(const std::string& text, Index pad_to) const;

    const Vocabulary& vocab() const { return vocab_; }
    Index dim() const { return cfg_.shared_dim; }
    Index max_seq() const { return cfg_.max_seq; }
    void visit(const ParamVisitor& v);

private:
    EncoderConfig cfg_;
    Vocabulary vocab_;
    Parameter pos_embedding_;  // [max_seq x D]
    std::vector<TransformerBlock> blocks_;
    LayerNorm final_ln_;
    Parameter projection_;  // [D x D]
};

/// Depth-image encoder: non-overlapping patch flattening, linear embedding,
/// transformer blocks, mean pool, projection to D.
class ImageEncoder {
public:
    ImageEncoder(const EncoderConfig& cfg, Rng& rng);

    Tensor encode(const MatrixR& image) const;  // [H x W] -> [D]
    Index dim() const { return cfg_.shared_dim; }
    void visit(const ParamVisitor& v);

private:
    EncoderConfig cfg_;
    Index tokens_ = 0;
    Linear patch_embed_;       // [patch^2 x image_dim]
    Parameter pos_embedding_;  // [tokens x image_dim]
    std::vector<TransformerBlock> blocks_;
    LayerNorm final_ln_;
    Parameter projection_;  // [image_dim x D]
};

// Farthest point sampling. First pick is `seed_index`; each next pick
// maximizes the minimum distance to the chosen set; ties break to the lowest
// index. Returns G indices into `points`.
std::vector<Index> fps(const MatrixR& points, Index G, Index seed_index = 0);

// For each center, the k nearest points by Euclidean distance (ties by lowest
// index), re-centered on the center coordinate. Returns G matrices [k x 3].
std::vector<MatrixR> knn_group(const MatrixR& points, const std::vector<Index>& centers,
                               Index k);

/// Patch-transformer point encoder: canonical sort, fps + knn patchification,
/// per-patch mini network, transformer blocks over patch tokens with a class
/// token, class-token pooling. `encode_pooled` stops at D_point (the adapter
/// attachment point); `project` maps into the shared space.
class PointEncoder {
public:
    PointEncoder(const EncoderConfig& cfg, Rng& rng);

    Tensor encode_pooled(const PointCloud& pc) const;  // [D_point]
    Tensor project(const Tensor& pooled) const;        // [D_point] -> [D]
    Tensor encode(const PointCloud& pc) const { return project(encode_pooled(pc)); }

    Index pooled_dim() const { return cfg_.point_dim; }
    Index dim() const { return cfg_.shared_dim; }
    void visit(const ParamVisitor& v);

private:
    EncoderConfig cfg_;
    Linear patch_in_;          // [3 x 128]
    Linear patch_out_;         // [128 x D_point]
    Linear center_embed_;      // [3 x D_point] positional encoding of patch centers
    Parameter class_token_;    // [1 x D_point]
    Parameter class_pos_;      // [1 x D_point]
    std::vector<TransformerBlock> blocks_;
    LayerNorm final_ln_;
    Parameter projection_;  // [D_point x D]
};

/// The three frozen backbones behind one handle plus the freezing switch.
struct EncoderStack {
    EncoderConfig config;
    std::unique_ptr<TextEncoder> text;
    std::unique_ptr<ImageEncoder> image;
    std::unique_ptr<PointEncoder> point;

    EncoderStack(const EncoderConfig& cfg, std::vector<std::string> vocab_words, Rng& rng);

    void visit(const ParamVisitor& v);
    void visit_text_image(const ParamVisitor& v);
    void visit_point(const ParamVisitor& v);
};

// Sets the trainable flag on every contained Parameter. Affects optimizer
// visibility only, never forward math.
void set_frozen(EncoderStack& stack, bool frozen);

}  // namespace pointprompt
