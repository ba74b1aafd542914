#pragma once

#include "pointprompt/encoders.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pointprompt {

enum class InsertPosition { kFront, kMiddle, kEnd };

InsertPosition parse_insert_position(const std::string& s);
const char* insert_position_name(InsertPosition p);

enum class InitMode { kRandom, kTemplate };

/// Learnable context vectors plus frozen class-name embeddings. The entire
/// tunable text-side state: only `context` ever trains.
class PromptLearner {
public:
    // mode == kTemplate copies the template's word embeddings into the first
    // rows of E and fills the remainder with Gaussian(0, 0.02^2) draws;
    // kRandom draws every row. Multi-word class names are mean-pooled into a
    // single frozen embedding.
    PromptLearner(Index context_len, InsertPosition position, InitMode mode,
                  const std::string& init_template, const std::vector<std::string>& class_names,
                  const Vocabulary& vocab, Rng& rng, Scalar init_std = 0.02);

    Index context_len() const { return context_len_; }
    Index class_count() const { return class_count_; }
    InsertPosition position() const { return position_; }

    // Content-block index the class embedding occupies: 0 (front),
    // floor(M/2) (middle) or M (end).
    Index class_slot() const;

    /// [E, c_j] wrapped in <start>/<end>, length M+3. Gradients flow into the
    /// context rows only.
    TokenSequence compose(Index class_index, const Vocabulary& vocab) const;

    /// S x D matrix of text features, one encoder pass per class.
    Tensor class_text_features(const TextEncoder& encoder) const;

    Parameter& context() { return context_; }
    const Parameter& context() const { return context_; }
    const Parameter& class_embeddings() const { return class_embeddings_; }

    void visit(const ParamVisitor& v);

private:
    Index context_len_;
    Index class_count_;
    InsertPosition position_;
    Parameter context_;           // [M x D], trainable
    Parameter class_embeddings_;  // [S x D], frozen
};

// Gaussian or template-prefixed context matrix, the initialization used by
// PromptLearner, exposed for direct inspection.
Tensor init_context(Index context_len, Index dim, InitMode mode,
                    const std::string& init_template, const Vocabulary& vocab, Rng& rng,
                    Scalar init_std = 0.02);

/// Nearest vocabulary word per context vector by Euclidean distance, specials
/// excluded, ties to the lowest index. Pairs of (word, distance).
std::vector<std::pair<std::string, Scalar>> nearest_words(const Tensor& context,
                                                          const Vocabulary& vocab);

}  // namespace pointprompt
