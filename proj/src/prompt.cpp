#include "pointprompt/prompt.hpp"

#include "pointprompt/errors.hpp"

#include <cmath>
#include <limits>

namespace pointprompt {

InsertPosition parse_insert_position(const std::string& s) {
    if (s == "front") return InsertPosition::kFront;
    if (s == "middle") return InsertPosition::kMiddle;
    if (s == "end") return InsertPosition::kEnd;
    throw ArgumentError("unknown insert position '" + s + "' (front|middle|end)");
}

const char* insert_position_name(InsertPosition p) {
    switch (p) {
        case InsertPosition::kFront: return "front";
        case InsertPosition::kMiddle: return "middle";
        case InsertPosition::kEnd: return "end";
    }
    return "?";
}

Tensor init_context(Index context_len, Index dim, InitMode mode,
                    const std::string& init_template, const Vocabulary& vocab, Rng& rng,
                    Scalar init_std) {
    if (context_len < 1) throw ArgumentError("init_context: context length must be >= 1");
    if (mode == InitMode::kRandom) {
        return Tensor::randn({context_len, dim}, rng, 0.0, init_std);
    }
    std::vector<std::string> words = split_words(init_template);
    const Index t = static_cast<Index>(words.size());
    if (t > context_len) {
        throw ArgumentError("init_context: template has " + std::to_string(t) +
                            " tokens but context length is " + std::to_string(context_len));
    }
    std::vector<Index> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(vocab.lookup(w));
    ArrayX values(context_len * dim);
    if (t > 0) {
        Tensor prefix = vocab.embed_rows(ids);
        values.segment(0, t * dim) = prefix.values();
    }
    for (Index i = t * dim; i < values.size(); ++i) values[i] = rng.gaussian(0.0, init_std);
    return Tensor::from_values({context_len, dim}, std::move(values));
}

namespace {

Tensor class_embedding_matrix(const std::vector<std::string>& class_names,
                              const Vocabulary& vocab) {
    const Index dim = vocab.dim();
    ArrayX values(static_cast<Index>(class_names.size()) * dim);
    for (std::size_t j = 0; j < class_names.size(); ++j) {
        std::vector<std::string> words = split_words(class_names[j]);
        if (words.empty()) throw ArgumentError("class name '" + class_names[j] + "' is empty");
        std::vector<Index> ids;
        for (const auto& w : words) ids.push_back(vocab.lookup(w));
        Tensor rows = vocab.embed_rows(ids).detach();
        ArrayX mean = ArrayX::Zero(dim);
        for (std::size_t r = 0; r < ids.size(); ++r)
            mean += rows.values().segment(static_cast<Index>(r) * dim, dim);
        mean /= static_cast<Scalar>(ids.size());
        values.segment(static_cast<Index>(j) * dim, dim) = mean;
    }
    return Tensor::from_values({static_cast<Index>(class_names.size()), dim},
                               std::move(values));
}

}  // namespace

PromptLearner::PromptLearner(Index context_len, InsertPosition position, InitMode mode,
                             const std::string& init_template,
                             const std::vector<std::string>& class_names,
                             const Vocabulary& vocab, Rng& rng, Scalar init_std)
    : context_len_(context_len),
      class_count_(static_cast<Index>(class_names.size())),
      position_(position) {
    context_ = Parameter(
        "prompt.context",
        init_context(context_len, vocab.dim(), mode, init_template, vocab, rng, init_std),
        /*trainable=*/true);
    class_embeddings_ = Parameter("prompt.class_embeddings",
                                  class_embedding_matrix(class_names, vocab),
                                  /*trainable=*/false);
}

Index PromptLearner::class_slot() const {
    switch (position_) {
        case InsertPosition::kFront: return 0;
        case InsertPosition::kMiddle: return context_len_ / 2;
        case InsertPosition::kEnd: return context_len_;
    }
    return context_len_;
}

TokenSequence PromptLearner::compose(Index class_index, const Vocabulary& vocab) const {
    if (class_index < 0 || class_index >= class_count_) {
        throw ArgumentError("compose_prompt: class index out of range");
    }
    const Index slot = class_slot();
    Tensor cls_row = slice_rows(class_embeddings_.tensor, class_index, 1);
    Tensor start_row = vocab.embed_rows({kStartToken});
    Tensor end_row = vocab.embed_rows({kEndToken});

    std::vector<Tensor> rows;
    rows.reserve(4 + 1);
    rows.push_back(start_row);
    if (slot == 0) {
        rows.push_back(cls_row);
        rows.push_back(context_.tensor);
    } else if (slot == context_len_) {
        rows.push_back(context_.tensor);
        rows.push_back(cls_row);
    } else {
        rows.push_back(slice_rows(context_.tensor, 0, slot));
        rows.push_back(cls_row);
        rows.push_back(slice_rows(context_.tensor, slot, context_len_ - slot));
    }
    rows.push_back(end_row);

    TokenSequence seq;
    seq.embeddings = concat_rows(rows);  // [(M+3) x D]
    const Index total = context_len_ + 3;
    seq.mask.assign(static_cast<std::size_t>(total), true);
    seq.end_pos = total - 1;
    seq.class_pos = slot;
    return seq;
}

Tensor PromptLearner::class_text_features(const TextEncoder& encoder) const {
    std::vector<Tensor> rows;
    rows.reserve(static_cast<std::size_t>(class_count_));
    const Index dim = encoder.dim();
    for (Index j = 0; j < class_count_; ++j) {
        Tensor feat = encoder.encode(compose(j, encoder.vocab()));
        rows.push_back(reshape(feat, {1, dim}));
    }
    return concat_rows(rows);
}

void PromptLearner::visit(const ParamVisitor& v) {
    v(context_);
    v(class_embeddings_);
}

std::vector<std::pair<std::string, Scalar>> nearest_words(const Tensor& context,
                                                          const Vocabulary& vocab) {
    const Index m = context.rows();
    const Index dim = context.cols();
    if (dim != vocab.dim()) throw ShapeError("nearest_words: dimension mismatch with vocabulary");
    const ArrayX& table = vocab.embedding().tensor.values();
    std::vector<std::pair<std::string, Scalar>> out;
    out.reserve(static_cast<std::size_t>(m));
    for (Index r = 0; r < m; ++r) {
        Scalar best = std::numeric_limits<Scalar>::infinity();
        Index best_idx = -1;
        for (Index w = 4; w < vocab.size(); ++w) {  // specials excluded
            const Scalar d2 =
                (table.segment(w * dim, dim) - context.values().segment(r * dim, dim))
                    .square()
                    .sum();
            if (d2 < best) {  // strict < keeps the lowest index on ties
                best = d2;
                best_idx = w;
            }
        }
        out.emplace_back(vocab.word(best_idx), std::sqrt(best));
    }
    return out;
}

}  // namespace pointprompt
