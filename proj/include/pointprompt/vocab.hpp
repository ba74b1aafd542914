#pragma once

#include "pointprompt/parameter.hpp"
#include "pointprompt/rng.hpp"
#include "pointprompt/tensor.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace pointprompt {

// Special tokens occupy fixed indices 0..3.
enum SpecialToken : Index {
    kStartToken = 0,
    kEndToken = 1,
    kPadToken = 2,
    kUnkToken = 3,
};

/// Fixed word-level vocabulary with an embedding table. Word -> index is a
/// bijection onto 0..V-1; the first four slots are the specials.
class Vocabulary {
public:
    // Builds the vocabulary from content words (specials prepended) with a
    // Gaussian(0, init_std^2) embedding table.
    Vocabulary(std::vector<std::string> words, Index dim, Rng& rng, Scalar init_std = 0.02);

    // The built-in default word list: template words, shape and ModelNet
    // category words, and general filler terms. ~200 entries.
    static std::vector<std::string> default_words();

    // One word per line; line number = index after the four specials.
    static std::vector<std::string> load_words(const std::string& path);

    Index size() const { return static_cast<Index>(words_.size()); }
    Index dim() const { return dim_; }
    const std::vector<std::string>& words() const { return words_; }
    const std::string& word(Index i) const { return words_[static_cast<std::size_t>(i)]; }
    // Index of a word, or kUnkToken when absent.
    Index lookup(const std::string& word) const;
    bool contains(const std::string& word) const;

    Parameter& embedding() { return embedding_; }
    const Parameter& embedding() const { return embedding_; }

    // Row of the embedding table as a graph-connected tensor.
    Tensor embed_rows(const std::vector<Index>& ids) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, Index> index_;
    Index dim_ = 0;
    Parameter embedding_;  // [V x dim]
};

// Lowercases, strips punctuation to spaces, splits on whitespace.
std::vector<std::string> split_words(const std::string& text);

/// Tokenized text: <start> content... <end> <pad>..., padded or truncated to
/// pad_to. Unknown words map to <unk>. Total function.
struct TokenIds {
    std::vector<Index> ids;
    std::vector<bool> mask;  // true for start/content/end, false for pads
    Index end_pos = 0;       // index of the <end> token
};

TokenIds tokenize(const std::string& text, const Vocabulary& vocab, Index pad_to);

}  // namespace pointprompt
