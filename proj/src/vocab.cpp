#include "pointprompt/vocab.hpp"

#include "pointprompt/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace pointprompt {

namespace {
const char* kSpecials[4] = {"<start>", "<end>", "<pad>", "<unk>"};
}

Vocabulary::Vocabulary(std::vector<std::string> words, Index dim, Rng& rng, Scalar init_std)
    : dim_(dim) {
    words_.reserve(words.size() + 4);
    for (const char* s : kSpecials) words_.emplace_back(s);
    for (auto& w : words) words_.push_back(std::move(w));
    for (std::size_t i = 0; i < words_.size(); ++i) {
        auto [it, inserted] = index_.emplace(words_[i], static_cast<Index>(i));
        if (!inserted) throw ArgumentError("vocabulary: duplicate word '" + words_[i] + "'");
    }
    embedding_ = Parameter("text.token_embedding",
                           Tensor::randn({size(), dim_}, rng, 0.0, init_std));
}

Index Vocabulary::lookup(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnkToken : it->second;
}

bool Vocabulary::contains(const std::string& word) const {
    return index_.find(word) != index_.end();
}

Tensor Vocabulary::embed_rows(const std::vector<Index>& ids) const {
    return gather_rows(embedding_.tensor, ids);
}

std::vector<std::string> Vocabulary::load_words(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("vocabulary: cannot open '" + path + "'");
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) words.push_back(line);
    }
    return words;
}

std::vector<std::string> Vocabulary::default_words() {
    return {
        // template words
        "a", "an", "the", "point", "cloud", "of", "model", "3d", "shape", "this", "that",
        "is", "it", "its", "kind", "type", "photo", "image", "depth", "render", "object",
        "thing", "item", "form", "figure", "body", "solid", "surface", "mesh", "scan",
        // procedural shape classes
        "sphere", "cube", "cylinder", "cone", "torus", "plane", "pyramid", "helix",
        // ModelNet category words
        "airplane", "bathtub", "bed", "bench", "bookshelf", "bottle", "bowl", "car",
        "chair", "cup", "curtain", "desk", "door", "dresser", "flower", "pot", "glass",
        "box", "guitar", "keyboard", "lamp", "laptop", "mantel", "monitor", "night",
        "stand", "person", "piano", "plant", "radio", "range", "hood", "sink", "sofa",
        "stairs", "stool", "table", "tent", "toilet", "tv", "vase", "wardrobe", "xbox",
        // geometric descriptors
        "round", "flat", "tall", "short", "long", "wide", "narrow", "thin", "thick",
        "hollow", "curved", "straight", "angular", "smooth", "rough", "pointed", "sharp",
        "blunt", "open", "closed", "small", "large", "big", "tiny", "huge", "regular",
        "irregular", "symmetric", "twisted", "spiral", "circular", "square", "triangular",
        "rectangular", "conical", "cylindrical", "spherical", "cubic", "ring", "tube",
        "disk", "slab", "block", "wedge", "shell", "frame", "grid", "coil", "loop",
        // material / context filler
        "wooden", "metal", "plastic", "stone", "ceramic", "fabric", "leather", "paper",
        "white", "black", "gray", "red", "green", "blue", "yellow", "brown", "simple",
        "complex", "common", "rare", "modern", "classic", "new", "old", "clean", "drawn",
        "made", "built", "designed", "used", "found", "seen", "placed", "set", "top",
        "bottom", "side", "front", "back", "left", "right", "center", "middle", "end",
        "edge", "corner", "base", "leg", "arm", "seat", "handle", "lid", "wheel", "wing",
        "neck", "head", "foot", "part", "piece", "whole", "half", "single", "double",
        "with", "without", "on", "in", "at", "from", "for", "and", "or", "to", "one",
        "two", "three", "four", "five", "six", "many", "few", "some", "all",
    };
}

std::vector<std::string> split_words(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            cleaned.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            cleaned.push_back(' ');
        }
    }
    std::vector<std::string> out;
    std::istringstream is(cleaned);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

TokenIds tokenize(const std::string& text, const Vocabulary& vocab, Index pad_to) {
    if (pad_to < 2) throw ArgumentError("tokenize: pad_to must allow <start> and <end>");
    std::vector<std::string> words = split_words(text);
    // Truncate content so <start> and <end> always fit.
    const std::size_t max_content = static_cast<std::size_t>(pad_to - 2);
    if (words.size() > max_content) words.resize(max_content);

    TokenIds out;
    out.ids.reserve(static_cast<std::size_t>(pad_to));
    out.ids.push_back(kStartToken);
    for (const auto& w : words) out.ids.push_back(vocab.lookup(w));
    out.ids.push_back(kEndToken);
    out.end_pos = static_cast<Index>(out.ids.size()) - 1;
    while (static_cast<Index>(out.ids.size()) < pad_to) out.ids.push_back(kPadToken);

    out.mask.assign(static_cast<std::size_t>(pad_to), false);
    for (Index i = 0; i <= out.end_pos; ++i) out.mask[static_cast<std::size_t>(i)] = true;
    return out;
}

}  // namespace pointprompt
