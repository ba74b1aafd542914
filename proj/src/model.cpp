#include "pointprompt/model.hpp"

#include "pointprompt/dataset.hpp"
#include "pointprompt/errors.hpp"

#include <algorithm>

namespace pointprompt {

namespace {

EncoderConfig encoder_config(const RunConfig& cfg) {
    EncoderConfig e;
    e.shared_dim = cfg.shared_dim;
    e.point_dim = cfg.point_dim;
    e.image_dim = cfg.image_dim;
    e.text_heads = cfg.text_heads;
    e.point_heads = cfg.point_heads;
    e.image_heads = cfg.image_heads;
    e.text_blocks = cfg.text_blocks;
    e.point_blocks = cfg.point_blocks;
    e.image_blocks = cfg.image_blocks;
    e.mlp_ratio = cfg.mlp_ratio;
    e.max_seq = cfg.max_seq;
    e.patches = cfg.patches;
    e.neighbors = cfg.neighbors;
    e.image_size = cfg.image_size;
    e.image_patch = cfg.image_patch;
    e.gelu_mode = cfg.gelu_mode();
    return e;
}

}  // namespace

Model Model::build(const RunConfig& resolved) {
    Model m;
    m.config = resolved;
    m.class_names_ = resolved.class_list();

    std::vector<std::string> words = resolved.vocab_file.empty()
                                         ? Vocabulary::default_words()
                                         : Vocabulary::load_words(resolved.vocab_file);

    Rng backbone_rng(resolved.seed_init);
    m.backbone = std::make_unique<EncoderStack>(encoder_config(resolved), std::move(words),
                                                backbone_rng);
    // EncoderStack construction leaves everything frozen.

    if (resolved.mode == "pretrain") {
        m.backbone->visit_point([](Parameter& p) { p.set_trainable(true); });
        return m;
    }

    // tune mode: frozen backbone, trainable prompt + adapter.
    if (m.class_names_.empty()) {
        throw ConfigError("tune mode needs a class list (resolved from the dataset)");
    }
    Rng prompt_rng = Rng(resolved.seed_init).derive(1000);
    m.prompt.emplace(resolved.context_length, parse_insert_position(resolved.insert_position),
                     resolved.init_mode == "template" ? InitMode::kTemplate : InitMode::kRandom,
                     resolved.init_template, m.class_names_, m.backbone->text->vocab(),
                     prompt_rng);
    Rng adapter_rng = Rng(resolved.seed_init).derive(2000);
    m.adapter = PointAdapter::make(parse_adapter_kind(resolved.adapter), resolved.point_dim,
                                   resolved.point_heads, resolved.mlp_ratio, adapter_rng);
    return m;
}

void Model::visit(const ParamVisitor& v) {
    backbone->visit(v);
    if (prompt) prompt->visit(v);
    adapter.visit(v);
}

std::vector<Parameter*> Model::trainable_params() {
    std::vector<Parameter*> out;
    visit([&](Parameter& p) {
        if (p.trainable) out.push_back(&p);
    });
    return out;
}

std::vector<Parameter*> Model::all_params() {
    std::vector<Parameter*> out;
    visit([&](Parameter& p) { out.push_back(&p); });
    return out;
}

Index Model::count_learnable(std::map<std::string, Index>* breakdown) {
    Index total = 0;
    visit([&](Parameter& p) {
        if (!p.trainable) return;
        total += p.size();
        if (breakdown) {
            const auto dotpos = p.name.find('.');
            (*breakdown)[p.name.substr(0, dotpos)] += p.size();
        }
    });
    return total;
}

Tensor Model::point_pooled(const PointCloud& pc) const {
    return backbone->point->encode_pooled(pc);
}

Tensor Model::point_shared_from_pooled(const Tensor& pooled) const {
    return backbone->point->project(adapter.forward(pooled));
}

Tensor Model::class_text_features() const {
    if (!prompt) throw ContractError("class_text_features: model has no prompt learner");
    return prompt->class_text_features(*backbone->text);
}

Tensor Model::manual_text_features(std::size_t template_id) const {
    const Index dim = config.shared_dim;
    // Shared pad length so every caption runs through the same shapes.
    Index pad_to = 2;
    std::vector<std::string> captions;
    captions.reserve(class_names_.size());
    for (const auto& name : class_names_) {
        std::string readable = name;
        std::replace(readable.begin(), readable.end(), '_', ' ');
        captions.push_back(make_caption(readable, template_id));
        const Index len = static_cast<Index>(split_words(captions.back()).size()) + 2;
        pad_to = std::max(pad_to, len);
    }
    std::vector<Tensor> rows;
    rows.reserve(captions.size());
    for (const auto& caption : captions) {
        Tensor f = backbone->text->encode(backbone->text->embed_text(caption, pad_to));
        rows.push_back(reshape(f, {1, dim}));
    }
    return concat_rows(rows);
}

}  // namespace pointprompt
