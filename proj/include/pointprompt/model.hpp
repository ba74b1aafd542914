#pragma once

#include "pointprompt/adapters.hpp"
#include "pointprompt/config.hpp"
#include "pointprompt/encoders.hpp"
#include "pointprompt/prompt.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pointprompt {

/// The assembled system: three-encoder backbone plus, in tune mode, the
/// prompt learner and point adapter. Construction fixes the freezing layout:
/// pretrain mode trains the point encoder only; tune mode trains the prompt
/// context and adapter only.
class Model {
public:
    static Model build(const RunConfig& resolved);

    RunConfig config;  // resolved
    std::unique_ptr<EncoderStack> backbone;
    std::optional<PromptLearner> prompt;
    PointAdapter adapter;

    void visit(const ParamVisitor& v);
    std::vector<Parameter*> trainable_params();
    std::vector<Parameter*> all_params();

    // Total trainable scalars; optional per-group breakdown keyed by the
    // first name segment ("prompt", "adapter", "point", ...).
    Index count_learnable(std::map<std::string, Index>* breakdown = nullptr);

    // Pooled point feature at D_point, before adapter and projection.
    Tensor point_pooled(const PointCloud& pc) const;
    // adapter -> projection into the shared space.
    Tensor point_shared_from_pooled(const Tensor& pooled) const;
    Tensor point_shared(const PointCloud& pc) const {
        return point_shared_from_pooled(point_pooled(pc));
    }
    // S x D prompt-derived text features (tune mode).
    Tensor class_text_features() const;
    // S x D features of manual template captions (zero-shot style).
    Tensor manual_text_features(std::size_t template_id) const;

    const std::vector<std::string>& class_names() const { return class_names_; }

private:
    std::vector<std::string> class_names_;
};

}  // namespace pointprompt
