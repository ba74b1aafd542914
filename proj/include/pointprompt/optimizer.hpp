#pragma once

#include "pointprompt/parameter.hpp"

#include <map>
#include <string>
#include <vector>

namespace pointprompt {

struct AdamWConfig {
    Scalar lr = 5e-4;
    Scalar beta1 = 0.9;
    Scalar beta2 = 0.999;
    Scalar eps = 1e-8;
    Scalar weight_decay = 0.05;
    Scalar grad_clip = 1.0;  // global norm; 0 disables
    Index total_steps = 1;
    Scalar warmup_fraction = 0.1;  // linear warmup, then cosine decay to 0
};

/// Decoupled-weight-decay Adam with linear warmup and cosine decay. Moment
/// buffers exist only for the trainable parameters it has seen; the step
/// count advances by exactly one per step() call.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // One update over the trainable parameters. Parameters without a gradient
    // buffer are treated as zero-gradient. Frozen parameters are rejected.
    void step(const std::vector<Parameter*>& params);

    Index step_count() const { return step_; }
    Scalar learning_rate_at(Index step) const;  // 1-based
    const AdamWConfig& config() const { return cfg_; }

    struct Moments {
        ArrayX m;
        ArrayX v;
    };
    // Serialized state (checkpointing).
    const std::map<std::string, Moments>& moments() const { return moments_; }
    void restore(Index step, std::map<std::string, Moments> moments);

private:
    AdamWConfig cfg_;
    Index step_ = 0;
    std::map<std::string, Moments> moments_;
};

}  // namespace pointprompt
