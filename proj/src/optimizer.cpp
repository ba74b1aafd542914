#include "pointprompt/optimizer.hpp"

#include "pointprompt/errors.hpp"

#include <cmath>

namespace pointprompt {

Scalar AdamW::learning_rate_at(Index step) const {
    const Index warmup = std::max<Index>(
        1, static_cast<Index>(std::llround(cfg_.warmup_fraction *
                                           static_cast<Scalar>(cfg_.total_steps))));
    if (step <= warmup) {
        return cfg_.lr * static_cast<Scalar>(step) / static_cast<Scalar>(warmup);
    }
    const Scalar progress = static_cast<Scalar>(step - warmup) /
                            static_cast<Scalar>(std::max<Index>(1, cfg_.total_steps - warmup));
    return cfg_.lr * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
}

void AdamW::step(const std::vector<Parameter*>& params) {
    for (const Parameter* p : params) {
        if (!p->trainable) {
            throw ContractError("optimizer: frozen parameter '" + p->name +
                                "' passed to step()");
        }
    }
    ++step_;
    const Scalar lr = learning_rate_at(step_);

    // Global gradient-norm clipping across everything in this step.
    Scalar clip_scale = 1.0;
    if (cfg_.grad_clip > 0.0) {
        Scalar sq = 0.0;
        for (const Parameter* p : params) {
            if (p->tensor.has_grad()) sq += p->tensor.grad().square().sum();
        }
        const Scalar norm = std::sqrt(sq);
        if (norm > cfg_.grad_clip) clip_scale = cfg_.grad_clip / norm;
    }

    const Scalar bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<Scalar>(step_));
    const Scalar bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<Scalar>(step_));
    for (Parameter* p : params) {
        auto [it, inserted] = moments_.try_emplace(p->name);
        Moments& mom = it->second;
        if (inserted) {
            mom.m = ArrayX::Zero(p->size());
            mom.v = ArrayX::Zero(p->size());
        } else if (mom.m.size() != p->size()) {
            throw ContractError("optimizer: moment shape drift for '" + p->name + "'");
        }
        ArrayX grad = p->tensor.has_grad() ? ArrayX(p->tensor.grad() * clip_scale)
                                           : ArrayX(ArrayX::Zero(p->size()));
        mom.m = cfg_.beta1 * mom.m + (1.0 - cfg_.beta1) * grad;
        mom.v = cfg_.beta2 * mom.v + (1.0 - cfg_.beta2) * grad.square();
        const ArrayX m_hat = mom.m / bc1;
        const ArrayX v_hat = mom.v / bc2;
        ArrayX& values = p->tensor.values_mut();
        values -= lr * (m_hat / (v_hat.sqrt() + cfg_.eps) + cfg_.weight_decay * values);
    }
}

void AdamW::restore(Index step, std::map<std::string, Moments> moments) {
    step_ = step;
    moments_ = std::move(moments);
}

}  // namespace pointprompt
