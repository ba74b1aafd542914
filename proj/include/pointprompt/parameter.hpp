#pragma once

#include "pointprompt/tensor.hpp"

#include <functional>
#include <string>

namespace pointprompt {

/// A named tensor with a trainable flag. Freezing lives here and nowhere
/// else: a Parameter with trainable == false keeps bit-identical values
/// across any number of optimizer steps, and the optimizer never sees it.
struct Parameter {
    std::string name;
    Tensor tensor;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor t, bool train = true)
        : name(std::move(n)), tensor(std::move(t)), trainable(train) {
        tensor.set_requires_grad(trainable);
    }

    void set_trainable(bool v) {
        trainable = v;
        tensor.set_requires_grad(v);
    }

    Index size() const { return tensor.size(); }
};

// Modules expose their parameters to generic machinery (optimizer, counting,
// checkpointing, freezing) through a visitor.
using ParamVisitor = std::function<void(Parameter&)>;

}  // namespace pointprompt
