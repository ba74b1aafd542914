#pragma once

#include "pointprompt/checkpoint.hpp"
#include "pointprompt/dataset.hpp"
#include "pointprompt/metrics.hpp"
#include "pointprompt/model.hpp"
#include "pointprompt/objectives.hpp"
#include "pointprompt/optimizer.hpp"

#include <map>
#include <string>
#include <vector>

namespace pointprompt {

struct EvalMetrics {
    Scalar overall_accuracy = 0.0;
    Scalar mean_class_accuracy = 0.0;
    std::vector<Scalar> per_class_accuracy;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
    Index total = 0;
};

// Accuracy/confusion bookkeeping from labels and predictions.
EvalMetrics evaluate_predictions(const std::vector<Index>& labels,
                                 const std::vector<Index>& predictions, Index class_count);

/// Cache of pooled (pre-adapter) point features keyed by sample id. Valid
/// for one fixed backbone weight state; callers own invalidation.
using PooledCache = std::map<std::string, ArrayX>;

// Pooled feature through the cache (computed on miss, detached).
Tensor pooled_feature(const Model& model, const Sample& sample, PooledCache* cache);

/// One optimization step of tri-modal contrastive pre-training on a batch of
/// triplet indices. Text and image features arrive as frozen constants; the
/// point branch carries gradients. Verifies the freezing contract before
/// touching weights.
Scalar pretrain_step(Model& model, const Dataset& ds, const std::vector<std::size_t>& batch,
                     const std::map<std::string, ArrayX>& text_cache,
                     const std::map<std::size_t, ArrayX>& image_cache, AdamW& opt);

/// One prompt-tuning step on labeled clouds: class features from the prompt,
/// pooled point features through the adapter, cross-entropy update of prompt
/// and adapter only.
Scalar tune_step(Model& model, const Dataset& ds, const std::vector<std::size_t>& batch,
                 AdamW& opt, PooledCache* cache);

struct TrainLog {
    std::vector<Scalar> losses;  // one entry per step
};

// Full loops: seeded epoch shuffling, metric emission every cfg.log_every.
TrainLog run_pretrain(Model& model, const Dataset& ds, AdamW& opt, MetricsWriter* metrics);
TrainLog run_tune(Model& model, const Dataset& ds, AdamW& opt, MetricsWriter* metrics,
                  PooledCache* cache = nullptr);

// Argmax classification of the test split via prompt-derived text features.
EvalMetrics evaluate_model(Model& model, const Dataset& ds, PooledCache* cache = nullptr);

// Zero-shot-style baseline: manual template captions, no adapter, frozen
// everything.
EvalMetrics zero_shot_evaluate(Model& model, const Dataset& ds, std::size_t template_id,
                               PooledCache* cache = nullptr);

// Dataset selection per config, including fraction / few-shot subsetting.
Dataset prepare_dataset(const RunConfig& cfg);
// Stamps the dataset's class list into the config (must match when already
// set).
void fill_classes(RunConfig& cfg, const Dataset& ds);

}  // namespace pointprompt
