#include "pointprompt/training.hpp"

#include "pointprompt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pointprompt {

EvalMetrics evaluate_predictions(const std::vector<Index>& labels,
                                 const std::vector<Index>& predictions, Index class_count) {
    if (labels.size() != predictions.size()) {
        throw ArgumentError("evaluate_predictions: label/prediction count mismatch");
    }
    if (labels.empty()) throw DataError("evaluate_predictions: empty evaluation set");
    EvalMetrics m;
    m.total = static_cast<Index>(labels.size());
    m.confusion.assign(static_cast<std::size_t>(class_count),
                       std::vector<int>(static_cast<std::size_t>(class_count), 0));
    std::vector<int> per_class_total(static_cast<std::size_t>(class_count), 0);
    std::vector<int> per_class_correct(static_cast<std::size_t>(class_count), 0);
    Index correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Index truth = labels[i];
        const Index pred = predictions[i];
        if (truth < 0 || truth >= class_count) {
            throw DataError("evaluate_predictions: label " + std::to_string(truth) +
                            " out of range");
        }
        if (pred < 0 || pred >= class_count) {
            throw DataError("evaluate_predictions: prediction out of range");
        }
        ++m.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
        ++per_class_total[static_cast<std::size_t>(truth)];
        if (truth == pred) {
            ++correct;
            ++per_class_correct[static_cast<std::size_t>(truth)];
        }
    }
    m.overall_accuracy = static_cast<Scalar>(correct) / static_cast<Scalar>(m.total);
    m.per_class_accuracy.resize(static_cast<std::size_t>(class_count), 0.0);
    Scalar sum = 0.0;
    Index present = 0;
    for (std::size_t c = 0; c < static_cast<std::size_t>(class_count); ++c) {
        if (per_class_total[c] > 0) {
            m.per_class_accuracy[c] =
                static_cast<Scalar>(per_class_correct[c]) / static_cast<Scalar>(per_class_total[c]);
            sum += m.per_class_accuracy[c];
            ++present;
        }
    }
    m.mean_class_accuracy = present > 0 ? sum / static_cast<Scalar>(present) : 0.0;
    return m;
}

Tensor pooled_feature(const Model& model, const Sample& sample, PooledCache* cache) {
    if (cache) {
        const auto it = cache->find(sample.id);
        if (it != cache->end()) {
            return Tensor::from_values({model.config.point_dim}, ArrayX(it->second));
        }
    }
    Tensor pooled = model.point_pooled(sample.cloud).detach();
    if (cache) (*cache)[sample.id] = pooled.values();
    return pooled;
}

namespace {

void check_loss_finite(Scalar loss) {
    if (!std::isfinite(loss)) {
        throw NumericError("training: loss became non-finite (" + std::to_string(loss) + ")");
    }
}

void require_frozen_text_image(Model& model) {
    model.backbone->visit_text_image([](Parameter& p) {
        if (p.trainable) {
            throw ConfigError("pretrain: text/image parameter '" + p.name +
                              "' is trainable; the freezing contract requires it locked");
        }
    });
}

void require_frozen_backbone(Model& model) {
    model.backbone->visit([](Parameter& p) {
        if (p.trainable) {
            throw ConfigError("tune: backbone parameter '" + p.name +
                              "' is trainable; only prompt and adapter may update");
        }
    });
}

void zero_grads(Model& model) {
    model.visit([](Parameter& p) { p.tensor.zero_grad(); });
}

std::vector<std::size_t> epoch_order(const std::vector<std::size_t>& base, std::uint64_t seed,
                                     std::uint64_t epoch) {
    std::vector<std::size_t> order = base;
    Rng rng = Rng(seed).derive(epoch);
    rng.shuffle(order);
    return order;
}

Tensor one_hot_rows(const std::vector<Index>& labels, Index classes) {
    ArrayX v = ArrayX::Zero(static_cast<Index>(labels.size()) * classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        v[static_cast<Index>(i) * classes + labels[i]] = 1.0;
    return Tensor::from_values({static_cast<Index>(labels.size()), classes}, std::move(v));
}

Index argmax(const ArrayX& v) {
    Index best = 0;
    for (Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace

Scalar pretrain_step(Model& model, const Dataset& ds, const std::vector<std::size_t>& batch,
                     const std::map<std::string, ArrayX>& text_cache,
                     const std::map<std::size_t, ArrayX>& image_cache, AdamW& opt) {
    require_frozen_text_image(model);
    if (batch.empty()) throw ArgumentError("pretrain_step: empty batch");

    const Index B = static_cast<Index>(batch.size());
    const Index D = model.config.shared_dim;

    std::vector<Tensor> point_rows;
    point_rows.reserve(batch.size());
    ArrayX text_vals(B * D), image_vals(B * D);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Sample& s = ds.samples[batch[i]];
        Tensor shared = model.backbone->point->encode(s.cloud);
        point_rows.push_back(reshape(shared, {1, D}));
        text_vals.segment(static_cast<Index>(i) * D, D) = text_cache.at(s.caption);
        image_vals.segment(static_cast<Index>(i) * D, D) = image_cache.at(batch[i]);
    }

    FeatureBatch features;
    features.point = concat_rows(point_rows);
    features.text = Tensor::from_values({B, D}, std::move(text_vals));
    features.image = Tensor::from_values({B, D}, std::move(image_vals));

    LossWeights weights{model.config.alpha, model.config.beta, model.config.theta};
    Tensor loss = total_contrastive(features, weights, model.config.tau_contrastive);
    const Scalar value = loss.value();
    check_loss_finite(value);

    zero_grads(model);
    loss.backward();
    opt.step(model.trainable_params());
    return value;
}

Scalar tune_step(Model& model, const Dataset& ds, const std::vector<std::size_t>& batch,
                 AdamW& opt, PooledCache* cache) {
    require_frozen_backbone(model);
    if (!model.prompt) throw ConfigError("tune_step: model has no prompt learner");
    if (batch.empty()) throw ArgumentError("tune_step: empty batch");

    // Trainable enumeration must equal M*D plus the adapter's closed-form
    // count, exactly.
    const Index expected =
        model.config.context_length * model.config.shared_dim +
        adapter_param_count(parse_adapter_kind(model.config.adapter), model.config.point_dim,
                            model.config.point_heads, model.config.mlp_ratio);
    const Index enumerated = model.count_learnable();
    if (enumerated != expected) {
        throw ConfigError("tune_step: trainable enumeration " + std::to_string(enumerated) +
                          " differs from closed-form count " + std::to_string(expected));
    }

    const Index S = static_cast<Index>(model.class_names().size());
    Tensor text_features = model.class_text_features();  // [S x D], grads into E

    std::vector<Tensor> prob_rows;
    std::vector<Index> labels;
    prob_rows.reserve(batch.size());
    for (std::size_t idx : batch) {
        const Sample& s = ds.samples[idx];
        Tensor pooled = pooled_feature(model, s, cache);
        Tensor shared = model.point_shared_from_pooled(pooled);
        Tensor dist = class_distribution(shared, text_features, model.config.tau_cls);
        prob_rows.push_back(reshape(dist, {1, S}));
        labels.push_back(s.label);
    }
    Tensor predicted = concat_rows(prob_rows);
    Tensor target = one_hot_rows(labels, S);
    Tensor loss = tuning_loss(predicted, target, parse_loss_form(model.config.loss_form));
    const Scalar value = loss.value();
    check_loss_finite(value);

    zero_grads(model);
    loss.backward();
    opt.step(model.trainable_params());
    return value;
}

TrainLog run_pretrain(Model& model, const Dataset& ds, AdamW& opt, MetricsWriter* metrics) {
    require_frozen_text_image(model);
    const std::vector<std::size_t> train = ds.train_indices();
    if (train.empty()) throw DataError("pretrain: empty train split");

    // Frozen-branch features are constants; compute each caption and image
    // once up front. Captions share one pad length so equal text encodes
    // identically regardless of batch composition.
    Index pad_to = 2;
    for (std::size_t idx : train) {
        const Index len =
            static_cast<Index>(split_words(ds.samples[idx].caption).size()) + 2;
        pad_to = std::max(pad_to, len);
    }
    std::map<std::string, ArrayX> text_cache;
    std::map<std::size_t, ArrayX> image_cache;
    for (std::size_t idx : train) {
        const Sample& s = ds.samples[idx];
        if (!text_cache.count(s.caption)) {
            Tensor f = model.backbone->text->encode(
                model.backbone->text->embed_text(s.caption, pad_to));
            text_cache.emplace(s.caption, f.values());
        }
        Tensor img = model.backbone->image->encode(s.depth);
        image_cache.emplace(idx, img.values());
    }

    TrainLog log;
    const Index batch_size = std::min<Index>(model.config.batch_size,
                                             static_cast<Index>(train.size()));
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    for (Index step = 0; step < model.config.steps; ++step) {
        std::vector<std::size_t> batch;
        batch.reserve(static_cast<std::size_t>(batch_size));
        while (static_cast<Index>(batch.size()) < batch_size) {
            if (cursor >= order.size()) {
                order = epoch_order(train, model.config.seed_data, epoch++);
                cursor = 0;
            }
            batch.push_back(order[cursor++]);
        }
        const Scalar loss = pretrain_step(model, ds, batch, text_cache, image_cache, opt);
        log.losses.push_back(loss);
        if (metrics && (step % model.config.log_every == 0 || step + 1 == model.config.steps)) {
            metrics->emit(step, {{"loss", loss}, {"lr", opt.learning_rate_at(opt.step_count())}});
        }
    }
    return log;
}

TrainLog run_tune(Model& model, const Dataset& ds, AdamW& opt, MetricsWriter* metrics,
                  PooledCache* cache) {
    const std::vector<std::size_t> train = ds.train_indices();
    if (train.empty()) throw DataError("tune: empty train split");

    PooledCache local_cache;
    if (!cache) cache = &local_cache;
    for (std::size_t idx : train) (void)pooled_feature(model, ds.samples[idx], cache);

    TrainLog log;
    const Index batch_size = std::min<Index>(model.config.batch_size,
                                             static_cast<Index>(train.size()));
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    std::uint64_t epoch = 0;
    for (Index step = 0; step < model.config.steps; ++step) {
        std::vector<std::size_t> batch;
        batch.reserve(static_cast<std::size_t>(batch_size));
        while (static_cast<Index>(batch.size()) < batch_size) {
            if (cursor >= order.size()) {
                order = epoch_order(train, model.config.seed_data, epoch++);
                cursor = 0;
            }
            batch.push_back(order[cursor++]);
        }
        const Scalar loss = tune_step(model, ds, batch, opt, cache);
        log.losses.push_back(loss);
        if (metrics && (step % model.config.log_every == 0 || step + 1 == model.config.steps)) {
            metrics->emit(step, {{"loss", loss}, {"lr", opt.learning_rate_at(opt.step_count())}});
        }
    }
    return log;
}

namespace {

EvalMetrics evaluate_with_features(Model& model, const Dataset& ds,
                                   const Tensor& text_features, bool use_adapter,
                                   PooledCache* cache) {
    const std::vector<std::size_t> test = ds.test_indices();
    if (test.empty()) throw DataError("evaluate: empty test split");
    const MatrixR feats = MatrixR(text_features.matrix());
    MatrixR normalized = feats;
    for (Index r = 0; r < normalized.rows(); ++r) {
        const Scalar n = normalized.row(r).norm();
        if (n <= 0.0) throw DegenerateVectorError("evaluate: zero-norm text feature");
        normalized.row(r) /= n;
    }

    std::vector<Index> labels, preds;
    labels.reserve(test.size());
    preds.reserve(test.size());
    for (std::size_t idx : test) {
        const Sample& s = ds.samples[idx];
        Tensor pooled = pooled_feature(model, s, cache);
        Tensor shared = use_adapter ? model.point_shared_from_pooled(pooled)
                                    : model.backbone->point->project(pooled);
        ArrayX h = shared.values();
        const Scalar norm = std::sqrt(h.square().sum());
        if (norm <= 0.0) throw DegenerateVectorError("evaluate: zero-norm point feature");
        VectorX sims = normalized * (h.matrix() / norm);
        preds.push_back(argmax(sims.array()));
        labels.push_back(s.label);
    }
    return evaluate_predictions(labels, preds, ds.class_count());
}

}  // namespace

EvalMetrics evaluate_model(Model& model, const Dataset& ds, PooledCache* cache) {
    Tensor text_features = model.class_text_features().detach();
    return evaluate_with_features(model, ds, text_features, /*use_adapter=*/true, cache);
}

EvalMetrics zero_shot_evaluate(Model& model, const Dataset& ds, std::size_t template_id,
                               PooledCache* cache) {
    Tensor text_features = model.manual_text_features(template_id).detach();
    return evaluate_with_features(model, ds, text_features, /*use_adapter=*/false, cache);
}

Dataset prepare_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (cfg.dataset == "synthetic") {
        SyntheticSpec spec;
        spec.train_per_class = cfg.train_per_class;
        spec.test_per_class = cfg.test_per_class;
        spec.points = cfg.points;
        spec.noise_sigma = cfg.noise_sigma;
        spec.image_size = cfg.image_size;
        spec.seed = cfg.seed_data;
        ds = build_synthetic_dataset(spec);
    } else {
        ds = load_off_dataset(cfg.data_root, cfg.points, cfg.image_size, 0.7, 0.5,
                              cfg.seed_data);
    }
    if (cfg.fraction < 1.0) ds = fraction_subset(ds, cfg.fraction, cfg.seed_data);
    if (cfg.shots > 0) ds = few_shot_subset(ds, FewShotSpec{cfg.shots, cfg.seed_data});
    return ds;
}

void fill_classes(RunConfig& cfg, const Dataset& ds) {
    std::ostringstream joined;
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
        if (i) joined << ",";
        joined << ds.class_names[i];
    }
    if (cfg.classes.empty()) {
        cfg.classes = joined.str();
    } else if (cfg.classes != joined.str()) {
        throw ConfigError("config classes '" + cfg.classes + "' do not match dataset classes '" +
                          joined.str() + "'");
    }
}

}  // namespace pointprompt
