#include "pointprompt/objectives.hpp"

#include "pointprompt/errors.hpp"

#include <cmath>

namespace pointprompt {

LossForm parse_loss_form(const std::string& s) {
    if (s == "categorical") return LossForm::kCategorical;
    if (s == "bce") return LossForm::kBce;
    throw ArgumentError("unknown loss form '" + s + "' (categorical|bce)");
}

const char* loss_form_name(LossForm f) {
    return f == LossForm::kCategorical ? "categorical" : "bce";
}

namespace {

// Identity mask as a constant tensor; mul+sum picks the diagonal.
Tensor diag_mask(Index n) {
    ArrayX v = ArrayX::Zero(n * n);
    for (Index i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return Tensor::from_values({n, n}, std::move(v));
}

}  // namespace

Tensor pairwise_contrastive(const Tensor& ha, const Tensor& hb, Scalar temperature) {
    if (ha.rank() != 2 || hb.rank() != 2) {
        throw ShapeError("pairwise_contrastive: expected [B x D] feature matrices");
    }
    if (ha.shape() != hb.shape()) {
        throw ShapeError("pairwise_contrastive: feature shapes differ, " + ha.shape_str() +
                         " vs " + hb.shape_str());
    }
    if (temperature <= 0.0) throw ArgumentError("pairwise_contrastive: temperature must be > 0");
    const Index batch = ha.rows();
    if (batch < 1) throw ArgumentError("pairwise_contrastive: empty batch");

    // Cosine similarity matrix via row normalization (throws on zero rows).
    Tensor an = normalize_rows(ha);
    Tensor bn = normalize_rows(hb);
    Tensor sims = mul_scalar(matmul_nt(an, bn), 1.0 / temperature);

    Tensor mask = diag_mask(batch);
    Tensor row_diag = sum(mul(log_softmax(sims, 1), mask));
    Tensor col_diag = sum(mul(log_softmax(sims, 0), mask));
    const Scalar scale = -0.5 / static_cast<Scalar>(batch);
    return mul_scalar(add(row_diag, col_diag), scale);
}

Tensor total_contrastive(const FeatureBatch& batch, const LossWeights& w, Scalar temperature) {
    if (!batch.image.defined() || !batch.text.defined() || !batch.point.defined()) {
        throw ArgumentError("total_contrastive: all three modalities must be present");
    }
    if (w.alpha < 0 || w.beta < 0 || w.theta < 0 || (w.alpha + w.beta + w.theta) <= 0.0) {
        throw ArgumentError("total_contrastive: weights must be non-negative, at least one > 0");
    }
    Tensor total = Tensor::scalar(0.0);
    if (w.alpha > 0) {
        total = add(total, mul_scalar(pairwise_contrastive(batch.image, batch.text, temperature),
                                      w.alpha));
    }
    if (w.beta > 0) {
        total = add(total, mul_scalar(pairwise_contrastive(batch.image, batch.point, temperature),
                                      w.beta));
    }
    if (w.theta > 0) {
        total = add(total, mul_scalar(pairwise_contrastive(batch.point, batch.text, temperature),
                                      w.theta));
    }
    return total;
}

Tensor class_distribution(const Tensor& h_point, const Tensor& text_features,
                          Scalar temperature) {
    if (h_point.rank() != 1) throw ShapeError("class_distribution: point feature must be rank-1");
    if (text_features.rank() != 2 || text_features.cols() != h_point.size()) {
        throw ShapeError("class_distribution: text features " + text_features.shape_str() +
                         " incompatible with point feature " + h_point.shape_str());
    }
    const Index classes = text_features.rows();
    if (classes < 2) throw ArgumentError("class_distribution: need at least two classes");
    if (temperature <= 0.0) throw ArgumentError("class_distribution: temperature must be > 0");

    Tensor hn = normalize_rows(reshape(h_point, {1, h_point.size()}));
    Tensor tn = normalize_rows(text_features);
    Tensor sims = reshape(matmul_nt(tn, hn), {classes});  // cosine similarities [S]
    return softmax(mul_scalar(sims, 1.0 / temperature));
}

Tensor tuning_loss(const Tensor& predicted, const Tensor& target, LossForm form) {
    if (predicted.rank() != 2 || target.rank() != 2 || predicted.shape() != target.shape()) {
        throw ShapeError("tuning_loss: predicted and target must share a [B x S] shape");
    }
    const Index batch = predicted.rows();
    const Index classes = predicted.cols();
    for (Index i = 0; i < batch; ++i) {
        const Scalar row_sum = predicted.values().segment(i * classes, classes).sum();
        if (std::abs(row_sum - 1.0) > 1e-6) {
            throw ContractError("tuning_loss: predicted row " + std::to_string(i) +
                                " sums to " + std::to_string(row_sum) + ", not 1");
        }
    }
    const Scalar clamp = 1e-12;
    Tensor log_p = log(clamp_min(predicted, clamp));
    Tensor per_entry = mul(target, log_p);
    if (form == LossForm::kBce) {
        Tensor one_minus_t = add_scalar(neg(target), 1.0);
        Tensor log_1p = log(clamp_min(add_scalar(neg(predicted), 1.0), clamp));
        per_entry = add(per_entry, mul(one_minus_t, log_1p));
    }
    // Sum over classes, mean over the batch.
    return mul_scalar(sum(per_entry), -1.0 / static_cast<Scalar>(batch));
}

}  // namespace pointprompt
