#pragma once

#include "pointprompt/tensor.hpp"

#include <string>

namespace pointprompt {

/// Index-aligned per-modality feature matrices [B x D]; row i of each comes
/// from the same triplet.
struct FeatureBatch {
    Tensor image;  // h^I
    Tensor text;   // h^T
    Tensor point;  // h^P
};

/// Weights of the three pairwise terms in the total contrastive loss.
struct LossWeights {
    Scalar alpha = 1.0;  // (image, text)
    Scalar beta = 1.0;   // (image, point)
    Scalar theta = 1.0;  // (point, text)
};

enum class LossForm { kCategorical, kBce };

LossForm parse_loss_form(const std::string& s);
const char* loss_form_name(LossForm f);

/// Symmetric InfoNCE over cosine similarities: mean over i of
/// -1/2 log softmax_row(S/tau)[i,i] - 1/2 log softmax_col(S/tau)[i,i]
/// with S[i,k] the cosine similarity of hA_i and hB_k. Exactly zero at B = 1.
Tensor pairwise_contrastive(const Tensor& ha, const Tensor& hb, Scalar temperature);

/// alpha*L(I,T) + beta*L(I,P) + theta*L(P,T).
Tensor total_contrastive(const FeatureBatch& batch, const LossWeights& w, Scalar temperature);

/// Softmax over cosine similarities of one adapted point feature against all
/// class text features. Valid probability vector; default tau = 1.
Tensor class_distribution(const Tensor& h_point, const Tensor& text_features,
                          Scalar temperature = 1.0);

/// Cross-entropy over predicted class distributions. Categorical form is the
/// mean over the batch of -sum_j y_j log y_hat_j; the bce form adds the
/// complementary -(1-y_j) log(1-y_hat_j) terms per class (also batch-mean).
/// Log arguments clamp at 1e-12. Rows of `predicted` must sum to 1 within
/// 1e-6.
Tensor tuning_loss(const Tensor& predicted, const Tensor& target, LossForm form);

}  // namespace pointprompt
