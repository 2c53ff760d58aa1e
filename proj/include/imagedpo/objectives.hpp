#pragma once

#include <vector>

#include "imagedpo/image.hpp"
#include "imagedpo/policy.hpp"

namespace imagedpo {

// The typeset objective uses plain probability ratios; the derivation behind
// it uses log-ratios. Both are implemented; log_ratio is the default.
enum class RatioForm { log_ratio, raw_ratio };

struct ImagePrefItem {
  TokenSeq q;
  int answer = 0;
  ImageGrid img_good;
  ImageGrid img_bad;
};

struct ImagePrefBatch {
  std::vector<ImagePrefItem> items;
};

struct TextPrefItem {
  TokenSeq q;
  ImageGrid img;
  int a_good = 0;
  int a_bad = 0;
};

struct TextPrefBatch {
  std::vector<TextPrefItem> items;
};

struct LabeledItem {
  TokenSeq q;
  ImageGrid img;
  int answer = 0;
};

using LabeledBatch = std::vector<LabeledItem>;

struct LossReport {
  double loss = 0.0;
  std::vector<double> per_example_margin;
  std::vector<double> grad;  // empty unless requested
  bool has_grad = false;
};

/// -mean log sigmoid(u) where, per item,
///   log form: u = alpha*[(log pi/ref)(good) - (log pi/ref)(bad)]
///   raw form: u = alpha*[(pi/ref)(good) - (pi/ref)(bad)]
/// Margins are the u values. At theta == ref the loss is exactly ln 2.
LossReport image_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                          const ImagePrefBatch& batch, double alpha,
                          RatioForm form = RatioForm::log_ratio, bool want_grad = false);

/// Standard DPO over chosen/rejected answers with the image fixed.
LossReport text_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const TextPrefBatch& batch, double beta, bool want_grad = false);

/// -mean log pi(answer | q, img). Margins hold the per-example log-probs.
LossReport mle_nll_loss(const PolicyParams& theta, const LabeledBatch& batch,
                        bool want_grad = false);

}  // namespace imagedpo
