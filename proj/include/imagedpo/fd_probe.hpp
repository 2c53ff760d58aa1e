// Verification-only module: an extended-precision (long double) twin of the
// policy forward pass and the training objectives, used as the
// finite-difference oracle by gradcheck and the test suites. Written
// straight-line and independently of the production code so it can serve as
// an oracle for it. Everything the artifact trains or reports stays 64-bit;
// the extra precision exists only so the probe's rounding noise sits far
// below the 1e-4 tolerance it measures.
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "imagedpo/objectives.hpp"
#include "imagedpo/policy.hpp"

namespace imagedpo::fdprobe {

inline std::vector<long double> ld_forward(const PolicyDims& dims,
                                           std::span<const double> flat, const TokenSeq& q,
                                           const ImageGrid& img) {
  const ParamLayout L = layout(dims);

  std::vector<long double> fq(static_cast<std::size_t>(dims.embed_dim), 0.0L);
  for (int t : q)
    for (int j = 0; j < dims.embed_dim; ++j)
      fq[j] += flat[L.question_embed + static_cast<std::size_t>(t) * dims.embed_dim + j];
  for (long double& v : fq) v /= static_cast<long double>(q.size());

  const std::vector<double> fi = image_features(img, dims.patch_grid());

  std::vector<long double> hidden(static_cast<std::size_t>(dims.hidden));
  for (int i = 0; i < dims.hidden; ++i) {
    long double s = flat[L.b + i];
    for (int p = 0; p < dims.n_patches; ++p)
      s += static_cast<long double>(flat[L.w_img + static_cast<std::size_t>(i) * dims.n_patches + p]) * fi[p];
    for (int j = 0; j < dims.embed_dim; ++j)
      s += static_cast<long double>(flat[L.w_q + static_cast<std::size_t>(i) * dims.embed_dim + j]) * fq[j];
    hidden[i] = tanhl(s);
  }

  std::vector<long double> logits(static_cast<std::size_t>(dims.answer_vocab));
  for (int k = 0; k < dims.answer_vocab; ++k) {
    long double s = flat[L.c + k];
    for (int i = 0; i < dims.hidden; ++i)
      s += static_cast<long double>(flat[L.u + static_cast<std::size_t>(k) * dims.hidden + i]) * hidden[i];
    logits[k] = s;
  }

  long double mx = logits[0];
  for (long double v : logits) mx = std::max(mx, v);
  long double sum = 0.0L;
  for (long double v : logits) sum += expl(v - mx);
  const long double lse = mx + logl(sum);
  for (long double& v : logits) v -= lse;
  return logits;
}

inline long double ld_log_sigmoid(long double x) {
  if (x >= 0.0L) return -log1pl(expl(-x));
  return x - log1pl(expl(x));
}

inline long double ld_image_dpo_loss(const PolicyDims& dims, std::span<const double> flat,
                                     const PolicyParams& ref, const ImagePrefBatch& batch,
                                     long double alpha) {
  long double total = 0.0L;
  for (const ImagePrefItem& item : batch.items) {
    const auto tw = ld_forward(dims, flat, item.q, item.img_good);
    const auto tl = ld_forward(dims, flat, item.q, item.img_bad);
    const auto rw = ld_forward(dims, ref.flat, item.q, item.img_good);
    const auto rl = ld_forward(dims, ref.flat, item.q, item.img_bad);
    const long double u = alpha * ((tw[item.answer] - rw[item.answer]) -
                                   (tl[item.answer] - rl[item.answer]));
    total += -ld_log_sigmoid(u);
  }
  return total / static_cast<long double>(batch.items.size());
}

inline long double ld_text_dpo_loss(const PolicyDims& dims, std::span<const double> flat,
                                    const PolicyParams& ref, const TextPrefBatch& batch,
                                    long double beta) {
  long double total = 0.0L;
  for (const TextPrefItem& item : batch.items) {
    const auto t = ld_forward(dims, flat, item.q, item.img);
    const auto r = ld_forward(dims, ref.flat, item.q, item.img);
    const long double u =
        beta * ((t[item.a_good] - r[item.a_good]) - (t[item.a_bad] - r[item.a_bad]));
    total += -ld_log_sigmoid(u);
  }
  return total / static_cast<long double>(batch.items.size());
}

inline long double ld_mle_loss(const PolicyDims& dims, std::span<const double> flat,
                               const LabeledBatch& batch) {
  long double total = 0.0L;
  for (const LabeledItem& item : batch)
    total += -ld_forward(dims, flat, item.q, item.img)[item.answer];
  return total / static_cast<long double>(batch.size());
}

// grad_check's formula (same step, same relative-error denominator), with the
// objective evaluated in long double so the probe itself does not drown the
// signal in rounding noise.
template <typename ObjectiveLd>
double ld_fd_max_rel_error(const ObjectiveLd& objective, std::span<const double> params,
                           std::span<const double> analytic_grad, double step) {
  std::vector<double> p(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + step;
    const long double fp = objective(p);
    p[i] = saved - step;
    const long double fm = objective(p);
    p[i] = saved;
    const double numeric = static_cast<double>((fp - fm) / (2.0L * step));
    const double denom = std::max({std::fabs(analytic_grad[i]), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic_grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace imagedpo::fdprobe
