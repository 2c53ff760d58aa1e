#include "imagedpo/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "imagedpo/diffcore.hpp"

namespace imagedpo {

namespace {

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

LossReport finalize(std::vector<double> margins, std::vector<double> grad, bool want_grad) {
  LossReport report;
  std::vector<double> losses(margins.size());
  for (std::size_t i = 0; i < margins.size(); ++i) losses[i] = -log_sigmoid(margins[i]);
  report.loss = pairwise_mean(losses);
  report.per_example_margin = std::move(margins);
  if (want_grad) {
    report.grad = std::move(grad);
    report.has_grad = true;
  }
  return report;
}

}  // namespace

LossReport image_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                          const ImagePrefBatch& batch, double alpha, RatioForm form,
                          bool want_grad) {
  if (batch.items.empty()) throw std::invalid_argument("image_dpo_loss: empty batch");
  if (!(alpha > 0.0)) throw std::invalid_argument("image_dpo_loss: alpha must be > 0");
  if (theta.dims != ref.dims)
    throw std::invalid_argument("image_dpo_loss: theta/ref dimension mismatch");
  for (const ImagePrefItem& item : batch.items)
    if (item.img_good.same_pixels(item.img_bad))
      throw std::invalid_argument("image_dpo_loss: good and bad images identical");

  const std::size_t n = batch.items.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> margins(n);
  std::vector<double> grad(want_grad ? theta.flat.size() : 0, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const ImagePrefItem& item = batch.items[i];
    const double lt_w = log_prob(theta, item.q, item.img_good, item.answer);
    const double lt_l = log_prob(theta, item.q, item.img_bad, item.answer);
    const double lr_w = log_prob(ref, item.q, item.img_good, item.answer);
    const double lr_l = log_prob(ref, item.q, item.img_bad, item.answer);
    const double delta_w = lt_w - lr_w;
    const double delta_l = lt_l - lr_l;

    double u;
    if (form == RatioForm::log_ratio)
      u = alpha * (delta_w - delta_l);
    else
      u = alpha * (std::exp(delta_w) - std::exp(delta_l));
    margins[i] = u;

    if (want_grad) {
      // d(-log sigmoid(u))/du = -(1 - sigmoid(u)) = -sigmoid(-u)
      const double coeff = -stable_sigmoid(-u) * inv_n;
      const std::vector<double> gw = grad_log_prob(theta, item.q, item.img_good, item.answer);
      const std::vector<double> gl = grad_log_prob(theta, item.q, item.img_bad, item.answer);
      if (form == RatioForm::log_ratio) {
        axpy(grad, coeff * alpha, gw);
        axpy(grad, -coeff * alpha, gl);
      } else {
        axpy(grad, coeff * alpha * std::exp(delta_w), gw);
        axpy(grad, -coeff * alpha * std::exp(delta_l), gl);
      }
    }
  }
  return finalize(std::move(margins), std::move(grad), want_grad);
}

LossReport text_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                         const TextPrefBatch& batch, double beta, bool want_grad) {
  if (batch.items.empty()) throw std::invalid_argument("text_dpo_loss: empty batch");
  if (!(beta > 0.0)) throw std::invalid_argument("text_dpo_loss: beta must be > 0");
  if (theta.dims != ref.dims)
    throw std::invalid_argument("text_dpo_loss: theta/ref dimension mismatch");
  for (const TextPrefItem& item : batch.items)
    if (item.a_good == item.a_bad)
      throw std::invalid_argument("text_dpo_loss: a_good == a_bad");

  const std::size_t n = batch.items.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> margins(n);
  std::vector<double> grad(want_grad ? theta.flat.size() : 0, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const TextPrefItem& item = batch.items[i];
    const std::vector<double> lt = forward(theta, item.q, item.img);
    const std::vector<double> lr = forward(ref, item.q, item.img);
    if (item.a_good < 0 || item.a_good >= theta.dims.answer_vocab || item.a_bad < 0 ||
        item.a_bad >= theta.dims.answer_vocab)
      throw std::invalid_argument("text_dpo_loss: answer id outside answer vocab");
    const double u = beta * ((lt[item.a_good] - lr[item.a_good]) -
                             (lt[item.a_bad] - lr[item.a_bad]));
    margins[i] = u;

    if (want_grad) {
      const double coeff = -stable_sigmoid(-u) * inv_n;
      const std::vector<double> gw = grad_log_prob(theta, item.q, item.img, item.a_good);
      const std::vector<double> gl = grad_log_prob(theta, item.q, item.img, item.a_bad);
      axpy(grad, coeff * beta, gw);
      axpy(grad, -coeff * beta, gl);
    }
  }
  return finalize(std::move(margins), std::move(grad), want_grad);
}

LossReport mle_nll_loss(const PolicyParams& theta, const LabeledBatch& batch, bool want_grad) {
  if (batch.empty()) throw std::invalid_argument("mle_nll_loss: empty batch");
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossReport report;
  std::vector<double> log_probs(n);
  std::vector<double> grad(want_grad ? theta.flat.size() : 0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const LabeledItem& item = batch[i];
    log_probs[i] = log_prob(theta, item.q, item.img, item.answer);
    if (want_grad) {
      const std::vector<double> g = grad_log_prob(theta, item.q, item.img, item.answer);
      axpy(grad, -inv_n, g);
    }
  }
  report.loss = -pairwise_mean(log_probs);
  report.per_example_margin = std::move(log_probs);
  if (want_grad) {
    report.grad = std::move(grad);
    report.has_grad = true;
  }
  return report;
}

}  // namespace imagedpo
