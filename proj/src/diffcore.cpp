#include "imagedpo/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "imagedpo/errors.hpp"

namespace imagedpo {

double log_sigmoid(double x) {
  if (!std::isfinite(x)) throw std::domain_error("log_sigmoid: non-finite input");
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (!std::isfinite(x)) throw std::domain_error("stable_sigmoid: non-finite input");
  if (x >= 0.0) {
    double t = std::exp(-x);
    return 1.0 / (1.0 + t);
  }
  double t = std::exp(x);
  return t / (1.0 + t);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::domain_error("log_softmax: empty logits");
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::domain_error("log_softmax: non-finite logit");
    mx = std::max(mx, v);
  }
  // compensated sum keeps the finite-difference oracle's noise near 1 ulp
  NeumaierSum sum;
  for (double v : logits) sum.add(std::exp(v - mx));
  double lse = mx + std::log(sum.value());
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  std::size_t mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

double pairwise_mean(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("pairwise_mean: empty input");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

GradCheckReport grad_check(const Objective& objective, std::span<const double> params,
                           std::span<const double> analytic_grad, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be > 0");
  if (analytic_grad.size() != params.size())
    throw std::invalid_argument("grad_check: gradient/parameter size mismatch");

  std::vector<double> p(params.begin(), params.end());
  GradCheckReport report;
  report.max_rel_error = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + step;
    double fp = objective(p);
    p[i] = saved - step;
    double fm = objective(p);
    p[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw EvalError("grad_check: objective evaluation not finite", i);
    const double numeric = (fp - fm) / (2.0 * step);
    const double denom = std::max({std::fabs(analytic_grad[i]), std::fabs(numeric), 1e-8});
    const double rel = std::fabs(analytic_grad[i] - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.analytic = analytic_grad[i];
      report.numeric = numeric;
    }
  }
  if (report.max_rel_error < 0.0) report.max_rel_error = 0.0;  // empty parameter set
  return report;
}

}  // namespace imagedpo
