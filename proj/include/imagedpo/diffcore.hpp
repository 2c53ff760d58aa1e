#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace imagedpo {

/// log(sigmoid(x)), stable over the whole double range.
/// Computed as -log1p(e^-x) for x >= 0 and x - log1p(e^x) for x < 0 so the
/// result never underflows to -inf for any finite x.
double log_sigmoid(double x);

/// sigmoid(x) without overflow for large |x|.
double stable_sigmoid(double x);

/// Max-subtracted softmax; entries positive and summing to 1.
std::vector<double> softmax(std::span<const double> logits);

/// Max-subtracted log-softmax; exp of entries sums to 1.
std::vector<double> log_softmax(std::span<const double> logits);

/// Fixed binary-tree summation. Deterministic, and exact when all entries are
/// equal and the length is a power of two (used by the loss anchors).
double pairwise_sum(std::span<const double> values);
double pairwise_mean(std::span<const double> values);

// Neumaier compensated accumulator. The objectives are probed by central
// differences at small steps, so their evaluation noise has to stay near
// one ulp for the componentwise checks to resolve anything.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // analytic gradient at worst_index
  double numeric = 0.0;   // central-difference estimate at worst_index
};

using Objective = std::function<double(std::span<const double>)>;

/// Compares analytic_grad against central differences of `objective`,
/// componentwise. Relative error denominator floors at 1e-8 so dead
/// parameters do not produce 0/0.
GradCheckReport grad_check(const Objective& objective, std::span<const double> params,
                           std::span<const double> analytic_grad, double step);

}  // namespace imagedpo
