#include "imagedpo/discrete.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "imagedpo/diffcore.hpp"
#include "imagedpo/errors.hpp"

namespace imagedpo {

void validate_instance(const DiscreteInstance& inst) {
  if (inst.ref.empty()) throw std::invalid_argument("DiscreteInstance: no contexts");
  if (!(inst.beta > 0.0)) throw std::invalid_argument("DiscreteInstance: beta must be > 0");
  if (inst.reward.size() != inst.ref.size())
    throw std::invalid_argument("DiscreteInstance: ref/reward context count mismatch");
  const std::size_t vocab = inst.ref[0].size();
  if (vocab == 0) throw std::invalid_argument("DiscreteInstance: empty answer vocabulary");
  for (std::size_t c = 0; c < inst.ref.size(); ++c) {
    if (inst.ref[c].size() != vocab || inst.reward[c].size() != vocab)
      throw std::invalid_argument("DiscreteInstance: ragged tables");
    double sum = 0.0;
    for (double p : inst.ref[c]) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw std::invalid_argument("DiscreteInstance: bad ref probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("DiscreteInstance: ref row " + std::to_string(c) +
                                  " does not sum to 1");
    for (double r : inst.reward[c])
      if (!std::isfinite(r)) throw std::invalid_argument("DiscreteInstance: non-finite reward");
  }
}

namespace {

void check_context(const DiscreteInstance& inst, int context, const char* who) {
  if (context < 0 || context >= inst.contexts())
    throw std::out_of_range(std::string(who) + ": unknown context " + std::to_string(context));
}

void check_pairs(const DiscreteInstance& inst, const std::vector<PrefPair>& pairs,
                 const char* who) {
  if (pairs.empty()) throw std::invalid_argument(std::string(who) + ": empty pair list");
  for (const PrefPair& p : pairs) {
    check_context(inst, p.ctx_good, who);
    check_context(inst, p.ctx_bad, who);
    if (p.answer < 0 || p.answer >= inst.vocab())
      throw std::out_of_range(std::string(who) + ": unknown answer " + std::to_string(p.answer));
  }
}

void check_table(const DiscreteInstance& inst, const PolicyTable& table, const char* who) {
  if (static_cast<int>(table.size()) != inst.contexts())
    throw std::invalid_argument(std::string(who) + ": table context count mismatch");
  for (const auto& row : table)
    if (static_cast<int>(row.size()) != inst.vocab())
      throw std::invalid_argument(std::string(who) + ": table row size mismatch");
}

}  // namespace

double bt_probability(double r_good, double r_bad) {
  if (!std::isfinite(r_good) || !std::isfinite(r_bad))
    throw std::domain_error("bt_probability: non-finite reward");
  return stable_sigmoid(r_good - r_bad);
}

double reward_nll(const DiscreteInstance& inst, const std::vector<PrefPair>& pairs) {
  validate_instance(inst);
  check_pairs(inst, pairs, "reward_nll");
  std::vector<double> losses(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PrefPair& p = pairs[i];
    losses[i] = -log_sigmoid(inst.reward[p.ctx_good][p.answer] - inst.reward[p.ctx_bad][p.answer]);
  }
  return pairwise_mean(losses);
}

double partition_Z(const DiscreteInstance& inst, int context) {
  validate_instance(inst);
  check_context(inst, context, "partition_Z");
  double z = 0.0;
  for (int a = 0; a < inst.vocab(); ++a)
    z += inst.ref[context][a] * std::exp(inst.reward[context][a] / inst.beta);
  return z;
}

std::vector<double> optimal_policy(const DiscreteInstance& inst, int context) {
  const double z = partition_Z(inst, context);
  std::vector<double> pi(static_cast<std::size_t>(inst.vocab()));
  for (int a = 0; a < inst.vocab(); ++a)
    pi[a] = inst.ref[context][a] * std::exp(inst.reward[context][a] / inst.beta) / z;
  return pi;
}

std::vector<double> implied_reward(const std::vector<double>& pi, const std::vector<double>& ref,
                                   double beta, double Z) {
  if (pi.size() != ref.size())
    throw std::invalid_argument("implied_reward: length mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("implied_reward: beta must be > 0");
  if (!(Z > 0.0)) throw std::invalid_argument("implied_reward: Z must be > 0");
  std::vector<double> r(pi.size());
  for (std::size_t a = 0; a < pi.size(); ++a) {
    if (!(pi[a] > 0.0) || !(ref[a] > 0.0))
      throw std::domain_error("implied_reward: zero probability entry");
    r[a] = beta * std::log(pi[a] / ref[a]) + beta * std::log(Z);
  }
  return r;
}

double rlhf_objective_exact(const PolicyTable& policy, const DiscreteInstance& inst,
                            const std::vector<int>& contexts) {
  validate_instance(inst);
  check_table(inst, policy, "rlhf_objective_exact");

  std::vector<int> ctxs = contexts;
  if (ctxs.empty())
    for (int c = 0; c < inst.contexts(); ++c) ctxs.push_back(c);

  std::vector<double> per_context(ctxs.size());
  for (std::size_t i = 0; i < ctxs.size(); ++i) {
    const int c = ctxs[i];
    check_context(inst, c, "rlhf_objective_exact");
    const auto& pi = policy[c];
    double sum = 0.0;
    for (double p : pi) sum += p;
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("rlhf_objective_exact: policy row " + std::to_string(c) +
                                  " not normalized");
    double expected_reward = 0.0;
    double kl = 0.0;
    for (int a = 0; a < inst.vocab(); ++a) {
      if (pi[a] < 0.0)
        throw std::invalid_argument("rlhf_objective_exact: negative policy probability");
      if (pi[a] == 0.0) continue;  // 0*log(0) -> 0
      expected_reward += pi[a] * inst.reward[c][a];
      kl += pi[a] * std::log(pi[a] / inst.ref[c][a]);
    }
    per_context[i] = expected_reward - inst.beta * kl;
  }
  return pairwise_mean(per_context);
}

namespace {

// beta * [log(theta/ref)(good) - log(theta/ref)(bad)] for one pair
double pair_a_term(const DiscreteInstance& inst, const PolicyTable& theta, const PrefPair& p) {
  const double pw = theta[p.ctx_good][p.answer];
  const double pl = theta[p.ctx_bad][p.answer];
  const double rw = inst.ref[p.ctx_good][p.answer];
  const double rl = inst.ref[p.ctx_bad][p.answer];
  if (!(pw > 0.0) || !(pl > 0.0) || !(rw > 0.0) || !(rl > 0.0))
    throw std::domain_error("verify_upper_bound: zero probability in ratio");
  return inst.beta * (std::log(pw / rw) - std::log(pl / rl));
}

}  // namespace

double discrete_dpo_loss(const DiscreteInstance& inst, const PolicyTable& theta,
                         const std::vector<PrefPair>& pairs, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("discrete_dpo_loss: alpha must be > 0");
  check_pairs(inst, pairs, "discrete_dpo_loss");
  check_table(inst, theta, "discrete_dpo_loss");
  std::vector<double> losses(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const PrefPair& p = pairs[i];
    const double log_ratio_diff = std::log(theta[p.ctx_good][p.answer] / inst.ref[p.ctx_good][p.answer]) -
                                  std::log(theta[p.ctx_bad][p.answer] / inst.ref[p.ctx_bad][p.answer]);
    losses[i] = -log_sigmoid(alpha * log_ratio_diff);
  }
  return pairwise_mean(losses);
}

double discrete_dpo_dir_deriv(const DiscreteInstance& inst, const PolicyTable& theta,
                              const std::vector<PrefPair>& pairs, double alpha,
                              const PolicyTable& direction) {
  if (!(alpha > 0.0)) throw std::invalid_argument("discrete_dpo_dir_deriv: alpha must be > 0");
  check_pairs(inst, pairs, "discrete_dpo_dir_deriv");
  check_table(inst, theta, "discrete_dpo_dir_deriv");
  check_table(inst, direction, "discrete_dpo_dir_deriv");
  double acc = 0.0;
  for (const PrefPair& p : pairs) {
    const double u = alpha * (std::log(theta[p.ctx_good][p.answer] / inst.ref[p.ctx_good][p.answer]) -
                              std::log(theta[p.ctx_bad][p.answer] / inst.ref[p.ctx_bad][p.answer]));
    const double du = alpha * (direction[p.ctx_good][p.answer] / theta[p.ctx_good][p.answer] -
                               direction[p.ctx_bad][p.answer] / theta[p.ctx_bad][p.answer]);
    acc += -stable_sigmoid(-u) * du;
  }
  return acc / static_cast<double>(pairs.size());
}

BoundReport verify_upper_bound(const DiscreteInstance& inst, const PolicyTable& theta,
                               const std::vector<PrefPair>& pairs,
                               std::uint64_t direction_seed) {
  validate_instance(inst);
  check_pairs(inst, pairs, "verify_upper_bound");
  check_table(inst, theta, "verify_upper_bound");

  const std::size_t n = pairs.size();
  std::vector<double> lhs_terms(n), rhs_terms(n), a_terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PrefPair& p = pairs[i];
    const double a = pair_a_term(inst, theta, p);
    const double z =
        inst.beta * (std::log(partition_Z(inst, p.ctx_good)) - std::log(partition_Z(inst, p.ctx_bad)));
    a_terms[i] = a;
    lhs_terms[i] = -log_sigmoid(a + z);
    rhs_terms[i] = -0.5 * log_sigmoid(2.0 * a) - 0.5 * log_sigmoid(2.0 * z);
  }

  BoundReport report;
  report.lhs = pairwise_mean(lhs_terms);
  report.rhs = pairwise_mean(rhs_terms);
  report.holds = report.lhs <= report.rhs + 1e-12;

  // Directional derivative of rhs along a random table direction. Only the
  // -1/2 log sigmoid(2a) half depends on theta.
  const double alpha = 2.0 * inst.beta;
  Rng rng(direction_seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    PolicyTable direction(theta.size());
    for (std::size_t c = 0; c < theta.size(); ++c) {
      direction[c].resize(theta[c].size());
      for (double& v : direction[c]) v = rng.uniform(-1.0, 1.0);
    }
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const PrefPair& p = pairs[i];
      const double da = inst.beta * (direction[p.ctx_good][p.answer] / theta[p.ctx_good][p.answer] -
                                     direction[p.ctx_bad][p.answer] / theta[p.ctx_bad][p.answer]);
      num += -stable_sigmoid(-2.0 * a_terms[i]) * da;
    }
    num /= static_cast<double>(n);
    const double den = discrete_dpo_dir_deriv(inst, theta, pairs, alpha, direction);
    // Saturated sigmoids make both derivatives tiny but the ratio stays
    // well-conditioned; only an exactly-zero denominator is degenerate.
    if (den != 0.0) {
      report.grad_ratio = num / den;
      return report;
    }
    // degenerate direction; retry with the next seeded draw
  }
  throw EvalError("verify_upper_bound: could not find a usable direction");
}

DiscreteInstance random_instance(Rng& rng, double beta, int max_contexts, int max_vocab) {
  if (max_contexts < 2 || max_vocab < 2)
    throw std::invalid_argument("random_instance: need at least 2 contexts and 2 answers");
  DiscreteInstance inst;
  inst.beta = beta;
  const int contexts = rng.uniform_int(2, max_contexts);
  const int vocab = rng.uniform_int(2, max_vocab);
  inst.ref.resize(contexts);
  inst.reward.resize(contexts);
  for (int c = 0; c < contexts; ++c) {
    inst.ref[c].resize(vocab);
    inst.reward[c].resize(vocab);
    double sum = 0.0;
    for (double& p : inst.ref[c]) {
      p = rng.uniform(0.05, 1.0);
      sum += p;
    }
    for (double& p : inst.ref[c]) p /= sum;
    for (double& r : inst.reward[c]) r = rng.uniform(-2.0, 2.0);
  }
  return inst;
}

PolicyTable random_policy_table(Rng& rng, int contexts, int vocab) {
  PolicyTable table(static_cast<std::size_t>(contexts));
  for (auto& row : table) {
    row.resize(static_cast<std::size_t>(vocab));
    double sum = 0.0;
    for (double& p : row) {
      p = rng.uniform(0.05, 1.0);
      sum += p;
    }
    for (double& p : row) p /= sum;
  }
  return table;
}

std::vector<PrefPair> random_pairs(Rng& rng, int contexts, int vocab, int n_pairs) {
  if (contexts < 2) throw std::invalid_argument("random_pairs: need >= 2 contexts");
  std::vector<PrefPair> pairs(static_cast<std::size_t>(n_pairs));
  for (PrefPair& p : pairs) {
    p.answer = rng.uniform_int(0, vocab - 1);
    p.ctx_good = rng.uniform_int(0, contexts - 1);
    do {
      p.ctx_bad = rng.uniform_int(0, contexts - 1);
    } while (p.ctx_bad == p.ctx_good);
  }
  return pairs;
}

ForcedEqualityCase forced_equality_case(Rng& rng, double beta) {
  // Disjoint context pairs; constant-per-context rewards make z fully
  // controllable, so we set z equal to the a computed from random tables.
  ForcedEqualityCase fc;
  const int n_pairs = rng.uniform_int(1, 3);
  const int contexts = 2 * n_pairs;
  const int vocab = rng.uniform_int(4, 8);

  fc.instance.beta = beta;
  fc.instance.ref = random_policy_table(rng, contexts, vocab);
  fc.theta = random_policy_table(rng, contexts, vocab);
  fc.instance.reward.assign(contexts, std::vector<double>(vocab, 0.0));

  for (int i = 0; i < n_pairs; ++i) {
    PrefPair p;
    p.answer = rng.uniform_int(0, vocab - 1);
    p.ctx_good = 2 * i;
    p.ctx_bad = 2 * i + 1;
    const double a = pair_a_term(fc.instance, fc.theta, p);
    // z = beta*(log Z_good - log Z_bad) = r_good - r_bad for constant rows
    for (double& r : fc.instance.reward[p.ctx_good]) r = a;
    fc.pairs.push_back(p);
  }
  return fc;
}

}  // namespace imagedpo
