#pragma once

#include <cstdint>
#include <vector>

#include "imagedpo/rng.hpp"

namespace imagedpo {

// Fully enumerable preference setting: a reference policy table, a reward
// table, and the KL weight. Each row is a distribution over answers for one
// (question, image) context.
struct DiscreteInstance {
  std::vector<std::vector<double>> ref;     // [context][answer], rows sum to 1
  std::vector<std::vector<double>> reward;  // [context][answer]
  double beta = 1.0;

  int contexts() const { return static_cast<int>(ref.size()); }
  int vocab() const { return ref.empty() ? 0 : static_cast<int>(ref[0].size()); }
};

void validate_instance(const DiscreteInstance& inst);

// One preference pair: the same answer under a good-image context and a
// bad-image context.
struct PrefPair {
  int answer = 0;
  int ctx_good = 0;
  int ctx_bad = 0;
};

using PolicyTable = std::vector<std::vector<double>>;

/// exp(r_good) / (exp(r_good) + exp(r_bad)), evaluated as sigmoid(r_good - r_bad).
double bt_probability(double r_good, double r_bad);

/// -mean log sigmoid(r(ctx_good, a) - r(ctx_bad, a)) over the pairs.
double reward_nll(const DiscreteInstance& inst, const std::vector<PrefPair>& pairs);

/// Z(ctx) = sum_a ref(a|ctx) * exp(r(ctx,a)/beta), by exact enumeration.
double partition_Z(const DiscreteInstance& inst, int context);

/// pi*(a|ctx) = ref(a|ctx) * exp(r(ctx,a)/beta) / Z(ctx).
std::vector<double> optimal_policy(const DiscreteInstance& inst, int context);

/// r(a) = beta*log(pi(a)/ref(a)) + beta*log Z, per answer.
std::vector<double> implied_reward(const std::vector<double>& pi, const std::vector<double>& ref,
                                   double beta, double Z);

/// mean over contexts of  E_pi[r] - beta * KL(pi || ref), exact enumeration.
/// Empty `contexts` means all contexts.
double rlhf_objective_exact(const PolicyTable& policy, const DiscreteInstance& inst,
                            const std::vector<int>& contexts = {});

struct BoundReport {
  double lhs = 0.0;        // exact preference NLL including partition terms
  double rhs = 0.0;        // Jensen majorant; its theta half is the DPO loss at alpha=2*beta
  bool holds = false;      // lhs <= rhs + 1e-12
  double grad_ratio = 0.0; // directional d(rhs)/d(DPO loss at alpha=2*beta); expected 1/2
};

/// Checks the upper bound on one instance. Per pair,
///   a = beta*[log(theta/ref)(good) - log(theta/ref)(bad)]
///   z = beta*[log Z(good) - log Z(bad)]
/// lhs = mean -log sigmoid(a+z), rhs = mean [-1/2 log sigmoid(2a) - 1/2 log sigmoid(2z)].
/// grad_ratio compares the analytic directional derivative of rhs against an
/// independently coded derivative of the discrete DPO loss, along a seeded
/// random direction over the theta table.
BoundReport verify_upper_bound(const DiscreteInstance& inst, const PolicyTable& theta,
                               const std::vector<PrefPair>& pairs, std::uint64_t direction_seed);

/// Discrete-table DPO loss -mean log sigmoid(alpha*[log ratio diff]) and its
/// directional derivative; the independent denominator for grad_ratio.
double discrete_dpo_loss(const DiscreteInstance& inst, const PolicyTable& theta,
                         const std::vector<PrefPair>& pairs, double alpha);
double discrete_dpo_dir_deriv(const DiscreteInstance& inst, const PolicyTable& theta,
                              const std::vector<PrefPair>& pairs, double alpha,
                              const PolicyTable& direction);

// Random generators for verification sweeps.
DiscreteInstance random_instance(Rng& rng, double beta, int max_contexts = 6, int max_vocab = 8);
PolicyTable random_policy_table(Rng& rng, int contexts, int vocab);
std::vector<PrefPair> random_pairs(Rng& rng, int contexts, int vocab, int n_pairs);

// Instance + tables + pairs engineered so a == z per pair (Jensen equality).
struct ForcedEqualityCase {
  DiscreteInstance instance;
  PolicyTable theta;
  std::vector<PrefPair> pairs;
};
ForcedEqualityCase forced_equality_case(Rng& rng, double beta);

}  // namespace imagedpo
