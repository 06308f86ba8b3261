#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "advprove/policy.hpp"

namespace advprove::grpo {

enum class Role { fuser, prover };

struct GrpoHyperparams {
  double epsilon = 0.2;  // clip radius, in (0,1)
  double beta = 0.01;    // KL weight
  // Desk-scale default for tabular policies; 2e-6 is the LLM-scale value.
  double learning_rate = 0.05;
  int updates_per_iteration = 1;
  // When true, the ratio denominator is the reference policy instead of the
  // rollout policy (the literal prover-objective variant); off by default.
  bool ratio_uses_reference = false;
};

struct GrpoItem {
  double logp_new = 0.0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
  double advantage = 0.0;
};

// (context, response) behind an item, needed to differentiate through the
// policy table.
struct GrpoSample {
  int context = 0;
  std::vector<int> tokens;
};

struct GrpoBatch {
  std::vector<GrpoItem> items;
  Role role = Role::prover;
};

inline void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string("grpo: non-finite ") + what);
}

inline double prob_ratio(double logp_new, double logp_old) {
  check_finite(logp_new, "logp_new");
  check_finite(logp_old, "logp_old");
  return std::exp(logp_new - logp_old);
}

// min{ratio * A, clip(ratio, 1 - eps, 1 + eps) * A}
inline double clipped_surrogate(double ratio, double advantage, double epsilon) {
  if (!(ratio > 0.0)) throw std::invalid_argument("grpo: ratio must be > 0");
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

// k3 estimator: u - log u - 1 with u = pi_ref / pi_new. Nonnegative, zero iff
// the log probabilities agree.
inline double kl_estimate(double logp_new, double logp_ref) {
  check_finite(logp_new, "logp_new");
  check_finite(logp_ref, "logp_ref");
  const double log_u = logp_ref - logp_new;
  return std::exp(log_u) - log_u - 1.0;
}

inline double item_objective(const GrpoItem& it, const GrpoHyperparams& hp) {
  const double denom = hp.ratio_uses_reference ? it.logp_ref : it.logp_old;
  const double ratio = prob_ratio(it.logp_new, denom);
  return clipped_surrogate(ratio, it.advantage, hp.epsilon) -
         hp.beta * kl_estimate(it.logp_new, it.logp_ref);
}

// Mean over items of clipped surrogate minus beta * KL; the same assembly
// serves both roles.
inline double objective(const GrpoBatch& batch, const GrpoHyperparams& hp) {
  if (batch.items.empty()) throw std::invalid_argument("grpo: empty batch");
  double sum = 0.0;
  for (const auto& it : batch.items) sum += item_objective(it, hp);
  return sum / static_cast<double>(batch.items.size());
}

// d objective / d logp_new for one item. At an exact tie between the min's
// arguments the unclipped branch is used, so the surrogate stays a
// well-defined piecewise derivative.
inline double item_dobjective_dlogp(const GrpoItem& it, const GrpoHyperparams& hp) {
  const double denom = hp.ratio_uses_reference ? it.logp_ref : it.logp_old;
  const double ratio = prob_ratio(it.logp_new, denom);
  const double clipped = std::clamp(ratio, 1.0 - hp.epsilon, 1.0 + hp.epsilon);
  const double unclipped_val = ratio * it.advantage;
  const double clipped_val = clipped * it.advantage;
  double dsurr = 0.0;
  if (unclipped_val <= clipped_val) {
    dsurr = ratio * it.advantage;  // d(ratio*A)/dlogp = ratio*A
  }
  // else: the saturated clip branch is constant in theta.
  const double u = std::exp(it.logp_ref - it.logp_new);
  const double dkl = 1.0 - u;
  return dsurr - hp.beta * dkl;
}

// Exact gradient of the objective over the policy table. logp_new is
// recomputed from `policy` so the result always differentiates the policy it
// is applied to; logp_old and logp_ref in the items are constants.
inline std::vector<double> objective_gradient(
    const GrpoBatch& batch, std::span<const GrpoSample> samples,
    const GrpoHyperparams& hp, const policy::PolicySnapshot& policy) {
  if (batch.items.empty()) throw std::invalid_argument("grpo: empty batch");
  if (samples.size() != batch.items.size())
    throw std::invalid_argument("grpo: samples/items length mismatch");
  std::vector<double> grad(policy.shape().params(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.items.size());
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    GrpoItem it = batch.items[i];
    it.logp_new = policy.log_prob(samples[i].context, samples[i].tokens);
    const double w = item_dobjective_dlogp(it, hp) * inv_n;
    if (w == 0.0) continue;
    const auto g = policy.grad_log_prob(samples[i].context, samples[i].tokens);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += w * g[k];
  }
  return grad;
}

// One ascent step theta <- theta + lr * g; returns the post-step snapshot.
inline policy::PolicySnapshot apply_update(policy::PolicyHandle& policy,
                                           std::span<const double> gradient,
                                           const GrpoHyperparams& hp) {
  policy.ascend(gradient, hp.learning_rate);
  return policy.snapshot();
}

}  // namespace advprove::grpo
