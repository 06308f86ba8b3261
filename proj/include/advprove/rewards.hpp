#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "advprove/core.hpp"

namespace advprove::rewards {

struct FuserRewardInput {
  double pass_rate = 0.0;          // p in [0,1]
  double modification_rate = 0.0;  // m in [0,1]
  bool compile_ok = false;
};

struct ProverRewardInput {
  bool passed = false;
  bool modified = false;
};

struct AdvantageGroup {
  std::vector<double> rewards;
  std::vector<double> advantages;
};

// Fuser reward: (1 - p) * (1 - m), zeroed when the statement failed to
// compile or the prover never solved it. Disabling the modification penalty
// drops the (1 - m) factor.
inline double fuser_reward(const FuserRewardInput& in,
                           bool modification_penalty_enabled = true) {
  if (!(in.pass_rate >= 0.0 && in.pass_rate <= 1.0))
    throw std::invalid_argument("fuser_reward: pass rate outside [0,1]");
  if (!(in.modification_rate >= 0.0 && in.modification_rate <= 1.0))
    throw std::invalid_argument("fuser_reward: modification rate outside [0,1]");
  if (!in.compile_ok || in.pass_rate == 0.0) return 0.0;
  double r = 1.0 - in.pass_rate;
  if (modification_penalty_enabled) r *= 1.0 - in.modification_rate;
  return r;
}

// Prover reward: correctness gate plus the soft modification penalty,
// r = 1{passed} - 0.5 * m. A verified unmodified proof earns 1, a verified
// restated proof 0.5, an honest failure 0, and a restated failure -0.5; the
// penalty term applies to every attempt, so restating the goal costs reward
// whether or not the proof verified. Disabling the penalty drops the
// 0.5 * m term.
inline double prover_reward(const ProverRewardInput& in,
                            bool modification_penalty_enabled = true) {
  double r = in.passed ? 1.0 : 0.0;
  if (modification_penalty_enabled && in.modified) r -= 0.5;
  return r;
}

// Group-relative advantages: z-scores under the population standard
// deviation. A constant reward vector carries no preference, so it maps to
// all-zero advantages instead of dividing by zero.
inline AdvantageGroup group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2)
    throw std::invalid_argument("group_advantages: need at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  AdvantageGroup g;
  g.rewards.assign(rewards.begin(), rewards.end());
  g.advantages.resize(rewards.size(), 0.0);
  if (var == 0.0) return g;
  const double sd = std::sqrt(var);
  for (std::size_t i = 0; i < rewards.size(); ++i)
    g.advantages[i] = (rewards[i] - mean) / sd;
  return g;
}

// Keeps the hard-and-medium band 0 < p <= 0.5; unsolved and too-easy
// statements are excluded from prover training. Order preserved.
inline std::vector<core::RolloutGroup> filter_for_prover_training(
    const std::vector<core::RolloutGroup>& groups) {
  std::vector<core::RolloutGroup> kept;
  for (const auto& g : groups) {
    if (g.pass_rate > 0.0 && g.pass_rate <= 0.5) kept.push_back(g);
  }
  return kept;
}

}  // namespace advprove::rewards
