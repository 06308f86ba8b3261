#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "advprove/rng.hpp"

namespace advprove::policy {

struct PolicyShape {
  int contexts = 0;
  int positions = 0;
  int vocab = 0;

  int params() const { return contexts * positions * vocab; }
  int row_offset(int context, int position) const {
    return (context * positions + position) * vocab;
  }
  bool operator==(const PolicyShape&) const = default;
};

namespace detail {

inline void check_prompt(const PolicyShape& shape, int context,
                         std::span<const int> tokens) {
  if (context < 0 || context >= shape.contexts)
    throw std::invalid_argument("policy: context index out of range");
  if (static_cast<int>(tokens.size()) > shape.positions)
    throw std::invalid_argument("policy: response longer than position table");
  for (int t : tokens)
    if (t < 0 || t >= shape.vocab)
      throw std::invalid_argument("policy: token outside vocabulary");
}

// log softmax denominator of one (context, position) row, max-shifted.
inline double log_norm(std::span<const double> row, double row_max) {
  double s = 0.0;
  for (double v : row) s += std::exp(v - row_max);
  return row_max + std::log(s);
}

}  // namespace detail

// Immutable view of a tabular position-factorized softmax policy: every
// (context, position) pair owns an independent logit row over the vocabulary.
class PolicySnapshot {
 public:
  PolicySnapshot() = default;
  PolicySnapshot(PolicyShape shape, std::vector<double> theta)
      : shape_(shape), theta_(std::move(theta)) {
    if (static_cast<int>(theta_.size()) != shape_.params())
      throw std::invalid_argument("PolicySnapshot: theta size mismatch");
  }

  const PolicyShape& shape() const { return shape_; }
  const std::vector<double>& theta() const { return theta_; }

  // Sum over positions of log softmax(theta[context, position, :])[token].
  // The empty response has log probability 0.
  double log_prob(int context, std::span<const int> tokens) const {
    detail::check_prompt(shape_, context, tokens);
    double lp = 0.0;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      auto row = row_span(context, static_cast<int>(pos));
      const double m = *std::max_element(row.begin(), row.end());
      lp += row[tokens[pos]] - detail::log_norm(row, m);
    }
    return lp;
  }

  // Analytic d log_prob / d theta: one-hot(token) - softmax(row) on visited
  // rows, zero everywhere else. Returned dense over the full table.
  std::vector<double> grad_log_prob(int context,
                                    std::span<const int> tokens) const {
    detail::check_prompt(shape_, context, tokens);
    std::vector<double> grad(theta_.size(), 0.0);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      auto row = row_span(context, static_cast<int>(pos));
      const int off = shape_.row_offset(context, static_cast<int>(pos));
      const double m = *std::max_element(row.begin(), row.end());
      double denom = 0.0;
      for (double v : row) denom += std::exp(v - m);
      for (int t = 0; t < shape_.vocab; ++t)
        grad[off + t] -= std::exp(row[t] - m) / denom;
      grad[off + tokens[pos]] += 1.0;
    }
    return grad;
  }

  // `count` independent length-`length` draws. Identical arguments always
  // produce identical output.
  std::vector<std::vector<int>> sample(int context, int length, int count,
                                       std::uint64_t seed) const {
    if (count < 1) throw std::invalid_argument("policy: count must be >= 1");
    if (length < 0 || length > shape_.positions)
      throw std::invalid_argument("policy: bad response length");
    if (context < 0 || context >= shape_.contexts)
      throw std::invalid_argument("policy: context index out of range");
    Rng rng(seed);
    std::vector<std::vector<int>> out(count);
    for (auto& seq : out) {
      seq.resize(length);
      for (int pos = 0; pos < length; ++pos) {
        const auto probs = token_probs(context, pos);
        seq[pos] = rng.categorical(probs);
      }
    }
    return out;
  }

  // Softmax distribution for one row; enumeration and oracle helper.
  std::vector<double> token_probs(int context, int position) const {
    auto row = row_span(context, position);
    const double m = *std::max_element(row.begin(), row.end());
    std::vector<double> p(shape_.vocab);
    double denom = 0.0;
    for (int t = 0; t < shape_.vocab; ++t) {
      p[t] = std::exp(row[t] - m);
      denom += p[t];
    }
    for (double& v : p) v /= denom;
    return p;
  }

  bool operator==(const PolicySnapshot&) const = default;

 private:
  std::span<const double> row_span(int context, int position) const {
    return {theta_.data() + shape_.row_offset(context, position),
            static_cast<std::size_t>(shape_.vocab)};
  }

  PolicyShape shape_;
  std::vector<double> theta_;
};

// The live, single-writer policy. All scoring goes through snapshots.
class PolicyHandle {
 public:
  PolicyHandle() = default;
  PolicyHandle(PolicyShape shape, std::vector<double> theta)
      : shape_(shape), theta_(std::move(theta)) {
    if (static_cast<int>(theta_.size()) != shape_.params())
      throw std::invalid_argument("PolicyHandle: theta size mismatch");
  }
  static PolicyHandle zeros(PolicyShape shape) {
    return PolicyHandle(shape, std::vector<double>(shape.params(), 0.0));
  }

  const PolicyShape& shape() const { return shape_; }
  const std::vector<double>& theta() const { return theta_; }

  double& logit(int context, int position, int token) {
    return theta_[shape_.row_offset(context, position) + token];
  }

  PolicySnapshot snapshot() const { return PolicySnapshot(shape_, theta_); }

  void ascend(std::span<const double> gradient, double learning_rate) {
    if (gradient.size() != theta_.size())
      throw std::invalid_argument("PolicyHandle: gradient shape mismatch");
    for (std::size_t i = 0; i < theta_.size(); ++i)
      theta_[i] += learning_rate * gradient[i];
  }

  void restore(const PolicySnapshot& snap) {
    if (!(snap.shape() == shape_))
      throw std::invalid_argument("PolicyHandle: snapshot shape mismatch");
    theta_ = snap.theta();
  }

 private:
  PolicyShape shape_;
  std::vector<double> theta_;
};

}  // namespace advprove::policy
