#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advprove/core.hpp"
#include "advprove/policy.hpp"

namespace advprove::arena {

enum class OpKind { add, mul };

struct ChainOp {
  OpKind kind = OpKind::add;
  int operand = 0;
};

// A chain-evaluation statement over Z_M: starting from seed_value, apply the
// ops in order; the statement claims the final value equals target. It is
// solvable iff the claim is true.
struct ChainStatement {
  int modulus = 5;
  int seed_value = 0;
  std::vector<ChainOp> ops;
  int target = 0;
};

// A proof restates the goal (declared_target) and lists every intermediate
// value of the chain.
struct ChainProof {
  int declared_target = 0;
  std::vector<int> values;
};

enum class FusePattern { concat_ab, concat_ba, interleave };

struct FusionAction {
  FusePattern pattern = FusePattern::concat_ab;
  // 0 requests the true target; a nonzero offset in Z_M makes the fused
  // statement unsolvable by shifting the target off the true value.
  int target_offset = 0;
};

inline int difficulty(const ChainStatement& s) {
  return static_cast<int>(s.ops.size());
}

inline int apply_op(const ChainOp& op, int value, int modulus) {
  long long v = value;
  if (op.kind == OpKind::add)
    v = (v + op.operand) % modulus;
  else
    v = (v * op.operand) % modulus;
  return static_cast<int>(v);
}

// y_1 .. y_L, the unique correct intermediate values.
inline std::vector<int> chain_values(const ChainStatement& s) {
  std::vector<int> values;
  values.reserve(s.ops.size());
  int v = s.seed_value;
  for (const auto& op : s.ops) {
    v = apply_op(op, v, s.modulus);
    values.push_back(v);
  }
  return values;
}

inline int chain_result(const ChainStatement& s) {
  int v = s.seed_value;
  for (const auto& op : s.ops) v = apply_op(op, v, s.modulus);
  return v;
}

inline bool solvable(const ChainStatement& s) {
  return !s.ops.empty() && chain_result(s) == s.target;
}

// Deterministic, total verification. A pass requires the exact true value
// chain ending in the declared goal, and the declared goal must match the
// statement's target; restating the goal marks the attempt modified.
inline core::Verdict verify(const ChainStatement& statement,
                            const ChainProof& proof) {
  core::Verdict v;
  v.used_escape_tactic = false;
  v.modified = proof.declared_target != statement.target;
  if (proof.values.size() != statement.ops.size()) {
    v.status = core::Status::error;
    return v;
  }
  const auto truth = chain_values(statement);
  bool chain_ok = true;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (proof.values[i] != truth[i]) {
      chain_ok = false;
      break;
    }
  }
  const bool ends_at_declared =
      !proof.values.empty() && proof.values.back() == proof.declared_target;
  const bool honest = proof.declared_target == statement.target;
  v.status = (chain_ok && ends_at_declared && honest) ? core::Status::pass
                                                      : core::Status::fail;
  return v;
}

inline ChainStatement fuse(const ChainStatement& a, const ChainStatement& b,
                           const FusionAction& action) {
  if (a.modulus != b.modulus)
    throw std::invalid_argument("fuse: modulus mismatch");
  if (action.target_offset < 0 || action.target_offset >= a.modulus)
    throw std::invalid_argument("fuse: target offset outside Z_M");
  ChainStatement fused;
  fused.modulus = a.modulus;
  fused.seed_value = a.seed_value;
  switch (action.pattern) {
    case FusePattern::concat_ab:
      fused.ops = a.ops;
      fused.ops.insert(fused.ops.end(), b.ops.begin(), b.ops.end());
      break;
    case FusePattern::concat_ba:
      fused.ops = b.ops;
      fused.ops.insert(fused.ops.end(), a.ops.begin(), a.ops.end());
      break;
    case FusePattern::interleave: {
      std::size_t i = 0, j = 0;
      while (i < a.ops.size() || j < b.ops.size()) {
        if (i < a.ops.size()) fused.ops.push_back(a.ops[i++]);
        if (j < b.ops.size()) fused.ops.push_back(b.ops[j++]);
      }
      break;
    }
  }
  const int truth = chain_result(fused);
  fused.target = (truth + action.target_offset) % fused.modulus;
  return fused;
}

// Grammar-only filter: constants in range, ops non-empty, length within the
// cap. Solvability is deliberately not checked.
inline bool compile_check(const ChainStatement& s, int max_chain_length) {
  if (s.modulus < 2) return false;
  if (s.ops.empty()) return false;
  if (difficulty(s) > max_chain_length) return false;
  if (s.seed_value < 0 || s.seed_value >= s.modulus) return false;
  if (s.target < 0 || s.target >= s.modulus) return false;
  for (const auto& op : s.ops)
    if (op.operand < 0 || op.operand >= s.modulus) return false;
  return true;
}

// --- structural encoding -----------------------------------------------
// One statement per line: "<modulus> <x0> <ops> <target>" with ops like
// "add:3,mul:2". The repository format prepends an id and appends optional
// comma-separated tags.

inline std::string encode_ops(const std::vector<ChainOp>& ops) {
  std::string out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out += ',';
    out += ops[i].kind == OpKind::add ? "add:" : "mul:";
    out += std::to_string(ops[i].operand);
  }
  return out;
}

inline std::vector<ChainOp> parse_ops(const std::string& text) {
  std::vector<ChainOp> ops;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("parse_ops: missing ':' in '" + item + "'");
    const std::string kind = item.substr(0, colon);
    ChainOp op;
    if (kind == "add")
      op.kind = OpKind::add;
    else if (kind == "mul")
      op.kind = OpKind::mul;
    else
      throw std::invalid_argument("parse_ops: unknown op '" + kind + "'");
    op.operand = std::stoi(item.substr(colon + 1));
    ops.push_back(op);
    start = end + 1;
  }
  if (ops.empty()) throw std::invalid_argument("parse_ops: empty op list");
  return ops;
}

inline std::string encode_statement(const ChainStatement& s) {
  std::ostringstream oss;
  oss << s.modulus << ' ' << s.seed_value << ' ' << encode_ops(s.ops) << ' '
      << s.target;
  return oss.str();
}

inline ChainStatement parse_statement(const std::string& body) {
  std::istringstream iss(body);
  ChainStatement s;
  std::string ops;
  if (!(iss >> s.modulus >> s.seed_value >> ops >> s.target))
    throw std::invalid_argument("parse_statement: bad record '" + body + "'");
  s.ops = parse_ops(ops);
  return s;
}

struct RepositoryEntry {
  std::string id;
  ChainStatement chain;
  std::vector<std::string> tags;
};

inline RepositoryEntry parse_repository_line(const std::string& line) {
  std::istringstream iss(line);
  RepositoryEntry e;
  std::string ops, tags;
  if (!(iss >> e.id >> e.chain.modulus >> e.chain.seed_value >> ops >>
        e.chain.target))
    throw std::invalid_argument("repository: bad line '" + line + "'");
  e.chain.ops = parse_ops(ops);
  if (iss >> tags) {
    std::size_t start = 0;
    while (start < tags.size()) {
      std::size_t end = tags.find(',', start);
      if (end == std::string::npos) end = tags.size();
      if (end > start) e.tags.push_back(tags.substr(start, end - start));
      start = end + 1;
    }
  }
  return e;
}

inline std::string format_repository_line(const RepositoryEntry& e) {
  std::string out = e.id + ' ' + encode_statement(e.chain);
  if (!e.tags.empty()) {
    out += ' ';
    for (std::size_t i = 0; i < e.tags.size(); ++i) {
      if (i) out += ',';
      out += e.tags[i];
    }
  }
  return out;
}

inline std::vector<RepositoryEntry> load_repository(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("repository: cannot open " + path);
  std::vector<RepositoryEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    try {
      entries.push_back(parse_repository_line(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("repository: " + path + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  return entries;
}

// --- codecs --------------------------------------------------------------

inline int difficulty_bucket(int length, int bucket_width, int bucket_count) {
  int b = (length - 1) / bucket_width;
  if (b >= bucket_count) b = bucket_count - 1;
  return b < 0 ? 0 : b;
}

// Maps statements to prover contexts and token sequences to proofs. Tokens
// are offsets from the correct proof: token 0 at every position is the
// unique clean proof, the first token shifts the declared goal, and later
// tokens shift the corresponding intermediate value.
struct ProverCodec {
  int modulus = 5;
  int max_chain_length = 12;
  int bucket_width = 4;
  // When set, the context distinguishes statements whose stated target is
  // consistent with the chain from those where it is not; the prover may
  // condition its behavior on having noticed an unprovable goal.
  bool condition_on_solvable = false;

  int bucket_count() const {
    return (max_chain_length + bucket_width - 1) / bucket_width;
  }
  int contexts() const {
    return bucket_count() * (condition_on_solvable ? 2 : 1);
  }
  int positions() const { return max_chain_length + 1; }
  int vocab() const { return modulus; }
  policy::PolicyShape shape() const {
    return {contexts(), positions(), vocab()};
  }

  int context_of(const ChainStatement& s) const {
    const int b =
        difficulty_bucket(difficulty(s), bucket_width, bucket_count());
    if (!condition_on_solvable) return b;
    return b * 2 + (solvable(s) ? 1 : 0);
  }
  int response_length(const ChainStatement& s) const {
    return difficulty(s) + 1;
  }

  ChainProof decode_proof(const ChainStatement& s,
                          std::span<const int> tokens) const {
    if (static_cast<int>(tokens.size()) != response_length(s))
      throw std::invalid_argument("ProverCodec: token length mismatch");
    ChainProof p;
    p.declared_target = (s.target + tokens[0]) % s.modulus;
    const auto truth = chain_values(s);
    p.values.resize(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
      p.values[i] = (truth[i] + tokens[i + 1]) % s.modulus;
    return p;
  }

  std::vector<int> encode_proof(const ChainStatement& s,
                                const ChainProof& p) const {
    if (p.values.size() != s.ops.size())
      throw std::invalid_argument("ProverCodec: proof length mismatch");
    std::vector<int> tokens(p.values.size() + 1);
    const int m = s.modulus;
    tokens[0] = ((p.declared_target - s.target) % m + m) % m;
    const auto truth = chain_values(s);
    for (std::size_t i = 0; i < truth.size(); ++i)
      tokens[i + 1] = ((p.values[i] - truth[i]) % m + m) % m;
    return tokens;
  }
};

// Maps parent difficulty pairs to fuser contexts and two-token responses to
// fusion actions: token 0 selects the composition pattern (mod 3), token 1
// selects the true target (0) or a perturbation offset.
struct FuserCodec {
  int modulus = 5;
  int max_chain_length = 12;
  int bucket_width = 4;

  int bucket_count() const {
    return (max_chain_length + bucket_width - 1) / bucket_width;
  }
  int contexts() const { return bucket_count() * bucket_count(); }
  int positions() const { return 2; }
  int vocab() const { return modulus > 3 ? modulus : 3; }
  policy::PolicyShape shape() const {
    return {contexts(), positions(), vocab()};
  }

  int context_of(const ChainStatement& a, const ChainStatement& b) const {
    const int ba = difficulty_bucket(difficulty(a), bucket_width, bucket_count());
    const int bb = difficulty_bucket(difficulty(b), bucket_width, bucket_count());
    return ba * bucket_count() + bb;
  }

  FusionAction decode_action(std::span<const int> tokens) const {
    if (tokens.size() != 2)
      throw std::invalid_argument("FuserCodec: action needs 2 tokens");
    FusionAction act;
    switch (tokens[0] % 3) {
      case 0: act.pattern = FusePattern::concat_ab; break;
      case 1: act.pattern = FusePattern::concat_ba; break;
      default: act.pattern = FusePattern::interleave; break;
    }
    act.target_offset = tokens[1] % modulus;
    return act;
  }
};

// Exact probability that one sampled proof is a clean pass, by enumerating
// every token sequence and weighing the verdicts with the policy. This is
// the brute-force oracle the empirical pass rate is checked against.
inline double exact_pass_probability(const policy::PolicySnapshot& snapshot,
                                     const ChainStatement& statement,
                                     const ProverCodec& codec,
                                     std::uint64_t budget = 1000000) {
  const int len = codec.response_length(statement);
  const int v = codec.vocab();
  std::uint64_t total = 1;
  for (int i = 0; i < len; ++i) {
    total *= static_cast<std::uint64_t>(v);
    if (total > budget)
      throw std::invalid_argument("exact_pass_probability: budget exceeded");
  }
  const int context = codec.context_of(statement);
  double prob = 0.0;
  std::vector<int> tokens(len, 0);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t rem = idx;
    for (int i = 0; i < len; ++i) {
      tokens[i] = static_cast<int>(rem % v);
      rem /= v;
    }
    const auto proof = codec.decode_proof(statement, tokens);
    if (core::clean_pass(verify(statement, proof)))
      prob += std::exp(snapshot.log_prob(context, tokens));
  }
  return prob;
}

}  // namespace advprove::arena
