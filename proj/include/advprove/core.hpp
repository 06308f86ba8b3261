#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace advprove::core {

enum class Status { pass, fail, error, timeout };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::error: return "error";
    case Status::timeout: return "timeout";
  }
  return "error";
}

inline Status status_from_string(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "error") return Status::error;
  if (s == "timeout") return Status::timeout;
  throw std::invalid_argument("unknown status: " + s);
}

struct Verdict {
  Status status = Status::fail;
  bool modified = false;
  bool used_escape_tactic = false;
};

// A proof counts toward the pass rate only if it verified, kept the original
// statement, and closed no goal with the escape tactic.
inline bool clean_pass(const Verdict& v) {
  return v.status == Status::pass && !v.modified && !v.used_escape_tactic;
}

struct Lineage {
  bool fused = false;
  std::string parent_a;
  std::string parent_b;
  int iteration = 0;  // meaningful only when fused
};

struct Statement {
  std::string id;
  std::string informal_text;
  std::string formal_text;
  Lineage lineage;
  bool compile_ok = false;
};

struct ProofAttempt {
  std::string statement_id;
  std::string body;
  Verdict verdict;
};

struct RolloutGroup {
  Statement statement;
  std::vector<ProofAttempt> attempts;
  double pass_rate = 0.0;          // p: clean passes / n
  double modification_rate = 0.0;  // m: modified attempts / n
};

inline Statement make_fused_statement(const Statement& parent_a,
                                      const Statement& parent_b,
                                      std::string informal, std::string formal,
                                      int iteration, std::string id = "") {
  if (parent_a.id == parent_b.id)
    throw std::invalid_argument("make_fused_statement: identical parents: " +
                                parent_a.id);
  Statement s;
  s.id = id.empty() ? "f" + std::to_string(iteration) + "(" + parent_a.id +
                          "," + parent_b.id + ")"
                    : std::move(id);
  s.informal_text = std::move(informal);
  s.formal_text = std::move(formal);
  s.lineage.fused = true;
  s.lineage.parent_a = parent_a.id;
  s.lineage.parent_b = parent_b.id;
  s.lineage.iteration = iteration;
  s.compile_ok = false;
  return s;
}

inline RolloutGroup group_from_attempts(Statement statement,
                                        std::vector<ProofAttempt> attempts) {
  if (attempts.empty())
    throw std::invalid_argument("group_from_attempts: empty attempt list");
  for (const auto& a : attempts) {
    if (a.statement_id != statement.id)
      throw std::invalid_argument(
          "group_from_attempts: attempt for statement '" + a.statement_id +
          "' grouped under '" + statement.id + "'");
  }
  int passes = 0;
  int modified = 0;
  for (const auto& a : attempts) {
    if (clean_pass(a.verdict)) ++passes;
    if (a.verdict.modified) ++modified;
  }
  RolloutGroup g;
  g.statement = std::move(statement);
  const double n = static_cast<double>(attempts.size());
  g.attempts = std::move(attempts);
  g.pass_rate = static_cast<double>(passes) / n;
  g.modification_rate = static_cast<double>(modified) / n;
  return g;
}

// Per-iteration bookkeeping. wall_time_seconds is reported on the console
// only; the run log omits it so identical runs stay byte-identical.
struct IterationRecord {
  int iteration = 0;
  int generated_count = 0;
  int compile_pass_count = 0;
  int filtered_for_prover_count = 0;
  double pass_at_x = 0.0;
  double avg_correctness = 0.0;
  double modification_rate = 0.0;
  double mean_difficulty = 0.0;
  double base_policy_avg_correctness = 0.0;
  double trained_policy_avg_correctness = 0.0;
  double wall_time_seconds = 0.0;
};

}  // namespace advprove::core
