#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace advprove::report {

struct LogRow {
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
};

inline std::vector<LogRow> read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("run log: cannot open " + path);
  std::vector<LogRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("run log: " + path + ":" +
                               std::to_string(lineno) + ": " + e.what());
    }
    LogRow r;
    r.iteration = j.at("iteration").get<int>();
    r.generated_count = j.at("generated_count").get<int>();
    r.compile_pass_count = j.at("compile_pass_count").get<int>();
    r.filtered_for_prover_count = j.at("filtered_for_prover_count").get<int>();
    r.pass_at_x = j.at("pass_at_x").get<double>();
    r.avg_correctness = j.at("avg_correctness").get<double>();
    r.modification_rate = j.at("modification_rate").get<double>();
    r.mean_difficulty = j.at("mean_difficulty").get<double>();
    r.base_policy_avg_correctness =
        j.at("base_policy_avg_correctness").get<double>();
    r.trained_policy_avg_correctness =
        j.at("trained_policy_avg_correctness").get<double>();
    rows.push_back(r);
  }
  return rows;
}

inline std::string metrics_table(const std::vector<LogRow>& rows) {
  std::ostringstream out;
  out << "iteration\tpass_at_x\tavg_correctness\tmodification_rate\t"
         "mean_difficulty\tbase_policy_avg_correctness\t"
         "trained_policy_avg_correctness\n";
  for (const auto& r : rows) {
    out << r.iteration << '\t' << r.pass_at_x << '\t' << r.avg_correctness
        << '\t' << r.modification_rate << '\t' << r.mean_difficulty << '\t'
        << r.base_policy_avg_correctness << '\t'
        << r.trained_policy_avg_correctness << '\n';
  }
  return out.str();
}

inline std::string summarize(const std::vector<LogRow>& rows,
                             const std::string& name) {
  if (rows.empty()) return name + ": no iterations logged\n";
  const auto& first = rows.front();
  const auto& last = rows.back();
  std::ostringstream out;
  out << name << ": " << rows.size() << " iteration(s)\n";
  out << "  mean difficulty " << first.mean_difficulty << " -> "
      << last.mean_difficulty << "\n";
  out << "  base-policy correctness " << first.base_policy_avg_correctness
      << " -> " << last.base_policy_avg_correctness << "\n";
  out << "  trained-policy correctness "
      << first.trained_policy_avg_correctness << " -> "
      << last.trained_policy_avg_correctness << "\n";
  out << "  modification rate " << first.modification_rate << " -> "
      << last.modification_rate << "\n";
  return out.str();
}

inline std::string compare(const std::vector<LogRow>& a,
                           const std::vector<LogRow>& b,
                           const std::string& name_a,
                           const std::string& name_b) {
  std::ostringstream out;
  if (a.empty() || b.empty()) {
    out << "comparison skipped: at least one log is empty\n";
    return out.str();
  }
  const double ma = a.back().modification_rate;
  const double mb = b.back().modification_rate;
  out << "final modification rate: " << name_a << " " << ma << ", " << name_b
      << " " << mb << "\n";
  if (ma > mb)
    out << name_a << " had the higher final modification rate\n";
  else if (mb > ma)
    out << name_b << " had the higher final modification rate\n";
  else
    out << "both runs ended with equal modification rates\n";
  return out.str();
}

}  // namespace advprove::report
