#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "advprove/config.hpp"
#include "advprove/loop.hpp"
#include "advprove/report.hpp"

namespace advprove::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadConfig = 2;
inline constexpr int kExitMissingFile = 3;

namespace detail {

inline bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

// "out/run.jsonl" -> "out/run.penalty_on.jsonl"
inline std::string with_suffix(const std::string& path,
                               const std::string& suffix) {
  const std::filesystem::path p(path);
  if (p.has_extension()) {
    std::filesystem::path q = p;
    q.replace_extension();
    return q.string() + "." + suffix + p.extension().string();
  }
  return path + "." + suffix;
}

inline void apply_env_overrides(loop::RunConfig& cfg) {
  if (const char* v = std::getenv("ADVPROVE_CHECKPOINT_DIR"))
    cfg.checkpoint_dir = v;
  if (const char* v = std::getenv("ADVPROVE_VERIFIER_ENDPOINT"))
    cfg.verifier_endpoint = v;
}

}  // namespace detail

// Loads, applies environment overrides, and validates. Throws config_error
// for bad keys/values and runtime_error for a missing file.
inline loop::RunConfig load_run_config(const std::string& path) {
  if (!detail::file_exists(path))
    throw std::runtime_error("config file not found: " + path);
  loop::RunConfig cfg = loop::load_config(path);
  detail::apply_env_overrides(cfg);
  validate_config(cfg);
  return cfg;
}

inline loop::RunConfig checkpoint_embedded_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return loop::parse_config(j.at("config").get<std::string>());
}

inline int cmd_run(const std::string& config_path, bool print_config_only,
                   bool resume, std::ostream& out, std::ostream& err) {
  try {
    const loop::RunConfig cfg = load_run_config(config_path);
    if (print_config_only) {
      out << loop::print_config(cfg);
      return kExitOk;
    }
    loop::Engine engine(cfg);
    loop::RunState state;
    if (resume) {
      const std::string latest = cfg.checkpoint_dir + "/latest.json";
      if (!detail::file_exists(latest)) {
        err << "error: no checkpoint at " << latest << "\n";
        return kExitMissingFile;
      }
      state = loop::Engine::checkpoint_load(latest, cfg);
      out << "resuming at iteration " << state.next_iteration << "\n";
    } else {
      std::error_code ec;
      std::filesystem::remove(cfg.run_log, ec);
      state = engine.init_state();
    }
    engine.run(state, &out);
    out << "run complete: " << state.records.size() << " iteration(s), log at "
        << cfg.run_log << "\n";
    return kExitOk;
  } catch (const loop::config_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    err << "error: " << what << "\n";
    return what.find("cannot open") != std::string::npos ||
                   what.find("not found") != std::string::npos
               ? kExitMissingFile
               : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int cmd_eval(const std::string& checkpoint_path,
                    const std::string& statements_path, int budget,
                    std::uint64_t seed, std::ostream& out, std::ostream& err) {
  try {
    if (!detail::file_exists(checkpoint_path)) {
      err << "error: checkpoint not found: " << checkpoint_path << "\n";
      return kExitMissingFile;
    }
    if (!detail::file_exists(statements_path)) {
      err << "error: statements file not found: " << statements_path << "\n";
      return kExitMissingFile;
    }
    const loop::RunConfig cfg = checkpoint_embedded_config(checkpoint_path);
    const loop::RunState state =
        loop::Engine::checkpoint_load(checkpoint_path, cfg);
    loop::Engine engine(cfg);
    const auto statements = arena::load_repository(statements_path);
    const auto rep = loop::evaluate_prover(state.prover.snapshot(), statements,
                                           engine.prover_codec(), budget, seed);
    out << "statements\t" << rep.statements << "\n";
    out << "pass_at_" << rep.budget << "\t" << rep.pass_at_budget << "\n";
    out << "avg_correctness\t" << rep.avg_correctness << "\n";
    out << "modification_rate\t" << rep.modification_rate << "\n";
    return kExitOk;
  } catch (const loop::config_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

// Runs the modification-penalty ablation: two runs from the same seeds, one
// with the penalty terms, one without, writing paired logs.
inline int cmd_ablate(const std::string& config_path, std::ostream& out,
                      std::ostream& err) {
  try {
    const loop::RunConfig base = load_run_config(config_path);
    struct Variant {
      const char* name;
      bool enabled;
    };
    std::vector<std::string> log_paths;
    for (const Variant v : {Variant{"penalty_on", true}, Variant{"penalty_off", false}}) {
      loop::RunConfig cfg = base;
      cfg.modification_penalty_enabled = v.enabled;
      cfg.run_log = detail::with_suffix(base.run_log, v.name);
      cfg.metrics_file = detail::with_suffix(base.metrics_file, v.name);
      cfg.checkpoint_dir = base.checkpoint_dir + "_" + v.name;
      std::error_code ec;
      std::filesystem::remove(cfg.run_log, ec);
      loop::Engine engine(cfg);
      loop::RunState state = engine.init_state();
      out << "ablation run " << v.name << " ...\n";
      engine.run(state, &out);
      log_paths.push_back(cfg.run_log);
    }
    const auto rows_on = report::read_run_log(log_paths[0]);
    const auto rows_off = report::read_run_log(log_paths[1]);
    out << report::compare(rows_off, rows_on, "penalty_off", "penalty_on");
    out << "logs: " << log_paths[0] << " and " << log_paths[1] << "\n";
    return kExitOk;
  } catch (const loop::config_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    err << "error: " << what << "\n";
    return what.find("cannot open") != std::string::npos ||
                   what.find("not found") != std::string::npos
               ? kExitMissingFile
               : kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int cmd_report(const std::vector<std::string>& log_paths,
                      std::ostream& out, std::ostream& err) {
  try {
    if (log_paths.empty() || log_paths.size() > 2) {
      err << "error: report takes one or two run logs\n";
      return kExitFailure;
    }
    for (const auto& p : log_paths) {
      if (!detail::file_exists(p)) {
        err << "error: run log not found: " << p << "\n";
        return kExitMissingFile;
      }
    }
    const auto rows_a = report::read_run_log(log_paths[0]);
    out << report::metrics_table(rows_a);
    out << report::summarize(rows_a, log_paths[0]);
    if (log_paths.size() == 2) {
      const auto rows_b = report::read_run_log(log_paths[1]);
      out << report::metrics_table(rows_b);
      out << report::summarize(rows_b, log_paths[1]);
      out << report::compare(rows_a, rows_b, log_paths[0], log_paths[1]);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace advprove::cli
