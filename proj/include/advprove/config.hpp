#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "advprove/grpo.hpp"

namespace advprove::loop {

// Full run description. Every field maps to exactly one flat key in the
// config file; see key_bindings() for the namespace.
struct RunConfig {
  int iterations = 5;                 // T
  int statements_per_iteration = 1024;  // N
  int proofs_per_statement = 16;      // n
  int pass_at_x = 16;
  std::uint64_t master_seed = 1;
  std::string repository;
  std::string run_log = "out/run_log.jsonl";
  std::string metrics_file = "out/metrics.tsv";
  std::string checkpoint_dir = "out/checkpoints";
  bool modification_penalty_enabled = true;
  // Off by default: base statements are sampled from the fixed repository.
  // When on, compiled solvable fused statements feed back in as future
  // parents (capped per iteration).
  bool accumulate_fused = false;
  int accumulate_max_per_iteration = 64;
  int base_eval_statements = 50;
  std::string verifier_endpoint;

  int arena_modulus = 5;
  int arena_max_chain_length = 12;
  int arena_bucket_width = 4;
  bool arena_prover_sees_solvable = false;

  // Initial logit bonus on the clean action: the fuser starts biased toward
  // true targets, the prover toward correct steps, standing in for
  // pretrained base models.
  double fuser_init_true_target_logit = 1.5;
  double prover_init_correct_logit = 2.2;

  grpo::GrpoHyperparams fuser;
  grpo::GrpoHyperparams prover;
};

struct config_error : std::runtime_error {
  config_error(const std::string& key_, const std::string& message)
      : std::runtime_error("config key '" + key_ + "': " + message),
        key(key_) {}
  std::string key;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw config_error(key, "cannot parse '" + value + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error(key, "expected true/false, got '" + value + "'");
}

}  // namespace detail

struct KeyBinding {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<KeyBinding>& key_bindings() {
  using detail::format_double;
  using detail::parse_bool;
  using detail::parse_number;
  static const std::vector<KeyBinding> bindings = [] {
    std::vector<KeyBinding> b;
    auto add_int = [&b](const std::string& name, int RunConfig::* field) {
      b.push_back({name,
                   [field](const RunConfig& c) { return std::to_string(c.*field); },
                   [name, field](RunConfig& c, const std::string& v) {
                     c.*field = parse_number<int>(name, v);
                   }});
    };
    auto add_u64 = [&b](const std::string& name, std::uint64_t RunConfig::* field) {
      b.push_back({name,
                   [field](const RunConfig& c) { return std::to_string(c.*field); },
                   [name, field](RunConfig& c, const std::string& v) {
                     c.*field = parse_number<std::uint64_t>(name, v);
                   }});
    };
    auto add_bool = [&b](const std::string& name, bool RunConfig::* field) {
      b.push_back({name,
                   [field](const RunConfig& c) { return c.*field ? "true" : "false"; },
                   [name, field](RunConfig& c, const std::string& v) {
                     c.*field = parse_bool(name, v);
                   }});
    };
    auto add_double = [&b](const std::string& name, double RunConfig::* field) {
      b.push_back({name,
                   [field](const RunConfig& c) { return format_double(c.*field); },
                   [name, field](RunConfig& c, const std::string& v) {
                     c.*field = parse_number<double>(name, v);
                   }});
    };
    auto add_string = [&b](const std::string& name, std::string RunConfig::* field) {
      b.push_back({name, [field](const RunConfig& c) { return c.*field; },
                   [field](RunConfig& c, const std::string& v) {
                     c.*field = detail::trim(v);
                   }});
    };
    auto add_grpo = [&b](const std::string& prefix,
                         grpo::GrpoHyperparams RunConfig::* field) {
      b.push_back({prefix + "_epsilon",
                   [field](const RunConfig& c) {
                     return format_double((c.*field).epsilon);
                   },
                   [prefix, field](RunConfig& c, const std::string& v) {
                     (c.*field).epsilon =
                         parse_number<double>(prefix + "_epsilon", v);
                   }});
      b.push_back({prefix + "_beta",
                   [field](const RunConfig& c) {
                     return format_double((c.*field).beta);
                   },
                   [prefix, field](RunConfig& c, const std::string& v) {
                     (c.*field).beta = parse_number<double>(prefix + "_beta", v);
                   }});
      b.push_back({prefix + "_learning_rate",
                   [field](const RunConfig& c) {
                     return format_double((c.*field).learning_rate);
                   },
                   [prefix, field](RunConfig& c, const std::string& v) {
                     (c.*field).learning_rate =
                         parse_number<double>(prefix + "_learning_rate", v);
                   }});
      b.push_back({prefix + "_updates_per_iteration",
                   [field](const RunConfig& c) {
                     return std::to_string((c.*field).updates_per_iteration);
                   },
                   [prefix, field](RunConfig& c, const std::string& v) {
                     (c.*field).updates_per_iteration =
                         parse_number<int>(prefix + "_updates_per_iteration", v);
                   }});
      b.push_back({prefix + "_ratio_uses_reference",
                   [field](const RunConfig& c) {
                     return (c.*field).ratio_uses_reference ? "true" : "false";
                   },
                   [prefix, field](RunConfig& c, const std::string& v) {
                     (c.*field).ratio_uses_reference =
                         parse_bool(prefix + "_ratio_uses_reference", v);
                   }});
    };

    add_int("iterations", &RunConfig::iterations);
    add_int("statements_per_iteration", &RunConfig::statements_per_iteration);
    add_int("proofs_per_statement", &RunConfig::proofs_per_statement);
    add_int("pass_at_x", &RunConfig::pass_at_x);
    add_u64("master_seed", &RunConfig::master_seed);
    add_string("repository", &RunConfig::repository);
    add_string("run_log", &RunConfig::run_log);
    add_string("metrics_file", &RunConfig::metrics_file);
    add_string("checkpoint_dir", &RunConfig::checkpoint_dir);
    add_bool("modification_penalty_enabled",
             &RunConfig::modification_penalty_enabled);
    add_bool("accumulate_fused", &RunConfig::accumulate_fused);
    add_int("accumulate_max_per_iteration",
            &RunConfig::accumulate_max_per_iteration);
    add_int("base_eval_statements", &RunConfig::base_eval_statements);
    add_string("verifier_endpoint", &RunConfig::verifier_endpoint);
    add_int("arena_modulus", &RunConfig::arena_modulus);
    add_int("arena_max_chain_length", &RunConfig::arena_max_chain_length);
    add_int("arena_bucket_width", &RunConfig::arena_bucket_width);
    add_bool("arena_prover_sees_solvable",
             &RunConfig::arena_prover_sees_solvable);
    add_double("fuser_init_true_target_logit",
               &RunConfig::fuser_init_true_target_logit);
    add_double("prover_init_correct_logit",
               &RunConfig::prover_init_correct_logit);
    add_grpo("fuser", &RunConfig::fuser);
    add_grpo("prover", &RunConfig::prover);
    return b;
  }();
  return bindings;
}

inline void set_config_key(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  for (const auto& b : key_bindings()) {
    if (b.name == key) {
      b.set(cfg, value);
      return;
    }
  }
  throw config_error(key, "unknown key");
}

inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream iss(text);
  std::string line;
  while (std::getline(iss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(line, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    set_config_key(cfg, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// Canonical echo; re-parsing it reproduces the configuration exactly.
inline std::string print_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& b : key_bindings()) {
    out += b.name;
    out += " = ";
    out += b.get(cfg);
    out += '\n';
  }
  return out;
}

inline void validate_config(const RunConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw config_error(key, msg);
  };
  if (cfg.iterations < 0) fail("iterations", "must be >= 0");
  if (cfg.statements_per_iteration < 2)
    fail("statements_per_iteration", "must be >= 2");
  if (cfg.proofs_per_statement < 2) fail("proofs_per_statement", "must be >= 2");
  if (cfg.pass_at_x < 1 || cfg.pass_at_x > cfg.proofs_per_statement)
    fail("pass_at_x", "must be in [1, proofs_per_statement]");
  if (cfg.repository.empty()) fail("repository", "must name a statement file");
  if (cfg.arena_modulus < 2) fail("arena_modulus", "must be >= 2");
  if (cfg.arena_max_chain_length < 1)
    fail("arena_max_chain_length", "must be >= 1");
  if (cfg.arena_bucket_width < 1) fail("arena_bucket_width", "must be >= 1");
  if (cfg.accumulate_max_per_iteration < 0)
    fail("accumulate_max_per_iteration", "must be >= 0");
  if (cfg.base_eval_statements < 1) fail("base_eval_statements", "must be >= 1");
  auto check_grpo = [&](const std::string& prefix,
                        const grpo::GrpoHyperparams& hp) {
    if (!(hp.epsilon > 0.0 && hp.epsilon < 1.0))
      fail(prefix + "_epsilon", "must be in (0, 1)");
    if (hp.beta < 0.0) fail(prefix + "_beta", "must be >= 0");
    if (!(hp.learning_rate > 0.0))
      fail(prefix + "_learning_rate", "must be > 0");
    if (hp.updates_per_iteration < 1)
      fail(prefix + "_updates_per_iteration", "must be >= 1");
  };
  check_grpo("fuser", cfg.fuser);
  check_grpo("prover", cfg.prover);
}

}  // namespace advprove::loop
