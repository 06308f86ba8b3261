#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "advprove/arena.hpp"
#include "advprove/config.hpp"
#include "advprove/core.hpp"
#include "advprove/grpo.hpp"
#include "advprove/policy.hpp"
#include "advprove/rewards.hpp"
#include "advprove/rng.hpp"

namespace advprove::loop {

namespace detail {

template <class F>
void parallel_for(int n, F&& f) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int nthreads = std::clamp(hw, 1, 8);
  if (n < 32 || nthreads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    try {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        if (failed.load()) return;
        f(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < nthreads - 1; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

inline core::Statement core_of(const arena::RepositoryEntry& e) {
  core::Statement s;
  s.id = e.id;
  s.informal_text = arena::encode_statement(e.chain);
  s.formal_text = s.informal_text;
  s.compile_ok = true;
  return s;
}

inline std::string render_proof(const arena::ChainProof& p) {
  std::string out = std::to_string(p.declared_target);
  for (int v : p.values) {
    out += ' ';
    out += std::to_string(v);
  }
  return out;
}

}  // namespace detail

// --- aggregate metrics ------------------------------------------------------

// Fraction of statements whose first x attempts contain a clean pass.
inline double pass_at_x(const std::vector<core::RolloutGroup>& groups, int x) {
  if (groups.empty()) return 0.0;
  int hits = 0;
  for (const auto& g : groups) {
    if (x > static_cast<int>(g.attempts.size()))
      throw std::invalid_argument("pass_at_x: x exceeds group size");
    for (int k = 0; k < x; ++k) {
      if (core::clean_pass(g.attempts[k].verdict)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(groups.size());
}

// Total clean passes over total attempts.
inline double average_proof_correctness(
    const std::vector<core::RolloutGroup>& groups) {
  if (groups.empty())
    throw std::invalid_argument("average_proof_correctness: empty input");
  long long passes = 0, attempts = 0;
  for (const auto& g : groups) {
    attempts += static_cast<long long>(g.attempts.size());
    for (const auto& a : g.attempts)
      if (core::clean_pass(a.verdict)) ++passes;
  }
  return static_cast<double>(passes) / static_cast<double>(attempts);
}

// Fraction of statements with at least one modified attempt.
inline double statement_modification_metric(
    const std::vector<core::RolloutGroup>& groups) {
  if (groups.empty())
    throw std::invalid_argument("statement_modification_metric: empty input");
  int touched = 0;
  for (const auto& g : groups) {
    for (const auto& a : g.attempts) {
      if (a.verdict.modified) {
        ++touched;
        break;
      }
    }
  }
  return static_cast<double>(touched) / static_cast<double>(groups.size());
}

// --- run state ---------------------------------------------------------------

struct RunState {
  policy::PolicyHandle fuser;
  policy::PolicyHandle prover;
  // Iteration-0 anchors for the KL terms; never updated during a run.
  policy::PolicySnapshot fuser_ref;
  policy::PolicySnapshot prover_ref;
  int next_iteration = 1;
  std::vector<arena::RepositoryEntry> repository;
  std::uint64_t master_seed = 0;
  std::vector<core::IterationRecord> records;
};

// Uniform with replacement over ordered pairs of distinct repository indices.
inline std::vector<std::pair<int, int>> sample_base_pairs(
    const std::vector<arena::RepositoryEntry>& repository, int count,
    Rng& rng) {
  if (repository.size() < 2)
    throw std::invalid_argument("sample_base_pairs: repository has fewer than 2 statements");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(count);
  const std::uint64_t n = repository.size();
  for (int i = 0; i < count; ++i) {
    const int a = static_cast<int>(rng.below(n));
    int b = static_cast<int>(rng.below(n - 1));
    if (b >= a) ++b;
    pairs.emplace_back(a, b);
  }
  return pairs;
}

struct IterationResult {
  RunState state;
  core::IterationRecord record;
  nlohmann::json log_record;
};

class Engine {
 public:
  using VerifyHook = std::function<core::Verdict(const arena::ChainStatement&,
                                                 const arena::ChainProof&)>;

  explicit Engine(RunConfig cfg, VerifyHook verify_hook = nullptr)
      : cfg_(std::move(cfg)), verify_(std::move(verify_hook)) {
    validate_config(cfg_);
    prover_codec_.modulus = cfg_.arena_modulus;
    prover_codec_.max_chain_length = cfg_.arena_max_chain_length;
    prover_codec_.bucket_width = cfg_.arena_bucket_width;
    prover_codec_.condition_on_solvable = cfg_.arena_prover_sees_solvable;
    fuser_codec_.modulus = cfg_.arena_modulus;
    fuser_codec_.max_chain_length = cfg_.arena_max_chain_length;
    fuser_codec_.bucket_width = cfg_.arena_bucket_width;
    if (!verify_)
      verify_ = [](const arena::ChainStatement& s, const arena::ChainProof& p) {
        return arena::verify(s, p);
      };
  }

  const RunConfig& config() const { return cfg_; }
  const arena::ProverCodec& prover_codec() const { return prover_codec_; }
  const arena::FuserCodec& fuser_codec() const { return fuser_codec_; }

  RunState init_state() const {
    RunState st;
    st.repository = arena::load_repository(cfg_.repository);
    if (st.repository.size() < 2)
      throw std::runtime_error("repository needs at least 2 statements");
    for (const auto& e : st.repository) {
      if (e.chain.modulus != cfg_.arena_modulus)
        throw std::runtime_error("repository statement '" + e.id +
                                 "' has modulus " +
                                 std::to_string(e.chain.modulus) +
                                 ", config says " +
                                 std::to_string(cfg_.arena_modulus));
      if (!arena::compile_check(e.chain, cfg_.arena_max_chain_length))
        throw std::runtime_error("repository statement '" + e.id +
                                 "' fails the compile check");
    }
    st.fuser = policy::PolicyHandle::zeros(fuser_codec_.shape());
    st.prover = policy::PolicyHandle::zeros(prover_codec_.shape());
    // Initial bias toward the clean action, standing in for pretrained base
    // models: the fuser prefers true targets, the prover correct steps.
    const auto fshape = st.fuser.shape();
    for (int c = 0; c < fshape.contexts; ++c)
      st.fuser.logit(c, 1, 0) += cfg_.fuser_init_true_target_logit;
    const auto pshape = st.prover.shape();
    for (int c = 0; c < pshape.contexts; ++c)
      for (int pos = 0; pos < pshape.positions; ++pos)
        st.prover.logit(c, pos, 0) += cfg_.prover_init_correct_logit;
    st.fuser_ref = st.fuser.snapshot();
    st.prover_ref = st.prover.snapshot();
    st.master_seed = cfg_.master_seed;
    st.next_iteration = 1;
    return st;
  }

  // One full step: pair sampling, fusion, compile filter, rollouts,
  // verification, both GRPO updates, metrics. Pure in `state`; any thrown
  // error leaves the caller's state untouched.
  IterationResult run_iteration(const RunState& state) const {
    const auto t0 = std::chrono::steady_clock::now();
    const int iter = state.next_iteration;
    const int n_statements = cfg_.statements_per_iteration;
    const int n_proofs = cfg_.proofs_per_statement;
    const std::uint64_t seed = state.master_seed;

    const auto fuser_snap = state.fuser.snapshot();
    const auto prover_snap = state.prover.snapshot();

    // 1. Sample base pairs.
    Rng pair_rng(derive_seed(seed, "pairs", iter));
    const auto pairs = sample_base_pairs(state.repository, n_statements, pair_rng);

    // 2. Fuse.
    struct Fused {
      core::Statement statement;
      arena::ChainStatement chain;
      int fuser_context = 0;
      std::vector<int> fuser_tokens;
      bool compiled = false;
      bool is_solvable = false;
      std::optional<core::RolloutGroup> group;
      std::vector<std::vector<int>> prover_tokens;
    };
    std::vector<Fused> fused(n_statements);
    for (int j = 0; j < n_statements; ++j) {
      const auto& pa = state.repository[pairs[j].first];
      const auto& pb = state.repository[pairs[j].second];
      Fused f;
      f.fuser_context = fuser_codec_.context_of(pa.chain, pb.chain);
      f.fuser_tokens =
          fuser_snap.sample(f.fuser_context, 2, 1, derive_seed(seed, "fusion", iter, j))[0];
      const auto action = fuser_codec_.decode_action(f.fuser_tokens);
      f.chain = arena::fuse(pa.chain, pb.chain, action);
      const std::string encoded = arena::encode_statement(f.chain);
      f.statement = core::make_fused_statement(
          detail::core_of(pa), detail::core_of(pb), encoded, encoded, iter,
          "i" + std::to_string(iter) + "s" + std::to_string(j));
      f.compiled = arena::compile_check(f.chain, cfg_.arena_max_chain_length);
      f.statement.compile_ok = f.compiled;
      f.is_solvable = arena::solvable(f.chain);
      fused[j] = std::move(f);
    }

    // 3. Rollouts and verification, parallel across statements.
    detail::parallel_for(n_statements, [&](int j) {
      Fused& f = fused[j];
      if (!f.compiled) return;
      const int ctx = prover_codec_.context_of(f.chain);
      const int len = prover_codec_.response_length(f.chain);
      f.prover_tokens =
          prover_snap.sample(ctx, len, n_proofs, derive_seed(seed, "rollout", iter, j));
      std::vector<core::ProofAttempt> attempts;
      attempts.reserve(n_proofs);
      for (const auto& tokens : f.prover_tokens) {
        const auto proof = prover_codec_.decode_proof(f.chain, tokens);
        core::ProofAttempt a;
        a.statement_id = f.statement.id;
        a.body = detail::render_proof(proof);
        a.verdict = verify_(f.chain, proof);
        attempts.push_back(std::move(a));
      }
      f.group = core::group_from_attempts(f.statement, std::move(attempts));
    });

    // 4. Fuser rewards and advantages: all N fusion samples form one group.
    std::vector<double> fuser_rewards(n_statements, 0.0);
    for (int j = 0; j < n_statements; ++j) {
      const Fused& f = fused[j];
      rewards::FuserRewardInput in;
      in.compile_ok = f.compiled;
      in.pass_rate = f.group ? f.group->pass_rate : 0.0;
      in.modification_rate = f.group ? f.group->modification_rate : 0.0;
      fuser_rewards[j] =
          rewards::fuser_reward(in, cfg_.modification_penalty_enabled);
    }
    const auto fuser_adv = rewards::group_advantages(fuser_rewards);

    // 5. Fuser GRPO update.
    policy::PolicyHandle new_fuser = state.fuser;
    {
      grpo::GrpoBatch batch;
      batch.role = grpo::Role::fuser;
      std::vector<grpo::GrpoSample> samples;
      for (int j = 0; j < n_statements; ++j) {
        grpo::GrpoItem it;
        it.logp_old =
            fuser_snap.log_prob(fused[j].fuser_context, fused[j].fuser_tokens);
        it.logp_ref = state.fuser_ref.log_prob(fused[j].fuser_context,
                                               fused[j].fuser_tokens);
        it.logp_new = it.logp_old;
        it.advantage = fuser_adv.advantages[j];
        batch.items.push_back(it);
        samples.push_back({fused[j].fuser_context, fused[j].fuser_tokens});
      }
      for (int u = 0; u < cfg_.fuser.updates_per_iteration; ++u) {
        const auto grad = grpo::objective_gradient(batch, samples, cfg_.fuser,
                                                   new_fuser.snapshot());
        grpo::apply_update(new_fuser, grad, cfg_.fuser);
      }
    }

    // 6. Prover filtering and per-group advantages.
    std::vector<core::RolloutGroup> groups;
    std::vector<int> group_sample_index;
    for (int j = 0; j < n_statements; ++j) {
      if (fused[j].group) {
        groups.push_back(*fused[j].group);
        group_sample_index.push_back(j);
      }
    }
    policy::PolicyHandle new_prover = state.prover;
    int filtered_count = 0;
    {
      grpo::GrpoBatch batch;
      batch.role = grpo::Role::prover;
      std::vector<grpo::GrpoSample> samples;
      for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        if (!(g.pass_rate > 0.0 && g.pass_rate <= 0.5)) continue;
        ++filtered_count;
        const Fused& f = fused[group_sample_index[gi]];
        const int ctx = prover_codec_.context_of(f.chain);
        std::vector<double> attempt_rewards(g.attempts.size());
        for (std::size_t k = 0; k < g.attempts.size(); ++k) {
          rewards::ProverRewardInput in;
          in.passed = g.attempts[k].verdict.status == core::Status::pass;
          in.modified = g.attempts[k].verdict.modified;
          attempt_rewards[k] =
              rewards::prover_reward(in, cfg_.modification_penalty_enabled);
        }
        const auto adv = rewards::group_advantages(attempt_rewards);
        for (std::size_t k = 0; k < g.attempts.size(); ++k) {
          grpo::GrpoItem it;
          it.logp_old = prover_snap.log_prob(ctx, f.prover_tokens[k]);
          it.logp_ref = state.prover_ref.log_prob(ctx, f.prover_tokens[k]);
          it.logp_new = it.logp_old;
          it.advantage = adv.advantages[k];
          batch.items.push_back(it);
          samples.push_back({ctx, f.prover_tokens[k]});
        }
      }
      if (!batch.items.empty()) {
        for (int u = 0; u < cfg_.prover.updates_per_iteration; ++u) {
          const auto grad = grpo::objective_gradient(
              batch, samples, cfg_.prover, new_prover.snapshot());
          grpo::apply_update(new_prover, grad, cfg_.prover);
        }
      }
    }

    // 7. Metrics.
    core::IterationRecord rec;
    rec.iteration = iter;
    rec.generated_count = n_statements;
    rec.compile_pass_count = static_cast<int>(groups.size());
    rec.filtered_for_prover_count = filtered_count;
    const int x = std::min(cfg_.pass_at_x, n_proofs);
    if (!groups.empty()) {
      rec.pass_at_x = pass_at_x(groups, x);
      rec.avg_correctness = average_proof_correctness(groups);
      rec.modification_rate = statement_modification_metric(groups);
      double total_difficulty = 0.0;
      for (std::size_t gi = 0; gi < groups.size(); ++gi)
        total_difficulty +=
            arena::difficulty(fused[group_sample_index[gi]].chain);
      rec.mean_difficulty = total_difficulty / static_cast<double>(groups.size());
    }

    // Base-vs-trained difficulty probe on a sample of this iteration's
    // statements: the frozen reference prover measures how hard the fresh
    // statements are; the just-updated prover shows whether training keeps
    // pace.
    if (!groups.empty()) {
      const int want =
          std::min<int>(cfg_.base_eval_statements, static_cast<int>(groups.size()));
      std::vector<int> pick(groups.size());
      std::iota(pick.begin(), pick.end(), 0);
      Rng pick_rng(derive_seed(seed, "eval-pick", iter));
      for (int k = 0; k < want; ++k) {
        const int swap_with =
            k + static_cast<int>(pick_rng.below(pick.size() - k));
        std::swap(pick[k], pick[swap_with]);
      }
      const auto prober = [&](const policy::PolicySnapshot& snap,
                              const char* label) {
        std::atomic<long long> passes{0};
        detail::parallel_for(want, [&](int k) {
          const Fused& f = fused[group_sample_index[pick[k]]];
          const int ctx = prover_codec_.context_of(f.chain);
          const int len = prover_codec_.response_length(f.chain);
          const auto draws =
              snap.sample(ctx, len, n_proofs, derive_seed(seed, label, iter, pick[k]));
          long long local = 0;
          for (const auto& tokens : draws) {
            const auto proof = prover_codec_.decode_proof(f.chain, tokens);
            if (core::clean_pass(verify_(f.chain, proof))) ++local;
          }
          passes.fetch_add(local);
        });
        return static_cast<double>(passes.load()) /
               static_cast<double>(static_cast<long long>(want) * n_proofs);
      };
      rec.base_policy_avg_correctness = prober(state.prover_ref, "base-eval");
      rec.trained_policy_avg_correctness =
          prober(new_prover.snapshot(), "trained-eval");
    }

    // 8. Optional repository accumulation (compiled solvable fused
    // statements become future parents).
    std::vector<arena::RepositoryEntry> new_repository = state.repository;
    if (cfg_.accumulate_fused) {
      int added = 0;
      for (int j = 0;
           j < n_statements && added < cfg_.accumulate_max_per_iteration; ++j) {
        const Fused& f = fused[j];
        if (!f.compiled || !f.is_solvable) continue;
        arena::RepositoryEntry e;
        e.id = f.statement.id;
        e.chain = f.chain;
        e.tags = {"fused"};
        new_repository.push_back(std::move(e));
        ++added;
      }
    }

    // 9. Log record; wall time stays off the log so identical runs produce
    // byte-identical files.
    nlohmann::json log;
    log["iteration"] = rec.iteration;
    log["generated_count"] = rec.generated_count;
    log["compile_pass_count"] = rec.compile_pass_count;
    log["filtered_for_prover_count"] = rec.filtered_for_prover_count;
    log["pass_at_x"] = rec.pass_at_x;
    log["pass_at_x_budget"] = x;
    log["avg_correctness"] = rec.avg_correctness;
    log["modification_rate"] = rec.modification_rate;
    log["mean_difficulty"] = rec.mean_difficulty;
    log["base_policy_avg_correctness"] = rec.base_policy_avg_correctness;
    log["trained_policy_avg_correctness"] = rec.trained_policy_avg_correctness;
    log["fuser_rewards"] = fuser_rewards;
    log["fuser_advantages"] = fuser_adv.advantages;
    {
      nlohmann::json stmts = nlohmann::json::array();
      for (int j = 0; j < n_statements; ++j) {
        const Fused& f = fused[j];
        nlohmann::json s;
        s["id"] = f.statement.id;
        s["parents"] = {f.statement.lineage.parent_a,
                        f.statement.lineage.parent_b};
        s["compile_ok"] = f.compiled;
        s["solvable"] = f.is_solvable;
        s["difficulty"] = arena::difficulty(f.chain);
        s["p"] = f.group ? f.group->pass_rate : 0.0;
        s["m"] = f.group ? f.group->modification_rate : 0.0;
        s["reward"] = fuser_rewards[j];
        stmts.push_back(std::move(s));
      }
      log["statements"] = std::move(stmts);
    }

    IterationResult out;
    out.state.fuser = std::move(new_fuser);
    out.state.prover = std::move(new_prover);
    out.state.fuser_ref = state.fuser_ref;
    out.state.prover_ref = state.prover_ref;
    out.state.master_seed = state.master_seed;
    out.state.repository = std::move(new_repository);
    out.state.next_iteration = iter + 1;
    out.state.records = state.records;
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    out.state.records.push_back(rec);
    out.record = rec;
    out.log_record = std::move(log);
    return out;
  }

  // Runs the remaining iterations, appending run-log lines, rewriting the
  // metrics table, and checkpointing after every iteration.
  std::vector<core::IterationRecord> run(RunState& state,
                                         std::ostream* console = nullptr) const {
    prepare_output_paths();
    std::ofstream log(cfg_.run_log, std::ios::app);
    if (!log) throw std::runtime_error("cannot open run log " + cfg_.run_log);
    std::vector<core::IterationRecord> produced;
    while (state.next_iteration <= cfg_.iterations) {
      IterationResult r = run_iteration(state);
      state = std::move(r.state);
      log << r.log_record.dump() << '\n';
      log.flush();
      write_metrics_file(state.records);
      write_checkpoint(state);
      if (console) {
        *console << "iteration " << r.record.iteration << ": compiled "
                 << r.record.compile_pass_count << "/" << r.record.generated_count
                 << ", band " << r.record.filtered_for_prover_count
                 << ", pass@" << std::min(cfg_.pass_at_x, cfg_.proofs_per_statement)
                 << " " << r.record.pass_at_x << ", avg correctness "
                 << r.record.avg_correctness << ", modification "
                 << r.record.modification_rate << ", mean difficulty "
                 << r.record.mean_difficulty << ", base "
                 << r.record.base_policy_avg_correctness << ", trained "
                 << r.record.trained_policy_avg_correctness << " ("
                 << r.record.wall_time_seconds << "s)\n";
      }
      produced.push_back(r.record);
    }
    return produced;
  }

  // --- checkpointing ---------------------------------------------------------

  void write_checkpoint(const RunState& state) const {
    namespace fs = std::filesystem;
    fs::create_directories(cfg_.checkpoint_dir);
    const std::string path =
        cfg_.checkpoint_dir + "/checkpoint_" +
        std::to_string(state.next_iteration - 1) + ".json";
    checkpoint_save(state, cfg_, path);
    const std::string latest = cfg_.checkpoint_dir + "/latest.json";
    fs::copy_file(path, latest, fs::copy_options::overwrite_existing);
  }

  static void checkpoint_save(const RunState& state, const RunConfig& cfg,
                              const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = print_config(cfg);
    j["master_seed"] = state.master_seed;
    j["next_iteration"] = state.next_iteration;
    auto dump_policy = [](const policy::PolicyShape& shape,
                          const std::vector<double>& theta) {
      nlohmann::json p;
      p["shape"] = {shape.contexts, shape.positions, shape.vocab};
      p["theta"] = theta;
      return p;
    };
    j["fuser"] = dump_policy(state.fuser.shape(), state.fuser.theta());
    j["prover"] = dump_policy(state.prover.shape(), state.prover.theta());
    j["fuser_ref"] = dump_policy(state.fuser_ref.shape(), state.fuser_ref.theta());
    j["prover_ref"] =
        dump_policy(state.prover_ref.shape(), state.prover_ref.theta());
    {
      nlohmann::json repo = nlohmann::json::array();
      for (const auto& e : state.repository)
        repo.push_back(arena::format_repository_line(e));
      j["repository"] = std::move(repo);
    }
    {
      nlohmann::json recs = nlohmann::json::array();
      for (const auto& r : state.records) {
        nlohmann::json rr;
        rr["iteration"] = r.iteration;
        rr["generated_count"] = r.generated_count;
        rr["compile_pass_count"] = r.compile_pass_count;
        rr["filtered_for_prover_count"] = r.filtered_for_prover_count;
        rr["pass_at_x"] = r.pass_at_x;
        rr["avg_correctness"] = r.avg_correctness;
        rr["modification_rate"] = r.modification_rate;
        rr["mean_difficulty"] = r.mean_difficulty;
        rr["base_policy_avg_correctness"] = r.base_policy_avg_correctness;
        rr["trained_policy_avg_correctness"] = r.trained_policy_avg_correctness;
        recs.push_back(std::move(rr));
      }
      j["records"] = std::move(recs);
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp);
      out << j.dump();
      if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    fs::rename(tmp, path);
  }

  // Loads a checkpoint written under the same configuration; any mismatch or
  // corruption is an error, never a silent partial state.
  static RunState checkpoint_load(const std::string& path,
                                  const RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw std::runtime_error("checkpoint: corrupt file " + path + ": " +
                               e.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
      throw std::runtime_error("checkpoint: unsupported format version in " +
                               path);
    if (j.at("config").get<std::string>() != print_config(cfg))
      throw std::runtime_error(
          "checkpoint: configuration mismatch; refusing to resume from " + path);
    auto load_policy_parts = [](const nlohmann::json& p) {
      const auto shape_arr = p.at("shape");
      policy::PolicyShape shape{shape_arr.at(0).get<int>(),
                                shape_arr.at(1).get<int>(),
                                shape_arr.at(2).get<int>()};
      auto theta = p.at("theta").get<std::vector<double>>();
      return std::make_pair(shape, std::move(theta));
    };
    RunState st;
    try {
      st.master_seed = j.at("master_seed").get<std::uint64_t>();
      st.next_iteration = j.at("next_iteration").get<int>();
      auto [fs_, ft] = load_policy_parts(j.at("fuser"));
      st.fuser = policy::PolicyHandle(fs_, std::move(ft));
      auto [ps_, pt] = load_policy_parts(j.at("prover"));
      st.prover = policy::PolicyHandle(ps_, std::move(pt));
      auto [frs, frt] = load_policy_parts(j.at("fuser_ref"));
      st.fuser_ref = policy::PolicySnapshot(frs, std::move(frt));
      auto [prs, prt] = load_policy_parts(j.at("prover_ref"));
      st.prover_ref = policy::PolicySnapshot(prs, std::move(prt));
      for (const auto& line : j.at("repository"))
        st.repository.push_back(
            arena::parse_repository_line(line.get<std::string>()));
      for (const auto& rr : j.at("records")) {
        core::IterationRecord r;
        r.iteration = rr.at("iteration").get<int>();
        r.generated_count = rr.at("generated_count").get<int>();
        r.compile_pass_count = rr.at("compile_pass_count").get<int>();
        r.filtered_for_prover_count =
            rr.at("filtered_for_prover_count").get<int>();
        r.pass_at_x = rr.at("pass_at_x").get<double>();
        r.avg_correctness = rr.at("avg_correctness").get<double>();
        r.modification_rate = rr.at("modification_rate").get<double>();
        r.mean_difficulty = rr.at("mean_difficulty").get<double>();
        r.base_policy_avg_correctness =
            rr.at("base_policy_avg_correctness").get<double>();
        r.trained_policy_avg_correctness =
            rr.at("trained_policy_avg_correctness").get<double>();
        st.records.push_back(r);
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("checkpoint: corrupt file " + path + ": " +
                               e.what());
    }
    return st;
  }

  void write_metrics_file(const std::vector<core::IterationRecord>& records) const {
    if (cfg_.metrics_file.empty()) return;
    namespace fs = std::filesystem;
    const fs::path target(cfg_.metrics_file);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream out(cfg_.metrics_file, std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write metrics file " + cfg_.metrics_file);
    out << "iteration\tpass_at_x\tavg_correctness\tmodification_rate\t"
           "mean_difficulty\tbase_policy_avg_correctness\n";
    for (const auto& r : records) {
      out << r.iteration << '\t' << r.pass_at_x << '\t' << r.avg_correctness
          << '\t' << r.modification_rate << '\t' << r.mean_difficulty << '\t'
          << r.base_policy_avg_correctness << '\n';
    }
  }

 private:
  void prepare_output_paths() const {
    namespace fs = std::filesystem;
    const fs::path log_path(cfg_.run_log);
    if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
    fs::create_directories(cfg_.checkpoint_dir);
  }

  RunConfig cfg_;
  arena::ProverCodec prover_codec_;
  arena::FuserCodec fuser_codec_;
  VerifyHook verify_;
};

// --- standalone evaluation ---------------------------------------------------

struct EvalReport {
  int statements = 0;
  int budget = 0;
  double pass_at_budget = 0.0;
  double avg_correctness = 0.0;
  double modification_rate = 0.0;
};

inline EvalReport evaluate_prover(
    const policy::PolicySnapshot& prover,
    const std::vector<arena::RepositoryEntry>& statements,
    const arena::ProverCodec& codec, int budget, std::uint64_t seed) {
  if (statements.empty())
    throw std::invalid_argument("evaluate_prover: no statements");
  if (budget < 1) throw std::invalid_argument("evaluate_prover: budget < 1");
  std::vector<core::RolloutGroup> groups(statements.size());
  detail::parallel_for(static_cast<int>(statements.size()), [&](int i) {
    const auto& e = statements[i];
    const int ctx = codec.context_of(e.chain);
    const int len = codec.response_length(e.chain);
    const auto draws =
        prover.sample(ctx, len, budget, derive_seed(seed, "eval", 0, i));
    std::vector<core::ProofAttempt> attempts;
    attempts.reserve(budget);
    for (const auto& tokens : draws) {
      const auto proof = codec.decode_proof(e.chain, tokens);
      core::ProofAttempt a;
      a.statement_id = e.id;
      a.body = detail::render_proof(proof);
      a.verdict = arena::verify(e.chain, proof);
      attempts.push_back(std::move(a));
    }
    groups[i] = core::group_from_attempts(detail::core_of(e), std::move(attempts));
  });
  EvalReport rep;
  rep.statements = static_cast<int>(statements.size());
  rep.budget = budget;
  rep.pass_at_budget = pass_at_x(groups, budget);
  rep.avg_correctness = average_proof_correctness(groups);
  rep.modification_rate = statement_modification_metric(groups);
  return rep;
}

}  // namespace advprove::loop
