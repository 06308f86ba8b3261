#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advprove/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"adversarial fuser/prover training over a verifiable arena"};
  app.require_subcommand(1);

  std::string config_path;
  bool print_config = false;
  bool resume = false;
  auto* run = app.add_subcommand("run", "execute a training run");
  run->add_option("config", config_path, "run configuration file")->required();
  run->add_flag("--print-config", print_config,
                "echo the effective configuration and exit");
  run->add_flag("--resume", resume,
                "continue from the latest checkpoint in checkpoint_dir");

  std::string eval_checkpoint, eval_statements;
  int eval_budget = 32;
  std::uint64_t eval_seed = 1;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpointed prover");
  eval->add_option("checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval->add_option("statements", eval_statements, "statement file")->required();
  eval->add_option("x", eval_budget, "proof budget per statement")->required();
  eval->add_option("--seed", eval_seed, "sampling seed");

  std::string ablate_config;
  auto* ablate = app.add_subcommand(
      "ablate", "run the modification-penalty ablation pair with shared seeds");
  ablate->add_option("config", ablate_config, "run configuration file")
      ->required();

  std::vector<std::string> report_logs;
  auto* report = app.add_subcommand("report", "render metrics from run logs");
  report->add_option("logs", report_logs, "one or two run log files")
      ->required()
      ->expected(1, 2);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return advprove::cli::cmd_run(config_path, print_config, resume, std::cout,
                                  std::cerr);
  if (eval->parsed())
    return advprove::cli::cmd_eval(eval_checkpoint, eval_statements,
                                   eval_budget, eval_seed, std::cout,
                                   std::cerr);
  if (ablate->parsed())
    return advprove::cli::cmd_ablate(ablate_config, std::cout, std::cerr);
  if (report->parsed())
    return advprove::cli::cmd_report(report_logs, std::cout, std::cerr);
  return advprove::cli::kExitFailure;
}
