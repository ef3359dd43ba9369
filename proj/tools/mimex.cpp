#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mimex/harness.hpp"

namespace {

void print_run_summary(const mimex::ExperimentResult& res) {
  for (const mimex::RunMetrics& r : res.runs) {
    std::cout << "seed " << r.seed << ": steps " << r.steps;
    if (r.steps_to_first_reward) {
      std::cout << ", first reward at " << *r.steps_to_first_reward;
    } else {
      std::cout << ", no reward (censored)";
    }
    if (r.env == "wormhole") std::cout << ", boundary occupancy " << r.boundary_occupancy;
    if (r.env == "rooms") std::cout << ", tv occupancy " << r.tv_occupancy;
    if (!r.error.empty()) std::cout << ", ERROR: " << r.error;
    std::cout << '\n';
  }
  if (!res.dir.empty()) std::cout << "artifacts: " << res.dir.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mimex: intrinsic-reward exploration benchmarks"};
  app.require_subcommand(1);

  std::string config_path, out, run_dir;
  std::vector<std::uint64_t> seeds;
  std::uint64_t budget = 0;
  bool serial = false;
  std::vector<std::string> methods;
  CLI::Option* budget_opt = nullptr;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seeds", seeds, "override the seed list")->delimiter(',');
    budget_opt = cmd->add_option("--budget", budget, "override the step budget");
    cmd->add_flag("--serial", serial, "run seeds serially (reference path)");
    cmd->add_option("--out", out, "override the output directory");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "train one method and write artifacts");
  add_common(run_cmd);
  bool run_budget_set = false;

  CLI::App* cmp_cmd = app.add_subcommand("compare", "run several methods under one config");
  CLI::Option* run_budget = budget_opt;
  add_common(cmp_cmd);
  CLI::Option* cmp_budget = budget_opt;
  cmp_cmd->add_option("--methods", methods, "methods to compare (comma separated)")
      ->required()
      ->delimiter(',');

  CLI::App* replay_cmd =
      app.add_subcommand("replay", "re-run a finished run directory and verify digests");
  replay_cmd->add_option("dir", run_dir, "run directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  run_budget_set = (run_cmd->parsed() && run_budget->count() > 0) ||
                   (cmp_cmd->parsed() && cmp_budget->count() > 0);

  try {
    if (replay_cmd->parsed()) {
      mimex::ReplayResult rep = mimex::replay(run_dir);
      for (std::size_t i = 0; i < rep.seeds.size(); ++i) {
        std::cout << "seed " << rep.seeds[i] << ": "
                  << (rep.matched[i] ? "digest match" : "DIGEST MISMATCH") << '\n';
      }
      return rep.all_matched() ? 0 : 1;
    }

    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    mimex::json user = mimex::json::parse(ss.str(), nullptr, false);
    if (user.is_discarded()) {
      std::cerr << "error: malformed JSON in " << config_path << '\n';
      return 1;
    }
    if (!seeds.empty()) user["seeds"] = seeds;
    if (run_budget_set) user["budget"] = budget;
    if (serial) user["serial"] = true;
    if (!out.empty()) user["out"] = out;
    mimex::ExperimentConfig cfg = mimex::parse_config(user);

    if (run_cmd->parsed()) {
      mimex::ExperimentResult res = mimex::run_experiment(cfg);
      print_run_summary(res);
      return res.ok() ? 0 : 1;
    }

    mimex::ComparisonReport report = mimex::compare_methods(cfg, methods);
    for (std::size_t i = 0; i < report.methods.size(); ++i) {
      std::cout << "== " << report.methods[i] << " ==\n";
      print_run_summary(report.results[i]);
    }
    for (const mimex::ComparisonCheck& c : report.checks) {
      std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.description << '\n';
    }
    return report.all_passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
