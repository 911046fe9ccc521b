// Command line front end: one subcommand per experiment, plus "run" which
// takes the experiment name from the config.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "harnack_lab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"harnack_lab: discrete experiments for parabolic operators with critical drift"};
  app.require_subcommand(1);

  hlab::RunOptions opt;
  std::optional<long long> seed;
  std::optional<int> threads;

  auto flags = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "config file (JSON)");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--format", opt.format, "csv, json-lines or plotdata")
        ->check(CLI::IsMember({"csv", "json-lines", "jsonl", "plotdata"}));
    sub->add_option("--seed", seed, "overrides the config seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "worker threads (default HARNACK_LAB_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
  };

  auto* run_cmd = app.add_subcommand("run", "run the experiment named in the config");
  flags(run_cmd);
  run_cmd->callback([&] { opt.experiment.clear(); });
  for (const auto& name : hlab::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    flags(sub);
    sub->callback([&opt, name] { opt.experiment = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors share the error status
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (run_cmd->parsed() && opt.config_path.empty()) {
    std::cerr << "error: run needs --config\n";
    return 1;
  }
  if (seed) opt.seed = static_cast<std::uint64_t>(*seed);
  opt.threads = threads;

  const hlab::RunOutcome out = hlab::run(opt);
  if (out.status == 1) {
    std::cerr << "error: " << out.message << '\n';
    return 1;
  }
  for (const auto& c : out.report.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
  }
  for (const auto& f : out.files) std::cout << "wrote " << f << '\n';
  return out.status;
}
