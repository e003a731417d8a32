#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "affsim/errors.hpp"
#include "affsim/harness.hpp"

namespace {

enum Exit { kPass = 0, kCheckFail = 1, kUsage = 2, kNumerical = 3 };

struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  int seeds = 0, rank = 0;
  long replicas = 0;
  std::string out;
  std::vector<std::string> settings;
  bool json = false;
};

void add_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--seeds", o.seeds, "number of consecutive seeds");
  cmd->add_option("--rank", o.rank, "rank of the root system");
  cmd->add_option("--replicas", o.replicas, "Monte Carlo replica count");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.settings, "extra key=value setting (repeatable)");
  cmd->add_flag("--json", o.json, "print the JSON report on stdout");
}

int run(const std::string& experiment, const Overrides& o) {
  using namespace affsim;
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  cfg.experiment = experiment;
  if (o.seed) cfg.seed = o.seed;
  if (o.seeds) cfg.seeds = o.seeds;
  if (o.rank) cfg.rank = o.rank;
  if (o.replicas) cfg.replicas = o.replicas;
  if (!o.out.empty()) cfg.out_dir = o.out;
  for (const auto& kv : o.settings) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "expected key=value");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto rep = run_experiment(cfg);
  if (o.json) {
    std::cout << report_json(rep) << '\n';
  } else {
    std::cout << rep.config.experiment << ": " << rep.anchor << '\n';
    for (const auto& c : rep.checks)
      std::printf("  %-4s %-48s %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.statistic,
                  c.relation.c_str(), c.tolerance);
    std::printf("  %.1f s, output in %s\n", rep.wall_seconds, (cfg.out_dir / cfg.experiment).string().c_str());
  }
  return rep.passed() ? kPass : kCheckFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affsim: Monte Carlo checks for Brownian motion on compact groups and affine theta functions"};
  app.require_subcommand(1);
  Overrides o;
  std::string check_name, run_name;
  auto* check = app.add_subcommand("check", "run a deterministic check suite");
  check->add_option("suite", check_name, "suite name")->required()->check(CLI::IsMember({"identities"}));
  add_options(check, o);
  auto* runc = app.add_subcommand("run", "run a named experiment");
  runc->add_option("experiment", run_name, "experiment name")->required();
  add_options(runc, o);
  auto* list = app.add_subcommand("list", "list experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*list) {
      for (const auto& n : affsim::experiment_names()) std::cout << n << "  " << affsim::experiment_anchor(n) << '\n';
      return kPass;
    }
    return run(*check ? check_name : run_name, o);
  } catch (const affsim::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const affsim::DataError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const affsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
