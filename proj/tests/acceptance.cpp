// Acceptance suite: `acceptance <k>` runs criterion k, `acceptance` runs all.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "affsim/errors.hpp"
#include "affsim/harness.hpp"

using namespace affsim;
namespace fs = std::filesystem;

namespace {

fs::path out_root() {
  if (const char* s = std::getenv("AFFSIM_ACCEPTANCE_OUT")) return s;
  return fs::temp_directory_path() / "affsim_acceptance";
}

void print_checks(const ExperimentReport& r) {
  for (const auto& c : r.checks)
    std::printf("    %-4s %-52s %.6g %s %.6g\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.statistic,
                c.relation.c_str(), c.tolerance);
  for (const auto& [k, v] : r.summary) std::printf("    note %-47s %.6g\n", k.c_str(), v);
}

// Runs one experiment with default settings; passes when every check passes within the time limit.
bool experiment_criterion(const std::string& name, double limit_seconds) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  cfg.out_dir = out_root() / "runs";
  auto r = run_experiment(cfg);
  print_checks(r);
  std::printf("    experiment %s: %.1f s (limit %.0f s)\n", name.c_str(), r.wall_seconds, limit_seconds);
  return r.passed() && r.wall_seconds < limit_seconds;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Runs several experiments twice, the second time single-threaded, and compares every CSV byte for byte.
bool reproducibility() {
  struct Run {
    std::string name;
    long replicas;
  };
  const std::vector<Run> runs{{"identities", 0}, {"kirillov", 2000}, {"radial", 500},   {"gauge", 40},
                              {"martingale", 1000}, {"phiQ", 1000},    {"entrance", 2000}, {"main", 300}};
  bool ok = true;
  for (const auto& run : runs) {
    std::vector<std::string> reports;
    for (int pass = 0; pass < 2; ++pass) {
      if (pass == 1) setenv("AFFSIM_THREADS", "1", 1);
      ExperimentConfig cfg;
      cfg.experiment = run.name;
      cfg.replicas = run.replicas;
      cfg.seeds = 1;
      cfg.out_dir = out_root() / ("repro" + std::to_string(pass));
      fs::remove_all(cfg.out_dir / run.name);
      auto r = run_experiment(cfg);
      reports.push_back(report_json(r, false));
      unsetenv("AFFSIM_THREADS");
    }
    const auto a = out_root() / "repro0" / run.name, b = out_root() / "repro1" / run.name;
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      same += slurp(e.path()) == slurp(b / e.path().filename());
    }
    bool this_ok = files > 0 && same == files && reports[0] == reports[1];
    std::printf("    %-4s %-12s %d/%d csv files identical, report %s\n", this_ok ? "ok" : "FAIL", run.name.c_str(),
                same, files, reports[0] == reports[1] ? "identical" : "differs");
    ok = ok && this_ok;
  }
  return ok;
}

struct Criterion {
  std::string title;
  std::function<bool()> run;
};

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> c{
      {1, {"theta-series identity suite", [] { return experiment_criterion("identities", 30); }}},
      {2, {"character and heat-kernel suite", [] { return experiment_criterion("characters", 10); }}},
      {3, {"radial law of Brownian motion", [] { return experiment_criterion("radial", 120); }}},
      {4, {"Haar average of the heat kernel", [] { return experiment_criterion("endorbit", 120); }}},
      {5, {"Kirillov formula by orbit Monte Carlo", [] { return experiment_criterion("kirillov", 120); }}},
      {6, {"binned endpoint conditional expectation", [] { return experiment_criterion("endpoint", 600); }}},
      {7, {"space-time martingale probe", [] { return experiment_criterion("martingale", 1e9); }}},
      {8, {"growth of phi_{d+y}/phi_d under the conditioned law", [] { return experiment_criterion("phiQ", 1e9); }}},
      {9, {"sheet radial process vs conditioned process", [] { return experiment_criterion("main", 1200); }}},
      {10, {"entrance law near the tip", [] { return experiment_criterion("entrance", 1e9); }}},
      {11, {"gauge action residual decays like 1/S", [] { return experiment_criterion("gauge", 1e9); }}},
      {12, {"reproducibility of CSV output", reproducibility}},
  };
  return c;
}

bool run_one(int k) {
  const auto& c = criteria().at(k);
  std::printf("criterion %d (%s)\n", k, c.title.c_str());
  std::fflush(stdout);
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = c.run();
  } catch (const std::exception& e) {
    std::printf("    error: %s\n", e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %d: %s (%.1f s)\n", k, ok ? "PASS" : "FAIL", secs);
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ks;
  for (int i = 1; i < argc; ++i) ks.push_back(std::atoi(argv[i]));
  if (ks.empty())
    for (const auto& [k, c] : criteria()) ks.push_back(k);
  bool all = true;
  for (int k : ks) {
    if (!criteria().count(k)) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    all = run_one(k) && all;
  }
  return all ? 0 : 1;
}
