#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "affsim/series.hpp"

namespace affsim {

struct ExperimentConfig {
  std::string experiment;
  char family = 'A';
  int rank = 0;        // 0: experiment default
  long replicas = 0;   // 0: experiment default
  int steps = 0;       // 0: experiment default
  double dt = 0;       // 0: experiment default
  double t0 = 0;       // entrance time, 0: experiment default
  std::vector<double> t_grid;
  Truncation truncation;
  std::uint64_t seed = 1;
  int seeds = 2;  // the experiment runs at seed, seed+1, ...
  std::filesystem::path out_dir = "affsim_out";
  std::string entrance_mode = "rejection";
  bool bridge = true;
};

// Plain text "key = value" lines; '#' starts a comment.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
void validate(const ExperimentConfig& cfg);

struct CheckResult {
  std::string name;
  double statistic = 0;
  double tolerance = 0;
  std::string relation;  // how statistic is compared with tolerance: "<=", ">=", ">", "=="
  bool pass = false;
  std::uint64_t seed = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string anchor;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, double>> summary;
  double wall_seconds = 0;
  bool passed() const;
  void check(const std::string& name, double statistic, const std::string& relation, double tolerance,
             std::uint64_t seed = 0);
  void note(const std::string& key, double value) { summary.emplace_back(key, value); }
};

// Column-named CSV with fixed 17-digit formatting.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);

 private:
  std::size_t ncol_;
  struct Closer {
    void operator()(std::FILE* f) const { std::fclose(f); }
  };
  std::unique_ptr<std::FILE, Closer> own_;
};

const std::vector<std::string>& experiment_names();
std::string experiment_anchor(const std::string& name);

// Runs the named experiment, writes CSV files and report.json under
// out_dir/<experiment>/ and returns the report.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

inline constexpr int kReportSchemaVersion = 1;
std::string report_json(const ExperimentReport& r, bool timestamp = true);

}  // namespace affsim
