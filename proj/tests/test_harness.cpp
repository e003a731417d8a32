#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "affsim/errors.hpp"
#include "affsim/harness.hpp"

using namespace affsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("affsim_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config text parsing") {
  auto cfg = parse_config_text(
      "# comment\n"
      "experiment = main\n"
      "rank = 1   # trailing\n"
      "replicas=500\n"
      "t_grid = 0.5, 1, 2\n"
      "seed = 7\n"
      "bridge = false\n"
      "tail_tol = 1e-12\n");
  CHECK(cfg.experiment == "main");
  CHECK(cfg.rank == 1);
  CHECK(cfg.replicas == 500);
  CHECK(cfg.t_grid == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(cfg.seed == 7);
  CHECK_FALSE(cfg.bridge);
  CHECK(cfg.truncation.tail_tol == 1e-12);
  CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      validate(parse_config_text(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("experiment = identities\nfoo = 1\n") == "foo");
  CHECK(field_of("experiment = identities\nrank = two\n") == "rank");
  CHECK(field_of("experiment = nosuch\n") == "experiment");
  CHECK(field_of("experiment = identities\nreplicas = -3\n") == "replicas");
  CHECK(field_of("experiment = main\nt_grid = 1, 0.5\n") == "t_grid");
  CHECK(field_of("experiment = main\nentrance_mode = magic\n") == "entrance_mode");
  CHECK(field_of("experiment = main\nfamily = B\n") == "family");
  CHECK(field_of("experiment = main\nno equals sign\n") == "line 2");
  CHECK(field_of("experiment = identities\n") == "none");
  CHECK_THROWS_AS(load_config("/nonexistent/affsim.conf"), ConfigError);
}

TEST_CASE("every experiment has an anchor") {
  CHECK(experiment_names().size() == 13);
  for (const auto& n : experiment_names()) CHECK_FALSE(experiment_anchor(n).empty());
  CHECK_THROWS_AS(experiment_anchor("nosuch"), ConfigError);
}

TEST_CASE("check relations") {
  ExperimentReport r;
  r.check("a", 0.5, "<=", 1.0);
  r.check("b", 2.0, "<", 1.0);
  r.check("c", 0.02, ">", 0.01);
  r.check("d", std::nan(""), "<=", 1.0);
  CHECK(r.checks[0].pass);
  CHECK_FALSE(r.checks[1].pass);
  CHECK(r.checks[2].pass);
  CHECK_FALSE(r.checks[3].pass);
  CHECK_FALSE(r.passed());
  CHECK_THROWS_AS(r.check("e", 1, "~", 1), InternalError);
}

TEST_CASE("csv writer") {
  auto d = scratch("csv");
  fs::create_directories(d);
  {
    CsvWriter w(d / "x.csv", {"a", "b"});
    w.row({1.0, 0.1});
    CHECK_THROWS_AS(w.row({1.0}), InternalError);
  }
  CHECK(slurp(d / "x.csv") == "a,b\n1,0.10000000000000001\n");
  fs::remove_all(d);
}

TEST_CASE("report json schema and reproducibility") {
  auto d = scratch("report");
  ExperimentConfig cfg;
  cfg.experiment = "identities";
  cfg.out_dir = d;
  cfg.seeds = 1;
  auto r1 = run_experiment(cfg);
  CHECK(r1.passed());
  auto j = nlohmann::json::parse(slurp(d / "identities" / "report.json"));
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["experiment"] == "identities");
  CHECK(j["anchor"] == experiment_anchor("identities"));
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() == r1.checks.size());
  for (const auto& c : j["checks"])
    for (const char* k : {"name", "seed", "statistic", "relation", "tolerance", "pass"}) CHECK(c.contains(k));
  CHECK(j["timestamp"].contains("wall_seconds"));
  for (const auto& f : j["files"]) CHECK(fs::exists(d / "identities" / f.get<std::string>()));

  const std::string csv1 = slurp(d / "identities" / "phichar.csv");
  auto r2 = run_experiment(cfg);
  CHECK(slurp(d / "identities" / "phichar.csv") == csv1);
  CHECK(report_json(r1, false) == report_json(r2, false));
  fs::remove_all(d);
}
