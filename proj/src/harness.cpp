#include "affsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "affsim/errors.hpp"

namespace affsim {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw ConfigError(key, "not a number: " + v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(key, "not a number: " + v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw ConfigError(key, "not an integer: " + v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(key, "not an integer: " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "not a boolean: " + v);
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "experiment") {
    cfg.experiment = v;
  } else if (key == "family") {
    if (v.size() != 1) throw ConfigError(key, "expected a single letter");
    cfg.family = v[0];
  } else if (key == "rank") {
    cfg.rank = static_cast<int>(parse_int(key, v));
  } else if (key == "replicas") {
    cfg.replicas = static_cast<long>(parse_int(key, v));
  } else if (key == "steps") {
    cfg.steps = static_cast<int>(parse_int(key, v));
  } else if (key == "dt") {
    cfg.dt = parse_double(key, v);
  } else if (key == "t0") {
    cfg.t0 = parse_double(key, v);
  } else if (key == "t_grid") {
    cfg.t_grid.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.t_grid.push_back(parse_double(key, trim(item)));
  } else if (key == "weight_radius") {
    cfg.truncation.weight_radius = parse_double(key, v);
  } else if (key == "lattice_radius") {
    cfg.truncation.lattice_radius = parse_double(key, v);
  } else if (key == "tail_tol") {
    cfg.truncation.tail_tol = parse_double(key, v);
  } else if (key == "seed") {
    long long s = parse_int(key, v);
    if (s < 0) throw ConfigError(key, "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  } else if (key == "seeds") {
    cfg.seeds = static_cast<int>(parse_int(key, v));
  } else if (key == "out") {
    cfg.out_dir = v;
  } else if (key == "entrance_mode") {
    cfg.entrance_mode = v;
  } else if (key == "bridge") {
    cfg.bridge = parse_bool(key, v);
  } else {
    throw ConfigError(key, "unknown key");
  }
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig cfg) {
  std::stringstream ss(text);
  std::string line;
  int ln = 0;
  while (std::getline(ss, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(ln), "expected key = value");
    apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

void validate(const ExperimentConfig& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + cfg.experiment + "'");
  if (cfg.family != 'A') throw ConfigError("family", "only type A is supported");
  if (cfg.rank < 0 || cfg.rank > 4) throw ConfigError("rank", "must be between 1 and 4");
  if (cfg.replicas < 0) throw ConfigError("replicas", "must be positive");
  if (cfg.steps < 0) throw ConfigError("steps", "must be positive");
  if (cfg.dt < 0) throw ConfigError("dt", "must be positive");
  if (cfg.t0 < 0) throw ConfigError("t0", "must be positive");
  if (cfg.seeds < 1) throw ConfigError("seeds", "must be positive");
  for (std::size_t i = 0; i < cfg.t_grid.size(); ++i)
    if (!(cfg.t_grid[i] > 0) || (i && cfg.t_grid[i] <= cfg.t_grid[i - 1]))
      throw ConfigError("t_grid", "must be positive and increasing");
  if (cfg.entrance_mode != "rejection" && cfg.entrance_mode != "radial")
    throw ConfigError("entrance_mode", "must be rejection or radial");
  const auto& t = cfg.truncation;
  if (!(t.weight_radius > 0) || !(t.lattice_radius > 0) || !(t.tail_tol > 0))
    throw ConfigError("truncation", "radii and tail_tol must be positive");
}

bool ExperimentReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

void ExperimentReport::check(const std::string& name, double statistic, const std::string& relation,
                             double tolerance, std::uint64_t seed) {
  bool ok;
  if (relation == "<=")
    ok = statistic <= tolerance;
  else if (relation == "<")
    ok = statistic < tolerance;
  else if (relation == ">=")
    ok = statistic >= tolerance;
  else if (relation == ">")
    ok = statistic > tolerance;
  else if (relation == "==")
    ok = statistic == tolerance;
  else
    throw InternalError("unknown relation " + relation);
  if (std::isnan(statistic)) ok = false;
  checks.push_back({name, statistic, tolerance, relation, ok, seed});
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : ncol_(columns.size()) {
  std::filesystem::create_directories(path.parent_path());
  own_.reset(std::fopen(path.string().c_str(), "wb"));
  if (!own_) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i) std::fprintf(own_.get(), "%s%s", i ? "," : "", columns[i].c_str());
  std::fputc('\n', own_.get());
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != ncol_) throw InternalError("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(own_.get(), "%s%.17g", i ? "," : "", values[i]);
  std::fputc('\n', own_.get());
}

std::string report_json(const ExperimentReport& r, bool timestamp) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["experiment"] = r.config.experiment;
  j["anchor"] = r.anchor;
  const auto& c = r.config;
  j["config"] = {{"family", std::string(1, c.family)},
                 {"rank", c.rank},
                 {"replicas", c.replicas},
                 {"steps", c.steps},
                 {"dt", c.dt},
                 {"t0", c.t0},
                 {"t_grid", c.t_grid},
                 {"weight_radius", c.truncation.weight_radius},
                 {"lattice_radius", c.truncation.lattice_radius},
                 {"tail_tol", c.truncation.tail_tol},
                 {"seed", c.seed},
                 {"seeds", c.seeds},
                 {"entrance_mode", c.entrance_mode},
                 {"bridge", c.bridge}};
  ordered_json checks = ordered_json::array();
  for (const auto& k : r.checks)
    checks.push_back({{"name", k.name},
                      {"seed", k.seed},
                      {"statistic", k.statistic},
                      {"relation", k.relation},
                      {"tolerance", k.tolerance},
                      {"pass", k.pass}});
  j["checks"] = checks;
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : r.summary) summary[k] = v;
  j["summary"] = summary;
  j["files"] = r.files;
  j["passed"] = r.passed();
  // run-dependent fields live under "timestamp" so the rest is reproducible
  if (timestamp) {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["timestamp"] = {{"utc", buf}, {"wall_seconds", r.wall_seconds}};
  }
  return j.dump(2);
}

}  // namespace affsim
