#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stvl/io.hpp"

namespace stvl {

/// Invalid configuration; path() names the offending field, e.g. "params.alpha[2]".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ExperimentConfig {
  std::string campaign;
  std::uint64_t seed = 20240601;
  Json params = Json::object();  // fully resolved after make_config
  std::filesystem::path output_dir;  // empty: nothing is written
  unsigned workers = 0;  // 0: default_workers(); never changes results
};

/// verify-samplers, moment-check, ou-rate, tv-theorem, poisson-rate (alias
/// poisson), constants, gradient-probe.
const std::vector<std::string>& campaign_names();

/// Validates the campaign parameters and fills in every default, so the
/// returned params are the complete record of what will run.
ExperimentConfig make_config(const std::string& campaign, const Json& params, std::uint64_t seed,
                             std::filesystem::path output_dir = {});

/// Reads {"campaign", "seed", "params", "output_dir"} from a JSON file. Missing
/// keys are left out of the result.
Json read_config_file(const std::filesystem::path& path);

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string relation;  // "abs": |v - e| <= tol, "rel": |v - e| <= tol |e|, "le": v <= e + tol, "ge": v >= e - tol
  bool pass = false;
  std::string provenance;
  std::string detail;
};

struct RunReport {
  Json config;
  std::vector<CheckRecord> checks;
  Json results = Json::object();
  Json timing = Json::object();  // seconds per stage
  std::string version;

  [[nodiscard]] bool passed() const;
  /// Without timing the JSON is a pure function of the config.
  [[nodiscard]] Json to_json(bool with_timing = true) const;
  /// Checks whose name starts with `prefix`.
  [[nodiscard]] std::vector<CheckRecord> matching(const std::string& prefix) const;
};

/// Runs the campaign. Data files go to output_dir/data and the report to
/// output_dir/report.json when output_dir is set. A failing computation is
/// recorded as a failed check and the remaining stages still run.
RunReport run_campaign(const ExperimentConfig& cfg);

}  // namespace stvl
