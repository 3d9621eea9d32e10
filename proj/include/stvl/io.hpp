#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stvl/analytic_constants.hpp"
#include "stvl/distance_lab.hpp"
#include "stvl/sde_engine.hpp"
#include "stvl/stable_sampling.hpp"

namespace stvl {

using Json = nlohmann::ordered_json;

Json to_json(const SampleMeta& meta, std::size_t n, int d);
Json to_json(const EnsembleProvenance& prov);
Json to_json(const DistanceReport& report);
Json to_json(const RateFit& fit);
Json to_json(const ConstantReport& report);

/// Writes `path` as CSV (header value or v1..vd) and `path` + ".json" with the provenance.
void write_sample_set(const std::filesystem::path& path, const SampleSet& samples);
void write_ensemble(const std::filesystem::path& path, const Ensemble& ensemble);

/// Plain numeric table with a header row; values are written with 17 significant digits.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  void write(const std::filesystem::path& path) const;
};

void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace stvl
