#include "stvl/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace stvl {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

// JSON has no NaN; write null instead.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  if (m.cols() == 1) {
    out << "value\n";
  } else {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'v' << j + 1;
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

}  // namespace

Json to_json(const SampleMeta& meta, std::size_t n, int d) {
  return {{"kind", meta.kind}, {"alpha", meta.alpha}, {"t", meta.time}, {"d", d},
          {"seed", meta.seed}, {"stream", meta.stream}, {"n", n}};
}

Json to_json(const EnsembleProvenance& prov) {
  std::vector<double> x0(prov.x0.data(), prov.x0.data() + prov.x0.size());
  return {{"drift", prov.drift}, {"driver", prov.driver}, {"alpha", prov.alpha}, {"dt", prov.dt},
          {"scheme", prov.scheme}, {"seed", prov.seed},     {"stream", prov.stream}, {"x0", x0}};
}

Json to_json(const DistanceReport& report) {
  Json params = Json::object();
  for (const auto& [k, v] : report.params) params[k] = number(v);
  Json j = {{"estimator", report.estimator},
            {"value", number(report.value)},
            {"error_bound", number(report.error_bound)},
            {"n", report.n},
            {"params", params}};
  if (report.noise_floor > 0.0) j["noise_floor"] = report.noise_floor;
  return j;
}

Json to_json(const RateFit& fit) {
  Json pts = Json::array();
  for (const auto& [a, v] : fit.points) pts.push_back({{"alpha", a}, {"value", number(v)}});
  return {{"points", pts},
          {"slope", number(fit.slope)},
          {"intercept", number(fit.intercept)},
          {"max_residual", number(fit.max_residual)},
          {"curvature", number(fit.curvature)},
          {"curved", fit.curved}};
}

Json to_json(const ConstantReport& r) {
  return {{"d", r.d},         {"alpha", r.alpha}, {"A", number(r.a)},
          {"omega", number(r.omega)}, {"ratio", number(r.ratio)}, {"tail_mass", number(r.tail_mass)}};
}

void write_sample_set(const std::filesystem::path& path, const SampleSet& samples) {
  write_matrix_csv(path, samples.values);
  write_json(path.string() + ".json", to_json(samples.meta, samples.size(), samples.dim()));
}

void write_ensemble(const std::filesystem::path& path, const Ensemble& ensemble) {
  write_matrix_csv(path, ensemble.endpoints);
  Json j = to_json(ensemble.provenance);
  j["t"] = ensemble.t;
  j["n"] = ensemble.size();
  write_json(path.string() + ".json", j);
}

void CsvTable::add(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("CsvTable: row width does not match header");
  rows.push_back(std::move(row));
}

void CsvTable::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace stvl
