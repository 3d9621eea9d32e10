#include "stvl/stable_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "stvl/parallel.hpp"

namespace stvl {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void StableSpec::validate() const {
  require(alpha > 0.0 && alpha <= 2.0, "StableSpec: alpha must lie in (0, 2]");
  require(time > 0.0, "StableSpec: time must be positive");
}

void SubordinatorSpec::validate() const {
  require(alpha > 0.0 && alpha < 2.0, "SubordinatorSpec: alpha must lie in (0, 2)");
  require(time > 0.0, "SubordinatorSpec: time must be positive");
}

SampleSet make_sample_set(const Vector& values, std::string kind) {
  if (values.size() == 0) throw std::invalid_argument("make_sample_set: empty sample set");
  SampleSet s;
  s.values = values;
  s.meta.kind = std::move(kind);
  return s;
}

double sample_unit_sym_stable(double alpha, RngStream& rng) {
  const double v = kPi * (rng.uniform_open() - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = rng.exponential();
  const double cos_v = std::cos(v);
  return std::sin(alpha * v) / std::pow(cos_v, 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

double sample_positive_stable(double beta, RngStream& rng) {
  require(beta > 0.0 && beta < 1.0, "sample_positive_stable: beta must lie in (0, 1)");
  const double u = kPi * rng.uniform_open();
  const double w = rng.exponential();
  const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
  return a * std::pow(std::sin((1.0 - beta) * u) / w, (1.0 - beta) / beta);
}

double sample_sym_stable(const StableSpec& spec, RngStream& rng) {
  spec.validate();
  if (spec.alpha == 2.0) return std::sqrt(spec.time) * rng.normal();
  // Unit scale has exponent |xi|^alpha; matching t |xi|^alpha / 2 needs scale (t/2)^{1/alpha}.
  return std::pow(0.5 * spec.time, 1.0 / spec.alpha) * sample_unit_sym_stable(spec.alpha, rng);
}

double sample_subordinator(const SubordinatorSpec& spec, RngStream& rng) {
  spec.validate();
  const double beta = 0.5 * spec.alpha;
  // c X with E exp(-r X) = exp(-r^beta) has exponent c^beta r^beta; the target
  // exponent is t 2^{beta - 1} r^beta.
  const double scale = std::pow(spec.time * std::pow(2.0, beta - 1.0), 1.0 / beta);
  for (;;) {
    const double s = scale * sample_positive_stable(beta, rng);
    if (s > 0.0 && std::isfinite(s)) return s;
  }
}

void sample_stable_vector_into(double alpha, double t, RngStream& rng, Eigen::Ref<Vector> out) {
  require(out.size() > 0, "sample_stable_vector: dimension must be positive");
  require(alpha > 0.0 && alpha <= 2.0, "sample_stable_vector: alpha must lie in (0, 2]");
  require(t > 0.0, "sample_stable_vector: time must be positive");
  const double s = alpha == 2.0 ? t : sample_subordinator({alpha, t}, rng);
  const double root = std::sqrt(s);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = root * rng.normal();
}

Vector sample_stable_vector(double alpha, double t, int d, RngStream& rng) {
  require(d > 0, "sample_stable_vector: dimension must be positive");
  Vector out(d);
  sample_stable_vector_into(alpha, t, rng, out);
  return out;
}

namespace {

template <typename Draw>
SampleSet bulk(std::size_t n, int d, const RngStream& rng, unsigned workers, SampleMeta meta, Draw draw) {
  require(n > 0, "sample set size must be positive");
  SampleSet s;
  s.values.resize(static_cast<Eigen::Index>(n), d);
  parallel_blocks(n, kSampleBlock, workers, [&](std::size_t block, std::size_t begin, std::size_t end) {
    RngStream local = rng.substream(block);
    Vector row(d);
    for (std::size_t k = begin; k < end; ++k) {
      draw(local, row);
      s.values.row(static_cast<Eigen::Index>(k)) = row.transpose();
    }
  });
  meta.seed = rng.root_seed();
  meta.stream = rng.stream_index();
  s.meta = std::move(meta);
  return s;
}

}  // namespace

SampleSet sample_sym_stable_set(const StableSpec& spec, std::size_t n, const RngStream& rng, unsigned workers) {
  spec.validate();
  return bulk(n, 1, rng, workers, {"sym_stable", spec.alpha, spec.time, 0, 0},
              [&](RngStream& r, Vector& row) { row[0] = sample_sym_stable(spec, r); });
}

SampleSet sample_subordinator_set(const SubordinatorSpec& spec, std::size_t n, const RngStream& rng,
                                  unsigned workers) {
  spec.validate();
  return bulk(n, 1, rng, workers, {"subordinator", spec.alpha, spec.time, 0, 0},
              [&](RngStream& r, Vector& row) { row[0] = sample_subordinator(spec, r); });
}

SampleSet sample_stable_vector_set(double alpha, double t, int d, std::size_t n, const RngStream& rng,
                                   unsigned workers) {
  require(d > 0, "sample_stable_vector: dimension must be positive");
  return bulk(n, d, rng, workers, {"stable_vector", alpha, t, 0, 0},
              [&](RngStream& r, Vector& row) { sample_stable_vector_into(alpha, t, r, row); });
}

CharFnEstimate empirical_char_fn(const SampleSet& samples, double xi) {
  if (samples.dim() != 1) throw std::invalid_argument("empirical_char_fn: scalar xi needs scalar samples");
  Vector v(1);
  v[0] = xi;
  return empirical_char_fn(samples.values, v);
}

CharFnEstimate empirical_char_fn(const SampleSet& samples, const Vector& xi) {
  return empirical_char_fn(samples.values, xi);
}

namespace {

std::vector<double> block_means(const Eigen::Ref<const Vector>& samples, std::size_t blocks) {
  const auto n = static_cast<std::size_t>(samples.size());
  if (n == 0) throw std::invalid_argument("robust_mean: empty sample set");
  if (blocks == 0) throw std::invalid_argument("robust_mean: blocks must be positive");
  blocks = std::min(blocks, n);
  std::vector<double> means(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = b * n / blocks;
    const std::size_t end = (b + 1) * n / blocks;
    means[b] = samples.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)).mean();
  }
  return means;
}

}  // namespace

double robust_mean(const Eigen::Ref<const Vector>& samples, std::size_t blocks) {
  auto means = block_means(samples, blocks);
  const std::size_t m = means.size();
  std::sort(means.begin(), means.end());
  return m % 2 == 1 ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
}

double robust_mean(const SampleSet& samples, std::size_t blocks) {
  if (samples.dim() != 1) throw std::invalid_argument("robust_mean: scalar samples required");
  return robust_mean(samples.values.col(0), blocks);
}

double robust_std_error(const Eigen::Ref<const Vector>& samples, std::size_t blocks) {
  const auto means = block_means(samples, blocks);
  const auto m = static_cast<double>(means.size());
  if (means.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : means) ss += (v - mean) * (v - mean);
  // Asymptotic efficiency of the median relative to the mean is 2/pi.
  return std::sqrt(std::numbers::pi / 2.0) * std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
}

}  // namespace stvl
