#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "stvl/rng.hpp"
#include "stvl/types.hpp"

namespace stvl {

// All samplers use the half-speed normalization: a stable variable at time t
// has characteristic function exp(-t |xi|^alpha / 2), and the Brownian case
// alpha = 2 is N(0, t).

/// Symmetric alpha-stable law at time t. alpha in (0, 2].
struct StableSpec {
  double alpha;
  double time = 1.0;
  void validate() const;
};

/// alpha/2-stable subordinator at time t with E exp(-r S_t) = exp(-t (2r)^{alpha/2} / 2).
struct SubordinatorSpec {
  double alpha;
  double time = 1.0;
  void validate() const;
};

/// Provenance of a SampleSet; enough to regenerate it bit for bit.
struct SampleMeta {
  std::string kind;  // "sym_stable", "subordinator", "stable_vector", "ergodic", "custom"
  double alpha = 0.0;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// N draws of a (possibly vector-valued) law, one draw per row.
struct SampleSet {
  Matrix values;
  SampleMeta meta;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }
  [[nodiscard]] auto column(int j = 0) const { return values.col(j); }
};

/// Wraps an existing 1-D vector of draws.
SampleSet make_sample_set(const Vector& values, std::string kind = "custom");

/// Unit-scale symmetric stable draw (characteristic function exp(-|xi|^alpha))
/// by the Chambers-Mallows-Stuck transform.
double sample_unit_sym_stable(double alpha, RngStream& rng);

/// Unit positive stable draw with E exp(-r X) = exp(-r^beta), beta in (0, 1),
/// by Kanter's representation.
double sample_positive_stable(double beta, RngStream& rng);

double sample_sym_stable(const StableSpec& spec, RngStream& rng);
double sample_subordinator(const SubordinatorSpec& spec, RngStream& rng);

/// sqrt(S_t) * N(0, I_d) with S_t the subordinator; alpha = 2 returns sqrt(t) * N(0, I_d).
Vector sample_stable_vector(double alpha, double t, int d, RngStream& rng);

/// Writes one draw of sample_stable_vector into `out` (size d) without allocating.
void sample_stable_vector_into(double alpha, double t, RngStream& rng, Eigen::Ref<Vector> out);

// Bulk generators. Draw k lives in block k / kSampleBlock, which reads from
// rng.substream(block); the result is independent of the worker count.
inline constexpr std::size_t kSampleBlock = 4096;

SampleSet sample_sym_stable_set(const StableSpec& spec, std::size_t n, const RngStream& rng,
                                unsigned workers = 0);
SampleSet sample_subordinator_set(const SubordinatorSpec& spec, std::size_t n, const RngStream& rng,
                                  unsigned workers = 0);
SampleSet sample_stable_vector_set(double alpha, double t, int d, std::size_t n, const RngStream& rng,
                                   unsigned workers = 0);

/// Empirical characteristic function with its nominal standard error 1/sqrt(N).
struct CharFnEstimate {
  std::complex<double> value;
  double std_error;
};

/// (1/N) sum_k exp(i <xi, X_k>) over the rows of `samples`.
template <typename Derived, typename XiDerived>
CharFnEstimate empirical_char_fn(const Eigen::MatrixBase<Derived>& samples,
                                 const Eigen::MatrixBase<XiDerived>& xi);

CharFnEstimate empirical_char_fn(const SampleSet& samples, double xi);
CharFnEstimate empirical_char_fn(const SampleSet& samples, const Vector& xi);

/// Median of `blocks` near-equal contiguous block means. blocks = 1 is the plain mean.
double robust_mean(const Eigen::Ref<const Vector>& samples, std::size_t blocks = 32);
double robust_mean(const SampleSet& samples, std::size_t blocks = 32);

/// Spread of the block means scaled to a standard error of the median-of-means
/// estimate: 1.2533 * sd(block means) / sqrt(blocks).
double robust_std_error(const Eigen::Ref<const Vector>& samples, std::size_t blocks = 32);

// ---------------------------------------------------------------------------

template <typename Derived, typename XiDerived>
CharFnEstimate empirical_char_fn(const Eigen::MatrixBase<Derived>& samples,
                                 const Eigen::MatrixBase<XiDerived>& xi) {
  const auto n = samples.rows();
  if (n == 0) throw std::invalid_argument("empirical_char_fn: empty sample set");
  if (samples.cols() != xi.size())
    throw std::invalid_argument("empirical_char_fn: xi dimension does not match samples");
  double re = 0.0;
  double im = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double phase = samples.row(k).dot(xi.transpose());
    re += std::cos(phase);
    im += std::sin(phase);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  return {{re * inv_n, im * inv_n}, std::sqrt(inv_n)};
}

}  // namespace stvl
