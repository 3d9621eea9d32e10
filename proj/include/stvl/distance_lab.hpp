#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stvl/stable_sampling.hpp"
#include "stvl/types.hpp"

namespace stvl {

// Total variation here is sup over |h| <= 1 of |mu(h) - nu(h)|, i.e. the full
// L1 distance of densities. Its maximum is 2, not 1.

/// Density tabulated at n_cells + 1 equally spaced nodes on [x_min, x_max],
/// with the power-law tail tail_c |x|^{-1-a} + tail_c2 |x|^{-1-2a}
/// (a = tail_exponent) outside the grid.
struct GridDensity {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n_cells = 0;
  std::vector<double> values;
  double tail_exponent = 0.0;
  double tail_c = 0.0;
  double tail_c2 = 0.0;

  [[nodiscard]] double dx() const { return (x_max - x_min) / static_cast<double>(n_cells); }
  [[nodiscard]] double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
  /// Trapezoidal mass on the grid.
  [[nodiscard]] double grid_mass() const;
  /// Analytic mass of the power-law tails beyond both grid ends.
  [[nodiscard]] double tail_mass() const;
  [[nodiscard]] double total_mass() const { return grid_mass() + tail_mass(); }
  /// Throws unless values are non-negative and total mass is within 1e-4 of 1.
  void validate() const;
};

/// Trapezoidal integral of |p - q| on the shared grid plus the tail
/// difference (exact leading order for equal exponents, otherwise the sum of
/// tail masses), clamped to [0, 2].
double tv_from_densities(const GridDensity& p, const GridDensity& q);

/// Estimate with provenance, serialized as {estimator, value, error_bound, n, params}.
struct DistanceReport {
  std::string estimator;
  double value = 0.0;
  double error_bound = 0.0;
  std::size_t n = 0;
  std::vector<std::pair<std::string, double>> params;
  double noise_floor = 0.0;  // measured self-distance, histogram estimators only
};

/// Default histogram bin count ceil(N^{1/3}).
std::size_t default_bins(std::size_t n);

/// Histogram TV of two scalar sample sets: sum_i |p_i - q_i| over `bins`
/// shared bins holding equal pooled mass between the pooled 1e-4 and 1 - 1e-4
/// quantiles. Mass outside the clipped range goes to error_bound, and the
/// noise floor (self-distance between halves of each input, rescaled to the
/// full sample size) is measured and reported. Biased low for overlapping laws
/// at coarse binning and high by the noise floor.
DistanceReport tv_from_samples_1d(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                  std::size_t bins);
DistanceReport tv_from_samples_1d(const SampleSet& a, const SampleSet& b, std::size_t bins);

/// Product-binned histogram TV for d <= 3 with per-axis pooled-quantile edges.
/// Strongly biased in d > 1; use tv_cf_lower_bound for dimension checks.
DistanceReport tv_from_samples_nd(const Matrix& a, const Matrix& b, std::size_t bins_per_axis);

/// Exact empirical W1 in 1-D: mean |a_(i) - b_(i)| over sorted samples. The
/// larger set is reduced to the smaller size by taking evenly spaced order statistics.
double wasserstein1_1d(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);
double wasserstein1_1d(const SampleSet& a, const SampleSet& b);

/// max over xi of |E cos(xi X) - E cos(xi Y)| and |E sin(xi X) - E sin(xi Y)|.
/// cos and sin lie in the unit ball of bounded functions, so the value bounds
/// the TV distance from below up to Monte Carlo error; error_bound is three
/// standard errors of the maximizing component. Accepts d-dimensional samples
/// with xi applied along `direction` (unit vector, default first axis).
DistanceReport tv_cf_lower_bound(const Matrix& a, const Matrix& b, const std::vector<double>& xis,
                                 const Vector& direction = Vector());
DistanceReport tv_cf_lower_bound(const SampleSet& a, const SampleSet& b, const std::vector<double>& xis);

/// Log-log fit log(value) = slope log(2 - alpha) + intercept.
struct RateFit {
  std::vector<std::pair<double, double>> points;  // (alpha, value)
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  /// Quadratic coefficient of a second-order fit in log(2 - alpha); zero for
  /// an exact power law, nonzero when a log factor bends the curve.
  double curvature = 0.0;
  bool curved = false;  // |curvature| above 1e-3 (needs >= 4 points)
};

RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace stvl
