#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "stvl/distance_lab.hpp"
#include "stvl/rng.hpp"
#include "stvl/stable_sampling.hpp"

namespace stvl {

// Closed forms for the 1-D Ornstein-Uhlenbeck process dX = -X dt + dL with
// the half-speed alpha-stable driver (alpha = 2 is Brownian motion).

/// Law of X_t started at x (kind transition) or the invariant law (kind ergodic).
struct OuLawSpec {
  enum class Kind { transition, ergodic };
  double alpha = 2.0;
  Kind kind = Kind::ergodic;
  double x = 0.0;
  double t = 0.0;

  static OuLawSpec transition(double alpha, double x, double t) { return {alpha, Kind::transition, x, t}; }
  static OuLawSpec ergodic(double alpha) { return {alpha, Kind::ergodic, 0.0, 0.0}; }
};

/// exp(i xi e^{-t} x) exp(-|xi|^alpha (1 - e^{-alpha t}) / (2 alpha)), or its
/// t -> infinity limit exp(-|xi|^alpha / (2 alpha)) for the ergodic law.
std::complex<double> transition_cf(const OuLawSpec& spec, double xi);

struct GridSpec {
  double x_min = -40.0;
  double x_max = 40.0;
  std::size_t n_cells = std::size_t{1} << 16;
};

/// Raised when the density inversion does not meet its accuracy targets.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double worst_x) : std::runtime_error(what), worst_x_(worst_x) {}
  [[nodiscard]] double worst_x() const { return worst_x_; }

 private:
  double worst_x_;
};

/// Invariant density p(x) = (1/pi) int_0^inf cos(xi x) exp(-xi^alpha / (2 alpha)) dxi
/// on the grid, by composite Gauss-Legendre panels fine enough to resolve
/// cos(xi x) at the grid edge, geometrically graded toward xi = 0 and truncated
/// where the integrand drops below 1e-14. The power-law tail is
/// (A(1, alpha) / alpha) |x|^{-1-alpha} plus the next series term. Requires 1 <= alpha <= 2 (alpha = 1 is
/// accepted for checks against the Cauchy law) and total mass within 1e-6 of 1.
GridDensity ergodic_density(double alpha, const GridSpec& grid = {});

/// Leading-order tail constant of the invariant density, A(1, alpha) / alpha (0 at alpha = 2).
double ergodic_tail_c(double alpha);

/// ||mu_alpha - mu_2||_TV from the two inverted densities on a shared grid.
/// alpha is limited to [1.05, 1.9995]; closer to 2 the difference falls below
/// the inversion accuracy.
double exact_tv_mu(double alpha, const GridSpec& grid = {});

/// mu_2(cos) - mu_alpha(cos) = e^{-1/4} - e^{-1/(2 alpha)}.
double lb_curve(double alpha);

/// P_t cos (x) = cos(e^{-t} x) exp(-(1 - e^{-alpha t}) / (2 alpha)).
double semigroup_cos(double alpha, double x, double t);

/// d/dx P_t cos (x) = -e^{-t} sin(e^{-t} x) exp(-(1 - e^{-alpha t}) / (2 alpha)).
double semigroup_cos_derivative(double alpha, double x, double t);

/// mu_alpha(cos) = e^{-1/(2 alpha)}.
double ergodic_mean_cos(double alpha);

/// E|Z| under mu_alpha: (2/pi) Gamma(1 - 1/alpha) (2 alpha)^{-1/alpha}; 1/sqrt(pi) at alpha = 2.
double ergodic_abs_mean(double alpha);

/// Exact draws from mu_alpha = law(alpha^{-1/alpha} L_1).
SampleSet sample_ergodic_law(double alpha, std::size_t n, const RngStream& rng, unsigned workers = 0);

}  // namespace stvl
