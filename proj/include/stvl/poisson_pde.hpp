#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "stvl/rng.hpp"
#include "stvl/sde_engine.hpp"

namespace stvl {

// One-dimensional Poisson equation A f = h - mu(h) for the generators
//   A^Q f = b f' + f'' / 2,
//   A^P f = b f' + int [f(x+z) - f(x) - f'(x) z 1{|z|<1}] A(1,alpha) |z|^{-1-alpha} dz,
// both with symbol -|xi|^alpha / 2 on plane waves (alpha = 2 for A^Q).

struct UniformGrid {
  double x_min = 0.0;
  double step = 0.0;
  std::size_t n_points = 0;

  static UniformGrid span(double x_min, double x_max, std::size_t n_points);
  [[nodiscard]] double x(std::size_t i) const { return x_min + step * static_cast<double>(i); }
  [[nodiscard]] double x_max() const { return x(n_points - 1); }
  bool operator==(const UniformGrid&) const = default;
};

/// f = left or right constant outside the grid.
struct ConstantExtension {
  double left = 0.0;
  double right = 0.0;
};
/// f(y) = a + b y on each side.
struct LinearExtension {
  double left_a = 0.0, left_b = 0.0;
  double right_a = 0.0, right_b = 0.0;
};
/// Exact off-grid values with a declared bound on |f| used to truncate the far field.
struct AnalyticExtension {
  std::function<double(double)> fn;
  double sup_bound = 1.0;
};
/// monostate means no extension was declared; the nonlocal operator refuses it.
using Extension = std::variant<std::monostate, ConstantExtension, LinearExtension, AnalyticExtension>;

/// Values on a uniform grid plus a declared model of f off the grid.
struct GridFunction {
  UniformGrid grid;
  std::vector<double> values;
  Extension extension;

  /// Grid value at node i, extension outside [0, n).
  [[nodiscard]] double at_offset(std::ptrdiff_t i) const;
  [[nodiscard]] double at(double y) const;
};

/// Least-squares lines through the outer `fraction` of the grid on each side.
LinearExtension fit_linear_extension(const UniformGrid& grid, const std::vector<double>& values,
                                     double fraction = 0.1);

/// Samples `fn` on the grid with an analytic extension.
GridFunction tabulate(const UniformGrid& grid, const std::function<double(double)>& fn, double sup_bound);

struct FracLaplacianOptions {
  int delta_cells = 2;        // Taylor closure radius in grid cells
  double split = 1.0;         // |z| below which f'' z^2 is subtracted analytically
  double far_tolerance = 1e-5;  // analytic extensions: truncation bound of the far field
};

/// Fractional Laplacian with kernel A(1, alpha) |z|^{-1-alpha} on a fixed
/// grid. Pairs z with -z so the compensator cancels, integrates
/// g(z) = f(x+z) + f(x-z) - 2 f(x) against the kernel with exact moments of
/// piecewise-linear g, subtracts f''(x) z^2 analytically on |z| < split, and
/// closes |z| < delta with the Taylor term. Linear and constant extensions
/// are integrated to infinity in closed form.
class FracLaplacian1d {
 public:
  FracLaplacian1d(const UniformGrid& grid, double alpha, FracLaplacianOptions opts = {});

  /// Value at grid node i; needs 2 <= i < n - 2.
  [[nodiscard]] double apply(const GridFunction& f, std::size_t i) const;
  [[nodiscard]] double alpha() const { return alpha_; }

 private:
  // Integral of g over [k h, (k+1) h] against the kernel, g linear between nodes.
  [[nodiscard]] double cell(std::size_t k, double g_lo, double g_hi) const;

  UniformGrid grid_;
  double alpha_;
  double a_;
  FracLaplacianOptions opts_;
  std::vector<double> m0_;  // int z^{-1-alpha} over cell k, k < n_points
  std::vector<double> m1_;  // int z^{-alpha} over cell k
};

double frac_laplacian_1d(const GridFunction& f, double alpha, std::size_t i, const FracLaplacianOptions& opts = {});

/// Fourth-order centered first and second differences at node i (2 <= i < n - 2).
double d1_centered(const GridFunction& f, std::size_t i);
double d2_centered(const GridFunction& f, std::size_t i);

/// b(x) f'(x) + f''(x) / 2.
double generator_q(const GridFunction& f, const DriftField& drift, std::size_t i);
/// b(x) f'(x) + fractional Laplacian; alpha = 2 falls back to generator_q.
double generator_p(const GridFunction& f, const DriftField& drift, double alpha, std::size_t i);

/// Bounded test function h with its sup norm.
struct TestFunction {
  std::string kind;  // "cos", "constant", "indicator", "tabulated"
  std::function<double(double)> fn;
  double sup_norm = 1.0;
  std::vector<double> params;

  double operator()(double x) const { return fn(x); }
};

TestFunction cos_test_function();
TestFunction constant_test_function(double c);
/// 1 on [a, b], 0 elsewhere.
TestFunction indicator_test_function(double a, double b);
/// Linear interpolation of (xs, ys), constant beyond the ends.
TestFunction tabulated_test_function(std::vector<double> xs, std::vector<double> ys);

struct PoissonProblem {
  TestFunction h;
  double alpha = 2.0;
  DriftField drift;
  double mu_h = std::numeric_limits<double>::quiet_NaN();  // NaN: closed form for OU/cos
};

enum class PoissonEngine { closed_form_ou, mc };

struct PoissonOptions {
  PoissonEngine engine = PoissonEngine::closed_form_ou;
  double tail_tol = 1e-8;     // stop once |P_t h(x) - mu(h)| < tail_tol at 3 consecutive nodes
  double panel = 0.25;        // closed form: Gauss-Legendre panel width in t
  double t_max = 0.0;         // > 0 pins the horizon (closed form) or sets it (mc)
  // Monte Carlo engine.
  std::size_t n_paths = 20000;
  double t_step = 0.05;
  double dt = 0.01;
  Scheme scheme = Scheme::direct_stable;
  RngStream rng{};
  unsigned workers = 0;
};

struct PoissonValue {
  double value = 0.0;
  double error = 0.0;  // quadrature (closed form) or quadrature + 3 MC standard errors
  double t_max = 0.0;
};

/// f(x) = -int_0^inf [P_t h(x) - mu(h)] dt truncated at t_max. Since
/// d/dt P_t h = A P_t h, this f solves A f = h - mu(h).
PoissonValue poisson_solution(const PoissonProblem& prob, double x, const PoissonOptions& opts = {});

/// Horizon at which the closed-form integrand stays below tail_tol for the
/// given points; used to share one t_max across a grid.
double poisson_horizon(const PoissonProblem& prob, const std::vector<double>& xs, const PoissonOptions& opts = {});

/// Solution on a grid with one shared horizon and a linear extension fitted on the outer 10%.
GridFunction solve_on_grid(const PoissonProblem& prob, const UniformGrid& grid, const PoissonOptions& opts = {});

/// generator(f)(x_i) - (h(x_i) - mu(h)).
double poisson_residual(const GridFunction& f, const PoissonProblem& prob, std::size_t i);

/// Residuals at nodes [first, last) sharing one operator.
std::vector<double> poisson_residuals(const GridFunction& f, const PoissonProblem& prob, std::size_t first,
                                      std::size_t last);

/// mu(h) as the ensemble mean of h at t_burn started from 0.
McEstimate mu_h_estimate(const TestFunction& h, const DriftField& drift, const Driver& driver,
                         const EulerConfig& cfg, double t_burn, std::size_t n, const RngStream& rng,
                         unsigned workers = 0);

/// sup over the grid of |f_a - f_b| / (1 + |x|).
double lin_norm_diff(const GridFunction& f_a, const GridFunction& f_b);

}  // namespace stvl
