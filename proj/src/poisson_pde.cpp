#include "stvl/poisson_pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "stvl/analytic_constants.hpp"
#include "stvl/ou_closed_form.hpp"

namespace stvl {

UniformGrid UniformGrid::span(double x_min, double x_max, std::size_t n_points) {
  if (n_points < 2 || !(x_max > x_min)) throw std::invalid_argument("UniformGrid: need x_max > x_min and >= 2 points");
  return {x_min, (x_max - x_min) / static_cast<double>(n_points - 1), n_points};
}

double GridFunction::at_offset(std::ptrdiff_t i) const {
  if (i >= 0 && static_cast<std::size_t>(i) < values.size()) return values[static_cast<std::size_t>(i)];
  const double y = grid.x_min + grid.step * static_cast<double>(i);
  const bool right = i >= 0;
  return std::visit(
      [&](const auto& ext) -> double {
        using T = std::decay_t<decltype(ext)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          throw std::invalid_argument("GridFunction: no extension declared for off-grid values");
        } else if constexpr (std::is_same_v<T, ConstantExtension>) {
          return right ? ext.right : ext.left;
        } else if constexpr (std::is_same_v<T, LinearExtension>) {
          return right ? ext.right_a + ext.right_b * y : ext.left_a + ext.left_b * y;
        } else {
          return ext.fn(y);
        }
      },
      extension);
}

double GridFunction::at(double y) const {
  const double pos = (y - grid.x_min) / grid.step;
  if (pos < 0.0 || pos > static_cast<double>(grid.n_points - 1)) {
    // Off the grid: evaluate the extension directly.
    const auto shadow = static_cast<std::ptrdiff_t>(pos < 0.0 ? std::floor(pos) : std::ceil(pos));
    if (std::holds_alternative<AnalyticExtension>(extension)) return std::get<AnalyticExtension>(extension).fn(y);
    if (std::holds_alternative<LinearExtension>(extension)) {
      const auto& e = std::get<LinearExtension>(extension);
      return shadow >= 0 ? e.right_a + e.right_b * y : e.left_a + e.left_b * y;
    }
    return at_offset(shadow);
  }
  const auto lo = std::min(static_cast<std::size_t>(pos), grid.n_points - 2);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

LinearExtension fit_linear_extension(const UniformGrid& grid, const std::vector<double>& values, double fraction) {
  if (values.size() != grid.n_points) throw std::invalid_argument("fit_linear_extension: size mismatch");
  const auto m = std::max<std::size_t>(2, static_cast<std::size_t>(fraction * static_cast<double>(grid.n_points)));
  if (m > grid.n_points) throw std::invalid_argument("fit_linear_extension: grid too small");
  auto fit = [&](std::size_t first) {
    Matrix design(static_cast<Eigen::Index>(m), 2);
    Vector y(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
      design(static_cast<Eigen::Index>(k), 0) = 1.0;
      design(static_cast<Eigen::Index>(k), 1) = grid.x(first + k);
      y[static_cast<Eigen::Index>(k)] = values[first + k];
    }
    const Vector coef = design.colPivHouseholderQr().solve(y);
    return std::pair{coef[0], coef[1]};
  };
  const auto [la, lb] = fit(0);
  const auto [ra, rb] = fit(grid.n_points - m);
  return {la, lb, ra, rb};
}

GridFunction tabulate(const UniformGrid& grid, const std::function<double(double)>& fn, double sup_bound) {
  GridFunction f{grid, std::vector<double>(grid.n_points), AnalyticExtension{fn, sup_bound}};
  for (std::size_t i = 0; i < grid.n_points; ++i) f.values[i] = fn(grid.x(i));
  return f;
}

FracLaplacian1d::FracLaplacian1d(const UniformGrid& grid, double alpha, FracLaplacianOptions opts)
    : grid_(grid), alpha_(alpha), a_(0.0), opts_(opts) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("frac_laplacian_1d: alpha must lie in (1, 2)");
  if (grid.n_points < 5) throw std::invalid_argument("frac_laplacian_1d: grid too small");
  if (opts.delta_cells < 1) throw std::invalid_argument("frac_laplacian_1d: delta_cells must be >= 1");
  a_ = a_const(1, alpha);
  m0_.resize(grid.n_points);
  m1_.resize(grid.n_points);
  const double h = grid.step;
  for (std::size_t k = 1; k < grid.n_points; ++k) {
    const double lo = h * static_cast<double>(k);
    const double hi = lo + h;
    m0_[k] = (std::pow(lo, -alpha) - std::pow(hi, -alpha)) / alpha;
    m1_[k] = (std::pow(lo, 1.0 - alpha) - std::pow(hi, 1.0 - alpha)) / (alpha - 1.0);
  }
}

double FracLaplacian1d::cell(std::size_t k, double g_lo, double g_hi) const {
  const double h = grid_.step;
  const double lo = h * static_cast<double>(k);
  double m0, m1;
  if (k < m0_.size()) {
    m0 = m0_[k];
    m1 = m1_[k];
  } else {
    const double hi = lo + h;
    m0 = (std::pow(lo, -alpha_) - std::pow(hi, -alpha_)) / alpha_;
    m1 = (std::pow(lo, 1.0 - alpha_) - std::pow(hi, 1.0 - alpha_)) / (alpha_ - 1.0);
  }
  return g_lo * m0 + (g_hi - g_lo) * (m1 - lo * m0) / h;
}

double FracLaplacian1d::apply(const GridFunction& f, std::size_t i) const {
  if (!(f.grid == grid_)) throw std::invalid_argument("frac_laplacian_1d: grid mismatch");
  if (std::holds_alternative<std::monostate>(f.extension))
    throw std::invalid_argument("frac_laplacian_1d: off-grid extension not declared");
  const std::size_t n = grid_.n_points;
  if (i < 2 || i + 2 >= n) throw std::invalid_argument("frac_laplacian_1d: point too close to the boundary");

  const double h = grid_.step;
  const double x = grid_.x(i);
  const double fx = f.values[i];
  const double f2 = d2_centered(f, i);
  const auto ii = static_cast<std::ptrdiff_t>(i);
  auto g = [&](std::size_t k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    return f.at_offset(ii + kk) + f.at_offset(ii - kk) - 2.0 * fx;
  };

  const auto k_split = std::max<std::size_t>(static_cast<std::size_t>(opts_.delta_cells) + 1,
                                             static_cast<std::size_t>(std::llround(opts_.split / h)));
  const double z_split = h * static_cast<double>(k_split);

  // f'' z^2 over [0, z_split], exact.
  double sum = f2 * std::pow(z_split, 2.0 - alpha_) / (2.0 - alpha_);

  // Remainder g - f'' z^2 over [delta, z_split].
  auto r = [&](std::size_t k) {
    const double z = h * static_cast<double>(k);
    return g(k) - f2 * z * z;
  };
  double prev = r(static_cast<std::size_t>(opts_.delta_cells));
  for (auto k = static_cast<std::size_t>(opts_.delta_cells); k < k_split; ++k) {
    const double next = r(k + 1);
    sum += cell(k, prev, next);
    prev = next;
  }

  // g itself beyond the split, through the part of the line any grid value can reach.
  const std::size_t k_grid = std::max(i, n - 1 - i) + 1;
  std::size_t k = k_split;
  double g_prev = g(k);
  for (; k < k_grid; ++k) {
    const double g_next = g(k + 1);
    sum += cell(k, g_prev, g_next);
    g_prev = g_next;
  }

  // Both x + z and x - z are off the grid from here on.
  const double z_far = h * static_cast<double>(k);
  sum += std::visit(
      [&](const auto& ext) -> double {
        using T = std::decay_t<decltype(ext)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, AnalyticExtension>) {
          const double bound = 2.0 * ext.sup_bound + 2.0 * std::abs(fx);
          const double z_stop = std::max(
              z_far, std::pow(bound * a_ / (alpha_ * opts_.far_tolerance), 1.0 / alpha_));
          double s = 0.0;
          std::size_t kk = k;
          double lo_val = g(kk);
          for (; h * static_cast<double>(kk) < z_stop; ++kk) {
            const double hi_val = g(kk + 1);
            s += cell(kk, lo_val, hi_val);
            lo_val = hi_val;
          }
          return s;
        } else {
          double ra = 0.0, rb = 0.0, la = 0.0, lb = 0.0;
          if constexpr (std::is_same_v<T, ConstantExtension>) {
            ra = ext.right;
            la = ext.left;
          } else {
            ra = ext.right_a;
            rb = ext.right_b;
            la = ext.left_a;
            lb = ext.left_b;
          }
          // g(z) = c0 + c1 z for z >= z_far.
          const double c0 = ra + la + (rb + lb) * x - 2.0 * fx;
          const double c1 = rb - lb;
          return c0 * std::pow(z_far, -alpha_) / alpha_ + c1 * std::pow(z_far, 1.0 - alpha_) / (alpha_ - 1.0);
        }
      },
      f.extension);

  return a_ * sum;
}

double frac_laplacian_1d(const GridFunction& f, double alpha, std::size_t i, const FracLaplacianOptions& opts) {
  return FracLaplacian1d(f.grid, alpha, opts).apply(f, i);
}

namespace {

void check_stencil(const GridFunction& f, std::size_t i) {
  if (f.values.size() != f.grid.n_points) throw std::invalid_argument("GridFunction: size mismatch");
  if (i < 2 || i + 2 >= f.values.size()) throw std::invalid_argument("stencil leaves the grid");
}

}  // namespace

double d1_centered(const GridFunction& f, std::size_t i) {
  check_stencil(f, i);
  const auto& v = f.values;
  return (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * f.grid.step);
}

double d2_centered(const GridFunction& f, std::size_t i) {
  check_stencil(f, i);
  const auto& v = f.values;
  const double h = f.grid.step;
  return (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
}

double generator_q(const GridFunction& f, const DriftField& drift, std::size_t i) {
  return drift(f.grid.x(i)) * d1_centered(f, i) + 0.5 * d2_centered(f, i);
}

double generator_p(const GridFunction& f, const DriftField& drift, double alpha, std::size_t i) {
  if (alpha == 2.0) return generator_q(f, drift, i);
  return drift(f.grid.x(i)) * d1_centered(f, i) + frac_laplacian_1d(f, alpha, i);
}

TestFunction cos_test_function() {
  return {"cos", [](double x) { return std::cos(x); }, 1.0, {}};
}

TestFunction constant_test_function(double c) {
  return {"constant", [c](double) { return c; }, std::abs(c), {c}};
}

TestFunction indicator_test_function(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("indicator: need a < b");
  return {"indicator", [a, b](double x) { return (x >= a && x <= b) ? 1.0 : 0.0; }, 1.0, {a, b}};
}

TestFunction tabulated_test_function(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("tabulated: need >= 2 matching points");
  if (!std::is_sorted(xs.begin(), xs.end()) || std::adjacent_find(xs.begin(), xs.end()) != xs.end())
    throw std::invalid_argument("tabulated: abscissae must be strictly increasing");
  double sup = 0.0;
  for (double y : ys) sup = std::max(sup, std::abs(y));
  auto fn = [xs, ys](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const auto j = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return ys[j - 1] + w * (ys[j] - ys[j - 1]);
  };
  return {"tabulated", fn, sup, {}};
}

namespace {

bool closed_form_supported(const PoissonProblem& prob) {
  return prob.drift.name == "ou" && prob.drift.dim == 1 && (prob.h.kind == "cos" || prob.h.kind == "constant");
}

double resolved_mu(const PoissonProblem& prob) {
  if (!std::isnan(prob.mu_h)) return prob.mu_h;
  if (prob.h.kind == "constant") return prob.h.params.at(0);
  if (prob.h.kind == "cos" && prob.drift.name == "ou") return ergodic_mean_cos(prob.alpha);
  throw std::invalid_argument("poisson: mu(h) must be supplied for this problem");
}

// Closed-form integrand P_t h(x) - mu(h).
double closed_form_integrand(const PoissonProblem& prob, double mu, double x, double t) {
  if (prob.h.kind == "constant") return prob.h.params.at(0) - mu;
  return semigroup_cos(prob.alpha, x, t) - mu;
}

constexpr double kMaxHorizon = 400.0;

double closed_form_horizon(const PoissonProblem& prob, double mu, double x, const PoissonOptions& opts) {
  int below = 0;
  for (double t = opts.panel;; t += opts.panel) {
    below = std::abs(closed_form_integrand(prob, mu, x, t)) < opts.tail_tol ? below + 1 : 0;
    if (below == 3) return t;
    if (t > kMaxHorizon)
      throw std::runtime_error("poisson: integrand still above tail tolerance at t = " + std::to_string(t));
  }
}

PoissonValue closed_form_solution(const PoissonProblem& prob, double x, const PoissonOptions& opts) {
  const double mu = resolved_mu(prob);
  const double t_max = opts.t_max > 0.0 ? opts.t_max : closed_form_horizon(prob, mu, x, opts);
  if (std::abs(closed_form_integrand(prob, mu, x, t_max)) > std::max(opts.tail_tol, 1e-6))
    throw std::runtime_error("poisson: integrand at t_max exceeds the tail tolerance");
  using Rule = boost::math::quadrature::gauss<double, 10>;
  double sum = 0.0;
  for (double a = 0.0; a < t_max - 1e-12; a += opts.panel) {
    const double b = std::min(a + opts.panel, t_max);
    sum += Rule::integrate([&](double t) { return closed_form_integrand(prob, mu, x, t); }, a, b);
  }
  // Neglected tail: the integrand decays at least like e^{-t} beyond t_max.
  return {-sum, std::abs(closed_form_integrand(prob, mu, x, t_max)), t_max};
}

PoissonValue mc_solution(const PoissonProblem& prob, double x, const PoissonOptions& opts) {
  const double mu = resolved_mu(prob);
  if (!(opts.t_max > 0.0)) throw std::invalid_argument("poisson (mc): t_max must be set");
  if (!(opts.t_step > 0.0)) throw std::invalid_argument("poisson (mc): t_step must be positive");
  const auto m = static_cast<std::size_t>(std::ceil(opts.t_max / opts.t_step - 1e-9));
  std::vector<double> times(m);
  for (std::size_t j = 0; j < m; ++j) times[j] = std::min(opts.t_max, opts.t_step * static_cast<double>(j + 1));

  const Driver driver = prob.alpha == 2.0 ? Driver::brownian() : Driver::stable_process(prob.alpha);
  EulerConfig cfg{opts.dt, prob.alpha == 2.0 ? Scheme::brownian : opts.scheme, {}};
  Vector x0(1);
  x0[0] = x;
  // One set of paths observed at every node: common random numbers across t.
  const auto states = run_ensemble_at(prob.drift, cfg, driver, x0, times, opts.n_paths, opts.rng, opts.workers);

  const auto n = static_cast<Eigen::Index>(opts.n_paths);
  Vector per_path = Vector::Constant(n, 0.5 * opts.t_step * (prob.h(x) - mu));
  std::vector<double> node_mean(m);
  std::vector<double> node_se(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double w = (j + 1 == m) ? 0.5 * opts.t_step : opts.t_step;
    double s = 0.0, ss = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double v = prob.h(states[j](k, 0)) - mu;
      per_path[k] += w * v;
      s += v;
      ss += v * v;
    }
    node_mean[j] = s / static_cast<double>(n);
    node_se[j] = std::sqrt(std::max(0.0, ss / static_cast<double>(n) - node_mean[j] * node_mean[j]) /
                           static_cast<double>(n));
  }
  for (std::size_t j = m >= 3 ? m - 3 : 0; j < m; ++j) {
    if (std::abs(node_mean[j]) > opts.tail_tol + 3.0 * node_se[j])
      throw std::runtime_error("poisson (mc): integrand at the horizon exceeds the tail tolerance");
  }
  const double value = -per_path.mean();
  const double sd = std::sqrt((per_path.array() + value).square().sum() / static_cast<double>(std::max<Eigen::Index>(1, n - 1)));
  return {value, 3.0 * sd / std::sqrt(static_cast<double>(n)), opts.t_max};
}

}  // namespace

PoissonValue poisson_solution(const PoissonProblem& prob, double x, const PoissonOptions& opts) {
  if (!(prob.alpha > 1.0 && prob.alpha <= 2.0)) throw std::invalid_argument("poisson: alpha must lie in (1, 2]");
  if (!prob.h.fn) throw std::invalid_argument("poisson: test function missing");
  if (opts.engine == PoissonEngine::closed_form_ou) {
    if (!closed_form_supported(prob))
      throw std::invalid_argument("poisson: closed-form engine needs the OU drift and h = cos or constant");
    return closed_form_solution(prob, x, opts);
  }
  return mc_solution(prob, x, opts);
}

double poisson_horizon(const PoissonProblem& prob, const std::vector<double>& xs, const PoissonOptions& opts) {
  if (!closed_form_supported(prob)) throw std::invalid_argument("poisson_horizon: closed-form problems only");
  const double mu = resolved_mu(prob);
  double t = 0.0;
  for (double x : xs) t = std::max(t, closed_form_horizon(prob, mu, x, opts));
  return t;
}

GridFunction solve_on_grid(const PoissonProblem& prob, const UniformGrid& grid, const PoissonOptions& opts) {
  PoissonOptions shared = opts;
  if (opts.engine == PoissonEngine::closed_form_ou && !(opts.t_max > 0.0)) {
    std::vector<double> probe{grid.x_min, grid.x_max(), 0.0};
    // The slowest decay sits at the largest |x| or near a zero of cos(e^{-t} x).
    for (std::size_t i = 0; i < grid.n_points; i += std::max<std::size_t>(1, grid.n_points / 64))
      probe.push_back(grid.x(i));
    shared.t_max = poisson_horizon(prob, probe, opts);
  }
  GridFunction f{grid, std::vector<double>(grid.n_points), {}};
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    if (opts.engine == PoissonEngine::mc) shared.rng = opts.rng;  // same paths for every x
    f.values[i] = poisson_solution(prob, grid.x(i), shared).value;
  }
  f.extension = fit_linear_extension(grid, f.values, 0.1);
  return f;
}

double poisson_residual(const GridFunction& f, const PoissonProblem& prob, std::size_t i) {
  const double x = f.grid.x(i);
  return generator_p(f, prob.drift, prob.alpha, i) - (prob.h(x) - resolved_mu(prob));
}

std::vector<double> poisson_residuals(const GridFunction& f, const PoissonProblem& prob, std::size_t first,
                                      std::size_t last) {
  const double mu = resolved_mu(prob);
  std::vector<double> out;
  out.reserve(last > first ? last - first : 0);
  if (prob.alpha == 2.0) {
    for (std::size_t i = first; i < last; ++i) out.push_back(generator_q(f, prob.drift, i) - (prob.h(f.grid.x(i)) - mu));
    return out;
  }
  const FracLaplacian1d lap(f.grid, prob.alpha);
  for (std::size_t i = first; i < last; ++i) {
    const double x = f.grid.x(i);
    out.push_back(prob.drift(x) * d1_centered(f, i) + lap.apply(f, i) - (prob.h(x) - mu));
  }
  return out;
}

McEstimate mu_h_estimate(const TestFunction& h, const DriftField& drift, const Driver& driver,
                         const EulerConfig& cfg, double t_burn, std::size_t n, const RngStream& rng,
                         unsigned workers) {
  if (h.kind == "constant") return {h.params.at(0), 0.0, 0.0};
  if (drift.dim != 1) throw std::invalid_argument("mu_h_estimate: one-dimensional drift expected");
  const Vector zero = Vector::Zero(1);
  return mc_semigroup([&](const Eigen::Ref<const Vector>& x) { return h(x[0]); }, h.sup_norm, drift, cfg, driver,
                      zero, t_burn, n, rng, workers);
}

double lin_norm_diff(const GridFunction& f_a, const GridFunction& f_b) {
  if (!(f_a.grid == f_b.grid) || f_a.values.size() != f_b.values.size())
    throw std::invalid_argument("lin_norm_diff: grids differ");
  double sup = 0.0;
  for (std::size_t i = 0; i < f_a.values.size(); ++i)
    sup = std::max(sup, std::abs(f_a.values[i] - f_b.values[i]) / (1.0 + std::abs(f_a.grid.x(i))));
  return sup;
}

}  // namespace stvl
