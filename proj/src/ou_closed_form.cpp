#include "stvl/ou_closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "stvl/analytic_constants.hpp"

namespace stvl {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha, double lo, bool lo_open, const char* who) {
  const bool ok = (lo_open ? alpha > lo : alpha >= lo) && alpha <= 2.0;
  if (!ok) throw std::invalid_argument(std::string(who) + ": alpha out of range");
}

// Nodes and weights of int_0^xi_max g(xi) dxi for g(xi) = exp(-xi^alpha / (2 alpha)).
struct FrequencyRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // includes g(node) / pi
};

FrequencyRule frequency_rule(double alpha, double panel_width) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const auto& abscissa = Rule::abscissa();
  const auto& weight = Rule::weights();
  // Exponent reaches 1e-14 at xi_max.
  const double xi_max = std::pow(2.0 * alpha * 14.0 * std::numbers::ln10, 1.0 / alpha);

  FrequencyRule rule;
  auto add_panel = [&](double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    auto push = [&](double xi, double w) {
      rule.nodes.push_back(xi);
      rule.weights.push_back(w * half * std::exp(-std::pow(xi, alpha) / (2.0 * alpha)) / kPi);
    };
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      if (abscissa[i] == 0.0) {
        push(mid, weight[i]);
      } else {
        push(mid - half * abscissa[i], weight[i]);
        push(mid + half * abscissa[i], weight[i]);
      }
    }
  };
  // Geometric grading handles the xi^alpha cusp at the origin.
  double hi = panel_width;
  constexpr int kLevels = 40;
  add_panel(0.0, hi * std::ldexp(1.0, -kLevels));
  for (int k = kLevels; k > 0; --k) add_panel(hi * std::ldexp(1.0, -k), hi * std::ldexp(1.0, -k + 1));
  for (double a = hi; a < xi_max; a += panel_width) add_panel(a, std::min(a + panel_width, xi_max));
  return rule;
}

// sum_j w_j cos(xi_j x_k) for x_k = x0 + k dx, k < count, by angle-addition
// recurrence reseeded every 512 steps.
void accumulate_cosine_sums(const FrequencyRule& rule, double x0, double dx, std::size_t count,
                            std::vector<double>& out) {
  out.assign(count, 0.0);
  constexpr std::size_t kReseed = 512;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double xi = rule.nodes[j];
    const double w = rule.weights[j];
    const double cd = std::cos(xi * dx);
    const double sd = std::sin(xi * dx);
    double c = 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      if (k % kReseed == 0) {
        const double phase = xi * (x0 + dx * static_cast<double>(k));
        c = std::cos(phase);
        s = std::sin(phase);
      }
      out[k] += w * c;
      const double c_next = c * cd - s * sd;
      s = s * cd + c * sd;
      c = c_next;
    }
  }
}

}  // namespace

std::complex<double> transition_cf(const OuLawSpec& spec, double xi) {
  check_alpha(spec.alpha, 0.0, true, "transition_cf");
  const double a = spec.alpha;
  const double scale = std::pow(std::abs(xi), a) / (2.0 * a);
  if (spec.kind == OuLawSpec::Kind::ergodic) return {std::exp(-scale), 0.0};
  if (!(spec.t >= 0.0)) throw std::invalid_argument("transition_cf: t must be non-negative");
  const double decay = std::exp(-scale * (-std::expm1(-a * spec.t)));
  return std::polar(decay, xi * std::exp(-spec.t) * spec.x);
}

double ergodic_tail_c(double alpha) {
  check_alpha(alpha, 0.0, true, "ergodic_tail_c");
  return alpha == 2.0 ? 0.0 : a_const(1, alpha) / alpha;
}

GridDensity ergodic_density(double alpha, const GridSpec& grid) {
  check_alpha(alpha, 1.0, false, "ergodic_density");
  if (!(grid.x_max > grid.x_min) || grid.n_cells < 2) throw std::invalid_argument("ergodic_density: bad grid");

  GridDensity p;
  p.x_min = grid.x_min;
  p.x_max = grid.x_max;
  p.n_cells = grid.n_cells;
  p.tail_exponent = alpha;
  p.tail_c = ergodic_tail_c(alpha);
  // Second term of the series p(x) ~ sum_k c_k |x|^{-1-k alpha}.
  if (alpha < 2.0) {
    const double s = 1.0 / (2.0 * alpha);
    p.tail_c2 = -s * s / 2.0 * std::tgamma(2.0 * alpha + 1.0) * std::sin(kPi * alpha) / kPi;
  }

  const double reach = std::max(std::abs(grid.x_min), std::abs(grid.x_max));
  const FrequencyRule rule = frequency_rule(alpha, std::min(0.25, 2.0 / reach));
  const double dx = p.dx();
  const bool symmetric = grid.x_min == -grid.x_max && grid.n_cells % 2 == 0;
  if (symmetric) {
    const std::size_t half = grid.n_cells / 2;
    std::vector<double> right;
    accumulate_cosine_sums(rule, 0.0, dx, half + 1, right);
    p.values.resize(grid.n_cells + 1);
    for (std::size_t k = 0; k <= half; ++k) {
      p.values[half + k] = right[k];
      p.values[half - k] = right[k];
    }
  } else {
    accumulate_cosine_sums(rule, grid.x_min, dx, grid.n_cells + 1, p.values);
  }

  double worst = 0.0;
  double worst_x = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    if (p.values[i] < worst) {
      worst = p.values[i];
      worst_x = p.x(i);
    }
    p.values[i] = std::max(p.values[i], 0.0);
  }
  if (worst < -1e-10) throw QuadratureError("ergodic_density: negative density value", worst_x);
  const double mass = p.total_mass();
  if (std::abs(mass - 1.0) > 1e-6)
    throw QuadratureError("ergodic_density: total mass " + std::to_string(mass) + " is not 1", 0.0);
  return p;
}

double exact_tv_mu(double alpha, const GridSpec& grid) {
  if (!(alpha >= 1.05 && alpha <= 1.9995)) throw std::invalid_argument("exact_tv_mu: alpha must lie in [1.05, 1.9995]");
  return tv_from_densities(ergodic_density(alpha, grid), ergodic_density(2.0, grid));
}

double lb_curve(double alpha) {
  check_alpha(alpha, 1.0, true, "lb_curve");
  return std::exp(-0.25) - std::exp(-1.0 / (2.0 * alpha));
}

double semigroup_cos(double alpha, double x, double t) {
  check_alpha(alpha, 0.0, true, "semigroup_cos");
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup_cos: t must be non-negative");
  return std::cos(std::exp(-t) * x) * std::exp(std::expm1(-alpha * t) / (2.0 * alpha));
}

double semigroup_cos_derivative(double alpha, double x, double t) {
  check_alpha(alpha, 0.0, true, "semigroup_cos_derivative");
  const double e = std::exp(-t);
  return -e * std::sin(e * x) * std::exp(std::expm1(-alpha * t) / (2.0 * alpha));
}

double ergodic_mean_cos(double alpha) {
  check_alpha(alpha, 0.0, true, "ergodic_mean_cos");
  return std::exp(-1.0 / (2.0 * alpha));
}

double ergodic_abs_mean(double alpha) {
  check_alpha(alpha, 1.0, true, "ergodic_abs_mean");
  return 2.0 / kPi * std::tgamma(1.0 - 1.0 / alpha) * std::pow(2.0 * alpha, -1.0 / alpha);
}

SampleSet sample_ergodic_law(double alpha, std::size_t n, const RngStream& rng, unsigned workers) {
  check_alpha(alpha, 0.0, true, "sample_ergodic_law");
  SampleSet s = sample_sym_stable_set({alpha, 1.0}, n, rng, workers);
  s.values *= std::pow(alpha, -1.0 / alpha);
  s.meta.kind = "ergodic";
  return s;
}

}  // namespace stvl
