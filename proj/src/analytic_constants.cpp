#include "stvl/analytic_constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stvl {

namespace {

constexpr double kPi = std::numbers::pi;

// log|Gamma(x)| with the sign of Gamma(x) checked against `expected_sign`.
double log_gamma(double x, int expected_sign = 1) {
  int sign = 1;
  const double value = ::lgamma_r(x, &sign);
  if (sign != expected_sign) throw std::domain_error("log_gamma: unexpected sign of Gamma");
  return value;
}

double log_a_const(int d, double alpha) {
  if (d < 1) throw std::invalid_argument("a_const: d must be >= 1");
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("a_const: alpha must lie in (0, 2)");
  return std::log(alpha) + log_gamma(0.5 * (d + alpha)) - (2.0 - alpha) * std::numbers::ln2 -
         0.5 * d * std::log(kPi) - log_gamma(1.0 - 0.5 * alpha);
}

double log_omega(int d) {
  if (d < 1) throw std::invalid_argument("omega_sphere: d must be >= 1");
  return std::numbers::ln2 + 0.5 * d * std::log(kPi) - log_gamma(0.5 * d);
}

}  // namespace

double a_const(int d, double alpha) { return std::exp(log_a_const(d, alpha)); }

double omega_sphere(int d) { return std::exp(log_omega(d)); }

double ratio_to_limit(int d, double alpha) {
  return std::exp(log_a_const(d, alpha) + log_omega(d) - std::log(static_cast<double>(d)) -
                  std::log(2.0 - alpha));
}

double jump_tail_mass(int d, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("jump_tail_mass: alpha must lie in (1, 2)");
  return std::exp(log_a_const(d, alpha) + log_omega(d)) / (alpha - 1.0);
}

double s_inverse_moment(double alpha, double t) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("s_inverse_moment: alpha must lie in (0, 2)");
  if (!(t > 0.0)) throw std::invalid_argument("s_inverse_moment: t must be positive");
  const double p = 2.0 / alpha;
  return 0.5 * std::exp(log_gamma(1.0 + p) + p * std::numbers::ln2 - p * std::log(t));
}

ConstantReport constant_report(int d, double alpha) {
  ConstantReport r{d, alpha, a_const(d, alpha), omega_sphere(d), ratio_to_limit(d, alpha),
                   std::numeric_limits<double>::quiet_NaN()};
  if (alpha > 1.0) r.tail_mass = jump_tail_mass(d, alpha);
  return r;
}

RatioConstantScan scan_ratio_constant(const std::vector<int>& dims, const std::vector<double>& alphas) {
  RatioConstantScan scan{0.0, 0.0, 0, 0.0};
  for (int d : dims) {
    for (double alpha : alphas) {
      const double r = ratio_to_limit(d, alpha);
      scan.sup_bounded = std::max(scan.sup_bounded, r);
      const double dev = std::abs(r - 1.0) / ((2.0 - alpha) * std::log1p(static_cast<double>(d)));
      if (dev > scan.sup_deviation) {
        scan.sup_deviation = dev;
        scan.argmax_d = d;
        scan.argmax_alpha = alpha;
      }
    }
  }
  return scan;
}

}  // namespace stvl
