#pragma once

#include <vector>

namespace stvl {

/// Jump-kernel constant of the half-speed rotationally symmetric stable
/// process: A(d, alpha) = alpha Gamma((d+alpha)/2) / (2^{2-alpha} pi^{d/2} Gamma(1-alpha/2)).
/// The Levy density is A(d, alpha) |z|^{-d-alpha}. Requires 0 < alpha < 2.
double a_const(int d, double alpha);

/// Surface measure of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double omega_sphere(int d);

/// A(d, alpha) omega_{d-1} / (d (2 - alpha)); tends to 1 as alpha -> 2.
double ratio_to_limit(int d, double alpha);

/// A(d, alpha) omega_{d-1} / (alpha - 1), the integral of |z| against the
/// jump kernel over |z| >= 1. Requires 1 < alpha < 2.
double jump_tail_mass(int d, double alpha);

/// E[S_t^{-1}] = Gamma(1 + 2/alpha) 2^{2/alpha} t^{-2/alpha} / 2 for the alpha/2-stable subordinator.
double s_inverse_moment(double alpha, double t);

struct ConstantReport {
  int d;
  double alpha;
  double a;
  double omega;
  double ratio;
  double tail_mass;  // NaN when alpha <= 1
};

ConstantReport constant_report(int d, double alpha);

/// Observed supremum of |ratio - 1| / ((2 - alpha) log(1 + d)) over a grid.
/// This is the empirical size of the constant in the ratio estimate.
struct RatioConstantScan {
  double sup_bounded;    // sup of ratio itself
  double sup_deviation;  // sup of |ratio - 1| / ((2 - alpha) log(1 + d))
  int argmax_d;
  double argmax_alpha;
};

RatioConstantScan scan_ratio_constant(const std::vector<int>& dims, const std::vector<double>& alphas);

}  // namespace stvl
