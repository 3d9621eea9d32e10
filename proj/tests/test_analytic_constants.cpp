#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "stvl/analytic_constants.hpp"

using namespace stvl;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

// A(d, alpha) in 50-digit arithmetic.
double big_a_const(int d, double alpha) {
  const Big a(alpha);
  const Big pi = boost::math::constants::pi<Big>();
  const Big num = a * boost::multiprecision::tgamma((Big(d) + a) / 2);
  const Big den = boost::multiprecision::pow(Big(2), 2 - a) * boost::multiprecision::pow(pi, Big(d) / 2) *
                  boost::multiprecision::tgamma(1 - a / 2);
  return static_cast<double>(num / den);
}

}  // namespace

TEST_SUITE("analytic_constants") {
  TEST_CASE("A(d, alpha) against extended precision") {
    for (int d : {1, 2, 3, 5, 10}) {
      for (double a : {0.3, 1.0, 1.5, 1.9, 1.999}) {
        CHECK(a_const(d, a) == doctest::Approx(big_a_const(d, a)).epsilon(1e-13));
      }
    }
    CHECK(a_const(1, 1.0) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
  }

  TEST_CASE("kernel normalization gives the symbol |xi|^alpha / 2") {
    // int (1 - cos z) |z|^{-1-alpha} dz over R equals -2 Gamma(-alpha) cos(pi alpha / 2).
    for (double a : {0.5, 1.2, 1.5, 1.8}) {
      const double integral = -2.0 * std::tgamma(-a) * std::cos(std::numbers::pi * a / 2.0);
      CHECK(a_const(1, a) * integral == doctest::Approx(0.5).epsilon(1e-12));
    }
  }

  TEST_CASE("sphere surface") {
    CHECK(omega_sphere(1) == doctest::Approx(2.0));
    CHECK(omega_sphere(2) == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(omega_sphere(3) == doctest::Approx(4.0 * std::numbers::pi));
  }

  TEST_CASE("ratio tends to 1 as alpha approaches 2") {
    for (int d : {1, 2, 3, 8}) {
      CHECK(std::abs(ratio_to_limit(d, 1.9999) - 1.0) < 1e-3);
      CHECK(std::abs(ratio_to_limit(d, 1.99) - 1.0) < std::abs(ratio_to_limit(d, 1.5) - 1.0));
    }
  }

  TEST_CASE("jump tail mass by quadrature") {
    boost::math::quadrature::exp_sinh<double> q;
    for (int d : {1, 3}) {
      for (double a : {1.2, 1.7}) {
        // Polar coordinates: A omega int_1^inf r^{-alpha} dr.
        const double radial = q.integrate([a](double s) { return std::pow(1.0 + s, -a); });
        CHECK(jump_tail_mass(d, a) == doctest::Approx(a_const(d, a) * omega_sphere(d) * radial).epsilon(1e-10));
      }
    }
    CHECK_THROWS_AS(jump_tail_mass(1, 1.0), std::invalid_argument);
  }

  TEST_CASE("inverse moment from the Laplace transform") {
    // E[S^{-1}] = int_0^inf E exp(-r S) dr.
    boost::math::quadrature::exp_sinh<double> q;
    for (double a : {1.0, 1.3, 1.7}) {
      for (double t : {0.5, 2.0}) {
        const double oracle = q.integrate([a, t](double r) { return std::exp(-t * std::pow(2.0 * r, a / 2.0) / 2.0); });
        CHECK(s_inverse_moment(a, t) == doctest::Approx(oracle).epsilon(1e-9));
      }
    }
    CHECK(s_inverse_moment(1.0, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
  }

  TEST_CASE("constant_report and scan") {
    const ConstantReport r = constant_report(2, 1.5);
    CHECK(r.a == doctest::Approx(a_const(2, 1.5)));
    CHECK(r.ratio == doctest::Approx(ratio_to_limit(2, 1.5)));
    CHECK(std::isnan(constant_report(1, 0.8).tail_mass));
    const RatioConstantScan s = scan_ratio_constant({1, 2, 3}, {1.2, 1.5, 1.9});
    CHECK(std::isfinite(s.sup_deviation));
    CHECK(s.sup_bounded >= ratio_to_limit(1, 1.9));
    CHECK((s.argmax_d >= 1 && s.argmax_d <= 3));
  }

  TEST_CASE("domain errors") {
    CHECK_THROWS_AS(a_const(0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(a_const(1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(s_inverse_moment(1.5, 0.0), std::invalid_argument);
  }
}
