#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "stvl/stable_sampling.hpp"

using namespace stvl;

namespace {

// Kolmogorov-Smirnov statistic of sorted draws against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> v, Cdf cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

std::vector<double> to_vector(const SampleSet& s) { return {s.values.data(), s.values.data() + s.size()}; }

// 0.1% Kolmogorov critical value.
double ks_bound(std::size_t n) { return 1.95 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST_SUITE("stable_sampling") {
  TEST_CASE("rng streams are reproducible and substreams ignore consumption") {
    RngStream a(42, 3), b(42, 3);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    const RngStream fresh(42, 3);
    CHECK(a.substream(5)() == fresh.substream(5)());
    CHECK(RngStream(42, 3)() != RngStream(42, 4)());
    CHECK(RngStream(42, 3)() != RngStream(43, 3)());
    RngStream u(1);
    for (int i = 0; i < 10000; ++i) {
      const double x = u.uniform_open();
      REQUIRE(x > 0.0);
      REQUIRE(x < 1.0);
    }
  }

  TEST_CASE("alpha = 1 unit draw is standard Cauchy") {
    RngStream rng(11);
    std::vector<double> v(50000);
    for (auto& x : v) x = sample_unit_sym_stable(1.0, rng);
    const double ks = ks_statistic(v, [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; });
    CHECK(ks < ks_bound(v.size()));
  }

  TEST_CASE("alpha = 2 at time t is N(0, t)") {
    const SampleSet s = sample_sym_stable_set({2.0, 0.7}, 50000, RngStream(12), 1);
    const double ks = ks_statistic(to_vector(s), [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * 0.7)); });
    CHECK(ks < ks_bound(s.size()));
  }

  TEST_CASE("half-speed stable at alpha = 1 and t = 2 is standard Cauchy") {
    const SampleSet s = sample_sym_stable_set({1.0, 2.0}, 50000, RngStream(13), 1);
    const double ks = ks_statistic(to_vector(s), [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; });
    CHECK(ks < ks_bound(s.size()));
  }

  TEST_CASE("positive stable with beta = 1/2 is the Levy law 1 / (2 Z^2)") {
    RngStream rng(14);
    std::vector<double> v(50000);
    for (auto& x : v) x = sample_positive_stable(0.5, rng);
    // P(1/(2 Z^2) <= x) = erfc(1 / (2 sqrt(x))).
    const double ks = ks_statistic(v, [](double x) { return std::erfc(0.5 / std::sqrt(x)); });
    CHECK(ks < ks_bound(v.size()));
  }

  TEST_CASE("subordinator at alpha = 1 and t = 1 is 1 / (4 Z^2)") {
    const SampleSet s = sample_subordinator_set({1.0, 1.0}, 50000, RngStream(15), 1);
    const double ks = ks_statistic(to_vector(s), [](double x) { return std::erfc(1.0 / std::sqrt(8.0 * x)); });
    CHECK(ks < ks_bound(s.size()));
    CHECK((s.values.array() > 0.0).all());
  }

  TEST_CASE("subordinator Laplace transform") {
    const double alpha = 1.5, t = 0.8;
    const SampleSet s = sample_subordinator_set({alpha, t}, 200000, RngStream(16), 1);
    for (double r : {0.25, 1.0, 3.0}) {
      const double est = (-r * s.values.array()).exp().mean();
      const double exact = std::exp(-t * std::pow(2.0 * r, alpha / 2.0) / 2.0);
      CHECK(std::abs(est - exact) < 4.0 * 0.5 / std::sqrt(200000.0));
    }
  }

  TEST_CASE("stable vector characteristic function is rotation invariant") {
    const double alpha = 1.4;
    const SampleSet s = sample_stable_vector_set(alpha, 1.0, 2, 100000, RngStream(17), 1);
    CHECK(s.dim() == 2);
    const double tol = 4.0 / std::sqrt(100000.0);
    for (double xi : {0.5, 1.0, 2.0}) {
      const double exact = std::exp(-std::pow(xi, alpha) / 2.0);
      Vector axis(2), diag(2);
      axis << xi, 0.0;
      diag << xi / std::sqrt(2.0), xi / std::sqrt(2.0);
      CHECK(std::abs(empirical_char_fn(s, axis).value - exact) < tol);
      CHECK(std::abs(empirical_char_fn(s, diag).value - exact) < tol);
    }
  }

  TEST_CASE("bulk samplers do not depend on the worker count") {
    const RngStream rng(99);
    const std::size_t n = 3 * kSampleBlock + 17;
    const SampleSet a = sample_sym_stable_set({1.6, 0.5}, n, rng, 1);
    const SampleSet b = sample_sym_stable_set({1.6, 0.5}, n, rng, 3);
    CHECK(a.values == b.values);
    const SampleSet c = sample_stable_vector_set(1.6, 0.5, 3, n, rng, 1);
    const SampleSet d = sample_stable_vector_set(1.6, 0.5, 3, n, rng, 4);
    CHECK(c.values == d.values);
    CHECK(a.meta.seed == 99);
    CHECK(a.meta.alpha == doctest::Approx(1.6));
  }

  TEST_CASE("empirical_char_fn on a single point") {
    Matrix m(1, 1);
    m(0, 0) = 0.3;
    Vector xi(1);
    xi[0] = 2.0;
    const auto e = empirical_char_fn(m, xi);
    CHECK(e.value.real() == doctest::Approx(std::cos(0.6)));
    CHECK(e.value.imag() == doctest::Approx(std::sin(0.6)));
    CHECK(e.std_error == doctest::Approx(1.0));
  }

  TEST_CASE("robust_mean resists a single outlier") {
    Vector v = Vector::Constant(1024, 1.0);
    CHECK(robust_mean(v, 1) == doctest::Approx(1.0));
    v[3] = 1e12;
    CHECK(robust_mean(v, 16) == doctest::Approx(1.0));
    CHECK(robust_mean(v, 1) > 1e8);
    CHECK(robust_std_error(Vector::Constant(64, 2.0), 8) == doctest::Approx(0.0));
  }

  TEST_CASE("invalid parameters are rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(sample_sym_stable({2.5, 1.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_sym_stable({1.5, -1.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_subordinator({0.0, 1.0}, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_positive_stable(1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(robust_mean(Vector(), 4), std::invalid_argument);
  }
}
