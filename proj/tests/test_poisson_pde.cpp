#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stvl/ou_closed_form.hpp"
#include "stvl/poisson_pde.hpp"

using namespace stvl;

namespace {

// -int_0^inf [P_t cos(x) - mu(cos)] dt written out independently of the library.
double poisson_cos_oracle(double alpha, double x) {
  boost::math::quadrature::exp_sinh<double> q;
  const double mu = std::exp(-1.0 / (2.0 * alpha));
  return -q.integrate([&](double t) {
    return std::cos(std::exp(-t) * x) * std::exp(-(1.0 - std::exp(-alpha * t)) / (2.0 * alpha)) - mu;
  });
}

std::size_t node_of(const UniformGrid& g, double x) {
  return static_cast<std::size_t>(std::llround((x - g.x_min) / g.step));
}

}  // namespace

TEST_SUITE("poisson_pde") {
  TEST_CASE("grid functions and extensions") {
    const UniformGrid g = UniformGrid::span(-1.0, 1.0, 21);
    CHECK(g.step == doctest::Approx(0.1));
    CHECK(g.x_max() == doctest::Approx(1.0));
    GridFunction f{g, std::vector<double>(21, 1.0), {}};
    CHECK_THROWS_AS(f.at_offset(-1), std::invalid_argument);
    f.extension = ConstantExtension{5.0, 7.0};
    CHECK(f.at_offset(-3) == 5.0);
    CHECK(f.at_offset(30) == 7.0);
    CHECK(f.at(0.05) == doctest::Approx(1.0));

    std::vector<double> line(21);
    for (std::size_t i = 0; i < 21; ++i) line[i] = 2.0 + 3.0 * g.x(i);
    const LinearExtension e = fit_linear_extension(g, line);
    CHECK(e.left_a == doctest::Approx(2.0));
    CHECK(e.right_b == doctest::Approx(3.0));
  }

  TEST_CASE("fourth-order differences are exact on quartics") {
    const UniformGrid g = UniformGrid::span(-2.0, 2.0, 41);
    const GridFunction f = tabulate(g, [](double x) { return x * x * x * x - 2.0 * x; }, 100.0);
    for (std::size_t i : {5u, 20u, 33u}) {
      const double x = g.x(i);
      CHECK(d1_centered(f, i) == doctest::Approx(4.0 * x * x * x - 2.0).epsilon(1e-10));
      CHECK(d2_centered(f, i) == doctest::Approx(12.0 * x * x).epsilon(1e-10));
    }
    CHECK_THROWS_AS(d1_centered(f, 1), std::invalid_argument);
    // OU generator on x^2: -x (2x) + 1.
    const GridFunction sq = tabulate(g, [](double x) { return x * x; }, 4.0);
    CHECK(generator_q(sq, ou_drift(1), 30) == doctest::Approx(-2.0 * g.x(30) * g.x(30) + 1.0));
  }

  TEST_CASE("fractional Laplacian symbol on plane waves") {
    const UniformGrid g = UniformGrid::span(-20.0, 20.0, 1601);
    for (double a : {1.2, 1.5, 1.8}) {
      const FracLaplacian1d lap(g, a);
      for (double xi : {0.5, 1.0, 2.0}) {
        const GridFunction f = tabulate(g, [xi](double x) { return std::cos(xi * x); }, 1.0);
        for (std::size_t i : {800u + 7u, 700u, 931u}) {
          const double exact = -std::pow(xi, a) / 2.0 * std::cos(xi * g.x(i));
          if (std::abs(exact) < 0.05) continue;
          CHECK(lap.apply(f, i) == doctest::Approx(exact).epsilon(0.01));
        }
      }
    }
  }

  TEST_CASE("fractional Laplacian of a Gaussian against Fourier quadrature") {
    const double a = 1.5;
    const UniformGrid g = UniformGrid::span(-10.0, 10.0, 2001);
    const GridFunction f = tabulate(g, [](double x) { return std::exp(-x * x); }, 1.0);
    for (double x : {0.0, 0.3, 1.0, 2.0}) {
      // (1/pi) int_0^inf (-xi^a / 2) sqrt(pi) e^{-xi^2/4} cos(xi x) dxi.
      const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double xi) {
            return -std::pow(xi, a) / 2.0 * std::sqrt(std::numbers::pi) * std::exp(-xi * xi / 4.0) * std::cos(xi * x) /
                   std::numbers::pi;
          },
          0.0, 40.0, 10, 1e-13);
      CHECK(std::abs(frac_laplacian_1d(f, a, node_of(g, x)) - oracle) < 2e-3 * std::max(1.0, std::abs(oracle)));
    }
  }

  TEST_CASE("fractional Laplacian annihilates affine functions") {
    const UniformGrid g = UniformGrid::span(-5.0, 5.0, 201);
    std::vector<double> v(201);
    for (std::size_t i = 0; i < 201; ++i) v[i] = 2.0 + 3.0 * g.x(i);
    const GridFunction lin{g, v, LinearExtension{2.0, 3.0, 2.0, 3.0}};
    const GridFunction cst{g, std::vector<double>(201, 4.0), ConstantExtension{4.0, 4.0}};
    for (std::size_t i : {3u, 100u, 190u}) {
      CHECK(std::abs(frac_laplacian_1d(lin, 1.7, i)) < 1e-9);
      CHECK(std::abs(frac_laplacian_1d(cst, 1.7, i)) < 1e-12);
    }
    const GridFunction none{g, v, {}};
    CHECK_THROWS_AS(frac_laplacian_1d(none, 1.7, 100), std::invalid_argument);
  }

  TEST_CASE("closed-form Poisson solution against an independent quadrature") {
    for (double a : {2.0, 1.9, 1.5}) {
      const PoissonProblem prob{cos_test_function(), a, ou_drift(1)};
      for (double x : {0.0, 0.7, 3.0}) {
        const PoissonValue v = poisson_solution(prob, x);
        CHECK(v.value == doctest::Approx(poisson_cos_oracle(a, x)).epsilon(1e-7));
        CHECK(v.error < 1e-6);
      }
    }
  }

  TEST_CASE("generator residuals of the grid solution") {
    const UniformGrid g = UniformGrid::span(-20.0, 20.0, 801);
    const PoissonProblem q{cos_test_function(), 2.0, ou_drift(1)};
    const GridFunction f2 = solve_on_grid(q, g);
    for (double r : poisson_residuals(f2, q, node_of(g, -3.0), node_of(g, 3.0) + 1)) CHECK(std::abs(r) < 1e-3);
    const PoissonProblem p{cos_test_function(), 1.9, ou_drift(1)};
    const GridFunction f = solve_on_grid(p, g);
    for (double r : poisson_residuals(f, p, node_of(g, -15.0), node_of(g, 15.0) + 1)) CHECK(std::abs(r) < 1e-2);
    CHECK(std::abs(poisson_residual(f, p, 400)) < 1e-2);
    CHECK(lin_norm_diff(f, f) == 0.0);
    GridFunction shifted = f;
    for (auto& v : shifted.values) v += 0.25;
    CHECK(lin_norm_diff(f, shifted) == doctest::Approx(0.25));
  }

  TEST_CASE("Monte Carlo engine agrees with the closed form") {
    const PoissonProblem prob{cos_test_function(), 2.0, ou_drift(1)};
    PoissonOptions opts;
    opts.engine = PoissonEngine::mc;
    opts.t_max = 10.0;
    opts.n_paths = 4000;
    opts.rng = RngStream(21);
    opts.workers = 1;
    const PoissonValue mc = poisson_solution(prob, 0.5, opts);
    CHECK(std::abs(mc.value - poisson_cos_oracle(2.0, 0.5)) < mc.error + 0.02);
  }

  TEST_CASE("mu(h) by simulation and test functions") {
    const McEstimate mu = mu_h_estimate(cos_test_function(), ou_drift(1), Driver::brownian(),
                                        {0.01, Scheme::brownian, {}}, 6.0, 20000, RngStream(22), 1);
    CHECK(std::abs(mu.estimate - std::exp(-0.25)) < 4.0 * mu.std_error + 0.005);
    const TestFunction ind = indicator_test_function(-1.0, 1.0);
    CHECK(ind(0.0) == 1.0);
    CHECK(ind(1.5) == 0.0);
    const TestFunction tab = tabulated_test_function({0.0, 1.0}, {0.0, 2.0});
    CHECK(tab(0.25) == doctest::Approx(0.5));
    CHECK(tab(9.0) == 2.0);
    CHECK(tab.sup_norm == 2.0);
    CHECK_THROWS_AS(tabulated_test_function({1.0, 0.0}, {0.0, 1.0}), std::invalid_argument);
    const PoissonProblem unsupported{ind, 1.8, ou_drift(1)};
    CHECK_THROWS_AS(poisson_solution(unsupported, 0.0), std::invalid_argument);
  }
}
