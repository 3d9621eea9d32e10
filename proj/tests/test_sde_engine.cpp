#include <doctest.h>

#include <cmath>
#include <complex>

#include "stvl/ou_closed_form.hpp"
#include "stvl/sde_engine.hpp"

using namespace stvl;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_SUITE("sde_engine") {
  TEST_CASE("drift registry and declared constants") {
    const DriftField ou = drift_by_name("ou", 2);
    CHECK(ou(Vector(Vector::Ones(2))).isApprox(-Vector::Ones(2)));
    CHECK(ou.theta0 == 1.0);
    CHECK(ou.l0() == 0.0);

    const DriftField p = drift_by_name("ou-perturbed", 1, {0.3});
    CHECK(p(1.0) == doctest::Approx(-1.0 + 0.3 * std::sin(1.0)));
    CHECK(p.theta0 == doctest::Approx(0.7));

    const DriftField aff = drift_by_name("custom-affine", 2, {-2.0, 1.0, 0.0, -1.0, 0.5, 0.0});
    // sym(A) = [[-2, 0.5], [0.5, -1]] with top eigenvalue (-3 + sqrt 2) / 2.
    CHECK(aff.theta0 == doctest::Approx((3.0 - std::sqrt(2.0)) / 2.0));
    CHECK(aff(Vector(Vector::Zero(2)))[0] == doctest::Approx(0.5));

    CHECK_THROWS_AS(drift_by_name("nope", 1), std::invalid_argument);
    CHECK_THROWS_AS(drift_by_name("ou-perturbed", 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(drift_by_name("custom-affine", 1, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(scheme_from_string("euler"), std::invalid_argument);
    CHECK(scheme_from_string(to_string(Scheme::subordinated)) == Scheme::subordinated);
  }

  TEST_CASE("dissipativity probe") {
    std::vector<std::pair<Vector, Vector>> pairs;
    RngStream rng(3);
    for (int k = 0; k < 200; ++k) pairs.emplace_back(v1(rng.uniform(-10, 10)), v1(rng.uniform(-10, 10)));
    DriftField p = ou_perturbed_drift(1, 0.4);
    CHECK(probe_h1(p, pairs) <= 1e-12);
    p.theta0 = 1.5;  // an overstated claim is caught
    CHECK(probe_h1(p, pairs) > 0.0);
  }

  TEST_CASE("smoothness probe matches the analytic Jacobian and Hessian") {
    const double eps = 0.4;
    const DriftField p = ou_perturbed_drift(1, eps);
    std::vector<Vector> points;
    double j_max = 0.0, h_max = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.25) {
      points.push_back(v1(x));
      j_max = std::max(j_max, std::abs(-1.0 + eps * std::cos(x)));
      h_max = std::max(h_max, std::abs(eps * std::sin(x)));
    }
    const H2Estimate est = probe_h2(p, points, {v1(1.0)}, 1e-4);
    CHECK(est.theta1_hat == doctest::Approx(j_max).epsilon(1e-6));
    CHECK(est.theta2_hat == doctest::Approx(h_max).epsilon(1e-4));
    CHECK(est.theta1_hat <= p.theta1 + 1e-9);
    CHECK(est.theta2_hat <= p.theta2 + 1e-6);
  }

  TEST_CASE("Brownian OU transition moments") {
    const double x0 = 1.5, t = 0.7;
    const Ensemble e = run_ensemble(ou_drift(1), {1e-3, Scheme::brownian, {}}, Driver::brownian(), v1(x0), t, 20000,
                                    RngStream(5), 1);
    const double mean = e.endpoints.mean();
    const double var = (e.endpoints.array() - mean).square().mean();
    const double sd = std::sqrt(-std::expm1(-2.0 * t) / 2.0);
    CHECK(std::abs(mean - x0 * std::exp(-t)) < 4.0 * sd / std::sqrt(20000.0));
    CHECK(var == doctest::Approx(sd * sd).epsilon(0.05));
    CHECK(e.provenance.scheme == "brownian");
    CHECK(e.provenance.seed == 5);
  }

  TEST_CASE("noise matrix scales the increments") {
    EulerConfig cfg{0.01, Scheme::brownian, Matrix::Identity(1, 1) * 2.0};
    const DriftField zero{"zero", 1, [](const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out.setZero(); }};
    const Ensemble e = run_ensemble(zero, cfg, Driver::brownian(), v1(0.0), 1.0, 20000, RngStream(6), 1);
    CHECK(e.endpoints.array().square().mean() == doctest::Approx(4.0).epsilon(0.05));
    cfg.sigma = Matrix::Zero(1, 1);
    CHECK_THROWS_AS(cfg.validate(1), std::invalid_argument);
  }

  TEST_CASE("stable OU transition matches the closed-form characteristic function") {
    const double alpha = 1.6, x0 = 0.8, t = 1.0;
    for (Scheme s : {Scheme::direct_stable, Scheme::subordinated}) {
      const Ensemble e = run_ensemble(ou_drift(1), {0.01, s, {}}, Driver::stable_process(alpha), v1(x0), t, 40000,
                                      RngStream(7), 1);
      for (double xi : {0.5, 1.0, 2.0}) {
        std::complex<double> emp = 0.0;
        for (Eigen::Index k = 0; k < e.endpoints.rows(); ++k) emp += std::polar(1.0, xi * e.endpoints(k, 0));
        emp /= static_cast<double>(e.endpoints.rows());
        const auto exact = transition_cf(OuLawSpec::transition(alpha, x0, t), xi);
        // Four standard errors plus the Euler bias at dt = 0.01.
        CHECK(std::abs(emp - exact) < 4.0 / std::sqrt(40000.0) + 0.01);
      }
    }
  }

  TEST_CASE("ensembles are independent of the worker count and match single paths") {
    const EulerConfig cfg{0.05, Scheme::direct_stable, {}};
    const RngStream rng(8);
    const auto a = run_ensemble(ou_drift(2), cfg, Driver::stable_process(1.5), Vector::Zero(2), 1.0, 700, rng, 1);
    const auto b = run_ensemble(ou_drift(2), cfg, Driver::stable_process(1.5), Vector::Zero(2), 1.0, 700, rng, 3);
    CHECK(a.endpoints == b.endpoints);
    RngStream path = rng.substream(123);
    const Matrix single =
        sample_path_at(ou_drift(2), cfg, Driver::stable_process(1.5), Vector::Zero(2), {1.0}, path);
    CHECK(single.row(0) == a.endpoints.row(123));

    const auto c1 = run_coupled_ensemble(ou_drift(1), {0.05, Scheme::subordinated, {}}, 1.7, v1(0.0), 1.0, 600, rng, 1);
    const auto c2 = run_coupled_ensemble(ou_drift(1), {0.05, Scheme::subordinated, {}}, 1.7, v1(0.0), 1.0, 600, rng, 2);
    CHECK(c1.stable == c2.stable);
    CHECK(c1.brownian == c2.brownian);
  }

  TEST_CASE("coupled ensemble marginals have the right laws") {
    const double alpha = 1.8, t = 2.0;
    const auto c = run_coupled_ensemble(ou_drift(1), {0.02, Scheme::subordinated, {}}, alpha, v1(0.0), t, 40000,
                                        RngStream(9), 1);
    const double var_b = c.brownian.array().square().mean();
    CHECK(var_b == doctest::Approx(-std::expm1(-2.0 * t) / 2.0).epsilon(0.05));
    std::complex<double> emp = 0.0;
    for (Eigen::Index k = 0; k < c.stable.rows(); ++k) emp += std::polar(1.0, c.stable(k, 0));
    emp /= static_cast<double>(c.stable.rows());
    CHECK(std::abs(emp - transition_cf(OuLawSpec::transition(alpha, 0.0, t), 1.0)) < 0.03);
  }

  TEST_CASE("observation times along one path") {
    RngStream rng(10);
    const Matrix m = sample_path_at(ou_drift(1), {0.1, Scheme::brownian, {}}, Driver::brownian(), v1(0.0),
                                    {0.05, 0.3, 1.0}, rng);
    CHECK(m.rows() == 3);
    RngStream bad(10);
    CHECK_THROWS_AS(sample_path_at(ou_drift(1), {0.1, Scheme::brownian, {}}, Driver::brownian(), v1(0.0), {0.5, 0.2},
                                   bad),
                    std::invalid_argument);
  }

  TEST_CASE("explosions are reported with the failing paths") {
    const DriftField cubic{"cubic", 1, [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
                             out = x.array().cube().matrix();
                           }};
    try {
      run_ensemble(cubic, {0.5, Scheme::brownian, {}}, Driver::brownian(), v1(3.0), 20.0, 40, RngStream(11), 1);
      FAIL("expected an EnsembleError");
    } catch (const EnsembleError& e) {
      CHECK(e.failed_paths().size() == 40);
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    RngStream rng(11);
    CHECK_THROWS_AS(integrate_bm(cubic, {0.5, Scheme::brownian, {}}, v1(3.0), 20.0, rng), IntegrationError);
  }

  TEST_CASE("Monte Carlo semigroup against the closed form") {
    const double alpha = 1.7, x = 0.6, t = 0.5;
    const McEstimate est = mc_semigroup([](const Eigen::Ref<const Vector>& y) { return std::cos(y[0]); }, 1.0,
                                        ou_drift(1), {0.01, Scheme::direct_stable, {}}, Driver::stable_process(alpha),
                                        v1(x), t, 40000, RngStream(12), 1);
    CHECK(std::abs(est.estimate - semigroup_cos(alpha, x, t)) < 4.0 * est.std_error + 0.005);
    CHECK(est.std_error <= est.std_error_bound + 1e-12);
  }

  TEST_CASE("stable driver needs a stable scheme") {
    RngStream rng(1);
    CHECK_THROWS_AS(run_ensemble(ou_drift(1), {0.1, Scheme::brownian, {}}, Driver::stable_process(1.5), v1(0.0), 1.0,
                                 10, rng, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_stable(ou_drift(1), {0.1, Scheme::direct_stable, {}}, 2.5, v1(0.0), 1.0, rng),
                    std::invalid_argument);
  }
}
