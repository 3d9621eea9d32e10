#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stvl/rng.hpp"
#include "stvl/types.hpp"

namespace stvl {

/// b : R^d -> R^d writing into `out`. Must be safe to call concurrently.
using DriftFn = std::function<void(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out)>;

/// A drift together with its declared dissipativity and smoothness constants:
///   <x - y, b(x) - b(y)> <= -theta0 |x - y|^2 + K,
///   |grad_v b| <= theta1 |v|,  |grad_w grad_v b| <= theta2 |v| |w|.
/// The constants are claims; probe_h1 / probe_h2 check them numerically.
struct DriftField {
  std::string name;
  int dim = 1;
  DriftFn b;
  double theta0 = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double K = 0.0;

  [[nodiscard]] Vector operator()(const Vector& x) const {
    Vector out(dim);
    b(x, out);
    return out;
  }
  [[nodiscard]] double operator()(double x) const;  // d = 1 only

  /// sqrt(2K / theta0); zero when K = 0.
  [[nodiscard]] double l0() const;
};

/// b(x) = -x.
DriftField ou_drift(int d);
/// b(x) = -x + eps sin(x) componentwise.
DriftField ou_perturbed_drift(int d, double eps);
/// b(x) = A x + c. Constants are derived from A (theta0 from its symmetric
/// part, theta1 from its operator norm); A's symmetric part must be negative definite.
DriftField affine_drift(const Matrix& a, const Vector& c);
/// Registry lookup: "ou", "ou-perturbed" (params[0] = eps), "custom-affine"
/// (params = row-major A followed by c, d*d + d entries).
DriftField drift_by_name(const std::string& name, int d, const std::vector<double>& params = {});

enum class Scheme { brownian, direct_stable, subordinated };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct EulerConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::brownian;
  Matrix sigma;  // empty means identity

  /// Throws if dt <= 0 or sigma is not square / numerically singular.
  void validate(int d) const;
  /// min(1e-3, t / 100).
  static double default_dt(double t);
};

/// Driving noise: Brownian motion or the half-speed alpha-stable process.
struct Driver {
  bool stable = false;
  double alpha = 2.0;

  static Driver brownian() { return {false, 2.0}; }
  static Driver stable_process(double a) { return {true, a}; }
  [[nodiscard]] std::string label() const;
};

/// A path produced a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Max over pairs of <x - y, b(x) - b(y)> + theta0 |x - y|^2 - K.
/// Non-positive means the dissipativity condition holds on the probe set.
double probe_h1(const DriftField& drift, const std::vector<std::pair<Vector, Vector>>& pairs);

struct H2Estimate {
  double theta1_hat;
  double theta2_hat;
};

/// Central finite-difference suprema of |grad_v b| and |grad_w grad_v b| over
/// the probe points and the given unit directions (all ordered pairs for theta2).
H2Estimate probe_h2(const DriftField& drift, const std::vector<Vector>& points, const std::vector<Vector>& directions,
                    double fd_step);
/// As above with the coordinate axes plus `n_random` random unit directions.
H2Estimate probe_h2(const DriftField& drift, const std::vector<Vector>& points, double fd_step, RngStream& rng,
                    std::size_t n_random = 8);

/// Euler-Maruyama endpoint of dY = b(Y) dt + sigma dB. The last step is shortened to land on t.
Vector integrate_bm(const DriftField& drift, const EulerConfig& cfg, const Vector& x0, double t, RngStream& rng);

/// Euler endpoint of dX = b(X) dt + sigma dL with exact stable increments per
/// step: direct_stable draws the increment as a subordinated Gaussian vector of
/// time dt, subordinated draws dS then sqrt(dS) * N(0, I) explicitly.
Vector integrate_stable(const DriftField& drift, const EulerConfig& cfg, double alpha, const Vector& x0, double t,
                        RngStream& rng);

/// States at the increasing times `times` (all > 0) along one Euler path, one row per time.
Matrix sample_path_at(const DriftField& drift, const EulerConfig& cfg, const Driver& driver, const Vector& x0,
                      const std::vector<double>& times, RngStream& rng);

struct EnsembleProvenance {
  std::string drift;
  std::string driver;
  double alpha = 2.0;
  double dt = 0.0;
  std::string scheme;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Vector x0;
};

struct Ensemble {
  Matrix endpoints;  // N x d
  double t = 0.0;
  EnsembleProvenance provenance;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(endpoints.rows()); }
};

/// Raised when some paths of an ensemble fail; lists the failing path indices.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(const std::string& what, std::vector<std::size_t> paths)
      : std::runtime_error(what), paths_(std::move(paths)) {}
  [[nodiscard]] const std::vector<std::size_t>& failed_paths() const { return paths_; }

 private:
  std::vector<std::size_t> paths_;
};

/// n independent endpoints; path k uses rng.substream(k), so the ensemble does
/// not depend on the number of workers. cfg.scheme is overridden to brownian
/// for the Brownian driver and must name a stable scheme otherwise.
Ensemble run_ensemble(const DriftField& drift, const EulerConfig& cfg, const Driver& driver, const Vector& x0, double t,
                      std::size_t n, const RngStream& rng, unsigned workers = 0);

/// Ensemble observed at several times; result[j] holds the N x d states at times[j].
std::vector<Matrix> run_ensemble_at(const DriftField& drift, const EulerConfig& cfg, const Driver& driver,
                                    const Vector& x0, const std::vector<double>& times, std::size_t n,
                                    const RngStream& rng, unsigned workers = 0);

/// Endpoints of the stable SDE (subordinated scheme) and the Brownian SDE
/// driven by the same Gaussian draws: the stable increment is sqrt(dS) g and
/// the Brownian one sqrt(dt) g. Each marginal has the law produced by
/// run_ensemble; the pair is strongly coupled for alpha near 2, which reduces
/// the variance of differences of expectations.
struct CoupledEnsemble {
  Matrix stable;    // N x d
  Matrix brownian;  // N x d
};

CoupledEnsemble run_coupled_ensemble(const DriftField& drift, const EulerConfig& cfg, double alpha, const Vector& x0,
                                     double t, std::size_t n, const RngStream& rng, unsigned workers = 0);

using TestFn = std::function<double(const Eigen::Ref<const Vector>&)>;

struct McEstimate {
  double estimate;
  double std_error;        // sample standard deviation / sqrt(N)
  double std_error_bound;  // declared sup|h| / sqrt(N)
};

/// Monte Carlo P_t h(x) (stable driver) or Q_t h(x) (Brownian driver).
McEstimate mc_semigroup(const TestFn& h, double h_bound, const DriftField& drift, const EulerConfig& cfg,
                        const Driver& driver, const Vector& x, double t, std::size_t n, const RngStream& rng,
                        unsigned workers = 0);

/// Mean and standard error of h over the rows of a state matrix.
McEstimate mean_over(const TestFn& h, double h_bound, const Matrix& states);

}  // namespace stvl
