#include "stvl/sde_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <Eigen/Dense>

#include "stvl/parallel.hpp"
#include "stvl/stable_sampling.hpp"

namespace stvl {

double DriftField::operator()(double x) const {
  if (dim != 1) throw std::invalid_argument("DriftField: scalar evaluation needs d = 1");
  Vector in(1);
  in[0] = x;
  Vector out(1);
  b(in, out);
  return out[0];
}

double DriftField::l0() const { return K > 0.0 ? std::sqrt(2.0 * K / theta0) : 0.0; }

DriftField ou_drift(int d) {
  if (d < 1) throw std::invalid_argument("ou_drift: d must be >= 1");
  return {"ou", d, [](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; }, 1.0, 1.0, 0.0, 0.0};
}

DriftField ou_perturbed_drift(int d, double eps) {
  if (d < 1) throw std::invalid_argument("ou_perturbed_drift: d must be >= 1");
  if (!(std::abs(eps) < 1.0)) throw std::invalid_argument("ou_perturbed_drift: |eps| must be < 1");
  std::ostringstream name;
  name << "ou-perturbed(" << eps << ")";
  return {name.str(), d,
          [eps](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
            out = -x + eps * x.array().sin().matrix();
          },
          1.0 - std::abs(eps), 1.0 + std::abs(eps), std::abs(eps), 0.0};
}

DriftField affine_drift(const Matrix& a, const Vector& c) {
  if (a.rows() != a.cols() || a.rows() != c.size() || a.rows() == 0)
    throw std::invalid_argument("affine_drift: A must be d x d and c of length d");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top < 0.0)) throw std::invalid_argument("affine_drift: symmetric part of A must be negative definite");
  Eigen::JacobiSVD<Matrix> svd(a);
  const int d = static_cast<int>(a.rows());
  return {"custom-affine", d,
          [a, c](const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out.noalias() = a * x + c; }, -top,
          svd.singularValues()(0), 0.0, 0.0};
}

DriftField drift_by_name(const std::string& name, int d, const std::vector<double>& params) {
  if (name == "ou") return ou_drift(d);
  if (name == "ou-perturbed") {
    if (params.size() != 1) throw std::invalid_argument("ou-perturbed: expects one parameter eps");
    return ou_perturbed_drift(d, params[0]);
  }
  if (name == "custom-affine") {
    const auto dd = static_cast<std::size_t>(d);
    if (params.size() != dd * dd + dd)
      throw std::invalid_argument("custom-affine: expects d*d entries of A followed by d entries of c");
    Matrix a(d, d);
    Vector c(d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = params[static_cast<std::size_t>(i * d + j)];
      c[i] = params[dd * dd + static_cast<std::size_t>(i)];
    }
    return affine_drift(a, c);
  }
  throw std::invalid_argument("unknown drift '" + name + "' (expected ou, ou-perturbed, custom-affine)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::brownian: return "brownian";
    case Scheme::direct_stable: return "direct-stable";
    case Scheme::subordinated: return "subordinated";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "brownian") return Scheme::brownian;
  if (s == "direct-stable") return Scheme::direct_stable;
  if (s == "subordinated") return Scheme::subordinated;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

void EulerConfig::validate(int d) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("EulerConfig: dt must be positive");
  if (sigma.size() == 0) return;
  if (sigma.rows() != d || sigma.cols() != d) throw std::invalid_argument("EulerConfig: sigma must be d x d");
  Eigen::JacobiSVD<Matrix> svd(sigma);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (!(smallest > 0.0) || !std::isfinite(sv(0) / smallest) || sv(0) / smallest > 1e12)
    throw std::invalid_argument("EulerConfig: sigma is not invertible");
}

double EulerConfig::default_dt(double t) { return std::min(1e-3, t / 100.0); }

std::string Driver::label() const {
  if (!stable) return "brownian";
  std::ostringstream os;
  os << "stable(" << alpha << ")";
  return os.str();
}

double probe_h1(const DriftField& drift, const std::vector<std::pair<Vector, Vector>>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("probe_h1: empty pair list");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [x, y] : pairs) {
    if (x.size() != drift.dim || y.size() != drift.dim) throw std::invalid_argument("probe_h1: dimension mismatch");
    const Vector diff = x - y;
    const double margin = diff.dot(drift(x) - drift(y)) + drift.theta0 * diff.squaredNorm() - drift.K;
    worst = std::max(worst, margin);
  }
  return worst;
}

H2Estimate probe_h2(const DriftField& drift, const std::vector<Vector>& points, const std::vector<Vector>& directions,
                    double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("probe_h2: fd_step must be positive");
  if (points.empty() || directions.empty()) throw std::invalid_argument("probe_h2: empty probe set");
  H2Estimate est{0.0, 0.0};
  const double e = fd_step;
  for (const auto& x : points) {
    if (x.size() != drift.dim) throw std::invalid_argument("probe_h2: dimension mismatch");
    for (const auto& v_raw : directions) {
      const Vector v = v_raw.normalized();
      const Vector grad_v = (drift(Vector(x + e * v)) - drift(Vector(x - e * v))) / (2.0 * e);
      est.theta1_hat = std::max(est.theta1_hat, grad_v.norm());
      for (const auto& w_raw : directions) {
        const Vector w = w_raw.normalized();
        const Vector hess = (drift(Vector(x + e * v + e * w)) - drift(Vector(x + e * v - e * w)) -
                             drift(Vector(x - e * v + e * w)) + drift(Vector(x - e * v - e * w))) /
                            (4.0 * e * e);
        est.theta2_hat = std::max(est.theta2_hat, hess.norm());
      }
    }
  }
  return est;
}

H2Estimate probe_h2(const DriftField& drift, const std::vector<Vector>& points, double fd_step, RngStream& rng,
                    std::size_t n_random) {
  std::vector<Vector> dirs;
  for (int i = 0; i < drift.dim; ++i) dirs.push_back(Vector::Unit(drift.dim, i));
  for (std::size_t k = 0; k < n_random; ++k) {
    Vector v(drift.dim);
    for (auto& c : v) c = rng.normal();
    dirs.push_back(v.normalized());
  }
  return probe_h2(drift, points, dirs, fd_step);
}

namespace {

void check_common(const DriftField& drift, const EulerConfig& cfg, const Vector& x0) {
  if (x0.size() != drift.dim) throw std::invalid_argument("initial point has wrong dimension");
  if (!drift.b) throw std::invalid_argument("drift has no function");
  cfg.validate(drift.dim);
}

// Draws one driver increment of duration h into `inc`.
class IncrementSource {
 public:
  IncrementSource(const EulerConfig& cfg, const Driver& driver, int d)
      : scheme_(driver.stable ? cfg.scheme : Scheme::brownian), alpha_(driver.alpha), d_(d) {
    if (driver.stable) {
      if (!(alpha_ > 1.0 && alpha_ < 2.0)) throw std::invalid_argument("stable SDE needs alpha in (1, 2)");
      if (scheme_ == Scheme::brownian)
        throw std::invalid_argument("stable driver needs scheme direct-stable or subordinated");
    }
  }

  void draw(double h, RngStream& rng, Eigen::Ref<Vector> inc) const {
    switch (scheme_) {
      case Scheme::brownian: {
        const double root = std::sqrt(h);
        for (Eigen::Index i = 0; i < inc.size(); ++i) inc[i] = root * rng.normal();
        return;
      }
      case Scheme::direct_stable:
        if (d_ == 1) {
          inc[0] = sample_sym_stable({alpha_, h}, rng);
        } else {
          sample_stable_vector_into(alpha_, h, rng, inc);
        }
        return;
      case Scheme::subordinated: {
        const double root = std::sqrt(sample_subordinator({alpha_, h}, rng));
        for (Eigen::Index i = 0; i < inc.size(); ++i) inc[i] = root * rng.normal();
        return;
      }
    }
  }

 private:
  Scheme scheme_;
  double alpha_;
  int d_;
};

// Advances `x` along one Euler path, calling observe(j, x) as each time in
// `times` is reached.
template <typename Observe>
void euler_path(const DriftField& drift, const EulerConfig& cfg, const IncrementSource& source, Vector& x,
                const std::vector<double>& times, RngStream& rng, Observe&& observe) {
  const int d = drift.dim;
  const bool identity = cfg.sigma.size() == 0;
  Vector bx(d);
  Vector inc(d);
  double now = 0.0;
  std::size_t step = 0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double target = times[j];
    if (!(target > now))
      throw std::invalid_argument("observation times must be positive and increasing");
    while (now < target) {
      double h = cfg.dt;
      // Absorb a sliver shorter than 1e-9 dt into this step so the last step
      // does not degenerate.
      if (now + h >= target - 1e-9 * cfg.dt) h = target - now;
      drift.b(x, bx);
      source.draw(h, rng, inc);
      if (identity) {
        x += h * bx + inc;
      } else {
        x += h * bx + cfg.sigma * inc;
      }
      now = (h == target - now) ? target : now + h;
      ++step;
      if (!x.allFinite()) {
        std::ostringstream os;
        os << "integration failure: non-finite state at step " << step << " (t = " << now << ")";
        throw IntegrationError(os.str(), step);
      }
    }
    observe(j, x);
  }
}

}  // namespace

Vector integrate_bm(const DriftField& drift, const EulerConfig& cfg, const Vector& x0, double t, RngStream& rng) {
  check_common(drift, cfg, x0);
  if (!(t > 0.0)) throw std::invalid_argument("integrate_bm: t must be positive");
  IncrementSource source(cfg, Driver::brownian(), drift.dim);
  Vector x = x0;
  euler_path(drift, cfg, source, x, {t}, rng, [](std::size_t, const Vector&) {});
  return x;
}

Vector integrate_stable(const DriftField& drift, const EulerConfig& cfg, double alpha, const Vector& x0, double t,
                        RngStream& rng) {
  check_common(drift, cfg, x0);
  if (!(t > 0.0)) throw std::invalid_argument("integrate_stable: t must be positive");
  if (cfg.scheme == Scheme::brownian) throw std::invalid_argument("integrate_stable: scheme must be a stable scheme");
  IncrementSource source(cfg, Driver::stable_process(alpha), drift.dim);
  Vector x = x0;
  euler_path(drift, cfg, source, x, {t}, rng, [](std::size_t, const Vector&) {});
  return x;
}

Matrix sample_path_at(const DriftField& drift, const EulerConfig& cfg, const Driver& driver, const Vector& x0,
                      const std::vector<double>& times, RngStream& rng) {
  check_common(drift, cfg, x0);
  if (times.empty()) throw std::invalid_argument("sample_path_at: no observation times");
  IncrementSource source(cfg, driver, drift.dim);
  Matrix out(static_cast<Eigen::Index>(times.size()), drift.dim);
  Vector x = x0;
  euler_path(drift, cfg, source, x, times, rng,
             [&](std::size_t j, const Vector& state) { out.row(static_cast<Eigen::Index>(j)) = state.transpose(); });
  return out;
}

std::vector<Matrix> run_ensemble_at(const DriftField& drift, const EulerConfig& cfg, const Driver& driver,
                                    const Vector& x0, const std::vector<double>& times, std::size_t n,
                                    const RngStream& rng, unsigned workers) {
  check_common(drift, cfg, x0);
  if (n == 0) throw std::invalid_argument("run_ensemble: n must be >= 1");
  if (times.empty()) throw std::invalid_argument("run_ensemble: no observation times");
  IncrementSource source(cfg, driver, drift.dim);
  std::vector<Matrix> out(times.size(), Matrix(static_cast<Eigen::Index>(n), drift.dim));

  std::vector<std::size_t> failed;
  std::string first_message;
  std::mutex failed_mutex;
  constexpr std::size_t kPathsPerTask = 256;
  parallel_blocks(n, kPathsPerTask, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    Vector x(drift.dim);
    for (std::size_t k = begin; k < end; ++k) {
      RngStream path_rng = rng.substream(k);
      x = x0;
      try {
        euler_path(drift, cfg, source, x, times, path_rng, [&](std::size_t j, const Vector& state) {
          out[j].row(static_cast<Eigen::Index>(k)) = state.transpose();
        });
      } catch (const IntegrationError& e) {
        std::lock_guard lock(failed_mutex);
        failed.push_back(k);
        if (first_message.empty()) first_message = e.what();
      }
    }
  });
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    std::ostringstream os;
    os << failed.size() << " of " << n << " paths failed; first failing path " << failed.front() << ": "
       << first_message;
    throw EnsembleError(os.str(), std::move(failed));
  }
  return out;
}

CoupledEnsemble run_coupled_ensemble(const DriftField& drift, const EulerConfig& cfg, double alpha, const Vector& x0,
                                     double t, std::size_t n, const RngStream& rng, unsigned workers) {
  check_common(drift, cfg, x0);
  if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("run_coupled_ensemble: alpha must lie in (1, 2)");
  if (!(t > 0.0)) throw std::invalid_argument("run_coupled_ensemble: t must be positive");
  if (n == 0) throw std::invalid_argument("run_coupled_ensemble: n must be >= 1");
  const int d = drift.dim;
  const auto steps = static_cast<std::size_t>(std::ceil(t / cfg.dt - 1e-9));
  const bool identity = cfg.sigma.size() == 0;
  CoupledEnsemble out{Matrix(static_cast<Eigen::Index>(n), d), Matrix(static_cast<Eigen::Index>(n), d)};

  std::vector<std::size_t> failed;
  std::mutex failed_mutex;
  parallel_blocks(n, 256, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    Vector xs(d), xb(d), bs(d), bb(d), g(d);
    for (std::size_t k = begin; k < end; ++k) {
      RngStream path_rng = rng.substream(k);
      xs = x0;
      xb = x0;
      double now = 0.0;
      for (std::size_t step = 0; step < steps; ++step) {
        const double h = step + 1 == steps ? t - now : cfg.dt;
        const double root_s = std::sqrt(sample_subordinator({alpha, h}, path_rng));
        for (auto& c : g) c = path_rng.normal();
        drift.b(xs, bs);
        drift.b(xb, bb);
        if (identity) {
          xs += h * bs + root_s * g;
          xb += h * bb + std::sqrt(h) * g;
        } else {
          xs += h * bs + root_s * (cfg.sigma * g);
          xb += h * bb + std::sqrt(h) * (cfg.sigma * g);
        }
        now += h;
      }
      if (!xs.allFinite() || !xb.allFinite()) {
        std::lock_guard lock(failed_mutex);
        failed.push_back(k);
        continue;
      }
      out.stable.row(static_cast<Eigen::Index>(k)) = xs.transpose();
      out.brownian.row(static_cast<Eigen::Index>(k)) = xb.transpose();
    }
  });
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    std::ostringstream os;
    os << failed.size() << " of " << n << " coupled paths ended non-finite; first failing path " << failed.front();
    throw EnsembleError(os.str(), std::move(failed));
  }
  return out;
}

Ensemble run_ensemble(const DriftField& drift, const EulerConfig& cfg, const Driver& driver, const Vector& x0, double t,
                      std::size_t n, const RngStream& rng, unsigned workers) {
  if (!(t > 0.0)) throw std::invalid_argument("run_ensemble: t must be positive");
  Ensemble ens;
  ens.endpoints = std::move(run_ensemble_at(drift, cfg, driver, x0, {t}, n, rng, workers).front());
  ens.t = t;
  ens.provenance = {drift.name,
                    driver.label(),
                    driver.alpha,
                    cfg.dt,
                    to_string(driver.stable ? cfg.scheme : Scheme::brownian),
                    rng.root_seed(),
                    rng.stream_index(),
                    x0};
  return ens;
}

McEstimate mean_over(const TestFn& h, double h_bound, const Matrix& states) {
  const auto n = states.rows();
  if (n == 0) throw std::invalid_argument("mean_over: empty state matrix");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = h(states.row(k).transpose());
    sum += v;
    sum_sq += v * v;
  }
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = n > 1 ? std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0)) : 0.0;
  return {mean, std::sqrt(var / nn), h_bound / std::sqrt(nn)};
}

McEstimate mc_semigroup(const TestFn& h, double h_bound, const DriftField& drift, const EulerConfig& cfg,
                        const Driver& driver, const Vector& x, double t, std::size_t n, const RngStream& rng,
                        unsigned workers) {
  const Ensemble ens = run_ensemble(drift, cfg, driver, x, t, n, rng, workers);
  return mean_over(h, h_bound, ens.endpoints);
}

}  // namespace stvl
