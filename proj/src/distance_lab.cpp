#include "stvl/distance_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace stvl {

double GridDensity::grid_mass() const {
  if (values.size() != n_cells + 1 || n_cells == 0) throw std::invalid_argument("GridDensity: malformed grid");
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i < n_cells; ++i) s += values[i];
  return s * dx();
}

double GridDensity::tail_mass() const {
  if (tail_c == 0.0) return 0.0;
  if (!(tail_exponent > 0.0) || !(x_min < 0.0) || !(x_max > 0.0))
    throw std::invalid_argument("GridDensity: power-law tail needs a positive exponent and a grid around 0");
  const double a = tail_exponent;
  return tail_c / a * (std::pow(-x_min, -a) + std::pow(x_max, -a)) +
         tail_c2 / (2.0 * a) * (std::pow(-x_min, -2.0 * a) + std::pow(x_max, -2.0 * a));
}

void GridDensity::validate() const {
  if (!(x_max > x_min)) throw std::invalid_argument("GridDensity: empty range");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("GridDensity: negative or non-finite value");
  const double mass = total_mass();
  if (std::abs(mass - 1.0) > 1e-4)
    throw std::invalid_argument("GridDensity: not normalized (mass " + std::to_string(mass) + ")");
}

double tv_from_densities(const GridDensity& p, const GridDensity& q) {
  if (p.n_cells != q.n_cells || p.x_min != q.x_min || p.x_max != q.x_max || p.values.size() != q.values.size())
    throw std::invalid_argument("tv_from_densities: grids differ");
  p.validate();
  q.validate();
  const std::size_t n = p.n_cells;
  double s = 0.5 * (std::abs(p.values[0] - q.values[0]) + std::abs(p.values[n] - q.values[n]));
  for (std::size_t i = 1; i < n; ++i) s += std::abs(p.values[i] - q.values[i]);
  s *= p.dx();

  double tail = 0.0;
  if (p.tail_c == 0.0 || q.tail_c == 0.0 || p.tail_exponent != q.tail_exponent) {
    tail = p.tail_mass() + q.tail_mass();
  } else {
    const double a = p.tail_exponent;
    tail = std::abs(p.tail_c - q.tail_c) / a * (std::pow(-p.x_min, -a) + std::pow(p.x_max, -a)) +
           std::abs(p.tail_c2 - q.tail_c2) / (2.0 * a) * (std::pow(-p.x_min, -2.0 * a) + std::pow(p.x_max, -2.0 * a));
  }
  return std::clamp(s + tail, 0.0, 2.0);
}

std::size_t default_bins(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
}

namespace {

constexpr double kClip = 1e-4;

std::vector<double> sorted_copy(const Eigen::Ref<const Vector>& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end());
  return s;
}

// Empirical quantile by linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Strictly increasing edges holding equal pooled mass between the clip quantiles.
std::vector<double> pooled_edges(const std::vector<double>& pooled_sorted, std::size_t bins) {
  std::vector<double> edges;
  edges.reserve(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    const double p = kClip + (1.0 - 2.0 * kClip) * static_cast<double>(i) / static_cast<double>(bins);
    const double e = quantile(pooled_sorted, p);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

// Bin masses of `v` over the edges; out-of-range mass is returned separately.
std::vector<double> bin_masses(const std::vector<double>& sorted, const std::vector<double>& edges,
                               double& outside) {
  const auto n = static_cast<double>(sorted.size());
  std::vector<double> mass(edges.size() - 1);
  // Bins are [e_i, e_{i+1}), except the last, which is closed.
  auto count_below = [&](double x) {
    return static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
  };
  auto count_at_most = [&](double x) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
  };
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double hi = (i + 2 == edges.size()) ? count_at_most(edges[i + 1]) : count_below(edges[i + 1]);
    mass[i] = (hi - count_below(edges[i])) / n;
  }
  outside = (count_below(edges.front()) + (n - count_at_most(edges.back()))) / n;
  return mass;
}

double histogram_tv(const std::vector<double>& a_sorted, const std::vector<double>& b_sorted,
                    const std::vector<double>& edges, double& clipped) {
  double out_a = 0.0;
  double out_b = 0.0;
  const auto pa = bin_masses(a_sorted, edges, out_a);
  const auto pb = bin_masses(b_sorted, edges, out_b);
  double s = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(pa[i] - pb[i]);
  clipped = out_a + out_b;
  return s;
}

std::vector<double> sorted_half(const Eigen::Ref<const Vector>& v, int parity) {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(v.size() / 2 + 1));
  for (Eigen::Index i = parity; i < v.size(); i += 2) s.push_back(v[i]);
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

DistanceReport tv_from_samples_1d(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                                  std::size_t bins) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("tv_from_samples_1d: empty sample set");
  if (bins < 10) throw std::invalid_argument("tv_from_samples_1d: need at least 10 bins");
  const auto as = sorted_copy(a);
  const auto bs = sorted_copy(b);
  std::vector<double> pooled;
  pooled.reserve(as.size() + bs.size());
  std::merge(as.begin(), as.end(), bs.begin(), bs.end(), std::back_inserter(pooled));
  const auto edges = pooled_edges(pooled, bins);

  DistanceReport r;
  r.estimator = "tv_histogram_1d";
  r.n = std::min(as.size(), bs.size());
  r.params = {{"bins", static_cast<double>(edges.size() - 1)},
              {"n_a", static_cast<double>(as.size())},
              {"n_b", static_cast<double>(bs.size())}};
  if (edges.size() < 2) {
    // Every pooled quantile coincides: both sets are the same point mass.
    r.value = (as.front() == bs.front() && as.back() == bs.back()) ? 0.0 : 2.0;
    return r;
  }
  double clipped = 0.0;
  r.value = std::clamp(histogram_tv(as, bs, edges, clipped), 0.0, 2.0);
  r.error_bound = clipped;

  if (a.size() >= 4 && b.size() >= 4) {
    double ignored = 0.0;
    const double self_a = histogram_tv(sorted_half(a, 0), sorted_half(a, 1), edges, ignored);
    const double self_b = histogram_tv(sorted_half(b, 0), sorted_half(b, 1), edges, ignored);
    // Halves carry twice the per-bin variance of the full-size comparison.
    r.noise_floor = 0.5 * (self_a + self_b) / std::sqrt(2.0);
  }
  return r;
}

DistanceReport tv_from_samples_1d(const SampleSet& a, const SampleSet& b, std::size_t bins) {
  if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("tv_from_samples_1d: scalar samples required");
  return tv_from_samples_1d(a.values.col(0), b.values.col(0), bins);
}

DistanceReport tv_from_samples_nd(const Matrix& a, const Matrix& b, std::size_t bins_per_axis) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("tv_from_samples_nd: empty sample set");
  if (a.cols() != b.cols()) throw std::invalid_argument("tv_from_samples_nd: dimension mismatch");
  const auto d = static_cast<std::size_t>(a.cols());
  if (d < 1 || d > 3) throw std::invalid_argument("tv_from_samples_nd: only 1 <= d <= 3 is supported");
  if (bins_per_axis < 2) throw std::invalid_argument("tv_from_samples_nd: need at least 2 bins per axis");

  std::vector<std::vector<double>> edges(d);
  for (std::size_t j = 0; j < d; ++j) {
    Vector pooled(a.rows() + b.rows());
    pooled << a.col(static_cast<Eigen::Index>(j)), b.col(static_cast<Eigen::Index>(j));
    edges[j] = pooled_edges(sorted_copy(pooled), bins_per_axis);
    if (edges[j].size() < 2) throw std::invalid_argument("tv_from_samples_nd: degenerate axis");
  }
  std::size_t cells = 1;
  for (const auto& e : edges) cells *= e.size() - 1;

  auto cell_of = [&](const Eigen::Ref<const Eigen::RowVectorXd>& x) -> std::ptrdiff_t {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto& e = edges[j];
      const double v = x[static_cast<Eigen::Index>(j)];
      if (v < e.front() || v > e.back()) return -1;
      auto bin = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), v) - e.begin());
      bin = std::min(bin, e.size() - 1) - 1;
      idx = idx * (e.size() - 1) + bin;
    }
    return static_cast<std::ptrdiff_t>(idx);
  };
  auto histogram = [&](const Matrix& m, double& outside) {
    std::vector<double> h(cells, 0.0);
    const double w = 1.0 / static_cast<double>(m.rows());
    outside = 0.0;
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      const auto c = cell_of(m.row(k));
      if (c < 0) {
        outside += w;
      } else {
        h[static_cast<std::size_t>(c)] += w;
      }
    }
    return h;
  };
  double out_a = 0.0;
  double out_b = 0.0;
  const auto ha = histogram(a, out_a);
  const auto hb = histogram(b, out_b);
  double s = 0.0;
  for (std::size_t c = 0; c < cells; ++c) s += std::abs(ha[c] - hb[c]);

  DistanceReport r;
  r.estimator = "tv_histogram_nd";
  r.value = std::clamp(s, 0.0, 2.0);
  r.error_bound = out_a + out_b;
  r.n = static_cast<std::size_t>(std::min(a.rows(), b.rows()));
  r.params = {{"d", static_cast<double>(d)}, {"bins_per_axis", static_cast<double>(bins_per_axis)}};
  return r;
}

double wasserstein1_1d(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("wasserstein1_1d: empty sample set");
  auto as = sorted_copy(a);
  auto bs = sorted_copy(b);
  if (as.size() != bs.size()) {
    auto& big = as.size() > bs.size() ? as : bs;
    const std::size_t m = std::min(as.size(), bs.size());
    std::vector<double> reduced(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>((static_cast<double>(i) + 0.5) * static_cast<double>(big.size()) /
                                                static_cast<double>(m));
      reduced[i] = big[std::min(idx, big.size() - 1)];
    }
    big = std::move(reduced);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < as.size(); ++i) s += std::abs(as[i] - bs[i]);
  return s / static_cast<double>(as.size());
}

double wasserstein1_1d(const SampleSet& a, const SampleSet& b) {
  if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("wasserstein1_1d: scalar samples required");
  return wasserstein1_1d(a.values.col(0), b.values.col(0));
}

namespace {

struct TrigMoments {
  double cos_mean, sin_mean, cos_var, sin_var;
};

TrigMoments trig_moments(const Vector& projected, double xi) {
  double c = 0.0, s = 0.0, cc = 0.0, ss = 0.0;
  for (double x : projected) {
    const double cv = std::cos(xi * x);
    const double sv = std::sin(xi * x);
    c += cv;
    s += sv;
    cc += cv * cv;
    ss += sv * sv;
  }
  const double n = static_cast<double>(projected.size());
  c /= n;
  s /= n;
  return {c, s, std::max(0.0, cc / n - c * c), std::max(0.0, ss / n - s * s)};
}

}  // namespace

DistanceReport tv_cf_lower_bound(const Matrix& a, const Matrix& b, const std::vector<double>& xis,
                                 const Vector& direction) {
  if (xis.empty()) throw std::invalid_argument("tv_cf_lower_bound: empty xi list");
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("tv_cf_lower_bound: empty sample set");
  if (a.cols() != b.cols()) throw std::invalid_argument("tv_cf_lower_bound: dimension mismatch");
  Vector dir = direction.size() == 0 ? Vector(Vector::Unit(a.cols(), 0)) : direction.normalized();
  if (dir.size() != a.cols()) throw std::invalid_argument("tv_cf_lower_bound: direction has wrong dimension");
  const Vector pa = a * dir;
  const Vector pb = b * dir;
  const double na = static_cast<double>(a.rows());
  const double nb = static_cast<double>(b.rows());

  DistanceReport r;
  r.estimator = "tv_cf_lower_bound";
  r.n = static_cast<std::size_t>(std::min(a.rows(), b.rows()));
  double best_xi = xis.front();
  for (double xi : xis) {
    const auto ma = trig_moments(pa, xi);
    const auto mb = trig_moments(pb, xi);
    const double dc = std::abs(ma.cos_mean - mb.cos_mean);
    const double ds = std::abs(ma.sin_mean - mb.sin_mean);
    const double se_c = std::sqrt(ma.cos_var / na + mb.cos_var / nb);
    const double se_s = std::sqrt(ma.sin_var / na + mb.sin_var / nb);
    if (dc > r.value || (dc == r.value && r.error_bound == 0.0)) {
      r.value = dc;
      r.error_bound = 3.0 * se_c;
      best_xi = xi;
    }
    if (ds > r.value) {
      r.value = ds;
      r.error_bound = 3.0 * se_s;
      best_xi = xi;
    }
  }
  r.params = {{"xi_max", best_xi}, {"n_xi", static_cast<double>(xis.size())}};
  return r;
}

DistanceReport tv_cf_lower_bound(const SampleSet& a, const SampleSet& b, const std::vector<double>& xis) {
  return tv_cf_lower_bound(a.values, b.values, xis);
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("rate_fit: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Vector u(n);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [alpha, value] = points[static_cast<std::size_t>(i)];
    if (!(alpha < 2.0)) throw std::invalid_argument("rate_fit: alpha must be < 2");
    if (!(value > 0.0)) throw std::invalid_argument("rate_fit: values must be positive");
    u[i] = std::log(2.0 - alpha);
    y[i] = std::log(value);
  }
  if (u.maxCoeff() - u.minCoeff() < 1e-12) throw std::invalid_argument("rate_fit: degenerate abscissae");

  Matrix design(n, 2);
  design.col(0) = u;
  design.col(1).setOnes();
  const Vector coef = design.colPivHouseholderQr().solve(y);

  RateFit fit;
  fit.points = points;
  fit.slope = coef[0];
  fit.intercept = coef[1];
  fit.max_residual = (design * coef - y).cwiseAbs().maxCoeff();
  if (n >= 4) {
    Matrix quad(n, 3);
    quad.col(0) = u.array().square();
    quad.col(1) = u;
    quad.col(2).setOnes();
    fit.curvature = quad.colPivHouseholderQr().solve(y)[0];
    fit.curved = std::abs(fit.curvature) > 1e-3;
  }
  return fit;
}

}  // namespace stvl
