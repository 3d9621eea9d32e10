#include "stvl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "stvl/analytic_constants.hpp"
#include "stvl/distance_lab.hpp"
#include "stvl/ou_closed_form.hpp"
#include "stvl/parallel.hpp"
#include "stvl/poisson_pde.hpp"
#include "stvl/sde_engine.hpp"
#include "stvl/stable_sampling.hpp"

#ifndef STVL_VERSION
#define STVL_VERSION "unknown"
#endif

namespace stvl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed or open interval used to validate a parameter.
struct Range {
  double lo = -kInf;
  double hi = kInf;
  bool lo_open = false;
  bool hi_open = false;

  [[nodiscard]] bool contains(double v) const {
    return std::isfinite(v) && (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  }
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
    return os.str();
  }
};

Range closed(double lo, double hi) { return {lo, hi, false, false}; }
Range open(double lo, double hi) { return {lo, hi, true, true}; }
Range left_open(double lo, double hi) { return {lo, hi, true, false}; }
Range positive() { return {0.0, kInf, true, false}; }

// Reads campaign parameters with defaults and records the resolved values.
class Params {
 public:
  explicit Params(const Json& in) : in_(in.is_null() ? Json::object() : in) {
    if (!in_.is_object()) throw ConfigError("params", "must be an object");
  }

  double number(const std::string& key, double def, Range r) {
    const double v = has(key) ? as_number(in_.at(key), path(key)) : def;
    if (!r.contains(v)) throw ConfigError(path(key), "must lie in " + r.describe());
    out_[key] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t def, std::size_t lo, std::size_t hi) {
    std::size_t v = def;
    if (has(key)) {
      const Json& j = in_.at(key);
      if (!j.is_number_integer() && !(j.is_number_float() && std::floor(j.get<double>()) == j.get<double>()))
        throw ConfigError(path(key), "must be an integer");
      const double d = j.get<double>();
      if (d < 0) throw ConfigError(path(key), "must be non-negative");
      v = static_cast<std::size_t>(d);
    }
    if (v < lo || v > hi)
      throw ConfigError(path(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def, Range r, std::size_t min_size = 1) {
    std::vector<double> v = std::move(def);
    if (has(key)) {
      const Json& j = in_.at(key);
      v.clear();
      if (j.is_number()) {
        v.push_back(j.get<double>());
      } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], path(key, i)));
      } else {
        throw ConfigError(path(key), "must be a number or a list of numbers");
      }
    }
    if (v.size() < min_size)
      throw ConfigError(path(key), "needs at least " + std::to_string(min_size) + " entries");
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!r.contains(v[i])) throw ConfigError(path(key, i), "must lie in " + r.describe());
    out_[key] = v;
    return v;
  }

  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    std::string v = def;
    if (has(key)) {
      if (!in_.at(key).is_string()) throw ConfigError(path(key), "must be a string");
      v = in_.at(key).get<std::string>();
    }
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(path(key), "must be one of " + list);
    }
    out_[key] = v;
    return v;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError(path(key), message);
  }

  // Rejects keys that no reader consumed and returns the resolved table.
  Json finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!out_.contains(it.key())) throw ConfigError(path(it.key()), "unknown parameter");
    return out_;
  }

 private:
  [[nodiscard]] bool has(const std::string& key) const { return in_.contains(key) && !in_.at(key).is_null(); }
  static std::string path(const std::string& key) { return "params." + key; }
  static std::string path(const std::string& key, std::size_t i) {
    return "params." + key + "[" + std::to_string(i) + "]";
  }
  static double as_number(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where, "must be a number");
    return j.get<double>();
  }

  Json in_;
  Json out_ = Json::object();
};

std::vector<double> get_list(const Json& p, const char* key) { return p.at(key).get<std::vector<double>>(); }

// Stage stream ids; stages never share random numbers.
enum Stage : std::uint64_t {
  kStageCf = 1,
  kStageCms,
  kStageCauchy,
  kStageInverseMoment,
  kStageBrownianMoment,
  kStageStableMoment,
  kStageTv,
  kStageGradient,
  kStageGradientCos,
};

class Context {
 public:
  Context(const ExperimentConfig& cfg, RunReport& report) : cfg_(cfg), report_(report), root_(cfg.seed) {
    workers_ = cfg.workers == 0 ? default_workers() : cfg.workers;
    if (!cfg.output_dir.empty()) data_dir_ = cfg.output_dir / "data";
  }

  [[nodiscard]] const Json& params() const { return cfg_.params; }
  [[nodiscard]] RngStream stream(Stage s, std::uint64_t index = 0) const { return root_.substream(s).substream(index); }
  [[nodiscard]] unsigned workers() const { return workers_; }
  Json& results() { return report_.results; }

  void check(CheckRecord c) {
    const double diff = c.value - c.expected;
    if (c.relation == "abs") {
      c.pass = std::abs(diff) <= c.tolerance;
    } else if (c.relation == "rel") {
      c.pass = std::abs(diff) <= c.tolerance * std::abs(c.expected);
    } else if (c.relation == "le") {
      c.pass = c.value <= c.expected + c.tolerance;
    } else if (c.relation == "ge") {
      c.pass = c.value >= c.expected - c.tolerance;
    } else {
      throw std::logic_error("unknown check relation " + c.relation);
    }
    if (!std::isfinite(c.value)) c.pass = false;
    report_.checks.push_back(std::move(c));
  }

  // Runs one stage, timing it; an exception becomes a failed check named after the stage.
  void stage(const std::string& name, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      report_.checks.push_back({name + ": stage completed", kNaN, 0.0, 0.0, "abs", false, "runtime", e.what()});
    }
    report_.timing[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void write_table(const std::string& file, const CsvTable& table) const {
    if (!data_dir_.empty()) table.write(data_dir_ / file);
  }
  void write_json_file(const std::string& file, const Json& j) const {
    if (!data_dir_.empty()) write_json(data_dir_ / file, j);
  }

 private:
  const ExperimentConfig& cfg_;
  RunReport& report_;
  RngStream root_;
  unsigned workers_ = 1;
  std::filesystem::path data_dir_;
};

std::string label(const std::string& what, std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os << what;
  bool first = true;
  for (const auto& [k, v] : kv) {
    os << (first ? " " : ", ") << k << "=" << v;
    first = false;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// verify-samplers

Json resolve_verify_samplers(Params& p) {
  p.numbers("alpha", {1.2, 1.5, 1.8}, left_open(0.0, 2.0));
  p.numbers("xi", {0.5, 1.0, 2.0}, positive());
  p.count("n", 100000, 100, 100000000);
  p.number("t", 1.0, positive());
  p.count("d", 1, 1, 16);
  p.count("cauchy_n", 100000, 0, 100000000);
  return p.finish();
}

void run_verify_samplers(Context& ctx) {
  const Json& p = ctx.params();
  const auto alphas = get_list(p, "alpha");
  const auto xis = get_list(p, "xi");
  const auto n = p.at("n").get<std::size_t>();
  const double t = p.at("t").get<double>();
  const int d = p.at("d").get<int>();
  const double tol = 3.0 / std::sqrt(static_cast<double>(n));

  CsvTable table{{"alpha", "xi", "sampler", "re", "im", "exact", "abs_err", "tolerance"}, {}};
  ctx.stage("characteristic functions", [&] {
    for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
      const double a = alphas[ia];
      // sampler 0: sqrt(S_t) N(0, I_d) read along the first axis; sampler 1: Chambers-Mallows-Stuck.
      SampleSet vec = sample_stable_vector_set(a, t, d, n, ctx.stream(kStageCf, ia), ctx.workers());
      SampleSet cms = sample_sym_stable_set({a, t}, n, ctx.stream(kStageCms, ia), ctx.workers());
      for (double xi : xis) {
        const double exact = std::exp(-t * std::pow(xi, a) / 2.0);
        Vector dir = Vector::Zero(d);
        dir[0] = xi;
        const CharFnEstimate e_vec = empirical_char_fn(vec, dir);
        const CharFnEstimate e_cms = empirical_char_fn(cms, xi);
        int sampler = 0;
        for (const auto& e : {e_vec, e_cms}) {
          const double err = std::abs(e.value - std::complex<double>(exact, 0.0));
          table.add({a, xi, double(sampler), e.value.real(), e.value.imag(), exact, err, tol});
          ctx.check({label(sampler == 0 ? "cf stable_vector" : "cf cms", {{"alpha", a}, {"xi", xi}}), err, 0.0, tol,
                     "le", false, "closed-form characteristic function", ""});
          ++sampler;
        }
      }
    }
  });
  ctx.write_table("cf.csv", table);

  const auto cauchy_n = p.at("cauchy_n").get<std::size_t>();
  if (cauchy_n > 0) {
    ctx.stage("cauchy ks", [&] {
      // alpha = 1 at time 2 is the standard Cauchy law.
      SampleSet s = sample_sym_stable_set({1.0, 2.0}, cauchy_n, ctx.stream(kStageCauchy), ctx.workers());
      std::vector<double> v(s.values.data(), s.values.data() + s.size());
      std::sort(v.begin(), v.end());
      double ks = 0.0;
      const double m = static_cast<double>(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double cdf = 0.5 + std::atan(v[i]) / std::numbers::pi;
        ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / m), std::abs(cdf - static_cast<double>(i + 1) / m)});
      }
      // 1.63 / sqrt(n) is the 1% Kolmogorov critical value.
      ctx.check({"cms alpha=1 KS against Cauchy", ks, 0.0, 1.63 / std::sqrt(m), "le", false, "Cauchy CDF", ""});
      ctx.results()["cauchy_ks"] = ks;
    });
  }
}

// ---------------------------------------------------------------------------
// moment-check

Json resolve_moment_check(Params& p) {
  p.numbers("alpha", {1.0, 1.25, 1.5, 1.75}, open(0.0, 2.0));
  p.numbers("t", {0.5, 1.0, 2.0}, positive());
  p.count("n", 1000000, 1000, 100000000);
  p.number("rel_tol", 0.02, positive());
  p.count("blocks", 32, 1, 4096);
  p.count("bm_n", 1000000, 0, 100000000);
  p.number("bm_dt", 0.01, open(0.0, 1.0));
  p.number("bm_t", 3.0, positive());
  p.number("bm_rel_tol", 0.01, positive());
  p.numbers("stable_alpha", {1.9, 1.7, 1.5, 1.3, 1.2}, open(1.0, 2.0));
  p.count("stable_n", 1000000, 0, 100000000);
  p.number("stable_rel_tol", 0.1, positive());
  p.number("stable_mc_alpha_min", 1.5, open(1.0, 2.0));
  return p.finish();
}

void run_moment_check(Context& ctx) {
  const Json& p = ctx.params();
  const auto alphas = get_list(p, "alpha");
  const auto ts = get_list(p, "t");
  const auto n = p.at("n").get<std::size_t>();
  const double rel_tol = p.at("rel_tol").get<double>();
  const auto blocks = p.at("blocks").get<std::size_t>();

  CsvTable inv{{"alpha", "t", "estimate", "std_error", "exact", "rel_err"}, {}};
  ctx.stage("inverse moment", [&] {
    std::uint64_t idx = 0;
    for (double a : alphas) {
      for (double t : ts) {
        const SampleSet s = sample_subordinator_set({a, t}, n, ctx.stream(kStageInverseMoment, idx++), ctx.workers());
        const Vector inv_s = s.values.col(0).cwiseInverse();
        const double est = robust_mean(inv_s, blocks);
        const double se = robust_std_error(inv_s, blocks);
        const double exact = s_inverse_moment(a, t);
        inv.add({a, t, est, se, exact, (est - exact) / exact});
        ctx.check({label("inverse moment", {{"alpha", a}, {"t", t}}), est, exact, rel_tol, "rel", false,
                   a == 1.0 && t == 1.0 ? "Levy closed form (exactly 4)" : "Gamma-function identity", ""});
      }
    }
  });
  ctx.write_table("inverse_moment.csv", inv);

  const auto bm_n = p.at("bm_n").get<std::size_t>();
  if (bm_n > 0) {
    ctx.stage("brownian ergodic moment", [&] {
      const double dt = p.at("bm_dt").get<double>();
      const double t = p.at("bm_t").get<double>();
      const Ensemble e = run_ensemble(ou_drift(1), {dt, Scheme::brownian, {}}, Driver::brownian(), Vector::Zero(1), t,
                                      bm_n, ctx.stream(kStageBrownianMoment), ctx.workers());
      const Vector abs_z = e.endpoints.col(0).cwiseAbs();
      const double est = abs_z.mean();
      const double exact = 1.0 / std::sqrt(std::numbers::pi);
      ctx.results()["brownian_abs_mean"] = {{"estimate", est}, {"exact", exact}, {"dt", dt}, {"t", t}, {"n", bm_n}};
      ctx.check({"ergodic E|Z| brownian OU", est, exact, p.at("bm_rel_tol").get<double>(), "rel", false,
                 "N(0, 1/2) closed form", ""});
    });
  }

  const auto stable_alphas = get_list(p, "stable_alpha");
  const auto stable_n = p.at("stable_n").get<std::size_t>();
  CsvTable erg{{"alpha", "closed_form", "mc_estimate", "std_error"}, {}};
  ctx.stage("stable ergodic moment", [&] {
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = 0; i < stable_alphas.size(); ++i) {
      const double a = stable_alphas[i];
      const double exact = ergodic_abs_mean(a);
      double est = kNaN, se = kNaN;
      if (stable_n > 0) {
        const SampleSet s = sample_ergodic_law(a, stable_n, ctx.stream(kStageStableMoment, i), ctx.workers());
        const Vector abs_z = s.values.col(0).cwiseAbs();
        est = robust_mean(abs_z, blocks);
        se = robust_std_error(abs_z, blocks);
        if (a >= p.at("stable_mc_alpha_min").get<double>())
          ctx.check({label("ergodic E|Z| stable sample", {{"alpha", a}}), est, exact,
                     p.at("stable_rel_tol").get<double>(), "rel", false, "exact ergodic sampling", ""});
      }
      erg.add({a, exact, est, se});
      ctx.check({label("ergodic E|Z| finite", {{"alpha", a}}), double(std::isfinite(exact)), 1.0, 0.0, "abs", false,
                 "closed form", ""});
      curve.emplace_back(a, exact);
    }
    std::sort(curve.begin(), curve.end());
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
      // Smaller alpha, larger first absolute moment.
      ctx.check({label("ergodic E|Z| increases as alpha decreases", {{"from", curve[i + 1].first}, {"to", curve[i].first}}),
                 curve[i].second, curve[i + 1].second, 0.0, "ge", false, "closed form", ""});
    }
  });
  ctx.write_table("ergodic_abs_moment.csv", erg);
}

// ---------------------------------------------------------------------------
// ou-rate

Json resolve_ou_rate(Params& p) {
  p.numbers("alpha", {1.9, 1.95, 1.99, 1.995}, closed(1.05, 1.9995), 3);
  p.number("lb_alpha", 1.999, open(1.0, 2.0));
  p.number("slope", 1.0, positive());
  p.number("slope_tol", 0.1, positive());
  p.number("lb_limit_rel_tol", 0.002, positive());
  p.number("x_max", 40.0, positive());
  p.count("n_cells", 65536, 64, 1u << 22);
  return p.finish();
}

void run_ou_rate(Context& ctx) {
  const Json& p = ctx.params();
  const auto alphas = get_list(p, "alpha");
  GridSpec grid;
  grid.x_max = p.at("x_max").get<double>();
  grid.x_min = -grid.x_max;
  grid.n_cells = p.at("n_cells").get<std::size_t>();

  CsvTable table{{"alpha", "tv_exact", "lb_curve", "ratio_to_eps"}, {}};
  ctx.stage("exact tv", [&] {
    std::vector<std::pair<double, double>> pts;
    for (double a : alphas) {
      const double tv = exact_tv_mu(a, grid);
      const double lb = lb_curve(a);
      table.add({a, tv, lb, tv / (2.0 - a)});
      pts.emplace_back(a, tv);
      ctx.check({label("exact tv above lower-bound curve", {{"alpha", a}}), tv, lb, 0.0, "ge", false,
                 "density inversion vs cos test function", ""});
    }
    const RateFit fit = rate_fit(pts);
    ctx.results()["rate_fit"] = to_json(fit);
    ctx.write_json_file("ou_rate_fit.json", to_json(fit));
    ctx.check({"exact tv rate slope", fit.slope, p.at("slope").get<double>(), p.at("slope_tol").get<double>(), "abs",
               false, "density inversion", ""});
  });
  ctx.write_table("ou_rate.csv", table);

  ctx.stage("lower-bound limit", [&] {
    const double a = p.at("lb_alpha").get<double>();
    const double ratio = lb_curve(a) / (2.0 - a);
    const double limit = std::exp(-0.25) / 8.0;
    ctx.results()["lb_ratio"] = {{"alpha", a}, {"ratio", ratio}, {"limit", limit}};
    ctx.check({label("lb_curve / (2 - alpha) limit", {{"alpha", a}}), ratio, limit,
               p.at("lb_limit_rel_tol").get<double>(), "rel", false, "first-order expansion e^{-1/4}/8", ""});
  });
}

// ---------------------------------------------------------------------------
// tv-theorem

Json resolve_tv_theorem(Params& p) {
  p.numbers("alpha", {1.5, 1.6, 1.7, 1.8, 1.9}, open(1.0, 2.0), 3);
  p.numbers("t", {5.0}, positive());
  const auto d = p.count("d", 1, 1, 3);
  p.count("n", 100000, 1000, 100000000);
  p.number("dt", 0.02, open(0.0, 1.0));
  p.numbers("xi", {0.5, 1.0, 1.5, 2.0, 3.0}, positive());
  p.number("x0", 0.0, closed(-1e6, 1e6));
  p.number("slope", 1.0, positive());
  p.number("slope_tol", 0.15, positive());
  p.number("agreement_tol", 0.05, positive());
  const auto bins = p.count("bins", 0, 0, 100000);
  if (d > 1 && bins > 0) p.fail("bins", "histogram TV is only reported for d = 1");
  return p.finish();
}

void run_tv_theorem(Context& ctx) {
  const Json& p = ctx.params();
  const auto alphas = get_list(p, "alpha");
  const auto ts = get_list(p, "t");
  const int d = p.at("d").get<int>();
  const auto n = p.at("n").get<std::size_t>();
  const double dt = p.at("dt").get<double>();
  const auto xis = get_list(p, "xi");
  const Vector x0 = Vector::Constant(d, p.at("x0").get<double>());
  const std::size_t bins = p.at("bins").get<std::size_t>() > 0 ? p.at("bins").get<std::size_t>() : default_bins(n);
  const double t_fit = *std::max_element(ts.begin(), ts.end());
  const DriftField drift = ou_drift(d);

  struct Row {
    double alpha, t, cf, cf_err, hist, noise, exact;
  };
  std::vector<Row> rows;
  ctx.stage("simulate", [&] {
    std::uint64_t idx = 0;
    for (double t : ts) {
      for (double a : alphas) {
        const CoupledEnsemble e = run_coupled_ensemble(drift, {dt, Scheme::subordinated, {}}, a, x0, t, n,
                                                       ctx.stream(kStageTv, idx++), ctx.workers());
        const DistanceReport lb = tv_cf_lower_bound(e.stable, e.brownian, xis);
        Row r{a, t, lb.value, lb.error_bound, kNaN, kNaN, kNaN};
        if (d == 1) {
          const DistanceReport h = tv_from_samples_1d(e.stable.col(0), e.brownian.col(0), bins);
          r.hist = h.value;
          r.noise = h.noise_floor;
          if (t == t_fit) r.exact = exact_tv_mu(a);
        }
        rows.push_back(r);
      }
    }
  });

  CsvTable table{{"alpha", "t", "d", "tv_cf", "tv_cf_err", "tv_hist", "noise_floor", "tv_exact"}, {}};
  for (const Row& r : rows) table.add({r.alpha, r.t, double(d), r.cf, r.cf_err, r.hist, r.noise, r.exact});
  ctx.write_table("tv_theorem.csv", table);
  if (rows.empty()) return;

  ctx.stage("checks", [&] {
    double lo = kInf, hi = -kInf;
    for (const Row& r : rows) {
      for (double v : {r.cf, r.hist}) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    ctx.check({"all tv values <= 2", hi, 2.0, 0.0, "le", false, "normalization bound", ""});
    ctx.check({"all tv values >= 0", lo, 0.0, 0.0, "ge", false, "normalization bound", ""});

    for (double t : ts) {
      if (t < 1.0) continue;
      std::vector<Row> at_t;
      for (const Row& r : rows)
        if (r.t == t) at_t.push_back(r);
      std::sort(at_t.begin(), at_t.end(), [](const Row& x, const Row& y) { return x.alpha < y.alpha; });
      double violations = 0;
      for (std::size_t i = 0; i + 1 < at_t.size(); ++i)
        if (at_t[i + 1].cf > at_t[i].cf + at_t[i].cf_err + at_t[i + 1].cf_err) violations += 1;
      ctx.check({label("tv decreases as alpha increases", {{"t", t}}), violations, 0.0, 0.0, "abs", false,
                 "monotone shape", ""});
    }

    std::vector<std::pair<double, double>> pts;
    for (const Row& r : rows)
      if (r.t == t_fit) pts.emplace_back(r.alpha, r.cf);
    const RateFit fit = rate_fit(pts);
    ctx.results()["rate_fit"] = to_json(fit);
    ctx.write_json_file("tv_theorem_fit.json", to_json(fit));
    ctx.check({label("ergodic tv slope against 2 - alpha", {{"t", t_fit}}), fit.slope, p.at("slope").get<double>(),
               p.at("slope_tol").get<double>(), "abs", false, "log-log fit of the cf lower bound", ""});

    if (d == 1) {
      const double tol = p.at("agreement_tol").get<double>();
      for (const Row& r : rows) {
        if (r.t != t_fit) continue;
        ctx.check({label("sample tv vs exact", {{"alpha", r.alpha}, {"t", r.t}}), r.hist, r.exact, tol, "abs", false,
                   "density inversion", ""});
        ctx.check({label("histogram noise floor", {{"alpha", r.alpha}}), r.noise, 0.0, tol, "le", false,
                   "half-sample self distance", ""});
      }
    }
  });
}

// ---------------------------------------------------------------------------
// poisson-rate

Json resolve_poisson(Params& p) {
  p.numbers("alpha", {1.8, 1.9, 1.95, 1.99}, open(1.0, 2.0), 3);
  p.numbers("residual_alpha", {1.8, 1.9, 1.95}, open(1.0, 2.0), 0);
  const double x_max = p.number("x_max", 20.0, positive());
  p.count("n_points", 801, 16, 1000000);
  p.number("brownian_window", 3.0, closed(0.0, x_max));
  p.number("brownian_tol", 1e-3, positive());
  p.number("interior", 0.75, left_open(0.0, 1.0));
  p.number("stable_tol", 1e-2, positive());
  p.number("spread_bound", 3.0, positive());
  p.numbers("symbol_alpha", {1.2, 1.5, 1.8}, open(1.0, 2.0), 0);
  p.numbers("symbol_xi", {0.5, 1.0, 2.0}, positive(), 0);
  p.number("symbol_rel_tol", 0.01, positive());
  return p.finish();
}

void run_poisson(Context& ctx) {
  const Json& p = ctx.params();
  const auto alphas = get_list(p, "alpha");
  const auto residual_alphas = get_list(p, "residual_alpha");
  const double x_max = p.at("x_max").get<double>();
  const UniformGrid grid = UniformGrid::span(-x_max, x_max, p.at("n_points").get<std::size_t>());
  const DriftField drift = ou_drift(1);
  const double interior = p.at("interior").get<double>() * x_max;

  CsvTable table{{"alpha", "x", "f_alpha", "residual"}, {}};
  auto residual_block = [&](const GridFunction& f, const PoissonProblem& prob, double window) {
    std::vector<double> res(grid.n_points, kNaN);
    std::size_t first = grid.n_points, last = 0;
    for (std::size_t i = 2; i + 2 < grid.n_points; ++i) {
      if (std::abs(grid.x(i)) <= window + 1e-12) {
        first = std::min(first, i);
        last = i + 1;
      }
    }
    double worst = 0.0;
    if (first < last) {
      const auto r = poisson_residuals(f, prob, first, last);
      for (std::size_t k = 0; k < r.size(); ++k) {
        res[first + k] = r[k];
        worst = std::max(worst, std::abs(r[k]));
      }
    }
    for (std::size_t i = 0; i < grid.n_points; ++i) table.add({prob.alpha, grid.x(i), f.values[i], res[i]});
    return worst;
  };

  GridFunction f2;
  ctx.stage("brownian solution", [&] {
    const PoissonProblem prob{cos_test_function(), 2.0, drift};
    f2 = solve_on_grid(prob, grid);
    const double window = p.at("brownian_window").get<double>();
    const double worst = residual_block(f2, prob, window);
    ctx.check({label("poisson residual brownian", {{"window", window}}), worst, 0.0,
               p.at("brownian_tol").get<double>(), "le", false, "generator applied to the closed-form solution", ""});
  });

  std::vector<std::pair<double, double>> diffs;
  ctx.stage("stable solutions", [&] {
    for (double a : alphas) {
      const PoissonProblem prob{cos_test_function(), a, drift};
      const GridFunction fa = solve_on_grid(prob, grid);
      const double worst = residual_block(fa, prob, interior);
      if (std::find(residual_alphas.begin(), residual_alphas.end(), a) != residual_alphas.end())
        ctx.check({label("poisson residual stable", {{"alpha", a}}), worst, 0.0, p.at("stable_tol").get<double>(),
                   "le", false, "generator applied to the closed-form solution", ""});
      if (!f2.values.empty()) diffs.emplace_back(a, lin_norm_diff(fa, f2));
    }
  });
  ctx.write_table("poisson.csv", table);

  if (diffs.size() >= 3) {
    ctx.stage("rate", [&] {
      Json ratios = Json::array();
      double lo = kInf, hi = 0.0;
      for (const auto& [a, v] : diffs) {
        const double eps = 2.0 - a;
        const double ratio = v / (eps * std::log(1.0 / eps));
        ratios.push_back({{"alpha", a}, {"lin_norm_diff", v}, {"ratio", ratio}});
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
      const RateFit fit = rate_fit(diffs);
      Json out = {{"ratios", ratios}, {"rate_fit", to_json(fit)}};
      ctx.results()["poisson_rate"] = out;
      ctx.write_json_file("poisson_rate.json", out);
      ctx.check({"lin-norm ratio spread max/min", hi / lo, p.at("spread_bound").get<double>(), 0.0, "le", false,
                 "closed-form solutions on the grid", ""});
    });
  }

  const auto sym_alphas = get_list(p, "symbol_alpha");
  const auto sym_xis = get_list(p, "symbol_xi");
  if (!sym_alphas.empty() && !sym_xis.empty()) {
    ctx.stage("generator symbol", [&] {
      CsvTable sym{{"alpha", "xi", "x", "value", "exact", "rel_err"}, {}};
      const std::size_t i = grid.n_points / 2 + 7;  // off the symmetry point
      const double x = grid.x(i);
      for (double a : sym_alphas) {
        const FracLaplacian1d lap(grid, a);
        for (double xi : sym_xis) {
          const GridFunction f = tabulate(grid, [xi](double y) { return std::cos(xi * y); }, 1.0);
          const double v = lap.apply(f, i);
          const double exact = -std::pow(xi, a) / 2.0 * std::cos(xi * x);
          sym.add({a, xi, x, v, exact, std::abs(v - exact) / std::abs(exact)});
          ctx.check({label("fractional laplacian symbol", {{"alpha", a}, {"xi", xi}}), v, exact,
                     p.at("symbol_rel_tol").get<double>(), "rel", false, "plane-wave symbol -|xi|^alpha/2", ""});
        }
      }
      ctx.write_table("symbol.csv", sym);
    });
  }
}

// ---------------------------------------------------------------------------
// constants

Json resolve_constants(Params& p) {
  const auto ds = p.numbers("d", {1, 2, 3}, closed(1, 1000));
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (std::floor(ds[i]) != ds[i]) p.fail("d[" + std::to_string(i) + "]", "must be an integer");
  p.numbers("alpha", {1.5, 1.9}, open(0.0, 2.0));
  return p.finish();
}

void run_constants(Context& ctx) {
  const Json& p = ctx.params();
  std::vector<int> ds;
  for (double d : get_list(p, "d")) ds.push_back(static_cast<int>(d));
  auto alphas = get_list(p, "alpha");

  CsvTable table{{"d", "alpha", "A", "omega", "ratio", "tail_mass"}, {}};
  ctx.stage("table", [&] {
    Json reports = Json::array();
    for (int d : ds) {
      for (double a : alphas) {
        const ConstantReport r = constant_report(d, a);
        table.add({double(d), a, r.a, r.omega, r.ratio, r.tail_mass});
        reports.push_back(to_json(r));
      }
    }
    ctx.results()["constants"] = reports;
    ctx.write_json_file("constants.json", reports);

    const double a11 = a_const(1, 1.0);
    ctx.check({"A(1,1) = 1/(2 pi)", a11, 1.0 / (2.0 * std::numbers::pi), 1e-14, "rel", false, "Cauchy kernel", ""});

    std::vector<double> sorted = alphas;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() >= 2) {
      for (int d : ds) {
        const double near = std::abs(ratio_to_limit(d, sorted.back()) - 1.0);
        const double far = std::abs(ratio_to_limit(d, sorted.front()) - 1.0);
        ctx.check({label("ratio tends to 1 as alpha grows", {{"d", d}}), near, far, 0.0, "le", false,
                   "Gamma-function identity", ""});
      }
      const RatioConstantScan scan = scan_ratio_constant(ds, sorted);
      ctx.results()["ratio_scan"] = {{"sup_bounded", scan.sup_bounded},
                                     {"sup_deviation", scan.sup_deviation},
                                     {"argmax_d", scan.argmax_d},
                                     {"argmax_alpha", scan.argmax_alpha}};
    }
  });
  ctx.write_table("constants.csv", table);
}

// ---------------------------------------------------------------------------
// gradient-probe

Json resolve_gradient_probe(Params& p) {
  p.numbers("alpha", {1.5}, open(1.0, 2.0), 0);
  p.numbers("t", {1e-3, 3.1623e-3, 1e-2, 3.1623e-2, 1e-1}, open(0.0, 10.0), 3);
  p.count("n", 40000, 100, 100000000);
  p.number("delta_c", 0.25, positive());
  p.count("steps", 50, 1, 100000);
  p.number("x", 0.0, closed(-1e6, 1e6));
  p.number("stable_tol", 0.1, positive());
  p.number("brownian_tol", 0.05, positive());
  p.number("brownian_rel_tol", 0.06, positive());
  p.number("cos_x", 1.0, closed(-1e6, 1e6));
  p.count("cos_n", 10000, 0, 100000000);
  p.number("cos_bound", 1.1, positive());
  return p.finish();
}

struct GradientNode {
  double grad;
  double std_error;
};

// Central difference (P_t h(x + delta) - P_t h(x - delta)) / (2 delta) with
// both ensembles driven by the same random numbers.
GradientNode fd_gradient(const std::function<double(double)>& h, const DriftField& drift, const Driver& driver,
                         double x, double t, double delta, std::size_t steps, std::size_t n, const RngStream& rng,
                         unsigned workers) {
  const EulerConfig cfg{t / static_cast<double>(steps), driver.stable ? Scheme::direct_stable : Scheme::brownian, {}};
  const Ensemble plus = run_ensemble(drift, cfg, driver, Vector::Constant(1, x + delta), t, n, rng, workers);
  const Ensemble minus = run_ensemble(drift, cfg, driver, Vector::Constant(1, x - delta), t, n, rng, workers);
  Vector diff(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < diff.size(); ++k) diff[k] = h(plus.endpoints(k, 0)) - h(minus.endpoints(k, 0));
  const double mean = diff.mean();
  const double var = (diff.array() - mean).square().sum() / static_cast<double>(std::max<Eigen::Index>(1, diff.size() - 1));
  return {mean / (2.0 * delta), std::sqrt(var / static_cast<double>(n)) / (2.0 * delta)};
}

// d/dx P(Y_t <= 0 | Y_0 = x) for the Brownian OU process.
double brownian_indicator_gradient(double x, double t) {
  const double sd = std::sqrt(-std::expm1(-2.0 * t) / 2.0);
  const double z = -std::exp(-t) * x / sd;
  return -std::exp(-t) / sd * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void run_gradient_probe(Context& ctx) {
  const Json& p = ctx.params();
  const auto ts = get_list(p, "t");
  const auto n = p.at("n").get<std::size_t>();
  const auto steps = p.at("steps").get<std::size_t>();
  const double c = p.at("delta_c").get<double>();
  const double x = p.at("x").get<double>();
  const DriftField drift = ou_drift(1);
  const auto indicator = [](double y) { return y <= 0.0 ? 1.0 : 0.0; };

  std::vector<Driver> drivers{Driver::brownian()};
  for (double a : get_list(p, "alpha")) drivers.push_back(Driver::stable_process(a));

  CsvTable table{{"alpha", "t", "delta", "grad", "std_error", "exact"}, {}};
  std::uint64_t idx = 0;
  for (const Driver& drv : drivers) {
    const double a = drv.stable ? drv.alpha : 2.0;
    ctx.stage(label("indicator gradient", {{"alpha", a}}), [&] {
      std::vector<std::pair<double, double>> logs;
      for (double t : ts) {
        const double delta = c * std::pow(t, 1.0 / a);
        const GradientNode g =
            fd_gradient(indicator, drift, drv, x, t, delta, steps, n, ctx.stream(kStageGradient, idx++), ctx.workers());
        const double exact = drv.stable ? kNaN : brownian_indicator_gradient(x, t);
        table.add({a, t, delta, g.grad, g.std_error, exact});
        ctx.check({label("gradient signal above noise", {{"alpha", a}, {"t", t}}), std::abs(g.grad), 3.0 * g.std_error,
                   0.0, "ge", false, "Monte Carlo", ""});
        if (!drv.stable)
          ctx.check({label("brownian gradient vs Gaussian density", {{"t", t}}), g.grad, exact,
                     p.at("brownian_rel_tol").get<double>(), "rel", false, "exact Gaussian transition", ""});
        logs.emplace_back(std::log(t), std::log(std::abs(g.grad)));
      }
      // Least-squares slope of log|grad| against log t.
      double mx = 0, my = 0;
      for (const auto& [lx, ly] : logs) {
        mx += lx;
        my += ly;
      }
      mx /= static_cast<double>(logs.size());
      my /= static_cast<double>(logs.size());
      double sxy = 0, sxx = 0;
      for (const auto& [lx, ly] : logs) {
        sxy += (lx - mx) * (ly - my);
        sxx += (lx - mx) * (lx - mx);
      }
      const double slope = sxy / sxx;
      ctx.results()["exponents"].push_back({{"alpha", a}, {"fitted", slope}, {"expected", -1.0 / a}});
      ctx.check({label("small-t gradient exponent", {{"alpha", a}}), slope, -1.0 / a,
                 p.at(drv.stable ? "stable_tol" : "brownian_tol").get<double>(), "abs", false,
                 "log-log fit of finite differences", ""});
    });
  }
  ctx.write_table("gradient_probe.csv", table);

  const auto cos_n = p.at("cos_n").get<std::size_t>();
  if (cos_n > 0) {
    ctx.stage("smooth gradient", [&] {
      CsvTable cos_table{{"alpha", "t", "grad", "std_error", "closed_form"}, {}};
      const double xc = p.at("cos_x").get<double>();
      std::uint64_t k = 0;
      for (const Driver& drv : drivers) {
        const double a = drv.stable ? drv.alpha : 2.0;
        double worst = 0.0;
        for (double t : ts) {
          const double delta = c * std::pow(t, 1.0 / a);
          const GradientNode g = fd_gradient([](double y) { return std::cos(y); }, drift, drv, xc, t, delta, steps,
                                             cos_n, ctx.stream(kStageGradientCos, k++), ctx.workers());
          cos_table.add({a, t, g.grad, g.std_error, semigroup_cos_derivative(a, xc, t)});
          worst = std::max(worst, std::abs(g.grad));
        }
        ctx.check({label("smooth h gradient bounded", {{"alpha", a}}), worst, p.at("cos_bound").get<double>(), 0.0,
                   "le", false, "closed-form semigroup derivative", ""});
      }
      ctx.write_table("gradient_probe_cos.csv", cos_table);
    });
  }
}

// ---------------------------------------------------------------------------

struct Campaign {
  std::string name;
  std::function<Json(Params&)> resolve;
  std::function<void(Context&)> run;
};

const std::vector<Campaign>& registry() {
  static const std::vector<Campaign> r{
      {"verify-samplers", resolve_verify_samplers, run_verify_samplers},
      {"moment-check", resolve_moment_check, run_moment_check},
      {"ou-rate", resolve_ou_rate, run_ou_rate},
      {"tv-theorem", resolve_tv_theorem, run_tv_theorem},
      {"poisson-rate", resolve_poisson, run_poisson},
      {"constants", resolve_constants, run_constants},
      {"gradient-probe", resolve_gradient_probe, run_gradient_probe},
  };
  return r;
}

const Campaign& find_campaign(const std::string& name) {
  const std::string canonical = name == "poisson" ? "poisson-rate" : name;
  for (const auto& c : registry())
    if (c.name == canonical) return c;
  std::string list;
  for (const auto& c : registry()) list += (list.empty() ? "" : ", ") + c.name;
  throw ConfigError("campaign", "unknown campaign '" + name + "' (expected one of " + list + ")");
}

Json check_to_json(const CheckRecord& c) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j = {{"name", c.name},         {"value", num(c.value)}, {"expected", num(c.expected)},
            {"tolerance", c.tolerance}, {"relation", c.relation}, {"pass", c.pass},
            {"provenance", c.provenance}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

}  // namespace

const std::vector<std::string>& campaign_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : registry()) v.push_back(c.name);
    return v;
  }();
  return names;
}

ExperimentConfig make_config(const std::string& campaign, const Json& params, std::uint64_t seed,
                             std::filesystem::path output_dir) {
  const Campaign& c = find_campaign(campaign);
  Params reader(params);
  ExperimentConfig cfg;
  cfg.campaign = c.name;
  cfg.seed = seed;
  cfg.params = c.resolve(reader);
  cfg.output_dir = std::move(output_dir);
  return cfg;
}

Json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "campaign" && k != "seed" && k != "params" && k != "output_dir")
      throw ConfigError(k, "unknown key (expected campaign, seed, params, output_dir)");
  }
  if (j.contains("campaign") && !j["campaign"].is_string()) throw ConfigError("campaign", "must be a string");
  if (j.contains("seed") && !j["seed"].is_number_unsigned()) throw ConfigError("seed", "must be a non-negative integer");
  if (j.contains("output_dir") && !j["output_dir"].is_string()) throw ConfigError("output_dir", "must be a string");
  return j;
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

Json RunReport::to_json(bool with_timing) const {
  Json cs = Json::array();
  std::size_t failed = 0;
  for (const auto& c : checks) {
    cs.push_back(check_to_json(c));
    if (!c.pass) ++failed;
  }
  Json j = {{"version", version},
            {"config", config},
            {"passed", failed == 0},
            {"n_checks", checks.size()},
            {"n_failed", failed},
            {"checks", cs},
            {"results", results}};
  if (with_timing) j["timing"] = timing;
  return j;
}

std::vector<CheckRecord> RunReport::matching(const std::string& prefix) const {
  std::vector<CheckRecord> out;
  for (const auto& c : checks)
    if (c.name.rfind(prefix, 0) == 0) out.push_back(c);
  return out;
}

RunReport run_campaign(const ExperimentConfig& cfg) {
  // Resolving again is idempotent and covers configs built by hand.
  const ExperimentConfig resolved = make_config(cfg.campaign, cfg.params, cfg.seed, cfg.output_dir);
  const Campaign& c = find_campaign(resolved.campaign);
  RunReport report;
  report.version = STVL_VERSION;
  report.config = {{"campaign", c.name}, {"seed", resolved.seed}, {"params", resolved.params}};
  ExperimentConfig run_cfg = resolved;
  run_cfg.workers = cfg.workers;
  Context ctx(run_cfg, report);
  const auto start = std::chrono::steady_clock::now();
  c.run(ctx);
  report.timing["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!run_cfg.output_dir.empty()) write_json(run_cfg.output_dir / "report.json", report.to_json());
  return report;
}

}  // namespace stvl
