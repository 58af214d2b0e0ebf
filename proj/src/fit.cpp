#include "kw/fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kw/errors.hpp"
#include "kw/rng.hpp"

namespace kw {

FitModel fit_model_parse(const std::string& name) {
  if (name == "power") return FitModel::power_law;
  if (name == "stretched") return FitModel::stretched_exp;
  if (name == "stretched-log") return FitModel::stretched_exp_log;
  throw InputError("unknown fit model: \"" + name + "\" (expected power | stretched | stretched-log)");
}

std::string fit_model_name(FitModel m) {
  switch (m) {
    case FitModel::power_law: return "power";
    case FitModel::stretched_exp: return "stretched";
    case FitModel::stretched_exp_log: return "stretched-log";
  }
  return "?";
}

namespace {

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double sse = 0.0;
};

// Least squares for y = intercept + slope * x.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = static_cast<double>(n) * sxx - sx * sx;
  LinearFit f;
  if (std::abs(denom) < 1e-14 * (1.0 + sxx)) {
    // Degenerate abscissas: fall back to a constant fit.
    f.intercept = sy / static_cast<double>(n);
    f.slope = 0.0;
  } else {
    f.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / static_cast<double>(n);
  }
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    f.sse += r * r;
  }
  return f;
}

// Sum of squared log-space residuals for the stretched model at a given alpha.
double stretched_sse(const std::vector<double>& lognp, const std::vector<double>& n,
                     const std::vector<double>& logn, double alpha, double gamma,
                     LinearFit* out = nullptr) {
  std::vector<double> x(n.size());
  for (size_t i = 0; i < n.size(); ++i) {
    double v = std::pow(n[i], alpha);
    if (gamma != 0.0) v *= std::pow(logn[i], gamma);
    x[i] = v;
  }
  LinearFit f = linear_fit(x, lognp);
  if (out) *out = f;
  return f.sse;
}

// Golden-section minimization of a smooth one-dimensional function.
template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

void validate_points(const std::vector<FitPoint>& pts) {
  if (pts.size() < 4) throw InputError("fitting needs at least 4 data points");
  std::set<double> distinct;
  for (const FitPoint& pt : pts) {
    if (!(pt.n >= 2.0)) throw InputError("fit abscissas must satisfy n >= 2");
    if (!(pt.p > 0.0) || !(pt.p <= 1.0))
      throw InputError("fit ordinates must be probabilities in (0, 1]");
    distinct.insert(pt.n);
  }
  if (distinct.size() < 4) throw InputError("fitting needs at least 4 distinct abscissas");
}

struct PreparedData {
  std::vector<double> n, logn, lognp;
};

PreparedData prepare(const std::vector<FitPoint>& pts) {
  PreparedData d;
  d.n.reserve(pts.size());
  d.logn.reserve(pts.size());
  d.lognp.reserve(pts.size());
  for (const FitPoint& pt : pts) {
    d.n.push_back(pt.n);
    d.logn.push_back(std::log(pt.n));
    d.lognp.push_back(std::log(pt.p));
  }
  double ymin = *std::min_element(d.lognp.begin(), d.lognp.end());
  double ymax = *std::max_element(d.lognp.begin(), d.lognp.end());
  if (ymax - ymin < 1e-12) throw InputError("degenerate fit data: log p is constant");
  return d;
}

// Core alpha estimate on prepared data (no bootstrap).
double solve_alpha(const PreparedData& d, double gamma, const FitOptions& opts, LinearFit* fit_out) {
  double best_alpha = opts.alpha_min;
  double best_sse = std::numeric_limits<double>::infinity();
  const double step = 0.02;
  for (double a = opts.alpha_min; a <= opts.alpha_max + 1e-12; a += step) {
    double sse = stretched_sse(d.lognp, d.n, d.logn, a, gamma, nullptr);
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = a;
    }
  }
  double lo = std::max(opts.alpha_min, best_alpha - step);
  double hi = std::min(opts.alpha_max, best_alpha + step);
  double alpha = golden_min(
      [&](double a) { return stretched_sse(d.lognp, d.n, d.logn, a, gamma, nullptr); }, lo, hi, 1e-10);
  stretched_sse(d.lognp, d.n, d.logn, alpha, gamma, fit_out);
  return alpha;
}

}  // namespace

FitResult fit_exponent(const std::vector<FitPoint>& pts, FitModel model, const FitOptions& opts) {
  validate_points(pts);
  if (opts.alpha_min <= 0 || opts.alpha_max <= opts.alpha_min)
    throw InputError("bad alpha search window");
  PreparedData data = prepare(pts);
  double gamma = model == FitModel::stretched_exp_log ? opts.gamma : 0.0;
  if (model == FitModel::stretched_exp_log && !(opts.gamma > 0))
    throw InputError("the log-corrected model needs a positive fixed gamma");

  FitResult res;
  res.model = model;
  res.gamma = gamma;
  res.points = pts.size();

  if (model == FitModel::power_law) {
    LinearFit f = linear_fit(data.logn, data.lognp);
    res.alpha = -f.slope;
    res.c = 0.0;
    res.log_c0 = f.intercept;
    res.residual_norm = std::sqrt(f.sse / static_cast<double>(pts.size()));
  } else {
    LinearFit f;
    res.alpha = solve_alpha(data, gamma, opts, &f);
    res.c = -f.slope;
    res.log_c0 = f.intercept;
    res.residual_norm = std::sqrt(f.sse / static_cast<double>(pts.size()));
  }

  // Bootstrap confidence interval for the exponent.
  std::vector<double> boot;
  if (opts.bootstrap > 0) {
    boot.reserve(static_cast<size_t>(opts.bootstrap));
    for (int b = 0; b < opts.bootstrap; ++b) {
      Xoshiro256pp rng(derive_seed(opts.seed, 0xf17, static_cast<uint64_t>(b)));
      std::vector<FitPoint> sample;
      sample.reserve(pts.size());
      for (size_t i = 0; i < pts.size(); ++i)
        sample.push_back(pts[rng.below(static_cast<uint32_t>(pts.size()))]);
      std::set<double> distinct;
      for (const FitPoint& pt : sample) distinct.insert(pt.n);
      if (distinct.size() < 3) continue;  // skip unusable resamples
      try {
        PreparedData d = prepare(sample);
        if (model == FitModel::power_law) {
          LinearFit f = linear_fit(d.logn, d.lognp);
          boot.push_back(-f.slope);
        } else {
          boot.push_back(solve_alpha(d, gamma, opts, nullptr));
        }
      } catch (const InputError&) {
        // Degenerate resample; skip it.
      }
    }
  }
  if (boot.size() >= 8) {
    std::sort(boot.begin(), boot.end());
    size_t lo_idx = static_cast<size_t>(std::floor(0.025 * static_cast<double>(boot.size())));
    size_t hi_idx = static_cast<size_t>(std::ceil(0.975 * static_cast<double>(boot.size()))) - 1;
    hi_idx = std::min(hi_idx, boot.size() - 1);
    res.alpha_lo = std::min(boot[lo_idx], res.alpha);
    res.alpha_hi = std::max(boot[hi_idx], res.alpha);
  } else {
    res.alpha_lo = res.alpha;
    res.alpha_hi = res.alpha;
  }
  return res;
}

GrowthFit fit_growth(const std::vector<int64_t>& ms, const std::vector<double>& log_sizes) {
  if (ms.size() != log_sizes.size()) throw InputError("growth fit arrays differ in length");
  if (ms.size() < 4) throw InputError("growth fitting needs at least 4 data points");
  std::set<int64_t> distinct(ms.begin(), ms.end());
  if (distinct.size() < 4) throw InputError("growth fitting needs at least 4 distinct arguments");
  for (int64_t m : ms)
    if (m < 2) throw InputError("growth fit arguments must satisfy m >= 2");
  double ymin = *std::min_element(log_sizes.begin(), log_sizes.end());
  double ymax = *std::max_element(log_sizes.begin(), log_sizes.end());
  if (ymax - ymin < 1e-12) throw InputError("degenerate growth data: log size is constant");

  std::vector<double> mf(ms.size());
  for (size_t i = 0; i < ms.size(); ++i) mf[i] = static_cast<double>(ms[i]);

  auto sse_at = [&](double k, LinearFit* out) {
    std::vector<double> x(ms.size());
    for (size_t i = 0; i < ms.size(); ++i) x[i] = std::pow(mf[i], k);
    LinearFit f = linear_fit(x, log_sizes);
    if (out) *out = f;
    return f.sse;
  };

  double best_k = 0.05;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double k = 0.05; k <= 4.0 + 1e-12; k += 0.05) {
    double s = sse_at(k, nullptr);
    if (s < best_sse) {
      best_sse = s;
      best_k = k;
    }
  }
  double k_hat = golden_min([&](double k) { return sse_at(k, nullptr); }, std::max(0.01, best_k - 0.05),
                            std::min(4.0, best_k + 0.05), 1e-10);
  LinearFit f;
  sse_at(k_hat, &f);
  GrowthFit g;
  g.k_hat = k_hat;
  g.b = f.slope;
  g.log_a = f.intercept;
  g.residual_norm = std::sqrt(f.sse / static_cast<double>(ms.size()));
  g.points = ms.size();
  return g;
}

}  // namespace kw
