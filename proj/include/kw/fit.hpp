#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kw {

enum class FitModel {
  power_law,          // p(n) = C * n^-alpha
  stretched_exp,      // p(n) = C * exp(-c * n^alpha)
  stretched_exp_log,  // p(n) = C * exp(-c * n^alpha * (log n)^gamma), gamma held fixed
};

FitModel fit_model_parse(const std::string& name);
std::string fit_model_name(FitModel m);

struct FitPoint {
  double n = 0;
  double p = 0;
};

struct FitOptions {
  double gamma = 0.0;       // fixed log-correction power (stretched_exp_log only)
  int bootstrap = 200;      // resamples for the alpha confidence interval
  uint64_t seed = 1;
  double alpha_min = 0.02;  // search window for the stretched exponent
  double alpha_max = 0.98;
};

struct FitResult {
  FitModel model = FitModel::stretched_exp;
  double alpha = 0.0;    // stretched exponent, or the power-law exponent
  double c = 0.0;        // scale inside the exponential (0 for power law)
  double log_c0 = 0.0;   // additive constant log C
  double gamma = 0.0;    // the fixed log power actually used
  double alpha_lo = 0.0; // 95% bootstrap interval, forced to contain alpha
  double alpha_hi = 0.0;
  double residual_norm = 0.0;  // root mean squared residual in log space
  size_t points = 0;
};

// Fits log p against the chosen decay model.  Requires at least 4 points with
// distinct n >= 2 and p in (0, 1]; throws InputError otherwise.
FitResult fit_exponent(const std::vector<FitPoint>& pts, FitModel model, const FitOptions& opts = {});

// Fit of log V(m) = log A + b * m^k over integer arguments; used for growth
// curves of span sizes.
struct GrowthFit {
  double k_hat = 0.0;
  double b = 0.0;
  double log_a = 0.0;
  double residual_norm = 0.0;
  size_t points = 0;
};

GrowthFit fit_growth(const std::vector<int64_t>& ms, const std::vector<double>& log_sizes);

}  // namespace kw
