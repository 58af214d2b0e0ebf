#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kw/fit.hpp"
#include "kw/groups.hpp"
#include "kw/krull.hpp"
#include "kw/walk.hpp"

namespace kw {

struct PipelineOptions {
  // exact convolution stage
  int64_t exact_n_max = 256;
  double epsilon = 1e-12;
  size_t max_support = 2'000'000;
  // Monte Carlo refinement at larger n; used only for groups with a fast
  // sampler, and skipped entirely when disabled
  bool monte_carlo = true;
  std::vector<int64_t> mc_ns;  // defaults to {2, 4} x exact_n_max when empty
  uint64_t mc_samples = 2'000'000;
  int threads = 1;
  uint64_t seed = 1;
  // fitting stage
  int64_t fit_min_n = 16;
  double tol = 0.08;  // band around the critical exponent 1/3
  std::function<void(const std::string&)> log;  // optional progress sink
};

// The decay law the dimension side of the dichotomy predicts for the group.
struct Prediction {
  FitModel model = FitModel::stretched_exp;
  double alpha = 0.0;  // power exponent (power_law) or stretch exponent
  double gamma = 0.0;  // log-power correction, when the model carries one
  std::string text;    // human-readable law
};

Prediction predicted_decay(const GroupSpec& spec, const KrullReport& krull);

struct PipelineResult {
  GroupSpec group;
  KrullReport krull;
  int krull_group = 0;
  Prediction predicted;
  std::vector<WalkEstimate> exact_points;
  std::vector<WalkEstimate> mc_points;
  FitResult plain_fit;                  // stretched model, gamma = 0
  std::optional<FitResult> class_fit;   // family-specific model, when distinct
  bool small_dimension = false;         // krull_group <= 1
  bool slow_decay = false;              // plain alpha <= 1/3 + tol
  bool fast_decay = false;              // plain alpha >= 1/3 + tol, or the
                                        // class fit matches a prediction >= 1/3
  bool consistent = false;              // the two sides of the dichotomy agree
  std::string verdict;
};

// Full dichotomy probe: Krull dimension of the derived module, predicted decay
// law, exact + sampled return probabilities, exponent fits, and the verdict.
PipelineResult run_pipeline(const GroupSpec& spec, const PipelineOptions& opts = {});

}  // namespace kw
