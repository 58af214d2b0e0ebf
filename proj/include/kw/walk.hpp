#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kw/groups.hpp"

namespace kw {

// One measured (or bracketed) return probability.
struct WalkEstimate {
  int64_t n = 0;
  double p_lower = 0.0;   // certified lower bound (exact modes) / Wilson lower (Monte Carlo)
  double p_upper = 1.0;   // certified upper bound / Wilson upper
  double p_hat = 0.0;     // point value: identity mass, or hit frequency
  bool exact_rational = false;
  mpq_class p_exact;      // exact value when exact_rational is set
  uint64_t hits = 0;      // Monte Carlo only
  uint64_t samples = 0;   // Monte Carlo only
  double standard_error = 0.0;
};

// Sparse probability distribution keyed by canonical element encodings.
// The true mass of any element e lies in [mass(e), mass(e) + lost_mass]:
// lost_mass soaks up everything removed by truncation, conservatively.
template <class Mass>
struct SparseDistribution {
  std::vector<std::pair<std::string, Mass>> entries;  // sorted by key, nonzero masses
  Mass lost_mass{};
  int64_t step_count = 0;

  const Mass* find(const std::string& key) const {
    for (const auto& [k, m] : entries)
      if (k == key) return &m;
    return nullptr;
  }
  Mass total_mass() const {
    Mass t{};
    for (const auto& [k, m] : entries) t += m;
    return t;
  }
  size_t support_size() const { return entries.size(); }
};

struct TruncationPolicy {
  double epsilon = 0.0;    // drop entries with mass < epsilon
  size_t max_support = 0;  // 0 = unlimited; otherwise keep only the heaviest entries
};

// Uniform measure on the symmetric generating set.
SparseDistribution<mpq_class> uniform_measure_exact(const GroupSpec& spec);
SparseDistribution<double> uniform_measure(const GroupSpec& spec);

// Convolution (mu * nu)(g) = sum_h mu(h) nu(h^-1 g).
SparseDistribution<mpq_class> convolve(const GroupSpec& spec, const SparseDistribution<mpq_class>& mu,
                                       const SparseDistribution<mpq_class>& nu);
SparseDistribution<double> convolve(const GroupSpec& spec, const SparseDistribution<double>& mu,
                                    const SparseDistribution<double>& nu,
                                    const TruncationPolicy& policy = {});

struct ExactWalkOptions {
  bool rational = false;              // exact rational masses (requires no truncation)
  double epsilon = 0.0;               // per-step mass floor (floating mode)
  size_t max_support = 0;             // per-step support budget, 0 = unlimited
  size_t hard_support_cap = 8000000;  // safety stop
  bool force_generic = false;         // bypass the specialized element encodings
  std::function<void(int64_t, size_t)> progress;  // (step, support size)
};

// Return-probability brackets of the uniform generating walk at even times
// 2, 4, ..., n_max.  p_lower is the exact identity mass of the truncated
// distribution; p_upper adds the accumulated lost mass.
std::vector<WalkEstimate> exact_return_probabilities(const GroupSpec& spec, int64_t n_max,
                                                     const ExactWalkOptions& opts = {});

struct MonteCarloOptions {
  uint64_t samples = 1000000;
  uint64_t seed = 1;
  int threads = 1;
};

// Monte Carlo return-probability estimates at the given even times.  Results
// are a deterministic function of (seed, n, samples): work is split into
// fixed-size sample blocks whose generators are seeded independently, so the
// thread count never changes the outcome.
std::vector<WalkEstimate> monte_carlo_return(const GroupSpec& spec, const std::vector<int64_t>& ns,
                                             const MonteCarloOptions& opts);

// 95% Wilson score interval for hits out of samples.
std::pair<double, double> wilson_interval(uint64_t hits, uint64_t samples);

// True when the family has a specialized high-throughput sampler (the other
// families fall back to generic element arithmetic).
bool has_fast_sampler(const GroupSpec& spec);

}  // namespace kw
