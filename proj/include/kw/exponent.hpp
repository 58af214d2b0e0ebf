#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "kw/errors.hpp"

namespace kw {

// Exponent vector of a Laurent monomial: one (possibly negative) integer per
// variable.  Comparison is the lexicographic order inherited from
// std::vector, which is also the canonical storage order of term maps.
using ExponentVector = std::vector<int64_t>;

inline ExponentVector ev_zero(int rank) { return ExponentVector(rank, 0); }

inline ExponentVector ev_unit(int rank, int i, int64_t c = 1) {
  ExponentVector v(rank, 0);
  v.at(i) = c;
  return v;
}

inline void ev_check_rank(const ExponentVector& a, const ExponentVector& b) {
  if (a.size() != b.size()) throw InputError("exponent vectors of mixed rank");
}

inline ExponentVector ev_add(const ExponentVector& a, const ExponentVector& b) {
  ev_check_rank(a, b);
  ExponentVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline ExponentVector ev_sub(const ExponentVector& a, const ExponentVector& b) {
  ev_check_rank(a, b);
  ExponentVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline ExponentVector ev_neg(const ExponentVector& a) {
  ExponentVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline bool ev_is_zero(const ExponentVector& a) {
  return std::all_of(a.begin(), a.end(), [](int64_t x) { return x == 0; });
}

inline bool ev_is_nonneg(const ExponentVector& a) {
  return std::all_of(a.begin(), a.end(), [](int64_t x) { return x >= 0; });
}

inline int64_t ev_total_degree(const ExponentVector& a) {
  return std::accumulate(a.begin(), a.end(), int64_t{0});
}

inline int64_t ev_max_norm(const ExponentVector& a) {
  int64_t m = 0;
  for (int64_t x : a) m = std::max(m, std::abs(x));
  return m;
}

// a divides b as monomials (componentwise <=), nonnegative exponents assumed.
inline bool ev_divides(const ExponentVector& a, const ExponentVector& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

inline ExponentVector ev_lcm(const ExponentVector& a, const ExponentVector& b) {
  ev_check_rank(a, b);
  ExponentVector r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = std::max(a[i], b[i]);
  return r;
}

inline std::string ev_to_string(const ExponentVector& a) {
  std::string s = "(";
  for (size_t i = 0; i < a.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s + ")";
}

// Candidate order for monomial searches: all vectors of max-norm exactly
// `norm`, sparsest first, nonnegative sign patterns before negative ones,
// then reverse lexicographic.  Shell 1 therefore starts with the unit
// vectors e_1, e_2, ...
std::vector<ExponentVector> ev_norm_shell(int rank, int64_t norm);

}  // namespace kw
