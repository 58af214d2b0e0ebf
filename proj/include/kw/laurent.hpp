#pragma once

#include <map>
#include <string>
#include <vector>

#include "kw/coeff.hpp"
#include "kw/exponent.hpp"

namespace kw {

// Sparse Laurent polynomial over a coefficient spec.  Immutable value type:
// all operations return fresh objects.  Terms are stored in a map keyed by
// exponent vector, so iteration order is the canonical (lexicographic) term
// order and equal polynomials compare equal structurally.
class LaurentPolynomial {
 public:
  using TermMap = std::map<ExponentVector, mpq_class>;

  LaurentPolynomial() = default;
  LaurentPolynomial(int rank, CoeffSpec spec) : rank_(rank), spec_(spec) {}

  static LaurentPolynomial zero(int rank, CoeffSpec spec) { return {rank, spec}; }
  static LaurentPolynomial constant(int rank, CoeffSpec spec, const mpq_class& c);
  static LaurentPolynomial monomial(int rank, CoeffSpec spec, const ExponentVector& e,
                                    const mpq_class& c = 1);
  static LaurentPolynomial from_terms(int rank, CoeffSpec spec, const TermMap& terms);

  int rank() const { return rank_; }
  const CoeffSpec& spec() const { return spec_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  size_t term_count() const { return terms_.size(); }
  mpq_class coeff(const ExponentVector& e) const;
  // True when every exponent is componentwise nonnegative.
  bool is_polynomial() const;
  // Componentwise minimum of the support exponents (zero vector if empty).
  ExponentVector support_min() const;
  bool operator==(const LaurentPolynomial& o) const {
    return rank_ == o.rank_ && spec_ == o.spec_ && terms_ == o.terms_;
  }
  bool operator!=(const LaurentPolynomial& o) const { return !(*this == o); }

 private:
  friend LaurentPolynomial lp_add(const LaurentPolynomial&, const LaurentPolynomial&);
  friend LaurentPolynomial lp_sub(const LaurentPolynomial&, const LaurentPolynomial&);
  friend LaurentPolynomial lp_mul(const LaurentPolynomial&, const LaurentPolynomial&);
  friend LaurentPolynomial lp_neg(const LaurentPolynomial&);
  friend LaurentPolynomial lp_scale(const LaurentPolynomial&, const mpq_class&);
  friend LaurentPolynomial lp_shift(const LaurentPolynomial&, const ExponentVector&);
  friend LaurentPolynomial lp_convert(const LaurentPolynomial&, const CoeffSpec&);

  void insert_term(const ExponentVector& e, const mpq_class& c);

  int rank_ = 0;
  CoeffSpec spec_ = CoeffSpec::Q();
  TermMap terms_;
};

LaurentPolynomial lp_add(const LaurentPolynomial& a, const LaurentPolynomial& b);
LaurentPolynomial lp_sub(const LaurentPolynomial& a, const LaurentPolynomial& b);
LaurentPolynomial lp_mul(const LaurentPolynomial& a, const LaurentPolynomial& b);
LaurentPolynomial lp_neg(const LaurentPolynomial& a);
LaurentPolynomial lp_scale(const LaurentPolynomial& a, const mpq_class& c);
// Multiplication by the monomial X^v.
LaurentPolynomial lp_shift(const LaurentPolynomial& a, const ExponentVector& v);
// Re-normalizes coefficients into another spec (Z -> Q, Z -> F_p, ...).
LaurentPolynomial lp_convert(const LaurentPolynomial& a, const CoeffSpec& to);

// Text format: terms joined by +/-, each term `coeff*X1^e1*X2^e2` with unit
// coefficients and zero exponents omitted, e.g. "3*X1^2*X2^-1 + 1".
// The parser additionally accepts X, Y, Z as aliases for X1, X2, X3.
std::string lp_to_string(const LaurentPolynomial& p);
LaurentPolynomial lp_parse(const std::string& text, int rank, CoeffSpec spec);

}  // namespace kw
