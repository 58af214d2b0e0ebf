#pragma once

#include <memory>
#include <vector>

#include "kw/grobner.hpp"

namespace kw {

// Laurent quotient A = K[X_1^+-1 .. X_d^+-1] / I over a field, with
// canonical normal forms.  Internally elements live in the doubled
// polynomial ring K[X_1..X_d, U_1..U_d] modulo I_shifted + (X_i*U_i - 1),
// where U_i plays X_i^-1: the Groebner normal form there is one canonical
// representative per Laurent class (a per-representative shift-then-reduce
// rule would not be), which is what makes elements usable as keys.
class RingQuotient {
 public:
  RingQuotient(int d, CoeffSpec field, std::vector<LaurentPolynomial> laurent_gens);

  int d() const { return d_; }
  int doubled_vars() const { return 2 * d_; }
  const CoeffSpec& field() const { return field_; }
  const GroebnerBasis& basis() const { return gb_; }
  const std::vector<LaurentPolynomial>& laurent_gens() const { return laurent_gens_; }

  LaurentPolynomial zero() const { return LaurentPolynomial::zero(2 * d_, field_); }
  LaurentPolynomial one() const;
  bool is_trivial() const { return gb_.contains_one(); }

  // Canonical representative of a doubled-ring polynomial.
  LaurentPolynomial nf(const LaurentPolynomial& doubled_poly) const;
  // The doubled-ring monomial standing for the Laurent monomial X^w.
  LaurentPolynomial laurent_monomial(const ExponentVector& w) const;
  // Embeds a d-variable Laurent polynomial and reduces it.
  LaurentPolynomial nf_of_laurent(const LaurentPolynomial& p) const;
  // nf(X^t * a).
  LaurentPolynomial shift_nf(const LaurentPolynomial& a, const ExponentVector& t) const;

  std::string describe() const;

 private:
  int d_;
  CoeffSpec field_;
  std::vector<LaurentPolynomial> laurent_gens_;
  GroebnerBasis gb_;
};

using RingPtr = std::shared_ptr<RingQuotient>;

}  // namespace kw
