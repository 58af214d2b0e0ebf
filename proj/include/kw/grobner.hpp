#pragma once

#include <string>
#include <vector>

#include "kw/laurent.hpp"

namespace kw {

enum class OrderKind { grevlex, lex, block };

// Term order on nonnegative exponent vectors.  `block` compares the
// designated block of variables first (by grevlex), then the rest; with the
// eliminated variables in the block it is an elimination order.
struct MonomialOrder {
  OrderKind kind = OrderKind::grevlex;
  int nvars = 0;
  std::vector<int> block;

  static MonomialOrder Grevlex(int n) { return {OrderKind::grevlex, n, {}}; }
  static MonomialOrder Lex(int n) { return {OrderKind::lex, n, {}}; }
  static MonomialOrder BlockElim(int n, std::vector<int> first);

  bool less(const ExponentVector& a, const ExponentVector& b) const;
  std::string to_string() const;
};

// Ideal in the polynomial subring: generators must have nonnegative
// exponents.  Zero generators are dropped on construction.
struct PolyIdeal {
  int nvars = 0;
  CoeffSpec spec = CoeffSpec::Q();
  std::vector<LaurentPolynomial> gens;

  static PolyIdeal make(int nvars, CoeffSpec spec, std::vector<LaurentPolynomial> gens);
};

struct GrobnerLimits {
  size_t max_basis = 4096;
  size_t max_pair_steps = 500000;
};

// Reduced Groebner basis: monic, auto-reduced, sorted by leading term.
// Unique for (ideal, order), independent of generator order.
struct GroebnerBasis {
  MonomialOrder order;
  CoeffSpec spec = CoeffSpec::Q();
  int nvars = 0;
  std::vector<LaurentPolynomial> basis;

  bool contains_one() const;
};

ExponentVector leading_exponent(const LaurentPolynomial& p, const MonomialOrder& ord);
mpq_class leading_coeff(const LaurentPolynomial& p, const MonomialOrder& ord);

GroebnerBasis buchberger(const PolyIdeal& ideal, const MonomialOrder& ord,
                         const GrobnerLimits& lim = {});

// Full normal form: no term of the result is divisible by a basis leading
// term.  Zero iff p lies in the ideal.
LaurentPolynomial normal_form(const LaurentPolynomial& p, const GroebnerBasis& gb);

// I : f^infinity, computed with one auxiliary variable t via t*f - 1.
PolyIdeal saturate(const PolyIdeal& ideal, const LaurentPolynomial& f,
                   const GrobnerLimits& lim = {});

// Contraction to the subring on the complement of `vars`; the result lives
// in nvars - |vars| variables (indices compacted in increasing order).
PolyIdeal eliminate(const PolyIdeal& ideal, const std::vector<int>& vars,
                    const GrobnerLimits& lim = {});

// Contraction of the Laurent ideal generated by `laurent_gens` to the
// polynomial subring: shift every generator to nonnegative exponents, then
// saturate by X1*...*Xd.
PolyIdeal laurent_contract(int nvars, CoeffSpec spec,
                           const std::vector<LaurentPolynomial>& laurent_gens,
                           const GrobnerLimits& lim = {});

// Dimension of the quotient by the combinatorial rule: the largest set U of
// variables such that no basis leading monomial is supported inside U.
// `empty` marks the unit ideal (dimension -infinity).
struct DimensionResult {
  bool empty = false;
  int dimension = -1;
  std::vector<int> witness;
};

DimensionResult ideal_dimension(const GroebnerBasis& gb);

}  // namespace kw
