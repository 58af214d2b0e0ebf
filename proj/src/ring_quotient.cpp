#include "kw/ring_quotient.hpp"

#include <sstream>

#include "kw/errors.hpp"

namespace kw {

namespace {

// Lifts a d-variable Laurent polynomial into the 2d-variable doubled ring:
// a term X^w maps to X^{w+} U^{w-}.
LaurentPolynomial double_up(const LaurentPolynomial& p, int d, const CoeffSpec& spec) {
  LaurentPolynomial::TermMap terms;
  for (const auto& [exps, coeff] : p.terms()) {
    ExponentVector doubled = ev_zero(2 * d);
    for (int i = 0; i < d; ++i) {
      if (exps[static_cast<size_t>(i)] >= 0) {
        doubled[static_cast<size_t>(i)] = exps[static_cast<size_t>(i)];
      } else {
        doubled[static_cast<size_t>(d + i)] = -exps[static_cast<size_t>(i)];
      }
    }
    terms.emplace(std::move(doubled), coeff);
  }
  return LaurentPolynomial::from_terms(2 * d, spec, terms);
}

}  // namespace

RingQuotient::RingQuotient(int d, CoeffSpec field, std::vector<LaurentPolynomial> laurent_gens)
    : d_(d), field_(field), laurent_gens_(std::move(laurent_gens)) {
  if (d < 1) throw InputError("ring quotient needs at least one variable");
  if (!field.is_field()) throw InputError("ring quotient coefficients must form a field");
  std::vector<LaurentPolynomial> gens;
  for (const auto& g : laurent_gens_) {
    if (g.rank() != d) throw InputError("ring quotient generator has wrong variable count");
    LaurentPolynomial conv = lp_convert(g, field);
    if (conv.is_zero()) continue;
    gens.push_back(double_up(conv, d_, field_));
  }
  // Inversion relations X_i * U_i - 1.
  for (int i = 0; i < d_; ++i) {
    ExponentVector e = ev_zero(2 * d_);
    e[static_cast<size_t>(i)] = 1;
    e[static_cast<size_t>(d_ + i)] = 1;
    gens.push_back(lp_sub(LaurentPolynomial::monomial(2 * d_, field_, e, mpq_class(1)),
                          LaurentPolynomial::constant(2 * d_, field_, mpq_class(1))));
  }
  PolyIdeal ideal = PolyIdeal::make(2 * d_, field_, std::move(gens));
  gb_ = buchberger(ideal, MonomialOrder::Grevlex(2 * d_));
}

LaurentPolynomial RingQuotient::one() const {
  return nf(LaurentPolynomial::constant(2 * d_, field_, mpq_class(1)));
}

LaurentPolynomial RingQuotient::nf(const LaurentPolynomial& doubled_poly) const {
  if (doubled_poly.rank() != 2 * d_)
    throw InputError("ring quotient normal form expects a doubled-ring polynomial");
  return normal_form(doubled_poly, gb_);
}

LaurentPolynomial RingQuotient::laurent_monomial(const ExponentVector& w) const {
  if (static_cast<int>(w.size()) != d_)
    throw InputError("exponent vector rank must match the ring");
  ExponentVector doubled = ev_zero(2 * d_);
  for (int i = 0; i < d_; ++i) {
    if (w[static_cast<size_t>(i)] >= 0) {
      doubled[static_cast<size_t>(i)] = w[static_cast<size_t>(i)];
    } else {
      doubled[static_cast<size_t>(d_ + i)] = -w[static_cast<size_t>(i)];
    }
  }
  return LaurentPolynomial::monomial(2 * d_, field_, doubled, mpq_class(1));
}

LaurentPolynomial RingQuotient::nf_of_laurent(const LaurentPolynomial& p) const {
  if (p.rank() != d_) throw InputError("expected a Laurent polynomial in the base variables");
  return nf(double_up(lp_convert(p, field_), d_, field_));
}

LaurentPolynomial RingQuotient::shift_nf(const LaurentPolynomial& a, const ExponentVector& t) const {
  if (a.rank() != 2 * d_) throw InputError("shift expects a doubled-ring polynomial");
  if (static_cast<int>(t.size()) != d_)
    throw InputError("exponent vector rank must match the ring");
  if (ev_is_zero(t)) return a;
  return nf(lp_mul(laurent_monomial(t), a));
}

std::string RingQuotient::describe() const {
  std::ostringstream os;
  os << field_.to_string() << "[X^+-1.." << d_ << " vars]/(";
  for (size_t i = 0; i < laurent_gens_.size(); ++i) {
    if (i) os << ", ";
    os << lp_to_string(laurent_gens_[i]);
  }
  os << ")";
  return os.str();
}

}  // namespace kw
