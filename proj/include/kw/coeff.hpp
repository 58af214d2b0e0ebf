#pragma once

#include <gmpxx.h>

#include <string>

#include "kw/errors.hpp"

namespace kw {

enum class CoeffKind { rationals, integers, prime_field, mod_ring };

// Coefficient domain of a polynomial or module presentation.  Values are
// carried as mpq_class everywhere; the domain fixes the normal form
// (lowest terms over Q, representative in [0, k) for modular domains).
struct CoeffSpec {
  CoeffKind kind = CoeffKind::rationals;
  unsigned long modulus = 0;  // p or k for the modular kinds

  static CoeffSpec Q() { return {CoeffKind::rationals, 0}; }
  static CoeffSpec Z() { return {CoeffKind::integers, 0}; }
  static CoeffSpec Fp(unsigned long p);
  static CoeffSpec Zk(unsigned long k);

  bool is_field() const {
    return kind == CoeffKind::rationals || kind == CoeffKind::prime_field;
  }
  bool is_modular() const {
    return kind == CoeffKind::prime_field || kind == CoeffKind::mod_ring;
  }
  bool operator==(const CoeffSpec& o) const {
    return kind == o.kind && modulus == o.modulus;
  }
  bool operator!=(const CoeffSpec& o) const { return !(*this == o); }
  std::string to_string() const;
};

bool is_prime_u64(unsigned long n);

// Normalized arithmetic under a spec.  All take/return canonical values.
mpq_class cf_normalize(const CoeffSpec& s, const mpq_class& v);
mpq_class cf_add(const CoeffSpec& s, const mpq_class& a, const mpq_class& b);
mpq_class cf_sub(const CoeffSpec& s, const mpq_class& a, const mpq_class& b);
mpq_class cf_mul(const CoeffSpec& s, const mpq_class& a, const mpq_class& b);
mpq_class cf_neg(const CoeffSpec& s, const mpq_class& a);
// Multiplicative inverse; requires a unit (fields: any nonzero; mod_ring:
// gcd(a, k) = 1; integers: +-1).
mpq_class cf_inv(const CoeffSpec& s, const mpq_class& a);
bool cf_is_zero(const mpq_class& a);

std::string cf_to_string(const mpq_class& a);
mpq_class cf_parse(const CoeffSpec& s, const std::string& text);

}  // namespace kw
