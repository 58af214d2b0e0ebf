#include "kw/coeff.hpp"

namespace kw {

bool is_prime_u64(unsigned long n) {
  if (n < 2) return false;
  for (unsigned long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

CoeffSpec CoeffSpec::Fp(unsigned long p) {
  if (!is_prime_u64(p)) throw InputError("prime_field modulus must be prime: " + std::to_string(p));
  return {CoeffKind::prime_field, p};
}

CoeffSpec CoeffSpec::Zk(unsigned long k) {
  if (k < 2) throw InputError("mod_ring modulus must be >= 2: " + std::to_string(k));
  return {CoeffKind::mod_ring, k};
}

std::string CoeffSpec::to_string() const {
  switch (kind) {
    case CoeffKind::rationals: return "Q";
    case CoeffKind::integers: return "Z";
    case CoeffKind::prime_field: return "F" + std::to_string(modulus);
    case CoeffKind::mod_ring: return "Z/" + std::to_string(modulus);
  }
  return "?";
}

mpq_class cf_normalize(const CoeffSpec& s, const mpq_class& v) {
  switch (s.kind) {
    case CoeffKind::rationals: {
      mpq_class r = v;
      r.canonicalize();
      return r;
    }
    case CoeffKind::integers: {
      if (v.get_den() != 1) throw InputError("integer coefficient has a denominator: " + v.get_str());
      return v;
    }
    case CoeffKind::prime_field:
    case CoeffKind::mod_ring: {
      mpq_class r = v;
      r.canonicalize();
      mpz_class m(s.modulus);
      mpz_class num = r.get_num(), den = r.get_den();
      if (den != 1) {
        mpz_class inv;
        if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), m.get_mpz_t()) == 0)
          throw InputError("denominator not invertible mod " + std::to_string(s.modulus));
        num *= inv;
      }
      mpz_class red;
      mpz_mod(red.get_mpz_t(), num.get_mpz_t(), m.get_mpz_t());
      return mpq_class(red);
    }
  }
  throw InputError("bad coefficient spec");
}

mpq_class cf_add(const CoeffSpec& s, const mpq_class& a, const mpq_class& b) {
  return cf_normalize(s, a + b);
}

mpq_class cf_sub(const CoeffSpec& s, const mpq_class& a, const mpq_class& b) {
  return cf_normalize(s, a - b);
}

mpq_class cf_mul(const CoeffSpec& s, const mpq_class& a, const mpq_class& b) {
  return cf_normalize(s, a * b);
}

mpq_class cf_neg(const CoeffSpec& s, const mpq_class& a) {
  return cf_normalize(s, -a);
}

mpq_class cf_inv(const CoeffSpec& s, const mpq_class& a) {
  if (cf_is_zero(a)) throw InputError("inverse of zero");
  switch (s.kind) {
    case CoeffKind::rationals:
      return mpq_class(1) / a;
    case CoeffKind::integers: {
      if (a == 1 || a == -1) return a;
      throw InputError("non-unit integer coefficient: " + a.get_str());
    }
    case CoeffKind::prime_field:
    case CoeffKind::mod_ring: {
      mpz_class m(s.modulus), num = cf_normalize(s, a).get_num(), inv;
      if (mpz_invert(inv.get_mpz_t(), num.get_mpz_t(), m.get_mpz_t()) == 0)
        throw InputError("non-unit coefficient " + num.get_str() + " mod " + std::to_string(s.modulus));
      return mpq_class(inv);
    }
  }
  throw InputError("bad coefficient spec");
}

bool cf_is_zero(const mpq_class& a) { return sgn(a) == 0; }

std::string cf_to_string(const mpq_class& a) { return a.get_str(); }

mpq_class cf_parse(const CoeffSpec& s, const std::string& text) {
  mpq_class v;
  if (v.set_str(text, 10) != 0) throw InputError("bad coefficient literal: '" + text + "'");
  v.canonicalize();
  return cf_normalize(s, v);
}

}  // namespace kw
