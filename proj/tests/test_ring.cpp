// Coefficient domains, Laurent polynomial arithmetic, and canonical normal
// forms in Laurent quotient rings.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "kw/coeff.hpp"
#include "kw/errors.hpp"
#include "kw/laurent.hpp"
#include "kw/ring_quotient.hpp"
#include "kw/rng.hpp"

using namespace kw;

namespace {

LaurentPolynomial lp(const std::string& text, int rank, const CoeffSpec& s) {
  return lp_parse(text, rank, s);
}

}  // namespace

TEST_CASE("coefficient specs") {
  CHECK(CoeffSpec::Q().is_field());
  CHECK(CoeffSpec::Fp(5).is_field());
  CHECK_FALSE(CoeffSpec::Z().is_field());
  CHECK_FALSE(CoeffSpec::Zk(4).is_field());
  CHECK(CoeffSpec::Fp(7).modulus == 7);
  CHECK(CoeffSpec::Q().to_string() == "Q");
  CHECK_THROWS_AS(CoeffSpec::Fp(6), InputError);   // not prime
  CHECK_THROWS_AS(CoeffSpec::Zk(1), InputError);   // trivial ring
}

TEST_CASE("exponent vector helpers") {
  ExponentVector a{1, -2, 3}, b{0, 5, -1};
  CHECK(ev_add(a, b) == ExponentVector{1, 3, 2});
  CHECK(ev_sub(a, b) == ExponentVector{1, -7, 4});
  CHECK(ev_neg(a) == ExponentVector{-1, 2, -3});
  CHECK(ev_is_zero(ev_zero(4)));
  CHECK(ev_unit(3, 1) == ExponentVector{0, 1, 0});
  CHECK(ev_max_norm(a) == 3);
  CHECK(ev_total_degree(a) == 2);
  CHECK(ev_norm_shell(2, 1).size() == 8);  // the 3x3 box minus its center
  CHECK(ev_to_string(a) == "(1,-2,3)");
}

TEST_CASE("laurent parse / print round trip") {
  auto spec = CoeffSpec::Q();
  for (const char* text : {"X1^2 - 2*X2^-1 + 3", "X1 - 1", "-X1^-3*X2^4", "0", "7"}) {
    LaurentPolynomial p = lp(text, 2, spec);
    LaurentPolynomial q = lp(lp_to_string(p), 2, spec);
    CHECK(p == q);
  }
}

TEST_CASE("laurent ring axioms on random inputs") {
  auto spec = CoeffSpec::Fp(7);
  Xoshiro256pp rng(42);
  auto randpoly = [&]() {
    LaurentPolynomial::TermMap terms;
    int nterms = 1 + static_cast<int>(rng.below(4));
    for (int t = 0; t < nterms; ++t) {
      ExponentVector e{static_cast<int64_t>(rng.below(7)) - 3,
                       static_cast<int64_t>(rng.below(7)) - 3};
      terms[e] = mpq_class(static_cast<long>(rng.below(13)) - 6);
    }
    return LaurentPolynomial::from_terms(2, spec, terms);
  };
  for (int i = 0; i < 200; ++i) {
    LaurentPolynomial a = randpoly(), b = randpoly(), c = randpoly();
    CHECK(lp_add(a, b) == lp_add(b, a));
    CHECK(lp_mul(a, b) == lp_mul(b, a));
    CHECK(lp_mul(a, lp_add(b, c)) == lp_add(lp_mul(a, b), lp_mul(a, c)));
    CHECK(lp_mul(lp_mul(a, b), c) == lp_mul(a, lp_mul(b, c)));
    CHECK(lp_add(a, lp_neg(a)).is_zero());
  }
}

TEST_CASE("laurent multiplication oracle") {
  auto spec = CoeffSpec::Q();
  // (X - 1)(X + 1) = X^2 - 1
  CHECK(lp_mul(lp("X1 - 1", 1, spec), lp("X1 + 1", 1, spec)) == lp("X1^2 - 1", 1, spec));
  // (X^-1 + 1)^2 = X^-2 + 2 X^-1 + 1
  LaurentPolynomial u = lp("X1^-1 + 1", 1, spec);
  CHECK(lp_mul(u, u) == lp("X1^-2 + 2*X1^-1 + 1", 1, spec));
  // shift: X2^-3 * (X1 + X2) = X1*X2^-3 + X2^-2
  CHECK(lp_shift(lp("X1 + X2", 2, spec), ExponentVector{0, -3}) ==
        lp("X1*X2^-3 + X2^-2", 2, spec));
}

TEST_CASE("mod-p conversion folds coefficients") {
  auto q = CoeffSpec::Q();
  auto f2 = CoeffSpec::Fp(2);
  CHECK(lp_convert(lp("2*X1 + 3", 1, q), f2) == lp("1", 1, f2));
  CHECK(lp_convert(lp("4*X1 + 2", 1, q), f2).is_zero());
}

TEST_CASE("quotient ring: trivial ideal is the full Laurent ring") {
  auto ring = RingQuotient(1, CoeffSpec::Fp(2), {});
  for (int64_t w = -4; w <= 4; ++w) {
    LaurentPolynomial m = ring.laurent_monomial(ExponentVector{w});
    CHECK(ring.nf(m) == m);  // one-sided monomials are already canonical
    // embedding a rank-1 Laurent monomial lands on the same representative
    std::ostringstream txt;
    txt << "X1^" << w;
    CHECK(ring.nf_of_laurent(lp(txt.str(), 1, CoeffSpec::Fp(2))) == m);
  }
  CHECK(ring.one() == ring.laurent_monomial(ExponentVector{0}));
}

TEST_CASE("quotient ring: F4 = F2[X]/(X^2+X+1)") {
  auto f2 = CoeffSpec::Fp(2);
  RingQuotient ring(1, f2, {lp("X1^2 + X1 + 1", 1, f2)});
  auto nf = [&](const std::string& t) { return ring.nf_of_laurent(lp(t, 1, f2)); };
  // X has multiplicative order 3 in F4
  CHECK(nf("X1^3") == ring.one());
  CHECK(nf("X1^2") == nf("X1 + 1"));
  // X^-1 = X + 1 since X(X+1) = 1
  CHECK(nf("X1^-1") == nf("X1 + 1"));
  // canonical forms are stable: NF(NF(p)) = NF(p)
  CHECK(ring.nf(nf("X1^5 + X1^-2")) == nf("X1^5 + X1^-2"));
}

TEST_CASE("quotient ring: shifts agree with multiplication by monomials") {
  auto f3 = CoeffSpec::Fp(3);
  RingQuotient ring(2, f3, {lp("X1^2 - X2", 2, f3)});
  Xoshiro256pp rng(7);
  for (int i = 0; i < 50; ++i) {
    ExponentVector w{static_cast<int64_t>(rng.below(9)) - 4,
                     static_cast<int64_t>(rng.below(9)) - 4};
    ExponentVector t{static_cast<int64_t>(rng.below(5)) - 2,
                     static_cast<int64_t>(rng.below(5)) - 2};
    LaurentPolynomial a = ring.nf(ring.laurent_monomial(w));
    LaurentPolynomial moved = ring.shift_nf(a, t);
    CHECK(moved == ring.nf(ring.laurent_monomial(ev_add(w, t))));
    // shifting is additive
    CHECK(ring.shift_nf(moved, ev_neg(t)) == a);
  }
}

TEST_CASE("quotient ring: normal form is linear") {
  auto f5 = CoeffSpec::Fp(5);
  RingQuotient ring(1, f5, {lp("X1^3 - X1 - 1", 1, f5)});
  Xoshiro256pp rng(11);
  auto randpoly = [&]() {
    LaurentPolynomial::TermMap terms;
    for (int t = 0; t < 3; ++t)
      terms[ExponentVector{static_cast<int64_t>(rng.below(11)) - 5}] =
          mpq_class(static_cast<long>(rng.below(5)));
    return LaurentPolynomial::from_terms(1, f5, terms);
  };
  for (int i = 0; i < 50; ++i) {
    LaurentPolynomial a = randpoly(), b = randpoly();
    CHECK(ring.nf_of_laurent(lp_add(a, b)) ==
          lp_add(ring.nf_of_laurent(a), ring.nf_of_laurent(b)));
  }
}

TEST_CASE("quotient ring rejects bad input") {
  auto f2 = CoeffSpec::Fp(2);
  CHECK_THROWS_AS(RingQuotient(0, f2, {}), InputError);
  CHECK_THROWS_AS(RingQuotient(1, CoeffSpec::Z(), {}), InputError);
  RingQuotient ring(2, f2, {});
  CHECK_THROWS_AS(ring.laurent_monomial(ExponentVector{1}), InputError);  // rank mismatch
}
