// Groebner engine: reduced-basis uniqueness, a univariate GCD oracle,
// membership soundness in bulk, elimination, saturation, Laurent
// contraction, and the combinatorial dimension rule.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "kw/grobner.hpp"
#include "kw/rng.hpp"

using namespace kw;

namespace {

const CoeffSpec Q = CoeffSpec::Q();

LaurentPolynomial lp1(const std::string& t) { return lp_parse(t, 1, Q); }
LaurentPolynomial lp2(const std::string& t) { return lp_parse(t, 2, Q); }
LaurentPolynomial lp3(const std::string& t) { return lp_parse(t, 3, Q); }

// Dense univariate polynomial over Q as a coefficient vector, for the
// independent Euclid oracle.
using Uni = std::vector<mpq_class>;

Uni uni_trim(Uni a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
  return a;
}

Uni uni_rem(Uni a, const Uni& b) {
  a = uni_trim(std::move(a));
  while (a.size() >= b.size() && !a.empty()) {
    mpq_class q = a.back() / b.back();
    size_t off = a.size() - b.size();
    for (size_t i = 0; i < b.size(); ++i) a[off + i] -= q * b[i];
    a = uni_trim(std::move(a));
  }
  return a;
}

Uni uni_gcd(Uni a, Uni b) {
  a = uni_trim(std::move(a));
  b = uni_trim(std::move(b));
  while (!b.empty()) {
    Uni r = uni_rem(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    mpq_class lead = a.back();
    for (auto& c : a) c /= lead;  // monic
  }
  return a;
}

LaurentPolynomial uni_to_lp(const Uni& u) {
  LaurentPolynomial::TermMap terms;
  for (size_t i = 0; i < u.size(); ++i)
    if (u[i] != 0) terms[ExponentVector{static_cast<int64_t>(i)}] = u[i];
  return LaurentPolynomial::from_terms(1, Q, terms);
}

Uni uni_mul(const Uni& a, const Uni& b) {
  if (a.empty() || b.empty()) return {};
  Uni c(a.size() + b.size() - 1, mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

Uni random_uni(Xoshiro256pp& rng, int maxdeg) {
  int deg = 1 + static_cast<int>(rng.below(static_cast<uint32_t>(maxdeg)));
  Uni u(static_cast<size_t>(deg) + 1);
  for (auto& c : u) c = mpq_class(static_cast<long>(rng.below(7)) - 3);
  u.back() = mpq_class(1 + static_cast<long>(rng.below(3)));
  return u;
}

}  // namespace

TEST_CASE("monomial orders") {
  auto grevlex = MonomialOrder::Grevlex(2);
  // grevlex: total degree first
  CHECK(grevlex.less(ExponentVector{1, 0}, ExponentVector{1, 1}));
  CHECK(grevlex.less(ExponentVector{0, 2}, ExponentVector{2, 1}));
  auto lex = MonomialOrder::Lex(2);
  // lex: X1 dominates regardless of degree
  CHECK(lex.less(ExponentVector{0, 5}, ExponentVector{1, 0}));
  auto blk = MonomialOrder::BlockElim(2, {0});
  // elimination block {X1}: anything with X1 beats anything without
  CHECK(blk.less(ExponentVector{0, 9}, ExponentVector{1, 0}));
}

TEST_CASE("univariate GB is the monic GCD: 300 random pairs") {
  Xoshiro256pp rng(2024);
  int nontrivial = 0;
  for (int t = 0; t < 300; ++t) {
    Uni g = random_uni(rng, 3);
    Uni a = random_uni(rng, 3), b = random_uni(rng, 3);
    Uni f1 = uni_mul(g, a), f2 = uni_mul(g, b);
    Uni gcd = uni_gcd(f1, f2);
    if (gcd.size() > 1) ++nontrivial;
    auto ideal = PolyIdeal::make(1, Q, {uni_to_lp(f1), uni_to_lp(f2)});
    GroebnerBasis gb = buchberger(ideal, MonomialOrder::Grevlex(1));
    if (gcd.empty()) {
      CHECK(gb.basis.empty());
    } else if (gcd.size() == 1) {
      CHECK(gb.contains_one());
    } else {
      REQUIRE(gb.basis.size() == 1);
      CHECK(gb.basis[0] == uni_to_lp(gcd));
    }
  }
  CHECK(nontrivial > 100);  // the sample actually exercised common factors
}

TEST_CASE("membership soundness: 600 random combinations reduce to zero") {
  Xoshiro256pp rng(99);
  auto randpoly = [&](int nv) {
    LaurentPolynomial::TermMap terms;
    int nterms = 1 + static_cast<int>(rng.below(3));
    for (int t = 0; t < nterms; ++t) {
      ExponentVector e(static_cast<size_t>(nv));
      for (auto& x : e) x = static_cast<int64_t>(rng.below(3));
      terms[e] = mpq_class(static_cast<long>(rng.below(9)) - 4);
    }
    return LaurentPolynomial::from_terms(nv, Q, terms);
  };
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    int nv = 2 + static_cast<int>(rng.below(2));
    std::vector<LaurentPolynomial> gens;
    for (int i = 0; i < 3; ++i) gens.push_back(randpoly(nv));
    auto ideal = PolyIdeal::make(nv, Q, gens);
    GroebnerBasis gb = buchberger(ideal, MonomialOrder::Grevlex(nv));
    for (int c = 0; c < 10; ++c) {
      LaurentPolynomial f = LaurentPolynomial::from_terms(nv, Q, {});
      for (const auto& g : gens) f = lp_add(f, lp_mul(randpoly(nv), g));
      CHECK(normal_form(f, gb).is_zero());
      ++checked;
    }
  }
  CHECK(checked == 600);
  // and membership is not vacuous: a generic affine polynomial is NOT in a
  // proper monomial ideal
  auto ideal = PolyIdeal::make(2, Q, {lp2("X1^2"), lp2("X1*X2")});
  GroebnerBasis gb = buchberger(ideal, MonomialOrder::Grevlex(2));
  CHECK_FALSE(normal_form(lp2("X2 + 1"), gb).is_zero());
  CHECK_FALSE(normal_form(lp2("X1"), gb).is_zero());
}

TEST_CASE("reduced basis does not depend on generator order") {
  std::vector<LaurentPolynomial> gens = {lp2("X1^2 - X2"), lp2("X1*X2 - 1"),
                                         lp2("X2^2 - X1")};
  GroebnerBasis ref =
      buchberger(PolyIdeal::make(2, Q, gens), MonomialOrder::Grevlex(2));
  std::vector<size_t> perm{2, 0, 1};
  std::vector<LaurentPolynomial> shuffled;
  for (size_t i : perm) shuffled.push_back(gens[i]);
  GroebnerBasis alt =
      buchberger(PolyIdeal::make(2, Q, shuffled), MonomialOrder::Grevlex(2));
  CHECK(ref.basis == alt.basis);
}

TEST_CASE("buchberger detects the unit ideal") {
  auto gb = buchberger(PolyIdeal::make(2, Q, {lp2("X1"), lp2("X1 - 1")}),
                       MonomialOrder::Grevlex(2));
  CHECK(gb.contains_one());
  auto proper = buchberger(PolyIdeal::make(2, Q, {lp2("X1 - 1"), lp2("X2 - 2")}),
                           MonomialOrder::Grevlex(2));
  CHECK_FALSE(proper.contains_one());
}

TEST_CASE("elimination: implicitization of the parabola") {
  // vars (t, x, y) = indices (0, 1, 2); ideal (x - t, y - t^2)
  auto ideal = PolyIdeal::make(3, Q, {lp3("X2 - X1"), lp3("X3 - X1^2")});
  PolyIdeal out = eliminate(ideal, {0});
  REQUIRE(out.nvars == 2);
  GroebnerBasis gb = buchberger(out, MonomialOrder::Grevlex(2));
  REQUIRE(gb.basis.size() == 1);
  // X1, X2 are now (x, y): expect y - x^2 up to sign/monicity
  CHECK(normal_form(lp2("X2 - X1^2"), gb).is_zero());
}

TEST_CASE("saturation removes the component supported on the divisor") {
  // (x*y) : x^inf = (y)
  auto ideal = PolyIdeal::make(2, Q, {lp2("X1*X2")});
  PolyIdeal sat = saturate(ideal, lp2("X1"));
  GroebnerBasis gb = buchberger(sat, MonomialOrder::Grevlex(2));
  REQUIRE(gb.basis.size() == 1);
  CHECK(gb.basis[0] == lp2("X2"));
}

TEST_CASE("laurent contraction discards monomial factors") {
  // Laurent ideal (X1*X2 - X1) contracts to (X2 - 1)
  PolyIdeal c = laurent_contract(2, Q, {lp2("X1*X2 - X1")});
  GroebnerBasis gb = buchberger(c, MonomialOrder::Grevlex(2));
  REQUIRE(gb.basis.size() == 1);
  CHECK(gb.basis[0] == lp2("X2 - 1"));
  // negative exponents are shifted in before contraction
  PolyIdeal c2 = laurent_contract(1, Q, {lp1("X1^-1 - 1")});
  GroebnerBasis gb2 = buchberger(c2, MonomialOrder::Grevlex(1));
  REQUIRE(gb2.basis.size() == 1);
  CHECK(gb2.basis[0] == lp1("X1 - 1"));
}

TEST_CASE("dimension rule oracles") {
  auto dim = [&](int nv, std::vector<LaurentPolynomial> gens) {
    GroebnerBasis gb = buchberger(PolyIdeal::make(nv, Q, std::move(gens)),
                                  MonomialOrder::Grevlex(nv));
    return ideal_dimension(gb);
  };
  // zero ideal: the whole space
  auto r0 = dim(3, {});
  CHECK_FALSE(r0.empty);
  CHECK(r0.dimension == 3);
  // maximal ideal: a point
  auto rp = dim(2, {lp2("X1 - 1"), lp2("X2 - 2")});
  CHECK(rp.dimension == 0);
  // hypersurface xy = 1
  auto rh = dim(2, {lp2("X1*X2 - 1")});
  CHECK(rh.dimension == 1);
  // principal ideal in 2 vars, non-reduced
  auto rq = dim(2, {lp2("X1^2")});
  CHECK(rq.dimension == 1);
  // unit ideal: empty
  auto ru = dim(1, {lp1("1")});
  CHECK(ru.empty);
  // line in 3-space
  auto rl = dim(3, {lp3("X1 - X3"), lp3("X2 - X3^2")});
  CHECK(rl.dimension == 1);
}

TEST_CASE("dimension over a finite field") {
  auto f2 = CoeffSpec::Fp(2);
  auto p = lp_parse("X1^2 + X1 + 1", 1, f2);
  GroebnerBasis gb =
      buchberger(PolyIdeal::make(1, f2, {p}), MonomialOrder::Grevlex(1));
  auto r = ideal_dimension(gb);
  CHECK_FALSE(r.empty);
  CHECK(r.dimension == 0);
}
