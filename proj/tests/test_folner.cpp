// Nested-set couples: window module spaces against literal enumeration,
// structured couple construction, exhaustive ball verification on both
// backends, sharpness probes, products, and quotient descent with its
// frozen small-case oracle.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "kw/folner.hpp"
#include "kw/groups.hpp"

using namespace kw;

namespace {

RingPtr full_laurent_f2(int d) {
  return std::make_shared<RingQuotient>(d, CoeffSpec::Fp(2), std::vector<LaurentPolynomial>{});
}

FolnerCouple lamplighter_couple(int64_t m, int d = 1, unsigned long p = 2) {
  GroupSpec g = (p == 2 && d == 1) ? GroupSpec::parse("lamplighter:p=2,d=1")
                                   : GroupSpec::parse("lamplighter:p=" + std::to_string(p) +
                                                      ",d=" + std::to_string(d));
  return build_ring_couple(g, m);
}

}  // namespace

TEST_CASE("module space of the full Laurent ring is the window itself") {
  for (int64_t m : {1, 3, 6}) {
    ModuleSpace sp = module_space(full_laurent_f2(1), m);
    CHECK(sp.rank() == static_cast<size_t>(2 * m + 1));
    mpz_class expect = 1;
    expect <<= static_cast<size_t>(2 * m + 1);
    CHECK(sp.span_size() == expect);
  }
  ModuleSpace sp2 = module_space(full_laurent_f2(2), 2);
  CHECK(sp2.rank() == 25);  // (2*2+1)^2 independent sites
}

TEST_CASE("module space collapses under ring relations") {
  // F4 = F2[X]/(X^2+X+1): every window of radius >= 1 spans the whole field,
  // a 2-dimensional F2 space
  auto f2 = CoeffSpec::Fp(2);
  auto ring = std::make_shared<RingQuotient>(
      1, f2, std::vector<LaurentPolynomial>{lp_parse("X1^2 + X1 + 1", 1, f2)});
  for (int64_t m : {1, 2, 4}) {
    ModuleSpace sp = module_space(ring, m);
    CHECK(sp.rank() == 2);
    CHECK(sp.span_size() == 4);
  }
}

TEST_CASE("module space coordinates are consistent") {
  ModuleSpace sp = module_space(full_laurent_f2(1), 2);
  // X^1 + X^-2 has coordinates; rebuilding from them returns the same poly
  auto ring = sp.ring;
  LaurentPolynomial p =
      lp_add(ring->laurent_monomial(ExponentVector{1}), ring->laurent_monomial(ExponentVector{-2}));
  auto coords = sp.coords_of(ring->nf(p));
  REQUIRE(coords.has_value());
  CHECK(sp.poly_from_coords(*coords) == ring->nf(p));
  // a monomial outside the window is not in the span
  LaurentPolynomial far = ring->laurent_monomial(ExponentVector{7});
  CHECK_FALSE(sp.coords_of(ring->nf(far)).has_value());
}

TEST_CASE("structured couple sizes follow the closed form") {
  for (int64_t m : {1, 2, 3}) {
    FolnerCouple c = lamplighter_couple(m);
    // spans live on the window of radius 2m; translations: outer 4m+1, inner 2m+1
    mpz_class span = 1;
    span <<= static_cast<size_t>(4 * m + 1);
    CHECK(c.size_omega() == span * (4 * m + 1));
    CHECK(c.size_omega_prime() == span * (2 * m + 1));
    CHECK(c.ratio() == mpq_class(2 * m + 1, 4 * m + 1));
  }
}

TEST_CASE("couple verification passes on both backends and is sharp") {
  for (int64_t m : {1, 2}) {
    CAPTURE(m);
    FolnerCouple c = lamplighter_couple(m);
    VerifyOptions packed;
    packed.check_ratio = true;
    packed.required_ratio = mpq_class(2 * m + 1, 4 * m + 1);
    CoupleReport rp = verify_couple(c, packed);
    CHECK(rp.ok);
    CHECK(rp.containment_ok);
    CHECK(rp.ratio_ok);
    CHECK(rp.sharp);
    CHECK(rp.backend == "packed-bits");

    VerifyOptions generic = packed;
    generic.force_generic = true;
    generic.generic_state_cap = 1u << 24;
    CoupleReport rg = verify_couple(c, generic);
    CHECK(rg.ok);
    CHECK(rg.sharp);
    CHECK(rg.backend == "hashed");
    CHECK(rg.ratio == rp.ratio);
  }
}

TEST_CASE("verification fails when the inner set is too large") {
  // Ω' = Ω makes the m-ball spill out of Ω, and the verifier must say so.
  FolnerCouple c = lamplighter_couple(2);
  c.inner = c.outer;  // tamper: inner box as large as the outer one
  CoupleReport r = verify_couple(c);
  CHECK_FALSE(r.containment_ok);
  CHECK_FALSE(r.ok);
  CHECK_FALSE(r.witnesses.empty());
}

TEST_CASE("ratio and size-bound gates") {
  FolnerCouple c = lamplighter_couple(2);  // true ratio 5/9
  VerifyOptions opts;
  opts.check_ratio = true;
  opts.required_ratio = mpq_class(2, 3);  // demand more than it has
  CoupleReport r = verify_couple(c, opts);
  CHECK(r.containment_ok);
  CHECK_FALSE(r.ratio_ok);
  CHECK_FALSE(r.ok);

  VerifyOptions sb;
  sb.check_ratio = false;
  sb.size_bound = SizeBound::parse("1*exp(0.1*m^1)");  // absurdly small ceiling
  CoupleReport r2 = verify_couple(c, sb);
  CHECK_FALSE(r2.size_ok);
  CHECK_FALSE(r2.ok);

  VerifyOptions generous;
  generous.check_ratio = false;
  generous.size_bound = SizeBound::parse("10*exp(4*m^1)");
  CHECK(verify_couple(c, generous).size_ok);
}

TEST_CASE("order-3 lamps verify through the hashed backend") {
  FolnerCouple c = lamplighter_couple(1, 1, 3);
  CoupleReport r = verify_couple(c);
  CHECK(r.ok);
  CHECK(r.backend == "hashed");  // p=3 cannot use the bit-packed encoding
  CHECK(r.sharp);
  CHECK(r.ratio == mpq_class(3, 5));
}

TEST_CASE("explicit couples built from raw elements verify") {
  // Hand-build the m=1 couple for the lamplighter as explicit element sets:
  // lamps supported in [-2,2], translations in [-2,2] (outer) / [-1,1] (inner).
  GroupSpec spec = GroupSpec::parse("lamplighter:p=2,d=1");
  FolnerCouple c;
  c.kind = FolnerCouple::Kind::explicit_set;
  c.group = spec;
  c.m = 1;
  for (int mask = 0; mask < 32; ++mask)
    for (int x = -2; x <= 2; ++x) {
      WreathElement w;
      for (int site = -2; site <= 2; ++site)
        if (mask & (1 << (site + 2))) w.lamps[ExponentVector{site}] = 1;
      w.cursor = ExponentVector{x};
      c.omega.push_back(GroupElement{w});
      if (std::abs(x) <= 1) c.omega_prime.push_back(GroupElement{w});
    }
  CHECK(c.size_omega() == 160);
  CHECK(c.size_omega_prime() == 96);
  CoupleReport r = verify_couple(c);
  CHECK(r.containment_ok);
  CHECK(r.ok);
  CHECK(r.sharp);
  // removing the far translations from Ω breaks containment
  FolnerCouple broken = c;
  broken.omega.clear();
  for (int mask = 0; mask < 32; ++mask)
    for (int x = -1; x <= 1; ++x) {
      WreathElement w;
      for (int site = -2; site <= 2; ++site)
        if (mask & (1 << (site + 2))) w.lamps[ExponentVector{site}] = 1;
      w.cursor = ExponentVector{x};
      broken.omega.push_back(GroupElement{w});
    }
  CoupleReport rb = verify_couple(broken);
  CHECK_FALSE(rb.containment_ok);
}

TEST_CASE("product couple concatenates modules over the shared base") {
  FolnerCouple a = lamplighter_couple(2);
  FolnerCouple b = lamplighter_couple(2);
  FolnerCouple prod = product_couple(a, b);
  REQUIRE(prod.modules.size() == 2);
  // module spans multiply; the translation box is shared, so it is counted
  // once and the ratio stays the box ratio
  mpz_class span = a.modules[0].span_size();
  CHECK(prod.size_omega() == span * span * 9);
  CHECK(prod.size_omega_prime() == span * span * 5);
  CHECK(prod.ratio() == a.ratio());
  CoupleReport r = verify_couple(prod);
  CHECK(r.ok);
  CHECK(r.backend == "packed-bits");
}

TEST_CASE("noether growth: lamp count grows linearly, squared window grows quadratically") {
  GrowthFit g1 = fit_noether_growth(full_laurent_f2(1), 4, 12);
  CHECK(g1.k_hat == doctest::Approx(1.0).epsilon(0.01));
  // the (2m+1)^2 window has a linear cross term, so the fitted exponent sits
  // slightly below 2 on small windows
  GrowthFit g2 = fit_noether_growth(full_laurent_f2(2), 3, 8);
  CHECK(g2.k_hat == doctest::Approx(2.0).epsilon(0.06));
  // literal count cross-check
  CHECK(noether_size_count(full_laurent_f2(1), 3) == mpz_class(1) << 7);
}

TEST_CASE("quotient descent reproduces the frozen small oracle") {
  // lamplighter couple at m=3, descending along the translation marker with
  // quotient scale n=1: the best threshold keeps the full inner interval
  // [-3,3] with boundary {-4,-3,3,4}, ratio 4/7.
  FolnerCouple c = lamplighter_couple(3);
  DescentResult res = quotient_descent(c, Projection::cursor, 1);
  CHECK(res.quotient.to_string() == "zd:d=1");
  CHECK(res.level_size == 7);
  CHECK(res.boundary_size == 4);
  CHECK(res.boundary_ratio == doctest::Approx(4.0 / 7.0));
  // the emitted couple is ([-4,4], [-3,3])
  CHECK(res.couple.size_omega() == 9);
  CHECK(res.couple.size_omega_prime() == 7);
  CoupleReport r = verify_couple(res.couple);
  CHECK(r.ok);
  CHECK(r.sharp);
}

TEST_CASE("descent along the trivial projection keeps everything in one fiber") {
  FolnerCouple c = lamplighter_couple(2);
  DescentResult res = quotient_descent(c, Projection::trivial, 1);
  CHECK(res.quotient.to_string() == "zd:d=0");
  CHECK(res.num_thresholds >= 1);
  // one point, no boundary
  CHECK(res.level_size == 1);
  CHECK(res.boundary_size == 0);
}

TEST_CASE("descent fiber counts sum to the inner set size") {
  FolnerCouple c = lamplighter_couple(2);
  DescentResult res = quotient_descent(c, Projection::cursor, 1);
  mpz_class total = 0;
  for (const auto& [point, count] : res.fiber_counts) total += count;
  CHECK(total == c.size_omega_prime());
}

TEST_CASE("size bound parser") {
  SizeBound sb = SizeBound::parse("2.5*exp(1.75*m^2)");
  CHECK(sb.enabled);
  CHECK(sb.a == doctest::Approx(2.5));
  CHECK(sb.b == doctest::Approx(1.75));
  CHECK(sb.k == doctest::Approx(2.0));
  CHECK(sb.log_value(3) == doctest::Approx(std::log(2.5) + 1.75 * 9));
  CHECK_THROWS_AS(SizeBound::parse("garbage"), InputError);
}

TEST_CASE("couple construction rejects unsupported groups") {
  CHECK_THROWS_AS(build_ring_couple(GroupSpec::parse("wreath-z:d=1"), 2), InputError);
  CHECK_THROWS_AS(build_ring_couple(GroupSpec::parse("zd:d=2"), 2), InputError);
  CHECK_THROWS_AS(build_ring_couple(GroupSpec::parse("lamplighter:p=2,d=1"), 0), InputError);
}
