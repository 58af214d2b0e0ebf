// Return-probability computations against independent oracles: closed-form
// binomial values on free abelian groups, brute-force word enumeration on the
// lamplighter and the free metabelian group, bracket containment under
// truncation, packed/generic stepper agreement, and Monte Carlo determinism.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gmpxx.h>

#include <vector>

#include "kw/groups.hpp"
#include "kw/walk.hpp"

using namespace kw;

namespace {

mpq_class binom_return_1d(int64_t two_n) {
  // simple random walk on Z: p_{2n} = C(2n, n) / 4^n
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(two_n),
               static_cast<unsigned long>(two_n / 2));
  mpz_class denom;
  mpz_ui_pow_ui(denom.get_mpz_t(), 2, static_cast<unsigned long>(two_n));
  mpq_class q(c, denom);
  q.canonicalize();
  return q;
}

std::vector<WalkEstimate> rational_walk(const std::string& group, int64_t n_max,
                                        bool force_generic = false) {
  ExactWalkOptions opts;
  opts.rational = true;
  opts.force_generic = force_generic;
  return exact_return_probabilities(GroupSpec::parse(group), n_max, opts);
}

// Brute-force oracle: enumerate every word of the given length over the
// symmetric generating set and count identity products.
mpq_class enumerate_identity_fraction(const GroupSpec& spec, int len) {
  std::vector<GroupElement> gens = symmetric_generators(spec);
  size_t s = gens.size();
  uint64_t total = 1;
  for (int i = 0; i < len; ++i) total *= s;
  uint64_t hits = 0;
  std::vector<size_t> idx(static_cast<size_t>(len), 0);
  for (uint64_t w = 0; w < total; ++w) {
    uint64_t code = w;
    GroupElement g = identity_element(spec);
    for (int i = 0; i < len; ++i) {
      g = multiply(spec, g, gens[code % s]);
      code /= s;
    }
    if (is_identity(spec, g)) ++hits;
  }
  mpq_class q(hits, total);
  q.canonicalize();
  return q;
}

// Independent free-group oracle: stack reduction of words over rank-2
// generators (letters 1, -1, 2, -2).
uint64_t free_identity_words(int len) {
  const int letters[4] = {1, -1, 2, -2};
  uint64_t total = 1;
  for (int i = 0; i < len; ++i) total *= 4;
  uint64_t hits = 0;
  for (uint64_t w = 0; w < total; ++w) {
    uint64_t code = w;
    std::vector<int> stack;
    for (int i = 0; i < len; ++i) {
      int l = letters[code % 4];
      code /= 4;
      if (!stack.empty() && stack.back() == -l)
        stack.pop_back();
      else
        stack.push_back(l);
    }
    if (stack.empty()) ++hits;
  }
  return hits;
}

}  // namespace

TEST_CASE("Z walk matches the binomial formula exactly") {
  auto est = rational_walk("zd:d=1", 16);
  REQUIRE(est.size() == 8);
  for (const auto& e : est) {
    REQUIRE(e.exact_rational);
    CHECK(e.p_exact == binom_return_1d(e.n));
    CHECK(e.p_lower == doctest::Approx(e.p_upper));
  }
}

TEST_CASE("Z^2 walk matches the squared binomial formula exactly") {
  auto est = rational_walk("zd:d=2", 10);
  for (const auto& e : est) {
    REQUIRE(e.exact_rational);
    mpq_class b = binom_return_1d(e.n);
    CHECK(e.p_exact == b * b);
  }
}

TEST_CASE("returns exist only at even times") {
  auto est = rational_walk("zd:d=1", 9);
  REQUIRE(est.size() == 4);  // n = 2, 4, 6, 8
  for (size_t i = 0; i < est.size(); ++i) CHECK(est[i].n == 2 * static_cast<int64_t>(i + 1));
}

TEST_CASE("lamplighter walk matches brute-force enumeration") {
  GroupSpec spec = GroupSpec::parse("lamplighter:p=2,d=1");
  auto est = rational_walk("lamplighter:p=2,d=1", 6);
  REQUIRE(est.size() == 3);
  CHECK(est[0].p_exact == mpq_class(1, 3));
  CHECK(est[1].p_exact == enumerate_identity_fraction(spec, 4));
  CHECK(est[2].p_exact == enumerate_identity_fraction(spec, 6));
}

TEST_CASE("order-3 lamps match brute-force enumeration") {
  GroupSpec spec = GroupSpec::parse("lamplighter:p=3,d=1");
  auto est = rational_walk("lamplighter:p=3,d=1", 4);
  CHECK(est[0].p_exact == enumerate_identity_fraction(spec, 2));
  CHECK(est[1].p_exact == enumerate_identity_fraction(spec, 4));
}

TEST_CASE("free metabelian identity words of length <= 6 are the free ones") {
  // the relation kernel of the rank-2 free metabelian group contains no
  // reduced word this short, so stack reduction is an exact oracle here
  auto est = rational_walk("free-metabelian:d=2", 6);
  for (const auto& e : est) {
    uint64_t total = 1;
    for (int64_t i = 0; i < e.n; ++i) total *= 4;
    mpq_class expect(free_identity_words(static_cast<int>(e.n)), total);
    expect.canonicalize();
    CHECK(e.p_exact == expect);
  }
}

TEST_CASE("packed and generic steppers agree exactly") {
  for (const char* g : {"lamplighter:p=2,d=1", "lamplighter:p=3,d=1",
                        "lamplighter:p=2,d=2", "wreath-z:d=1"}) {
    CAPTURE(g);
    auto packed = rational_walk(g, 10, false);
    auto generic = rational_walk(g, 10, true);
    REQUIRE(packed.size() == generic.size());
    for (size_t i = 0; i < packed.size(); ++i)
      CHECK(packed[i].p_exact == generic[i].p_exact);
  }
}

TEST_CASE("truncated brackets certify the exact value") {
  // n <= 20 keeps the untruncated rational reference affordable (~100 MB)
  auto exact = rational_walk("lamplighter:p=2,d=1", 20);
  ExactWalkOptions opts;
  opts.epsilon = 1e-8;
  opts.max_support = 10000;
  auto trunc =
      exact_return_probabilities(GroupSpec::parse("lamplighter:p=2,d=1"), 20, opts);
  REQUIRE(trunc.size() == exact.size());
  for (size_t i = 0; i < trunc.size(); ++i) {
    double truth = exact[i].p_exact.get_d();
    CHECK(trunc[i].p_lower <= truth + 1e-15);
    CHECK(trunc[i].p_upper >= truth - 1e-15);
    // the support cap starts to bite at n = 16; below that only the epsilon
    // floor trims mass and the bracket stays essentially exact
    if (exact[i].n <= 12) CHECK(trunc[i].p_upper - trunc[i].p_lower < 1e-6);
  }
}

TEST_CASE("float convolution without truncation equals the rational value") {
  ExactWalkOptions opts;  // epsilon 0, no support cap
  auto fl = exact_return_probabilities(GroupSpec::parse("zd:d=1"), 12, opts);
  auto ex = rational_walk("zd:d=1", 12);
  for (size_t i = 0; i < fl.size(); ++i) {
    CHECK(fl[i].p_hat == doctest::Approx(ex[i].p_exact.get_d()).epsilon(1e-12));
    CHECK(fl[i].p_upper - fl[i].p_lower < 1e-12);
  }
}

TEST_CASE("monte carlo is deterministic and thread-invariant") {
  GroupSpec spec = GroupSpec::parse("lamplighter:p=2,d=1");
  MonteCarloOptions a;
  a.samples = 300000;
  a.seed = 42;
  a.threads = 1;
  auto r1 = monte_carlo_return(spec, {8, 16}, a);
  auto r2 = monte_carlo_return(spec, {8, 16}, a);
  MonteCarloOptions b = a;
  b.threads = 3;
  auto r3 = monte_carlo_return(spec, {8, 16}, b);
  REQUIRE(r1.size() == 2);
  for (size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].hits == r2[i].hits);
    CHECK(r1[i].hits == r3[i].hits);
    CHECK(r1[i].samples == 300000);
  }
  MonteCarloOptions c = a;
  c.seed = 43;
  auto r4 = monte_carlo_return(spec, {8, 16}, c);
  CHECK((r4[0].hits != r1[0].hits || r4[1].hits != r1[1].hits));
}

TEST_CASE("monte carlo agrees with the exact value within 5 sigma") {
  GroupSpec spec = GroupSpec::parse("lamplighter:p=2,d=1");
  auto exact = rational_walk("lamplighter:p=2,d=1", 16);
  double truth = exact.back().p_exact.get_d();
  MonteCarloOptions opts;
  opts.samples = 400000;
  opts.seed = 9;
  auto mc = monte_carlo_return(spec, {16}, opts);
  REQUIRE(mc.size() == 1);
  double sigma = mc[0].standard_error;
  CHECK(std::abs(mc[0].p_hat - truth) < 5 * sigma);
  // Wilson bracket holds the point estimate
  CHECK(mc[0].p_lower <= mc[0].p_hat);
  CHECK(mc[0].p_hat <= mc[0].p_upper);
}

TEST_CASE("wilson interval sanity") {
  auto [lo0, hi0] = wilson_interval(0, 1000);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  CHECK(hi0 < 0.01);
  auto [lo, hi] = wilson_interval(500, 1000);
  CHECK(lo > 0.45);
  CHECK(hi < 0.55);
  CHECK(lo < 0.5);
  CHECK(hi > 0.5);
}

TEST_CASE("fast samplers cover the wreath and abelian families") {
  CHECK(has_fast_sampler(GroupSpec::parse("zd:d=2")));
  CHECK(has_fast_sampler(GroupSpec::parse("lamplighter:p=2,d=1")));
  CHECK(has_fast_sampler(GroupSpec::parse("wreath-z:d=2")));
}

TEST_CASE("generic sampler matches the fast one in distribution") {
  // free metabelian: no specialized sampler, must still run through the
  // generic element path in exact mode
  auto est = rational_walk("free-metabelian:d=2", 4, true);
  CHECK(est[0].p_exact == mpq_class(1, 4));
}
