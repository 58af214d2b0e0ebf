// Exact group arithmetic: axioms on random words, hand-computed products,
// canonical serialization, relation checking, and the wreath-style embedding
// of the finite cocycle extension.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kw/groups.hpp"
#include "kw/rng.hpp"

using namespace kw;

namespace {

std::vector<int> random_word(Xoshiro256pp& rng, int num_gens, int max_len) {
  int len = 1 + static_cast<int>(rng.below(static_cast<uint32_t>(max_len)));
  std::vector<int> w;
  for (int i = 0; i < len; ++i) {
    int g = 1 + static_cast<int>(rng.below(static_cast<uint32_t>(num_gens)));
    w.push_back(rng.below(2) == 0 ? g : -g);
  }
  return w;
}

const char* kFamilies[] = {
    "zd:d=2",
    "lamplighter:p=2,d=1",
    "lamplighter:p=3,d=2",
    "wreath-z:d=1",
    "free-metabelian:d=2",
    "p-metabelian:d=2,p=2",
    "cocycle-demo",
};

}  // namespace

TEST_CASE("group axioms on random words, all families") {
  for (const char* fam : kFamilies) {
    CAPTURE(fam);
    GroupSpec spec = GroupSpec::parse(fam);
    Xoshiro256pp rng(1234);
    GroupElement e = identity_element(spec);
    CHECK(is_identity(spec, e));
    for (int trial = 0; trial < 60; ++trial) {
      GroupElement u = word_evaluate(spec, random_word(rng, spec.num_generators(), 6));
      GroupElement v = word_evaluate(spec, random_word(rng, spec.num_generators(), 6));
      GroupElement w = word_evaluate(spec, random_word(rng, spec.num_generators(), 6));
      // associativity
      CHECK(multiply(spec, multiply(spec, u, v), w) ==
            multiply(spec, u, multiply(spec, v, w)));
      // identity laws
      CHECK(multiply(spec, e, u) == u);
      CHECK(multiply(spec, u, e) == u);
      // inverses
      CHECK(is_identity(spec, multiply(spec, u, inverse(spec, u))));
      CHECK(is_identity(spec, multiply(spec, inverse(spec, u), u)));
      // antihomomorphism of inversion
      CHECK(inverse(spec, multiply(spec, u, v)) ==
            multiply(spec, inverse(spec, v), inverse(spec, u)));
    }
  }
}

TEST_CASE("hand-computed lamplighter products") {
  GroupSpec spec = GroupSpec::parse("lamplighter:p=2,d=1");
  GroupElement t = generator(spec, 0, +1);
  GroupElement a = generator(spec, 1, +1);
  // the lamp generator is an involution
  CHECK(is_identity(spec, multiply(spec, a, a)));
  // t a t^-1 toggles the lamp one step over: it differs from a
  GroupElement conj = multiply(spec, multiply(spec, t, a), inverse(spec, t));
  CHECK_FALSE(conj == a);
  // lamps at distinct sites commute
  CHECK(multiply(spec, conj, a) == multiply(spec, a, conj));
  // explicit coordinates: t*a = (lamp at site 1, shift 1)
  GroupElement ta = multiply(spec, t, a);
  const auto& w = std::get<WreathElement>(ta);
  REQUIRE(w.lamps.size() == 1);
  CHECK(w.lamps.count(ExponentVector{1}) == 1);
  CHECK(w.cursor == ExponentVector{1});
  // a*t = (lamp at site 0, shift 1)
  GroupElement at = multiply(spec, a, t);
  const auto& w2 = std::get<WreathElement>(at);
  CHECK(w2.lamps.count(ExponentVector{0}) == 1);
  CHECK(w2.cursor == ExponentVector{1});
}

TEST_CASE("integer lamps have infinite order") {
  GroupSpec spec = GroupSpec::parse("wreath-z:d=1");
  GroupElement a = generator(spec, 1, +1);
  GroupElement acc = identity_element(spec);
  for (int k = 1; k <= 5; ++k) {
    acc = multiply(spec, acc, a);
    CHECK_FALSE(is_identity(spec, acc));
  }
  const auto& w = std::get<WreathElement>(acc);
  CHECK(w.lamps.at(ExponentVector{0}) == 5);
}

TEST_CASE("free metabelian generators do not commute, but relations hold") {
  GroupSpec spec = GroupSpec::parse("free-metabelian:d=2");
  GroupElement x1 = generator(spec, 0, +1);
  GroupElement x2 = generator(spec, 1, +1);
  CHECK_FALSE(multiply(spec, x1, x2) == multiply(spec, x2, x1));
  RelationReport rep = verify_relations(spec, RelationSpec::parse("metabelian"), 120, 5);
  CHECK(rep.trials == 120);
  CHECK(rep.violations == 0);
}

TEST_CASE("relation checker across families, and as a negative control") {
  for (const char* fam : kFamilies) {
    CAPTURE(fam);
    GroupSpec spec = GroupSpec::parse(fam);
    RelationReport rep = verify_relations(spec, RelationSpec::parse("metabelian"), 100, 7);
    CHECK(rep.violations == 0);
  }
  GroupSpec ll = GroupSpec::parse("lamplighter:p=2,d=1");
  // the lamp generator squares to the identity ...
  RelationReport ok = verify_relations(ll, RelationSpec::parse("generator-order:i=2,k=2"), 20, 3);
  CHECK(ok.violations == 0);
  // ... but the translation generator does not: the checker must catch it
  RelationReport bad = verify_relations(ll, RelationSpec::parse("generator-order:i=1,k=2"), 20, 3);
  CHECK(bad.violations > 0);
  CHECK_FALSE(bad.witnesses.empty());
  // commutator power holds in the p-metabelian quotient, fails in the free one
  GroupSpec bp = GroupSpec::parse("p-metabelian:d=2,p=3");
  CHECK(verify_relations(bp, RelationSpec::parse("commutator-power:k=3"), 60, 11).violations == 0);
  GroupSpec bfree = GroupSpec::parse("free-metabelian:d=2");
  CHECK(verify_relations(bfree, RelationSpec::parse("commutator-power:k=3"), 60, 11).violations > 0);
}

TEST_CASE("canonical keys: round trip, equality, sensitivity") {
  for (const char* fam : kFamilies) {
    CAPTURE(fam);
    GroupSpec spec = GroupSpec::parse(fam);
    Xoshiro256pp rng(77);
    std::set<std::string> seen;
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<int> word = random_word(rng, spec.num_generators(), 6);
      GroupElement g = word_evaluate(spec, word);
      std::string key = canonical_key(spec, g);
      CHECK(decode_key(spec, key) == g);
      // recomputing along a different evaluation order gives the same key
      GroupElement h = identity_element(spec);
      for (int letter : word)
        h = multiply(spec, h,
                     generator(spec, std::abs(letter) - 1, letter > 0 ? +1 : -1));
      CHECK(canonical_key(spec, h) == key);
      seen.insert(key);
    }
    // sanity: random words do produce many distinct elements
    CHECK(seen.size() > 5);
  }
}

TEST_CASE("word evaluation matches explicit powers") {
  GroupSpec spec = GroupSpec::parse("p-metabelian:d=2,p=2");
  GroupElement x = generator(spec, 0, +1);
  GroupElement p3 = word_evaluate(spec, {1, 1, 1});
  CHECK(p3 == multiply(spec, multiply(spec, x, x), x));
  // the commutator [x1,x2] is nontrivial, but squares to the identity when p=2
  GroupElement c = word_evaluate(spec, {1, 2, -1, -2});
  CHECK_FALSE(is_identity(spec, c));
  CHECK(is_identity(spec, multiply(spec, c, c)));
  CHECK(is_identity(spec, word_evaluate(spec, {1, 2, -1, -2, 1, 2, -1, -2})));
}

TEST_CASE("magnus generators expose the matrix model") {
  GroupSpec spec = GroupSpec::parse("free-metabelian:d=2");
  MagnusElement m = magnus_generator(spec, 0, +1);
  CHECK(m.abelian == ExponentVector{1, 0});
  MagnusElement mi = magnus_generator(spec, 0, -1);
  GroupElement prod = multiply(spec, GroupElement{m}, GroupElement{mi});
  CHECK(is_identity(spec, prod));
}

TEST_CASE("symmetric generator sets") {
  CHECK(symmetric_generators(GroupSpec::parse("zd:d=2")).size() == 4);
  // involution folds: t, t^-1, a
  CHECK(symmetric_generators(GroupSpec::parse("lamplighter:p=2,d=1")).size() == 3);
  // order-3 lamp: t, t^-1, a, a^-1
  CHECK(symmetric_generators(GroupSpec::parse("lamplighter:p=3,d=1")).size() == 4);
  CHECK(symmetric_generators(GroupSpec::parse("wreath-z:d=1")).size() == 4);
}

TEST_CASE("infinite/finite classification") {
  CHECK(group_is_infinite(GroupSpec::parse("zd:d=1")));
  CHECK_FALSE(group_is_infinite(GroupSpec::parse("zd:d=0")));
  CHECK(group_is_infinite(GroupSpec::parse("lamplighter:p=2,d=1")));
  CHECK_FALSE(group_is_infinite(GroupSpec::parse("cocycle-demo")));
}

TEST_CASE("wreath-style embedding of the cocycle extension is multiplicative") {
  GroupSpec spec = GroupSpec::parse("cocycle-demo");
  // identity maps to the identity image
  KKImage id = kk_embed(spec, identity_element(spec));
  CHECK(id.table.empty());
  Xoshiro256pp rng(31);
  for (int trial = 0; trial < 80; ++trial) {
    GroupElement g = word_evaluate(spec, random_word(rng, spec.num_generators(), 5));
    GroupElement h = word_evaluate(spec, random_word(rng, spec.num_generators(), 5));
    KKImage lhs = kk_multiply(spec, kk_embed(spec, g), kk_embed(spec, h));
    KKImage rhs = kk_embed(spec, multiply(spec, g, h));
    CHECK(lhs == rhs);
  }
  // enumerate the whole finite group by closure under the generators and
  // check the embedding is injective on it
  std::set<std::string> elements{canonical_key(spec, identity_element(spec))};
  std::vector<GroupElement> frontier{identity_element(spec)};
  while (!frontier.empty()) {
    std::vector<GroupElement> next;
    for (const auto& g : frontier)
      for (const auto& s : symmetric_generators(spec)) {
        GroupElement h = multiply(spec, g, s);
        if (elements.insert(canonical_key(spec, h)).second) next.push_back(h);
      }
    frontier = std::move(next);
  }
  CHECK(elements.size() == 8);  // |M| * |Q| = 4 * 2
  std::set<std::string> images;
  for (const auto& key : elements) {
    KKImage im = kk_embed(spec, decode_key(spec, key));
    std::ostringstream os;
    for (const auto& [q, v] : im.table) {
      os << ev_to_string(q) << ":";
      for (const auto& [s, val] : v) os << ev_to_string(s) << "=" << val << ";";
    }
    os << "|" << ev_to_string(im.cursor);
    images.insert(os.str());
  }
  CHECK(images.size() == elements.size());
}

TEST_CASE("group spec parsing and printing") {
  CHECK(GroupSpec::parse("zd:d=3").to_string() == "zd:d=3");
  CHECK(GroupSpec::parse("lamplighter:p=5,d=2").num_generators() == 3);
  CHECK_THROWS_AS(GroupSpec::parse("lamplighter:p=1,d=1"), InputError);
  CHECK_THROWS_AS(GroupSpec::parse("zd:d=99"), InputError);
  CHECK_THROWS_AS(GroupSpec::parse("unknown:x=1"), InputError);
  CHECK(GroupSpec::parse("free-metabelian:d=2").generator_name(0) == "s1");
  CHECK(GroupSpec::parse("lamplighter:p=2,d=1").generator_name(1) == "a");
}
