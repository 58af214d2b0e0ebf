// Krull dimension reports: Fitting ideals, the rational/torsion split, the
// group-level dimension, certified monomial families, and witnesses.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "kw/groups.hpp"
#include "kw/krull.hpp"

using namespace kw;

namespace {

KrullReport report_for(const std::string& group) {
  GroupSpec spec = GroupSpec::parse(group);
  return krull_report(derived_module_presentation(spec), group_is_infinite(spec));
}

}  // namespace

TEST_CASE("dimension table across the group families") {
  struct Row {
    const char* group;
    int module_dim;   // -1 encodes -infinity (zero module)
    int group_dim;
  };
  const Row rows[] = {
      {"zd:d=1", -1, 1},
      {"zd:d=2", -1, 1},
      {"lamplighter:p=2,d=1", 1, 1},
      {"lamplighter:p=2,d=2", 2, 2},
      {"lamplighter:p=3,d=2", 2, 2},
      {"wreath-z:d=1", 2, 2},
      {"wreath-z:d=2", 3, 3},
      {"free-metabelian:d=2", 3, 3},
      {"free-metabelian:d=3", 4, 4},
      {"p-metabelian:d=2,p=2", 2, 2},
      {"p-metabelian:d=2,p=3", 2, 2},
      {"p-metabelian:d=3,p=2", 3, 3},
  };
  for (const auto& row : rows) {
    CAPTURE(row.group);
    KrullReport r = report_for(row.group);
    if (row.module_dim < 0)
      CHECK_FALSE(r.krull_module.has_value());
    else
      CHECK(r.krull_module == row.module_dim);
    CHECK(r.module_status == DimStatus::exact);
    CHECK(r.krull_group == row.group_dim);
  }
}

TEST_CASE("rational/torsion split matches the hand analysis") {
  // Lamplighter: one generator, relation (2).  Rationally the module dies;
  // mod 2 it is the whole Laurent ring in one variable.
  KrullReport ll = report_for("lamplighter:p=2,d=1");
  CHECK_FALSE(ll.krull0.has_value());
  CHECK(ll.krullt == 1);
  CHECK(ll.best_prime == 2);
  // Z wr Z: free module of rank one over the integral Laurent ring.
  KrullReport wz = report_for("wreath-z:d=1");
  CHECK(wz.krull0 == 2);
  CHECK(wz.krull_module == 2);
}

TEST_CASE("finite group clamps the group dimension to zero") {
  GroupSpec trivial = GroupSpec::parse("zd:d=0");
  CHECK_FALSE(group_is_infinite(trivial));
  KrullReport r = krull_report(derived_module_presentation(trivial), false);
  CHECK(r.krull_group == 0);
}

TEST_CASE("fitting ideal of stacked relation rows") {
  // One generator, rows (X-1) and (X+1) over Z: the Fitting ideal contains 2,
  // so the rational part dies and only p=2 survives with a zero-dimensional
  // torsion part.
  ModulePresentation pres = parse_presentation_text(
      "ring char=Z d=1 gens=1\n"
      "X1 - 1\n"
      "X1 + 1\n");
  KrullReport r = krull_report(pres, true, {2, 3, 5});
  CHECK_FALSE(r.krull0.has_value());
  CHECK(r.krull_module == 0);
  CHECK(r.best_prime == 2);
  CHECK(r.krull_group == 1);  // module small, group infinite
}

TEST_CASE("square presentation: determinant principle") {
  // Two generators, diagonal relations (X-1, 0), (0, X-1): Fitt0 = ((X-1)^2),
  // a hypersurface in the 2-torus over Q -> module dimension 0 + 1 ... in one
  // variable the vanishing locus {X=1} is a point: dim_Q = 0, so krull0 = 1.
  ModulePresentation pres = parse_presentation_text(
      "ring char=0 d=1 gens=2\n"
      "X1 - 1, 0\n"
      "0, X1 - 1\n");
  KrullReport r = krull_report(pres, true);
  CHECK(r.krull0 == 0);  // field coefficients: no +1 for the integral direction
  CHECK(r.krull_module == 0);
}

TEST_CASE("presentation parsing") {
  ModulePresentation p = parse_presentation_text(
      "# comment line\n"
      "ring char=2 d=2 gens=2 torsion=2\n"
      "X1 + 1, X2 + 1\n");
  CHECK(p.d == 2);
  CHECK(p.ngens == 2);
  CHECK(p.spec.kind == CoeffKind::prime_field);
  CHECK(p.declared_torsion == 2);
  REQUIRE(p.relations.size() == 1);
  CHECK(p.relations[0].size() == 2);
  CHECK_THROWS_AS(parse_presentation_text("ring char=2 d=1 gens=2\nX1\n"), InputError);
  CHECK_THROWS_AS(parse_presentation_text("nonsense\n"), InputError);
}

TEST_CASE("monomial independence certificates") {
  const auto Qs = CoeffSpec::Q();
  // X is transcendental in the full Laurent ring
  CHECK(monomials_independent(1, Qs, {}, {ExponentVector{1}}));
  // X and Y are independent in two variables
  CHECK(monomials_independent(2, Qs, {}, {ExponentVector{1, 0}, ExponentVector{0, 1}}));
  // X is algebraic modulo (X - 1)
  CHECK_FALSE(monomials_independent(1, Qs, {lp_parse("X1 - 1", 1, Qs)}, {ExponentVector{1}}));
  // two monomials cannot be independent on the 1-dimensional locus XY = 1
  CHECK_FALSE(monomials_independent(2, Qs, {lp_parse("X1*X2 - 1", 2, Qs)},
                                    {ExponentVector{1, 0}, ExponentVector{0, 1}}));
}

TEST_CASE("greedy transcendental search and the deficit error") {
  const auto Qs = CoeffSpec::Q();
  MonomialFamily fam = find_transcendental_monomials(2, Qs, {}, 2);
  CHECK(fam.certified);
  CHECK(fam.monomials.size() == 2);
  CHECK(monomials_independent(2, Qs, {}, fam.monomials));
  try {
    find_transcendental_monomials(1, Qs, {}, 2);
    FAIL("expected DimensionDeficitError");
  } catch (const DimensionDeficitError& e) {
    CHECK(e.achieved.monomials.size() == 1);
  }
}

TEST_CASE("special subgroup witnesses by family") {
  SubgroupWitness ll = special_subgroup_witness(
      derived_module_presentation(GroupSpec::parse("lamplighter:p=2,d=1")));
  CHECK(ll.kind == WitnessKind::lamplighter);
  CHECK(ll.prime == 2);
  CHECK(ll.family.certified);

  SubgroupWitness wz = special_subgroup_witness(
      derived_module_presentation(GroupSpec::parse("wreath-z:d=1")));
  CHECK(wz.kind == WitnessKind::Z_wr_Z);
  CHECK(wz.family.monomials.size() == 1);

  SubgroupWitness bp = special_subgroup_witness(
      derived_module_presentation(GroupSpec::parse("p-metabelian:d=2,p=2")));
  CHECK(bp.kind == WitnessKind::B2p);
  CHECK(bp.prime == 2);
  CHECK(bp.family.monomials.size() == 2);

  SubgroupWitness none = special_subgroup_witness(
      derived_module_presentation(GroupSpec::parse("zd:d=2")));
  CHECK(none.kind == WitnessKind::none);
}

TEST_CASE("witness certificates re-verify independently") {
  for (const char* g : {"lamplighter:p=2,d=1", "wreath-z:d=2", "p-metabelian:d=2,p=2",
                        "free-metabelian:d=2"}) {
    CAPTURE(g);
    ModulePresentation pres = derived_module_presentation(GroupSpec::parse(g));
    SubgroupWitness w = special_subgroup_witness(pres);
    REQUIRE(w.kind != WitnessKind::none);
    REQUIRE(w.family.certified);
    CoeffSpec field = (w.prime > 0) ? CoeffSpec::Fp(w.prime) : CoeffSpec::Q();
    ModulePresentation conv = pres;
    conv.spec = field;
    for (auto& row : conv.relations)
      for (auto& e : row) e = lp_convert(e, field);
    CHECK(monomials_independent(pres.d, field, fitting_ideal0(conv), w.family.monomials));
  }
}

TEST_CASE("derived module presentations have the expected shape") {
  // Free metabelian of rank d: C(d,2) generators, C(d,3) relation rows.
  ModulePresentation b3 = derived_module_presentation(GroupSpec::parse("free-metabelian:d=3"));
  CHECK(b3.ngens == 3);
  CHECK(b3.relations.size() == 1);
  ModulePresentation b4 = derived_module_presentation(GroupSpec::parse("free-metabelian:d=4"));
  CHECK(b4.ngens == 6);
  CHECK(b4.relations.size() == 4);
  // Wreath products: cyclic module, one torsion relation iff the lamp is finite.
  ModulePresentation ll = derived_module_presentation(GroupSpec::parse("lamplighter:p=5,d=2"));
  CHECK(ll.ngens == 1);
  CHECK(ll.declared_torsion == 5);
  ModulePresentation wz = derived_module_presentation(GroupSpec::parse("wreath-z:d=2"));
  CHECK(wz.ngens == 1);
  CHECK(wz.relations.empty());
}
