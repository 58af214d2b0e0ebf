#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kw/grobner.hpp"

namespace kw {

// Finitely presented module over the Laurent polynomial group ring in d
// variables: `relations` rows are vectors of length ngens.  coefficient
// spec Z selects the torsion-split analysis; a declared torsion exponent k
// asserts k * M = 0 and makes the torsion dimension exact.
struct ModulePresentation {
  int d = 0;
  int ngens = 0;
  CoeffSpec spec = CoeffSpec::Z();
  std::optional<unsigned long> declared_torsion;
  std::vector<std::vector<LaurentPolynomial>> relations;
};

// File format:
//   ring char=<0|p|Z> d=<d> gens=<n> [torsion=<k>]
//   <poly>, <poly>, ...        (one relation row per line)
// '#' starts a comment; blank lines are skipped.
ModulePresentation parse_presentation(std::istream& in);
ModulePresentation parse_presentation_text(const std::string& text);
ModulePresentation load_presentation(const std::string& path);

enum class DimStatus { exact, upper_bound, not_computed };
std::string dim_status_name(DimStatus s);

// Dimensions use std::optional<int>: nullopt encodes -infinity (the zero
// module / unit ideal).
struct KrullReport {
  std::optional<int> krull_module;
  DimStatus module_status = DimStatus::not_computed;
  std::optional<int> krull0;
  DimStatus krull0_status = DimStatus::not_computed;
  std::optional<int> krullt;
  DimStatus krullt_status = DimStatus::not_computed;
  std::vector<unsigned long> primes_used;
  std::optional<unsigned long> best_prime;
  bool group_infinite = true;
  int krull_group = 0;
};

// Generators of the zeroth Fitting ideal: all ngens x ngens minors of the
// relation matrix; the zero ideal when there are fewer relations than
// generators; the unit ideal for a presentation of the zero module.
std::vector<LaurentPolynomial> fitting_ideal0(const ModulePresentation& pres);

// Krull dimension of the module for field coefficient specs, computed as
// ideal_dimension(buchberger(laurent_contract(fitting_ideal0))).
std::optional<int> module_krull_dim(const ModulePresentation& pres);

// Full report including the torsion split and the group-level dimension.
// `primes`: the torsion reduction primes to try; empty means the prime
// factors of the declared torsion exponent (or of the field characteristic),
// else the analysis is marked not computed.
KrullReport krull_report(const ModulePresentation& pres, bool group_infinite,
                         std::vector<unsigned long> primes = {});

int group_krull_dim(const KrullReport& report);

struct MonomialFamily {
  std::vector<ExponentVector> monomials;
  bool certified = false;
};

// Thrown when fewer independent monomials exist than requested; carries the
// family that was achieved.
struct DimensionDeficitError : VerificationError {
  MonomialFamily achieved;
  DimensionDeficitError(const std::string& what, MonomialFamily got)
      : VerificationError(what), achieved(std::move(got)) {}
};

// Certificate: adjoin one tag variable per monomial with relation
// T_i - X^{m_i}, saturate by X1*...*Xd, eliminate the X's; the family is
// independent iff the elimination ideal is zero.
bool monomials_independent(int d, CoeffSpec field,
                           const std::vector<LaurentPolynomial>& ideal_gens,
                           const std::vector<ExponentVector>& family);

// Greedy search in the canonical candidate order (increasing max-norm
// shells) for `target` monomials whose images are algebraically independent
// modulo the ideal.  Every accepted monomial is certified by elimination.
MonomialFamily find_transcendental_monomials(int d, CoeffSpec field,
                                             const std::vector<LaurentPolynomial>& ideal_gens,
                                             int target, int64_t max_norm = 8);

enum class WitnessKind { none, lamplighter, Z_wr_Z, B2p };
std::string witness_kind_name(WitnessKind k);

struct SubgroupWitness {
  WitnessKind kind = WitnessKind::none;
  unsigned long prime = 0;  // relevant for lamplighter / B2p
  MonomialFamily family;
};

// Which special subgroup the dimension data certifies: Z wr Z from rational
// dimension >= 2 (one transcendental monomial), B2p from torsion dimension
// >= 2 (two monomials mod p), a lamplighter from torsion dimension exactly 1.
SubgroupWitness special_subgroup_witness(const ModulePresentation& pres,
                                         std::vector<unsigned long> primes = {});

}  // namespace kw
