#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kw/krull.hpp"
#include "kw/ring_quotient.hpp"

namespace kw {

// ---------------------------------------------------------------------------
// Cocycle extensions 0 -> M -> G -> Q -> 0 with Q finite abelian and
// M = (Z/k)[Q], multiplication (m,q)(m',q') = (m + q.m' + sigma(q,q'), qq').
// ---------------------------------------------------------------------------

using QVec = std::vector<int64_t>;               // element of Q, reduced mod orders
using MVal = std::map<QVec, int64_t>;            // element of (Z/k)[Q], values in [1,k)

struct CocycleData {
  std::vector<int64_t> q_orders;                 // cyclic factor orders, each >= 2
  int64_t module_modulus = 2;                    // k >= 2
  // sigma(q1,q2) -> module value; missing entries mean zero.  Must satisfy
  // sigma(e,q) = sigma(q,e) = 0 and the cocycle identity on all triples.
  std::map<std::pair<QVec, QVec>, MVal> table;

  size_t q_rank() const { return q_orders.size(); }
  uint64_t q_size() const;
  MVal sigma(const QVec& a, const QVec& b) const;
  void validate() const;                         // throws InputError on violation
  std::vector<QVec> enumerate_q() const;
};

// A small worked example: Q = Z/2, k = 2, sigma(1,1) = 1 + X (nontrivial class).
std::shared_ptr<CocycleData> cocycle_demo();

// ---------------------------------------------------------------------------
// Group specifications
// ---------------------------------------------------------------------------

struct GroupSpec {
  enum class Family {
    free_abelian,      // Z^d
    wreath,            // (Z/k) wr Z^d (k = 0 means Z lamps)
    magnus_free,       // free metabelian group of rank d, via its triangular matrix model
    magnus_p,          // free metabelian exponent-k analogue (module coefficients mod k)
    ring_semidirect,   // (A_1 + ... + A_c) x| Z^d for Laurent quotient rings A_i
    cocycle_ext,       // finite cocycle extension as above
  };

  Family family = Family::free_abelian;
  int d = 1;                                     // translation rank (0 for cocycle_ext)
  int64_t lamp_modulus = 0;                      // wreath: lamp group Z/k (0 = Z); magnus_p: k
  std::vector<RingPtr> rings;                    // ring_semidirect components
  std::shared_ptr<CocycleData> cocycle;          // cocycle_ext data

  static GroupSpec free_abelian(int d);
  static GroupSpec lamplighter(int64_t k, int d); // (Z/k) wr Z^d
  static GroupSpec wreath_z(int d);               // Z wr Z^d
  static GroupSpec magnus_free_metabelian(int d);
  static GroupSpec magnus_p_metabelian(int d, int64_t k);
  static GroupSpec ring_semidirect(std::vector<RingPtr> rings, int d);
  static GroupSpec cocycle_extension(std::shared_ptr<CocycleData> data);

  // Textual forms: "zd:d=2", "lamplighter:p=2,d=1", "wreath-z:d=1",
  // "free-metabelian:d=2", "p-metabelian:d=2,p=2",
  // "ring-semidirect:<presentation file>", "cocycle-demo".
  static GroupSpec parse(const std::string& text);
  std::string to_string() const;

  int num_generators() const;                     // count of basic generators
  std::string generator_name(int i) const;
  CoeffSpec module_coeffs() const;                // wreath/magnus module coefficient ring
};

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

struct WreathElement {
  std::map<ExponentVector, int64_t> lamps;        // site -> nonzero value
  ExponentVector cursor;
  bool operator==(const WreathElement&) const = default;
};

struct MagnusElement {
  ExponentVector abelian;                         // image in Z^d
  std::vector<LaurentPolynomial> module;          // d row entries over Z or Z/k
  bool operator==(const MagnusElement&) const = default;
};

struct SemidirectElement {
  std::vector<LaurentPolynomial> module;          // canonical forms, one per ring component
  ExponentVector translation;
  bool operator==(const SemidirectElement&) const = default;
};

struct CocycleElement {
  MVal mval;
  QVec q;
  bool operator==(const CocycleElement&) const = default;
};

using GroupElement =
    std::variant<ExponentVector, WreathElement, MagnusElement, SemidirectElement, CocycleElement>;

GroupElement identity_element(const GroupSpec& spec);
bool is_identity(const GroupSpec& spec, const GroupElement& g);
GroupElement multiply(const GroupSpec& spec, const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupSpec& spec, const GroupElement& g);

// Basic generator i (0-based, see generator_name), sign in {+1,-1}.
GroupElement generator(const GroupSpec& spec, int i, int sign);
// All distinct elements among the basic generators and their inverses.
std::vector<GroupElement> symmetric_generators(const GroupSpec& spec);
// Same as generator() for the matrix-model families; named for the embedding
// sending the i-th free generator to the 2x2 triangular matrix over the group ring.
MagnusElement magnus_generator(const GroupSpec& spec, int i, int sign = +1);
// Word in signed 1-based generator indices (2 = second generator, -2 = its inverse).
GroupElement word_evaluate(const GroupSpec& spec, const std::vector<int>& word);

// Canonical, invertible serialization: equal elements give equal byte strings.
std::string canonical_key(const GroupSpec& spec, const GroupElement& g);
GroupElement decode_key(const GroupSpec& spec, const std::string& key);
std::string element_brief(const GroupSpec& spec, const GroupElement& g);

// ---------------------------------------------------------------------------
// Wreath-style embedding of a cocycle extension: g maps to (f_g, qbar(g)) with
// f_g(q) = s(g q)^{-1} g s(q) for the canonical section s(q) = (0, q).
// ---------------------------------------------------------------------------

struct KKImage {
  std::map<QVec, MVal> table;                     // q -> module value (zero entries dropped)
  QVec cursor;
  bool operator==(const KKImage&) const = default;
};

KKImage kk_embed(const GroupSpec& spec, const GroupElement& g);
KKImage kk_multiply(const GroupSpec& spec, const KKImage& a, const KKImage& b);

// ---------------------------------------------------------------------------
// Relation checking
// ---------------------------------------------------------------------------

struct RelationSpec {
  enum class Kind { metabelian, commutator_power, generator_order };
  Kind kind = Kind::metabelian;
  int64_t k = 0;                                  // power / order
  int gen_index = 0;                              // generator_order target (0-based)

  // "metabelian" | "commutator-power:k=2" | "generator-order:i=1,k=2"
  static RelationSpec parse(const std::string& text);
  std::string to_string() const;
};

struct RelationReport {
  uint64_t trials = 0;
  uint64_t violations = 0;
  std::vector<std::string> witnesses;             // first few violating instantiations
};

RelationReport verify_relations(const GroupSpec& spec, const RelationSpec& rel, uint64_t trials,
                                uint64_t seed, int max_word_len = 8);

// ---------------------------------------------------------------------------
// Derived-subgroup module presentations (inputs to the dimension machinery)
// ---------------------------------------------------------------------------

ModulePresentation derived_module_presentation(const GroupSpec& spec);
bool group_is_infinite(const GroupSpec& spec);

}  // namespace kw
