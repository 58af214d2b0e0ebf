#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kw/fit.hpp"
#include "kw/groups.hpp"

namespace kw {

// The F_p-span of the canonical forms of the window monomials X^w,
// w in [-window, window]^d, inside a Laurent quotient ring.
struct ModuleSpace {
  RingPtr ring;
  unsigned long p = 2;
  int64_t window = 0;
  std::vector<ExponentVector> support;            // doubled-ring monomials, sorted
  std::vector<std::vector<uint8_t>> rows;         // spanning rows, pivot coefficient 1
  std::vector<size_t> pivots;                     // pivot column of each row
  std::map<ExponentVector, std::vector<uint8_t>> site_coords;  // site -> row coordinates

  size_t rank() const { return rows.size(); }
  mpz_class span_size() const;                    // p^rank
  // Coordinates of a canonical-form polynomial in the row basis, if it lies
  // in the span.
  std::optional<std::vector<uint8_t>> coords_of(const LaurentPolynomial& nf_poly) const;
  LaurentPolynomial poly_from_coords(const std::vector<uint8_t>& coords) const;
};

ModuleSpace module_space(const RingPtr& ring, int64_t window);

// Axis-aligned box [-r_1, r_1] x ... x [-r_d, r_d].
struct Box {
  std::vector<int64_t> radius;
  mpz_class size() const;
  uint64_t count_u64() const;
  bool contains(const ExponentVector& t) const;
  uint64_t index_of(const ExponentVector& t) const;  // mixed radix, coordinate 0 fastest
  ExponentVector from_index(uint64_t idx) const;
};

// A pair of nested finite sets Omega' subset Omega in a group, built either
// structurally (module span times translation box) or as explicit element
// lists.
struct FolnerCouple {
  enum class Kind { ring, explicit_set };
  Kind kind = Kind::ring;
  GroupSpec group;
  int64_t m = 0;
  // ring kind
  std::vector<ModuleSpace> modules;
  Box outer, inner;
  // explicit kind
  std::vector<GroupElement> omega, omega_prime;

  mpz_class size_omega() const;
  mpz_class size_omega_prime() const;
  mpq_class ratio() const;  // |Omega'| / |Omega|
};

// Omega = span(window 2m) x [-2m,2m]^d, Omega' = span(window 2m) x [-m,m]^d.
FolnerCouple build_ring_couple(const GroupSpec& group, int64_t m);

// Size of the image of the window-m monomial box in the quotient ring: p^rank.
mpz_class noether_size_count(const RingPtr& ring, int64_t m);
GrowthFit fit_noether_growth(const RingPtr& ring, int64_t m_lo, int64_t m_hi);

// Optional explicit size ceiling V(m) = a * exp(b * m^k).
struct SizeBound {
  double a = 0, b = 0, k = 0;
  bool enabled = false;
  static SizeBound parse(const std::string& text);  // "A*exp(B*m^k)"
  std::string to_string() const;
  double log_value(double m) const;
};

struct VerifyOptions {
  bool check_ratio = true;
  mpq_class required_ratio{0};      // |Omega'|/|Omega| must be >= this
  SizeBound size_bound{};
  bool check_sharpness = true;      // probe that radius m+1 escapes
  bool force_generic = false;       // bypass the packed bit backend
  uint64_t generic_state_cap = (1u << 22);
  int64_t ball_override = -1;       // expand this many levels instead of m
};

struct CoupleReport {
  bool ok = false;
  bool containment_ok = false;      // Omega' . ball_m  subset of  Omega
  bool ratio_ok = true;
  bool size_ok = true;
  bool sharp = false;               // Omega' . ball_{m+1} escapes Omega
  mpz_class size_omega, size_omega_prime;
  mpq_class ratio;
  uint64_t states_visited = 0;
  std::vector<std::string> witnesses;  // a few escaping products, rendered
  std::string sharp_witness;
  std::string backend;              // "packed-bits" or "hashed"
};

CoupleReport verify_couple(const FolnerCouple& couple, const VerifyOptions& opts = {});

// Couple for the direct sum of the module parts over a shared translation
// box; both inputs must be ring couples with identical boxes.
FolnerCouple product_couple(const FolnerCouple& a, const FolnerCouple& b);

enum class Projection { cursor, trivial };
Projection projection_parse(const std::string& name);
std::string projection_name(Projection p);

struct DescentResult {
  FolnerCouple couple;              // explicit couple in the quotient group
  GroupSpec quotient;
  double boundary_ratio = 0.0;      // |boundary| / |level set|
  mpz_class threshold;              // chosen fiber-count cut
  size_t num_thresholds = 0;
  uint64_t level_size = 0;          // |L|
  uint64_t boundary_size = 0;       // |boundary_n(L)|
  std::vector<std::pair<std::string, mpz_class>> fiber_counts;  // projected point -> count
};

// Push a couple through a projection: compute fiber counts over the quotient,
// sweep thresholds on them, keep the level set L minimizing
// |boundary_n(L)| / |L|, and return the explicit couple (L union boundary, L).
DescentResult quotient_descent(const FolnerCouple& couple, Projection proj, int64_t n);

}  // namespace kw
