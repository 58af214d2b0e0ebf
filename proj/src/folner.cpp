#include "kw/folner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kw/errors.hpp"

namespace kw {

namespace {

constexpr uint64_t kEscape = ~uint64_t{0};

bool is_small_prime(int64_t n) {
  if (n < 2) return false;
  for (int64_t q = 2; q * q <= n; ++q)
    if (n % q == 0) return false;
  return true;
}

uint32_t mod_inverse(uint32_t a, uint32_t p) {
  // extended Euclid; p prime, a in [1, p)
  int64_t t = 0, new_t = 1, r = p, new_r = a;
  while (new_r != 0) {
    int64_t q = r / new_r;
    int64_t tmp = t - q * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - q * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (r != 1) throw InputError("modular inverse of a non-unit");
  return static_cast<uint32_t>(t < 0 ? t + p : t);
}

std::string ev_text(const ExponentVector& v) {
  std::string s = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

// Reduce a dense support-indexed vector against the stored rows in order,
// recording the coefficient used at each pivot.  After the loop the
// coordinates are unique because the rows are linearly independent.
void reduce_dense(const std::vector<std::vector<uint8_t>>& rows,
                  const std::vector<size_t>& pivots, unsigned long p,
                  std::vector<uint8_t>& dense, std::vector<uint8_t>& coords) {
  coords.assign(rows.size(), 0);
  for (size_t r = 0; r < rows.size(); ++r) {
    uint32_t c = dense[pivots[r]];
    coords[r] = static_cast<uint8_t>(c);
    if (c == 0) continue;
    const auto& row = rows[r];
    for (size_t j = 0; j < dense.size(); ++j) {
      if (row[j] == 0) continue;
      uint32_t sub = (c * row[j]) % static_cast<uint32_t>(p);
      dense[j] = static_cast<uint8_t>((dense[j] + p - sub) % p);
    }
  }
}

std::vector<uint8_t> dense_of_poly(const LaurentPolynomial& poly,
                                   const std::vector<ExponentVector>& support,
                                   unsigned long p, bool* in_support) {
  std::vector<uint8_t> dense(support.size(), 0);
  *in_support = true;
  for (const auto& [e, c] : poly.terms()) {
    auto it = std::lower_bound(support.begin(), support.end(), e);
    if (it == support.end() || *it != e) {
      *in_support = false;
      return dense;
    }
    unsigned long v = mpz_fdiv_ui(c.get_num().get_mpz_t(), p);
    dense[static_cast<size_t>(it - support.begin())] = static_cast<uint8_t>(v);
  }
  return dense;
}

}  // namespace

mpz_class ModuleSpace::span_size() const {
  mpz_class s;
  mpz_ui_pow_ui(s.get_mpz_t(), p, static_cast<unsigned long>(rank()));
  return s;
}

std::optional<std::vector<uint8_t>> ModuleSpace::coords_of(
    const LaurentPolynomial& nf_poly) const {
  bool in_support = false;
  std::vector<uint8_t> dense = dense_of_poly(nf_poly, support, p, &in_support);
  if (!in_support) return std::nullopt;
  std::vector<uint8_t> coords;
  reduce_dense(rows, pivots, p, dense, coords);
  for (uint8_t v : dense)
    if (v) return std::nullopt;
  return coords;
}

LaurentPolynomial ModuleSpace::poly_from_coords(const std::vector<uint8_t>& coords) const {
  if (coords.size() != rows.size()) throw InputError("coordinate vector has the wrong length");
  std::vector<uint32_t> dense(support.size(), 0);
  for (size_t r = 0; r < rows.size(); ++r) {
    if (coords[r] == 0) continue;
    for (size_t j = 0; j < support.size(); ++j)
      dense[j] = (dense[j] + static_cast<uint32_t>(coords[r]) * rows[r][j]) % p;
  }
  LaurentPolynomial::TermMap terms;
  for (size_t j = 0; j < support.size(); ++j)
    if (dense[j]) terms[support[j]] = static_cast<long>(dense[j]);
  return LaurentPolynomial::from_terms(ring->doubled_vars(), ring->field(), terms);
}

ModuleSpace module_space(const RingPtr& ring, int64_t window) {
  if (!ring) throw InputError("module space requires a coefficient ring");
  if (ring->field().kind != CoeffKind::prime_field)
    throw InputError("module spaces are supported over prime fields only");
  unsigned long p = ring->field().modulus;
  if (p > 251) throw InputError("module spaces support characteristic up to 251");
  if (window < 0) throw InputError("window must be nonnegative");

  Box wbox;
  wbox.radius.assign(ring->d(), window);
  uint64_t nsites = wbox.count_u64();
  if (nsites > (1ull << 22)) throw BudgetError("window box too large for a module space");

  ModuleSpace ms;
  ms.ring = ring;
  ms.p = p;
  ms.window = window;

  std::vector<std::pair<ExponentVector, LaurentPolynomial>> nfs;
  nfs.reserve(nsites);
  std::set<ExponentVector> supp;
  for (uint64_t i = 0; i < nsites; ++i) {
    ExponentVector w = wbox.from_index(i);
    LaurentPolynomial nf = ring->nf(ring->laurent_monomial(w));
    for (const auto& [e, c] : nf.terms()) supp.insert(e);
    nfs.emplace_back(std::move(w), std::move(nf));
  }
  ms.support.assign(supp.begin(), supp.end());

  for (auto& [w, nf] : nfs) {
    bool in_support = false;
    std::vector<uint8_t> dense = dense_of_poly(nf, ms.support, p, &in_support);
    std::vector<uint8_t> coords;
    reduce_dense(ms.rows, ms.pivots, p, dense, coords);
    size_t piv = dense.size();
    for (size_t j = 0; j < dense.size(); ++j)
      if (dense[j]) {
        piv = j;
        break;
      }
    if (piv != dense.size()) {
      uint32_t lead = dense[piv];
      uint32_t inv = mod_inverse(lead, static_cast<uint32_t>(p));
      for (auto& v : dense) v = static_cast<uint8_t>((v * inv) % p);
      ms.rows.push_back(dense);
      ms.pivots.push_back(piv);
      coords.push_back(static_cast<uint8_t>(lead));
    }
    ms.site_coords.emplace(w, std::move(coords));
  }
  for (auto& [w, c] : ms.site_coords) c.resize(ms.rows.size(), 0);
  return ms;
}

mpz_class Box::size() const {
  mpz_class s = 1;
  for (int64_t r : radius) s *= 2 * r + 1;
  return s;
}

uint64_t Box::count_u64() const {
  mpz_class s = size();
  if (!s.fits_ulong_p()) throw BudgetError("box too large to enumerate");
  return s.get_ui();
}

bool Box::contains(const ExponentVector& t) const {
  if (t.size() != radius.size()) throw InputError("box membership: rank mismatch");
  for (size_t i = 0; i < radius.size(); ++i)
    if (t[i] < -radius[i] || t[i] > radius[i]) return false;
  return true;
}

uint64_t Box::index_of(const ExponentVector& t) const {
  if (!contains(t)) throw InputError("box index of a point outside the box");
  uint64_t idx = 0, stride = 1;
  for (size_t i = 0; i < radius.size(); ++i) {
    idx += stride * static_cast<uint64_t>(t[i] + radius[i]);
    stride *= static_cast<uint64_t>(2 * radius[i] + 1);
  }
  return idx;
}

ExponentVector Box::from_index(uint64_t idx) const {
  ExponentVector t(radius.size(), 0);
  for (size_t i = 0; i < radius.size(); ++i) {
    uint64_t w = static_cast<uint64_t>(2 * radius[i] + 1);
    t[i] = static_cast<int64_t>(idx % w) - radius[i];
    idx /= w;
  }
  return t;
}

mpz_class FolnerCouple::size_omega() const {
  if (kind == Kind::explicit_set) return mpz_class(static_cast<unsigned long>(omega.size()));
  mpz_class s = outer.size();
  for (const auto& ms : modules) s *= ms.span_size();
  return s;
}

mpz_class FolnerCouple::size_omega_prime() const {
  if (kind == Kind::explicit_set)
    return mpz_class(static_cast<unsigned long>(omega_prime.size()));
  mpz_class s = inner.size();
  for (const auto& ms : modules) s *= ms.span_size();
  return s;
}

mpq_class FolnerCouple::ratio() const {
  mpz_class so = size_omega();
  if (so == 0) throw InputError("empty couple has no ratio");
  return mpq_class(size_omega_prime()) / mpq_class(so);
}

FolnerCouple build_ring_couple(const GroupSpec& group, int64_t m) {
  if (m < 1) throw InputError("couple scale must be at least 1");
  GroupSpec g = group;
  if (g.family == GroupSpec::Family::wreath && g.lamp_modulus >= 2) {
    // (Z/p) wr Z^d is the semidirect product for the zero ideal over F_p.
    if (!is_small_prime(g.lamp_modulus))
      throw InputError("structured couples need a prime lamp modulus");
    auto ring = std::make_shared<RingQuotient>(
        g.d, CoeffSpec::Fp(static_cast<unsigned long>(g.lamp_modulus)),
        std::vector<LaurentPolynomial>{});
    g = GroupSpec::ring_semidirect({ring}, g.d);
  }
  if (g.family != GroupSpec::Family::ring_semidirect)
    throw InputError(
        "structured couples require a ring semidirect product or a prime-modulus "
        "wreath product");
  FolnerCouple c;
  c.kind = FolnerCouple::Kind::ring;
  c.group = g;
  c.m = m;
  c.outer.radius.assign(static_cast<size_t>(g.d), 2 * m);
  c.inner.radius.assign(static_cast<size_t>(g.d), m);
  for (const auto& ring : g.rings) c.modules.push_back(module_space(ring, 2 * m));
  return c;
}

mpz_class noether_size_count(const RingPtr& ring, int64_t m) {
  return module_space(ring, m).span_size();
}

GrowthFit fit_noether_growth(const RingPtr& ring, int64_t m_lo, int64_t m_hi) {
  if (m_lo < 1 || m_hi < m_lo) throw InputError("growth fit needs 1 <= m_lo <= m_hi");
  std::vector<int64_t> ms;
  std::vector<double> logs;
  for (int64_t m = m_lo; m <= m_hi; ++m) {
    ModuleSpace sp = module_space(ring, m);
    ms.push_back(m);
    logs.push_back(static_cast<double>(sp.rank()) * std::log(static_cast<double>(sp.p)));
  }
  return fit_growth(ms, logs);
}

SizeBound SizeBound::parse(const std::string& text) {
  SizeBound b;
  int pos = -1;
  std::sscanf(text.c_str(), " %lf * exp ( %lf * m ^ %lf ) %n", &b.a, &b.b, &b.k, &pos);
  if (pos < 0 || text.c_str()[pos] != '\0')
    throw InputError("size bound must look like \"A*exp(B*m^k)\", got: " + text);
  if (!(b.a > 0) || !std::isfinite(b.b) || !(b.k > 0))
    throw InputError("size bound needs A > 0 and k > 0");
  b.enabled = true;
  return b;
}

std::string SizeBound::to_string() const {
  if (!enabled) return "";
  std::ostringstream os;
  os << a << "*exp(" << b << "*m^" << k << ")";
  return os.str();
}

double SizeBound::log_value(double m) const { return std::log(a) + b * std::pow(m, k); }

namespace {

// ---------------------------------------------------------------------------
// Structured-couple breadth-first closure.
//
// States are (module coordinates, translation site).  Translation moves keep
// the module part and step the site (escaping the outer box is an escape);
// unit moves add the coordinate vector of the canonical form of X^site to one
// component and never leave the span.
// ---------------------------------------------------------------------------

struct RingBfsResult {
  bool containment_ok = true;
  uint64_t states = 0;
  std::vector<std::string> witnesses;
};

struct RingTables {
  int d = 0;
  uint64_t nboxes = 0;
  std::vector<uint64_t> nbr;                       // nboxes x 2d
  std::vector<size_t> offsets;                     // per-component bit/byte offsets
  size_t total_rank = 0;
  std::vector<const std::vector<uint8_t>*> sites;  // per comp: nboxes pointers
  std::vector<uint64_t> inner_boxes;               // outer-box indices of inner sites
};

RingTables make_tables(const FolnerCouple& c) {
  RingTables t;
  t.d = c.group.d;
  t.nboxes = c.outer.count_u64();
  t.nbr.assign(t.nboxes * 2 * t.d, kEscape);
  for (uint64_t b = 0; b < t.nboxes; ++b) {
    ExponentVector site = c.outer.from_index(b);
    for (int a = 0; a < t.d; ++a) {
      for (int s = 0; s < 2; ++s) {
        ExponentVector n = site;
        n[a] += (s == 0 ? 1 : -1);
        t.nbr[b * 2 * t.d + 2 * a + s] = c.outer.contains(n) ? c.outer.index_of(n) : kEscape;
      }
    }
  }
  size_t off = 0;
  for (const auto& ms : c.modules) {
    t.offsets.push_back(off);
    off += ms.rank();
  }
  t.total_rank = off;
  t.sites.reserve(c.modules.size() * t.nboxes);
  for (const auto& ms : c.modules) {
    for (uint64_t b = 0; b < t.nboxes; ++b) {
      auto it = ms.site_coords.find(c.outer.from_index(b));
      if (it == ms.site_coords.end())
        throw VerificationError("module space window does not cover the outer box");
      t.sites.push_back(&it->second);
    }
  }
  uint64_t inner_count = c.inner.count_u64();
  t.inner_boxes.reserve(inner_count);
  for (uint64_t i = 0; i < inner_count; ++i)
    t.inner_boxes.push_back(c.outer.index_of(c.inner.from_index(i)));
  return t;
}

std::string render_escape(const FolnerCouple& c, const std::vector<uint8_t>& coords_concat,
                          const RingTables& t, const ExponentVector& out_site) {
  SemidirectElement el;
  for (size_t ci = 0; ci < c.modules.size(); ++ci) {
    const auto& ms = c.modules[ci];
    std::vector<uint8_t> cc(coords_concat.begin() + static_cast<long>(t.offsets[ci]),
                            coords_concat.begin() +
                                static_cast<long>(t.offsets[ci] + ms.rank()));
    el.module.push_back(ms.poly_from_coords(cc));
  }
  el.translation = out_site;
  return element_brief(c.group, GroupElement{el});
}

struct BitVec {
  std::vector<uint64_t> w;
  explicit BitVec(uint64_t n) : w((n + 63) / 64, 0) {}
  bool get(uint64_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  void set(uint64_t i) { w[i >> 6] |= uint64_t{1} << (i & 63); }
};

RingBfsResult ring_bfs_packed(const FolnerCouple& c, const RingTables& t, int64_t levels) {
  const size_t R = t.total_rank;
  const uint64_t total = t.nboxes << R;
  const uint64_t mod_mask = (R == 64) ? ~uint64_t{0} : ((uint64_t{1} << R) - 1);
  const size_t ncomp = c.modules.size();

  // Per-(component, box) lamp masks; characteristic 2 makes the move an
  // involution, so one XOR covers the generator and its inverse.
  std::vector<uint64_t> lamp(ncomp * t.nboxes, 0);
  for (size_t ci = 0; ci < ncomp; ++ci)
    for (uint64_t b = 0; b < t.nboxes; ++b) {
      const auto& sc = *t.sites[ci * t.nboxes + b];
      uint64_t m = 0;
      for (size_t r = 0; r < sc.size(); ++r)
        if (sc[r] & 1) m |= uint64_t{1} << (t.offsets[ci] + r);
      lamp[ci * t.nboxes + b] = m;
    }

  BitVec vis(total), cur(total), nxt(total);
  RingBfsResult res;
  for (uint64_t b : t.inner_boxes) {
    uint64_t lo = b << R, hi = lo + (uint64_t{1} << R);
    for (uint64_t s = lo; s < hi; ++s) {
      vis.set(s);
      cur.set(s);
    }
    res.states += uint64_t{1} << R;
  }

  const int moves_t = 2 * t.d;
  for (int64_t lvl = 1; lvl <= levels; ++lvl) {
    bool any = false;
    for (size_t wi = 0; wi < cur.w.size(); ++wi) {
      uint64_t bits = cur.w[wi];
      while (bits) {
        int bit = std::countr_zero(bits);
        bits &= bits - 1;
        uint64_t s = (static_cast<uint64_t>(wi) << 6) | static_cast<uint64_t>(bit);
        uint64_t box = s >> R;
        uint64_t modpart = s & mod_mask;
        for (int mv = 0; mv < moves_t; ++mv) {
          uint64_t nb = t.nbr[box * moves_t + mv];
          if (nb == kEscape) {
            res.containment_ok = false;
            if (res.witnesses.size() < 8) {
              ExponentVector site = c.outer.from_index(box);
              site[mv / 2] += (mv % 2 == 0 ? 1 : -1);
              std::vector<uint8_t> coords(R);
              for (size_t r = 0; r < R; ++r) coords[r] = (modpart >> r) & 1;
              res.witnesses.push_back(render_escape(c, coords, t, site));
            }
            continue;
          }
          uint64_t tgt = (nb << R) | modpart;
          if (!vis.get(tgt)) {
            vis.set(tgt);
            nxt.set(tgt);
            ++res.states;
            any = true;
          }
        }
        for (size_t ci = 0; ci < ncomp; ++ci) {
          uint64_t tgt = s ^ lamp[ci * t.nboxes + box];
          if (!vis.get(tgt)) {
            vis.set(tgt);
            nxt.set(tgt);
            ++res.states;
            any = true;
          }
        }
      }
    }
    std::swap(cur.w, nxt.w);
    std::fill(nxt.w.begin(), nxt.w.end(), 0);
    if (!res.containment_ok || !any) break;
  }
  return res;
}

RingBfsResult ring_bfs_generic(const FolnerCouple& c, const RingTables& t, int64_t levels,
                               uint64_t state_cap) {
  const size_t R = t.total_rank;
  const size_t ncomp = c.modules.size();
  std::vector<unsigned long> pmod;
  for (const auto& ms : c.modules) pmod.push_back(ms.p);

  auto key_of = [&](const std::vector<uint8_t>& coords, uint64_t box) {
    std::string k(reinterpret_cast<const char*>(coords.data()), coords.size());
    char buf[8];
    std::memcpy(buf, &box, 8);
    k.append(buf, 8);
    return k;
  };
  auto decode = [&](const std::string& k, std::vector<uint8_t>& coords, uint64_t& box) {
    coords.assign(k.begin(), k.begin() + static_cast<long>(R));
    std::memcpy(&box, k.data() + R, 8);
  };

  // Seed with the whole of Omega': every coordinate combination over every
  // inner site.
  mpz_class span = 1;
  for (const auto& ms : c.modules) span *= ms.span_size();
  mpz_class seed_total = span * static_cast<unsigned long>(t.inner_boxes.size());
  if (!seed_total.fits_ulong_p() || seed_total.get_ui() > state_cap)
    throw BudgetError("couple too large for the hashed verifier backend");

  std::unordered_set<std::string> visited;
  std::vector<std::string> cur, nxt;
  RingBfsResult res;
  {
    std::vector<uint8_t> coords(R, 0);
    std::vector<unsigned long> radix(R);
    size_t ci = 0, used = 0;
    for (size_t r = 0; r < R; ++r) {
      while (used >= c.modules[ci].rank()) {
        ++ci;
        used = 0;
      }
      radix[r] = pmod[ci];
      ++used;
    }
    bool done = false;
    while (!done) {
      for (uint64_t b : t.inner_boxes) {
        std::string k = key_of(coords, b);
        visited.insert(k);
        cur.push_back(std::move(k));
      }
      done = true;
      for (size_t r = 0; r < R; ++r) {
        coords[r] = static_cast<uint8_t>((coords[r] + 1) % radix[r]);
        if (coords[r] != 0) {
          done = false;
          break;
        }
      }
      if (R == 0) done = true;
    }
    res.states = visited.size();
  }

  const int moves_t = 2 * t.d;
  std::vector<uint8_t> coords;
  uint64_t box = 0;
  for (int64_t lvl = 1; lvl <= levels; ++lvl) {
    nxt.clear();
    for (const std::string& k : cur) {
      decode(k, coords, box);
      for (int mv = 0; mv < moves_t; ++mv) {
        uint64_t nb = t.nbr[box * moves_t + mv];
        if (nb == kEscape) {
          res.containment_ok = false;
          if (res.witnesses.size() < 8) {
            ExponentVector site = c.outer.from_index(box);
            site[mv / 2] += (mv % 2 == 0 ? 1 : -1);
            res.witnesses.push_back(render_escape(c, coords, t, site));
          }
          continue;
        }
        std::string k2 = key_of(coords, nb);
        if (visited.insert(k2).second) {
          ++res.states;
          nxt.push_back(std::move(k2));
        }
      }
      for (size_t ci = 0; ci < ncomp; ++ci) {
        const auto& sc = *t.sites[ci * t.nboxes + box];
        unsigned long p = pmod[ci];
        int dirs = (p == 2) ? 1 : 2;
        for (int dir = 0; dir < dirs; ++dir) {
          std::vector<uint8_t> c2 = coords;
          for (size_t r = 0; r < sc.size(); ++r) {
            size_t idx = t.offsets[ci] + r;
            uint32_t add = (dir == 0) ? sc[r] : static_cast<uint32_t>((p - sc[r]) % p);
            c2[idx] = static_cast<uint8_t>((c2[idx] + add) % p);
          }
          std::string k2 = key_of(c2, box);
          if (visited.insert(k2).second) {
            ++res.states;
            nxt.push_back(std::move(k2));
          }
        }
      }
      if (visited.size() > state_cap)
        throw BudgetError("hashed verifier backend exceeded its state budget");
    }
    std::swap(cur, nxt);
    if (!res.containment_ok || cur.empty()) break;
  }
  return res;
}

RingBfsResult explicit_bfs(const FolnerCouple& c, int64_t levels, uint64_t state_cap) {
  const GroupSpec& g = c.group;
  std::unordered_set<std::string> omega_keys;
  for (const auto& e : c.omega) omega_keys.insert(canonical_key(g, e));

  RingBfsResult res;
  std::unordered_set<std::string> visited;
  std::vector<GroupElement> cur, nxt;
  for (const auto& e : c.omega_prime) {
    std::string k = canonical_key(g, e);
    if (!visited.insert(k).second) continue;
    ++res.states;
    if (!omega_keys.count(k)) {
      res.containment_ok = false;
      if (res.witnesses.size() < 8) res.witnesses.push_back(element_brief(g, e));
      continue;
    }
    cur.push_back(e);
  }

  std::vector<GroupElement> gens = symmetric_generators(g);
  for (int64_t lvl = 1; lvl <= levels; ++lvl) {
    nxt.clear();
    for (const auto& el : cur) {
      for (const auto& gen : gens) {
        GroupElement prod = multiply(g, el, gen);
        std::string k = canonical_key(g, prod);
        if (!visited.insert(k).second) continue;
        ++res.states;
        if (visited.size() > state_cap)
          throw BudgetError("explicit verifier exceeded its state budget");
        if (!omega_keys.count(k)) {
          res.containment_ok = false;
          if (res.witnesses.size() < 8) res.witnesses.push_back(element_brief(g, prod));
          continue;  // escaped products are recorded, not expanded
        }
        nxt.push_back(std::move(prod));
      }
    }
    std::swap(cur, nxt);
    if (!res.containment_ok || cur.empty()) break;
  }
  return res;
}

double log_size_omega(const FolnerCouple& c) {
  if (c.kind == FolnerCouple::Kind::explicit_set)
    return std::log(std::max<double>(1.0, static_cast<double>(c.omega.size())));
  double ls = 0;
  for (const auto& ms : c.modules)
    ls += static_cast<double>(ms.rank()) * std::log(static_cast<double>(ms.p));
  ls += std::log(mpz_get_d(c.outer.size().get_mpz_t()));
  return ls;
}

}  // namespace

CoupleReport verify_couple(const FolnerCouple& couple, const VerifyOptions& opts) {
  CoupleReport rep;
  rep.size_omega = couple.size_omega();
  rep.size_omega_prime = couple.size_omega_prime();
  if (rep.size_omega == 0 || rep.size_omega_prime == 0)
    throw InputError("couples must be nonempty");
  rep.ratio = couple.ratio();

  int64_t levels = opts.ball_override >= 0 ? opts.ball_override : couple.m;

  if (couple.kind == FolnerCouple::Kind::ring) {
    RingTables tables = make_tables(couple);
    bool all_char2 = true;
    for (const auto& ms : couple.modules) all_char2 = all_char2 && ms.p == 2;
    uint64_t total_states = 0;
    bool packed_fits = all_char2 && tables.total_rank <= 56;
    if (packed_fits) {
      total_states = tables.nboxes << tables.total_rank;
      packed_fits = (total_states >> tables.total_rank) == tables.nboxes &&
                    total_states <= (uint64_t{1} << 31);
    }
    RingBfsResult bfs;
    if (packed_fits && !opts.force_generic) {
      rep.backend = "packed-bits";
      bfs = ring_bfs_packed(couple, tables, levels);
    } else {
      rep.backend = "hashed";
      bfs = ring_bfs_generic(couple, tables, levels, opts.generic_state_cap);
    }
    rep.containment_ok = bfs.containment_ok;
    rep.states_visited = bfs.states;
    rep.witnesses = std::move(bfs.witnesses);

    if (opts.check_sharpness) {
      // Corner probe: start at the inner corner with a trivial module part and
      // walk one axis for m+1 steps; the product must leave the outer box.
      SemidirectElement corner;
      for (const auto& ring : couple.group.rings) corner.module.push_back(ring->zero());
      corner.translation.assign(static_cast<size_t>(couple.group.d), couple.m);
      GroupElement w{corner};
      GroupElement step = generator(couple.group, 0, +1);
      for (int64_t i = 0; i < couple.m + 1; ++i) w = multiply(couple.group, w, step);
      const auto& out = std::get<SemidirectElement>(w);
      if (!couple.outer.contains(out.translation)) {
        rep.sharp = true;
        rep.sharp_witness = element_brief(couple.group, w);
      }
    }
  } else {
    rep.backend = "hashed";
    RingBfsResult bfs = explicit_bfs(couple, levels, opts.generic_state_cap);
    rep.containment_ok = bfs.containment_ok;
    rep.states_visited = bfs.states;
    rep.witnesses = std::move(bfs.witnesses);
    if (opts.check_sharpness) {
      RingBfsResult probe = explicit_bfs(couple, couple.m + 1, opts.generic_state_cap);
      if (!probe.containment_ok) {
        rep.sharp = true;
        rep.sharp_witness = probe.witnesses.empty() ? "" : probe.witnesses.front();
      }
    }
  }

  rep.ratio_ok = !opts.check_ratio || rep.ratio >= opts.required_ratio;
  if (opts.size_bound.enabled) {
    double lhs = log_size_omega(couple);
    double rhs = opts.size_bound.log_value(static_cast<double>(couple.m));
    rep.size_ok = lhs <= rhs + 1e-9;
  }
  rep.ok = rep.containment_ok && rep.ratio_ok && rep.size_ok;
  return rep;
}

FolnerCouple product_couple(const FolnerCouple& a, const FolnerCouple& b) {
  if (a.kind != FolnerCouple::Kind::ring || b.kind != FolnerCouple::Kind::ring)
    throw InputError("product couples need structured inputs");
  if (a.group.d != b.group.d || a.m != b.m)
    throw InputError("product couples need matching translation rank and scale");
  std::vector<RingPtr> rings = a.group.rings;
  rings.insert(rings.end(), b.group.rings.begin(), b.group.rings.end());
  FolnerCouple c;
  c.kind = FolnerCouple::Kind::ring;
  c.group = GroupSpec::ring_semidirect(std::move(rings), a.group.d);
  c.m = a.m;
  c.outer = a.outer;
  c.inner = a.inner;
  c.modules = a.modules;
  c.modules.insert(c.modules.end(), b.modules.begin(), b.modules.end());
  return c;
}

Projection projection_parse(const std::string& name) {
  if (name == "cursor") return Projection::cursor;
  if (name == "trivial") return Projection::trivial;
  throw InputError("unknown projection: " + name + " (expected cursor or trivial)");
}

std::string projection_name(Projection p) {
  return p == Projection::cursor ? "cursor" : "trivial";
}

namespace {

ExponentVector project_to_cursor(const GroupSpec& g, const GroupElement& e) {
  switch (g.family) {
    case GroupSpec::Family::free_abelian:
      return std::get<ExponentVector>(e);
    case GroupSpec::Family::wreath:
      return std::get<WreathElement>(e).cursor;
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p:
      return std::get<MagnusElement>(e).abelian;
    case GroupSpec::Family::ring_semidirect:
      return std::get<SemidirectElement>(e).translation;
    case GroupSpec::Family::cocycle_ext:
      throw InputError("the cursor projection is not defined for cocycle extensions");
  }
  throw InputError("unhandled family in projection");
}

// Distances from a source set in Z^d, breadth-first up to max_dist.
std::map<ExponentVector, int64_t> lattice_distances(const std::set<ExponentVector>& sources,
                                                    size_t d, int64_t max_dist) {
  std::map<ExponentVector, int64_t> dist;
  std::vector<ExponentVector> cur(sources.begin(), sources.end()), nxt;
  for (const auto& q : cur) dist.emplace(q, 0);
  for (int64_t lvl = 1; lvl <= max_dist; ++lvl) {
    nxt.clear();
    for (const auto& q : cur) {
      for (size_t a = 0; a < d; ++a) {
        for (int s = -1; s <= 1; s += 2) {
          ExponentVector n = q;
          n[a] += s;
          if (dist.emplace(n, lvl).second) nxt.push_back(std::move(n));
        }
      }
    }
    std::swap(cur, nxt);
    if (cur.empty()) break;
  }
  return dist;
}

}  // namespace

DescentResult quotient_descent(const FolnerCouple& couple, Projection proj, int64_t n) {
  if (n < 1) throw InputError("descent radius must be at least 1");

  // 1. Fiber counts of Omega' over the projection.
  size_t dq = 0;
  std::map<ExponentVector, mpz_class> fibers;
  if (proj == Projection::trivial) {
    fibers[ExponentVector{}] = couple.size_omega_prime();
  } else if (couple.kind == FolnerCouple::Kind::ring) {
    dq = static_cast<size_t>(couple.group.d);
    mpz_class per = 1;
    for (const auto& ms : couple.modules) per *= ms.span_size();
    uint64_t inner_count = couple.inner.count_u64();
    for (uint64_t i = 0; i < inner_count; ++i) fibers[couple.inner.from_index(i)] = per;
  } else {
    dq = static_cast<size_t>(couple.group.d);
    for (const auto& e : couple.omega_prime)
      fibers[project_to_cursor(couple.group, e)] += 1;
  }

  // 2. Threshold sweep: keep the level set minimizing |boundary| / |level|.
  std::set<mpz_class> thresholds{0};
  for (const auto& [q, cnt] : fibers) thresholds.insert(cnt);

  struct Candidate {
    std::set<ExponentVector> level, boundary;
    mpz_class tau;
  };
  std::optional<Candidate> best;
  size_t evaluated = 0;
  auto better = [](uint64_t b1, uint64_t l1, uint64_t b2, uint64_t l2) {
    // b1/l1 < b2/l2, exactly
    return static_cast<__int128>(b1) * l2 < static_cast<__int128>(b2) * l1;
  };

  for (const mpz_class& tau : thresholds) {
    std::set<ExponentVector> level;
    for (const auto& [q, cnt] : fibers)
      if (cnt > tau) level.insert(q);
    if (level.empty()) continue;
    ++evaluated;

    std::map<ExponentVector, int64_t> dist = lattice_distances(level, dq, 2 * n);
    std::set<ExponentVector> seeds;
    for (const auto& [q, dv] : dist)
      if (dv >= 1) seeds.insert(q);
    std::map<ExponentVector, int64_t> dist2 = lattice_distances(seeds, dq, n);
    std::set<ExponentVector> boundary;
    for (const auto& [q, dv] : dist) {
      if (dv > n) continue;  // outside L . ball_n
      auto it = dist2.find(q);
      if (it != dist2.end() && it->second <= n) boundary.insert(q);
    }

    uint64_t bsz = boundary.size(), lsz = level.size();
    if (!best || better(bsz, lsz, best->boundary.size(), best->level.size()) ||
        (!better(best->boundary.size(), best->level.size(), bsz, lsz) &&
         lsz > best->level.size())) {
      best = Candidate{std::move(level), std::move(boundary), tau};
    }
  }
  if (!best) throw VerificationError("descent found no nonempty level set");

  // 3. Assemble the explicit couple (L union boundary, L) in the quotient.
  DescentResult out;
  out.quotient = GroupSpec::free_abelian(static_cast<int>(dq));
  out.threshold = best->tau;
  out.num_thresholds = evaluated;
  out.level_size = best->level.size();
  out.boundary_size = best->boundary.size();
  out.boundary_ratio = static_cast<double>(best->boundary.size()) /
                       static_cast<double>(best->level.size());

  std::set<ExponentVector> omega = best->level;
  omega.insert(best->boundary.begin(), best->boundary.end());
  out.couple.kind = FolnerCouple::Kind::explicit_set;
  out.couple.group = out.quotient;
  out.couple.m = n;
  for (const auto& q : omega) out.couple.omega.emplace_back(q);
  for (const auto& q : best->level) out.couple.omega_prime.emplace_back(q);

  for (const auto& [q, cnt] : fibers) out.fiber_counts.emplace_back(ev_text(q), cnt);
  return out;
}

}  // namespace kw
