#include "kw/grobner.hpp"

#include <algorithm>
#include <list>
#include <set>

namespace kw {

MonomialOrder MonomialOrder::BlockElim(int n, std::vector<int> first) {
  std::sort(first.begin(), first.end());
  first.erase(std::unique(first.begin(), first.end()), first.end());
  for (int v : first)
    if (v < 0 || v >= n) throw InputError("block variable index out of range");
  return {OrderKind::block, n, std::move(first)};
}

namespace {

// grevlex on a subsequence of coordinates; empty `sel` means all.
int cmp_grevlex(const ExponentVector& a, const ExponentVector& b, const std::vector<int>& sel) {
  int64_t da = 0, db = 0;
  if (sel.empty()) {
    da = ev_total_degree(a);
    db = ev_total_degree(b);
  } else {
    for (int v : sel) {
      da += a[v];
      db += b[v];
    }
  }
  if (da != db) return da < db ? -1 : 1;
  if (sel.empty()) {
    for (size_t i = a.size(); i-- > 0;) {
      if (a[i] != b[i]) return a[i] > b[i] ? -1 : 1;
    }
    return 0;
  }
  for (size_t k = sel.size(); k-- > 0;) {
    int v = sel[k];
    if (a[v] != b[v]) return a[v] > b[v] ? -1 : 1;
  }
  return 0;
}

int cmp_lex(const ExponentVector& a, const ExponentVector& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  return 0;
}

}  // namespace

bool MonomialOrder::less(const ExponentVector& a, const ExponentVector& b) const {
  if (static_cast<int>(a.size()) != nvars || static_cast<int>(b.size()) != nvars)
    throw InputError("exponent rank does not match order");
  switch (kind) {
    case OrderKind::grevlex:
      return cmp_grevlex(a, b, {}) < 0;
    case OrderKind::lex:
      return cmp_lex(a, b) < 0;
    case OrderKind::block: {
      int c = cmp_grevlex(a, b, block);
      if (c != 0) return c < 0;
      std::vector<int> rest;
      for (int i = 0; i < nvars; ++i)
        if (!std::binary_search(block.begin(), block.end(), i)) rest.push_back(i);
      return cmp_grevlex(a, b, rest) < 0;
    }
  }
  throw InputError("bad order kind");
}

std::string MonomialOrder::to_string() const {
  switch (kind) {
    case OrderKind::grevlex: return "grevlex";
    case OrderKind::lex: return "lex";
    case OrderKind::block: {
      std::string s = "block[";
      for (size_t i = 0; i < block.size(); ++i) s += (i ? "," : "") + std::to_string(block[i]);
      return s + "]";
    }
  }
  return "?";
}

PolyIdeal PolyIdeal::make(int nvars, CoeffSpec spec, std::vector<LaurentPolynomial> gens) {
  PolyIdeal ideal;
  ideal.nvars = nvars;
  ideal.spec = spec;
  for (auto& g : gens) {
    if (g.is_zero()) continue;
    if (g.rank() != nvars) throw InputError("generator rank mismatch");
    if (g.spec() != spec) throw InputError("generator coefficient spec mismatch");
    if (!g.is_polynomial()) throw InputError("ideal generator has negative exponents: " + lp_to_string(g));
    ideal.gens.push_back(std::move(g));
  }
  return ideal;
}

bool GroebnerBasis::contains_one() const {
  for (const auto& g : basis)
    if (g.term_count() == 1 && ev_is_zero(g.terms().begin()->first)) return true;
  return false;
}

ExponentVector leading_exponent(const LaurentPolynomial& p, const MonomialOrder& ord) {
  if (p.is_zero()) throw InputError("leading term of zero polynomial");
  const ExponentVector* best = nullptr;
  for (const auto& [e, c] : p.terms())
    if (!best || ord.less(*best, e)) best = &e;
  return *best;
}

mpq_class leading_coeff(const LaurentPolynomial& p, const MonomialOrder& ord) {
  return p.coeff(leading_exponent(p, ord));
}

namespace {

LaurentPolynomial make_monic(const LaurentPolynomial& p, const MonomialOrder& ord) {
  if (p.is_zero()) return p;
  mpq_class lc = leading_coeff(p, ord);
  if (lc == 1) return p;
  return lp_scale(p, cf_inv(p.spec(), lc));
}

// Full reduction against a list of monic polynomials with cached leading
// exponents.  Deterministic: the first divisor in list order is used.
LaurentPolynomial reduce_full(const LaurentPolynomial& f,
                              const std::vector<LaurentPolynomial>& basis,
                              const std::vector<ExponentVector>& lts, const MonomialOrder& ord,
                              const LaurentPolynomial* skip = nullptr) {
  LaurentPolynomial rem(f.rank(), f.spec());
  LaurentPolynomial h = f;
  while (!h.is_zero()) {
    ExponentVector t = leading_exponent(h, ord);
    mpq_class c = h.coeff(t);
    bool reduced = false;
    for (size_t i = 0; i < basis.size(); ++i) {
      if (&basis[i] == skip || basis[i].is_zero()) continue;
      if (ev_divides(lts[i], t)) {
        h = lp_sub(h, lp_scale(lp_shift(basis[i], ev_sub(t, lts[i])), c));
        reduced = true;
        break;
      }
    }
    if (!reduced) {
      rem = lp_add(rem, LaurentPolynomial::monomial(f.rank(), f.spec(), t, c));
      h = lp_sub(h, LaurentPolynomial::monomial(f.rank(), f.spec(), t, c));
    }
  }
  return rem;
}

struct Pair {
  size_t i, j;
  ExponentVector lcm;
  int64_t deg;
};

bool pair_before(const Pair& a, const Pair& b) {
  if (a.deg != b.deg) return a.deg < b.deg;
  if (a.lcm != b.lcm) return a.lcm < b.lcm;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

}  // namespace

GroebnerBasis buchberger(const PolyIdeal& ideal, const MonomialOrder& ord,
                         const GrobnerLimits& lim) {
  if (!ideal.spec.is_field())
    throw InputError("groebner requires field coefficients, got " + ideal.spec.to_string());
  if (ord.nvars != ideal.nvars) throw InputError("order rank does not match ideal");

  std::vector<LaurentPolynomial> G;
  std::vector<ExponentVector> lts;
  std::list<Pair> pairs;

  auto lcm_of = [&](size_t i, size_t j) { return ev_lcm(lts[i], lts[j]); };
  auto coprime = [&](size_t i, size_t j) {
    const auto &a = lts[i], &b = lts[j];
    for (size_t k = 0; k < a.size(); ++k)
      if (a[k] > 0 && b[k] > 0) return false;
    return true;
  };

  // Gebauer-Moeller update for a newly appended basis element t.
  auto update_pairs = [&](size_t t) {
    // Drop old pairs strictly covered by the new leading term.
    for (auto it = pairs.begin(); it != pairs.end();) {
      if (ev_divides(lts[t], it->lcm) && lcm_of(it->i, t) != it->lcm &&
          lcm_of(it->j, t) != it->lcm)
        it = pairs.erase(it);
      else
        ++it;
    }
    struct Cand {
      size_t i;
      ExponentVector lcm;
      bool drop = false;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < t; ++i)
      if (!G[i].is_zero()) cands.push_back({i, lcm_of(i, t), false});
    // M criterion: drop candidates whose lcm is a proper multiple of another.
    for (auto& a : cands)
      for (auto& b : cands) {
        if (a.i == b.i || a.drop || b.drop) continue;
        if (a.lcm != b.lcm && ev_divides(b.lcm, a.lcm)) a.drop = true;
      }
    // F criterion: one representative per lcm value; prefer a coprime pair,
    // which lets the whole class be dropped (first Buchberger criterion).
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.lcm != b.lcm) return a.lcm < b.lcm;
      return a.i < b.i;
    });
    for (size_t a = 0; a < cands.size();) {
      size_t b = a;
      while (b < cands.size() && cands[b].lcm == cands[a].lcm) ++b;
      bool any_coprime = false;
      for (size_t k = a; k < b; ++k)
        if (!cands[k].drop && coprime(cands[k].i, t)) any_coprime = true;
      bool kept = false;
      for (size_t k = a; k < b; ++k) {
        if (cands[k].drop) continue;
        if (any_coprime || kept)
          cands[k].drop = true;
        else
          kept = true;
      }
      a = b;
    }
    for (auto& c : cands)
      if (!c.drop) pairs.push_back({c.i, t, c.lcm, ev_total_degree(c.lcm)});
  };

  auto append = [&](const LaurentPolynomial& p) {
    G.push_back(make_monic(p, ord));
    lts.push_back(leading_exponent(G.back(), ord));
    if (G.size() > lim.max_basis) throw BudgetError("groebner basis size budget exceeded");
    update_pairs(G.size() - 1);
  };

  // Deterministic start: sorted, interreduced input.
  std::vector<LaurentPolynomial> in = ideal.gens;
  std::sort(in.begin(), in.end(), [&](const LaurentPolynomial& a, const LaurentPolynomial& b) {
    return ord.less(leading_exponent(a, ord), leading_exponent(b, ord));
  });
  for (const auto& g : in) {
    LaurentPolynomial r = reduce_full(g, G, lts, ord);
    if (!r.is_zero()) append(r);
  }

  size_t steps = 0;
  while (!pairs.empty()) {
    if (++steps > lim.max_pair_steps) throw BudgetError("groebner pair budget exceeded");
    auto best = pairs.begin();
    for (auto it = std::next(pairs.begin()); it != pairs.end(); ++it)
      if (pair_before(*it, *best)) best = it;
    Pair pr = *best;
    pairs.erase(best);
    LaurentPolynomial s = lp_sub(lp_shift(G[pr.i], ev_sub(pr.lcm, lts[pr.i])),
                                 lp_shift(G[pr.j], ev_sub(pr.lcm, lts[pr.j])));
    LaurentPolynomial r = reduce_full(s, G, lts, ord);
    if (!r.is_zero()) append(r);
  }

  // Minimalize: drop elements whose leading term another one divides.
  std::vector<char> keep(G.size(), 1);
  for (size_t i = 0; i < G.size(); ++i)
    for (size_t j = 0; j < G.size(); ++j) {
      if (i == j || !keep[i] || !keep[j]) continue;
      if (ev_divides(lts[j], lts[i]) && (lts[j] != lts[i] || j < i)) {
        keep[i] = 0;
        break;
      }
    }
  std::vector<LaurentPolynomial> minimal;
  std::vector<ExponentVector> mlts;
  for (size_t i = 0; i < G.size(); ++i)
    if (keep[i]) {
      minimal.push_back(G[i]);
      mlts.push_back(lts[i]);
    }
  // Tail-reduce every element against the others until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < minimal.size(); ++i) {
      LaurentPolynomial r = reduce_full(minimal[i], minimal, mlts, ord, &minimal[i]);
      r = make_monic(r, ord);
      if (r != minimal[i]) {
        minimal[i] = r;
        changed = true;
      }
    }
  }
  std::vector<LaurentPolynomial> final_basis;
  for (auto& g : minimal)
    if (!g.is_zero()) final_basis.push_back(g);
  std::sort(final_basis.begin(), final_basis.end(),
            [&](const LaurentPolynomial& a, const LaurentPolynomial& b) {
              return ord.less(leading_exponent(a, ord), leading_exponent(b, ord));
            });

  GroebnerBasis gb;
  gb.order = ord;
  gb.spec = ideal.spec;
  gb.nvars = ideal.nvars;
  gb.basis = std::move(final_basis);
  return gb;
}

LaurentPolynomial normal_form(const LaurentPolynomial& p, const GroebnerBasis& gb) {
  if (p.rank() != gb.nvars) throw InputError("normal_form rank mismatch");
  if (p.spec() != gb.spec) throw InputError("normal_form coefficient spec mismatch");
  if (!p.is_polynomial()) throw InputError("normal_form input has negative exponents");
  std::vector<ExponentVector> lts;
  lts.reserve(gb.basis.size());
  for (const auto& g : gb.basis) lts.push_back(leading_exponent(g, gb.order));
  return reduce_full(p, gb.basis, lts, gb.order);
}

PolyIdeal saturate(const PolyIdeal& ideal, const LaurentPolynomial& f, const GrobnerLimits& lim) {
  if (f.is_zero()) throw InputError("saturation by zero");
  if (f.rank() != ideal.nvars || f.spec() != ideal.spec)
    throw InputError("saturation element incompatible with ideal");
  int n = ideal.nvars;
  auto lift = [&](const LaurentPolynomial& p) {
    LaurentPolynomial::TermMap terms;
    for (const auto& [e, c] : p.terms()) {
      ExponentVector e2 = e;
      e2.push_back(0);
      terms.emplace(std::move(e2), c);
    }
    return LaurentPolynomial::from_terms(n + 1, ideal.spec, terms);
  };
  std::vector<LaurentPolynomial> gens2;
  for (const auto& g : ideal.gens) gens2.push_back(lift(g));
  LaurentPolynomial tf = lp_shift(lift(f), ev_unit(n + 1, n));
  gens2.push_back(lp_sub(tf, LaurentPolynomial::constant(n + 1, ideal.spec, 1)));
  PolyIdeal J = PolyIdeal::make(n + 1, ideal.spec, std::move(gens2));
  return eliminate(J, {n}, lim);
}

PolyIdeal eliminate(const PolyIdeal& ideal, const std::vector<int>& vars,
                    const GrobnerLimits& lim) {
  MonomialOrder ord = MonomialOrder::BlockElim(ideal.nvars, vars);
  GroebnerBasis gb = buchberger(ideal, ord, lim);
  std::vector<int> rest;
  for (int i = 0; i < ideal.nvars; ++i)
    if (!std::binary_search(ord.block.begin(), ord.block.end(), i)) rest.push_back(i);
  std::vector<LaurentPolynomial> kept;
  for (const auto& g : gb.basis) {
    bool touches = false;
    for (const auto& [e, c] : g.terms()) {
      for (int v : ord.block)
        if (e[v] != 0) {
          touches = true;
          break;
        }
      if (touches) break;
    }
    if (touches) continue;
    LaurentPolynomial::TermMap terms;
    for (const auto& [e, c] : g.terms()) {
      ExponentVector e2(rest.size());
      for (size_t k = 0; k < rest.size(); ++k) e2[k] = e[rest[k]];
      terms.emplace(std::move(e2), c);
    }
    kept.push_back(
        LaurentPolynomial::from_terms(static_cast<int>(rest.size()), ideal.spec, terms));
  }
  return PolyIdeal::make(static_cast<int>(rest.size()), ideal.spec, std::move(kept));
}

PolyIdeal laurent_contract(int nvars, CoeffSpec spec,
                           const std::vector<LaurentPolynomial>& laurent_gens,
                           const GrobnerLimits& lim) {
  std::vector<LaurentPolynomial> shifted;
  for (const auto& g : laurent_gens) {
    if (g.is_zero()) continue;
    if (g.rank() != nvars) throw InputError("laurent generator rank mismatch");
    LaurentPolynomial h = g.spec() == spec ? g : lp_convert(g, spec);
    ExponentVector mn = h.support_min();
    ExponentVector up(nvars, 0);
    for (int i = 0; i < nvars; ++i) up[i] = mn[i] < 0 ? -mn[i] : 0;
    shifted.push_back(lp_shift(h, up));
  }
  PolyIdeal I0 = PolyIdeal::make(nvars, spec, std::move(shifted));
  if (I0.gens.empty()) return I0;
  return saturate(I0, LaurentPolynomial::monomial(nvars, spec, ExponentVector(nvars, 1)), lim);
}

DimensionResult ideal_dimension(const GroebnerBasis& gb) {
  DimensionResult res;
  if (gb.contains_one()) {
    res.empty = true;
    return res;
  }
  int n = gb.nvars;
  if (n > 24) throw InputError("ideal_dimension supports at most 24 variables");
  std::vector<uint32_t> supports;
  supports.reserve(gb.basis.size());
  for (const auto& g : gb.basis) {
    ExponentVector lt = leading_exponent(g, gb.order);
    uint32_t m = 0;
    for (int i = 0; i < n; ++i)
      if (lt[i] > 0) m |= 1u << i;
    supports.push_back(m);
  }
  for (int size = n; size >= 0; --size) {
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (__builtin_popcount(mask) != size) continue;
      bool ok = true;
      for (uint32_t s : supports)
        if ((s & ~mask) == 0) {
          ok = false;
          break;
        }
      if (ok) {
        res.dimension = size;
        for (int i = 0; i < n; ++i)
          if (mask & (1u << i)) res.witness.push_back(i);
        return res;
      }
    }
  }
  throw InputError("unreachable: no independent set found");
}

}  // namespace kw
