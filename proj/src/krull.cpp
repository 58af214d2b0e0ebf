#include "kw/krull.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kw {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<unsigned long> prime_factors(unsigned long k) {
  std::vector<unsigned long> out;
  for (unsigned long p = 2; p * p <= k; ++p)
    if (k % p == 0) {
      out.push_back(p);
      while (k % p == 0) k /= p;
    }
  if (k > 1) out.push_back(k);
  return out;
}

LaurentPolynomial det(const std::vector<std::vector<const LaurentPolynomial*>>& m, int rank,
                      CoeffSpec spec) {
  size_t n = m.size();
  if (n == 0) return LaurentPolynomial::constant(rank, spec, 1);
  if (n == 1) return *m[0][0];
  LaurentPolynomial acc = LaurentPolynomial::zero(rank, spec);
  for (size_t j = 0; j < n; ++j) {
    if (m[0][j]->is_zero()) continue;
    std::vector<std::vector<const LaurentPolynomial*>> sub(n - 1);
    for (size_t r = 1; r < n; ++r)
      for (size_t c = 0; c < n; ++c)
        if (c != j) sub[r - 1].push_back(m[r][c]);
    LaurentPolynomial term = lp_mul(*m[0][j], det(sub, rank, spec));
    acc = (j % 2 == 0) ? lp_add(acc, term) : lp_sub(acc, term);
  }
  return acc;
}

ModulePresentation convert_presentation(const ModulePresentation& pres, CoeffSpec to) {
  ModulePresentation out = pres;
  out.spec = to;
  for (auto& row : out.relations)
    for (auto& p : row) p = lp_convert(p, to);
  return out;
}

}  // namespace

ModulePresentation parse_presentation(std::istream& in) {
  ModulePresentation pres;
  bool have_header = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!have_header) {
      std::istringstream ls(line);
      std::string tok;
      ls >> tok;
      if (tok != "ring")
        throw InputError("presentation line " + std::to_string(lineno) + ": expected 'ring' header");
      bool saw_char = false, saw_d = false, saw_gens = false;
      while (ls >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
          throw InputError("presentation header: bad token '" + tok + "'");
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "char") {
          saw_char = true;
          if (val == "0")
            pres.spec = CoeffSpec::Q();
          else if (val == "Z" || val == "z")
            pres.spec = CoeffSpec::Z();
          else
            pres.spec = CoeffSpec::Fp(std::stoul(val));
        } else if (key == "d") {
          saw_d = true;
          pres.d = std::stoi(val);
        } else if (key == "gens") {
          saw_gens = true;
          pres.ngens = std::stoi(val);
        } else if (key == "torsion") {
          unsigned long k = std::stoul(val);
          if (k < 2) throw InputError("torsion exponent must be >= 2");
          pres.declared_torsion = k;
        } else {
          throw InputError("presentation header: unknown key '" + key + "'");
        }
      }
      if (!saw_char || !saw_d || !saw_gens)
        throw InputError("presentation header must set char=, d=, gens=");
      if (pres.d < 0 || pres.d > 12) throw InputError("presentation d out of range");
      if (pres.ngens < 0) throw InputError("presentation gens out of range");
      if (pres.spec.kind == CoeffKind::prime_field && !pres.declared_torsion)
        pres.declared_torsion = pres.spec.modulus;
      have_header = true;
      continue;
    }
    std::vector<LaurentPolynomial> row;
    size_t start = 0;
    while (start <= line.size()) {
      auto comma = line.find(',', start);
      std::string cell =
          trim(comma == std::string::npos ? line.substr(start) : line.substr(start, comma - start));
      if (cell.empty()) throw InputError("presentation line " + std::to_string(lineno) + ": empty entry");
      row.push_back(lp_parse(cell, pres.d, pres.spec));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(row.size()) != pres.ngens)
      throw InputError("presentation line " + std::to_string(lineno) + ": expected " +
                       std::to_string(pres.ngens) + " entries, got " + std::to_string(row.size()));
    pres.relations.push_back(std::move(row));
  }
  if (!have_header) throw InputError("presentation file has no header");
  return pres;
}

ModulePresentation parse_presentation_text(const std::string& text) {
  std::istringstream in(text);
  return parse_presentation(in);
}

ModulePresentation load_presentation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open presentation file: " + path);
  return parse_presentation(in);
}

std::string dim_status_name(DimStatus s) {
  switch (s) {
    case DimStatus::exact: return "exact";
    case DimStatus::upper_bound: return "upper_bound";
    case DimStatus::not_computed: return "not_computed";
  }
  return "?";
}

std::vector<LaurentPolynomial> fitting_ideal0(const ModulePresentation& pres) {
  int n = pres.ngens;
  if (n == 0) return {LaurentPolynomial::constant(pres.d, pres.spec, 1)};
  if (n > 6) throw InputError("fitting_ideal0 supports at most 6 generators");
  int r = static_cast<int>(pres.relations.size());
  if (r < n) return {};
  std::vector<LaurentPolynomial> minors;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<const LaurentPolynomial*>> sub(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sub[i].push_back(&pres.relations[pick[i]][j]);
    LaurentPolynomial m = det(sub, pres.d, pres.spec);
    if (!m.is_zero()) minors.push_back(std::move(m));
    int i = n - 1;
    while (i >= 0 && pick[i] == r - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return minors;
}

std::optional<int> module_krull_dim(const ModulePresentation& pres) {
  if (!pres.spec.is_field())
    throw InputError("module_krull_dim needs field coefficients; use krull_report for Z");
  auto fitt = fitting_ideal0(pres);
  PolyIdeal contracted = laurent_contract(pres.d, pres.spec, fitt);
  GroebnerBasis gb = buchberger(contracted, MonomialOrder::Grevlex(pres.d));
  DimensionResult dim = ideal_dimension(gb);
  if (dim.empty) return std::nullopt;
  return dim.dimension;
}

KrullReport krull_report(const ModulePresentation& pres, bool group_infinite,
                         std::vector<unsigned long> primes) {
  KrullReport rep;
  rep.group_infinite = group_infinite;
  auto maxopt = [](std::optional<int> a, std::optional<int> b) {
    if (!a) return b;
    if (!b) return a;
    return std::optional<int>(std::max(*a, *b));
  };
  switch (pres.spec.kind) {
    case CoeffKind::rationals: {
      // Field coefficients: the module lives over Q[X^+-1], no integral fiber,
      // so krull0 is the module dimension itself and there is no torsion part.
      auto dim = module_krull_dim(pres);
      rep.krull_module = dim;
      rep.module_status = DimStatus::exact;
      rep.krull0 = dim;
      rep.krull0_status = DimStatus::exact;
      rep.krullt = std::nullopt;
      rep.krullt_status = DimStatus::exact;
      break;
    }
    case CoeffKind::prime_field: {
      auto dim = module_krull_dim(pres);
      rep.krull_module = dim;
      rep.module_status = DimStatus::exact;
      rep.krull0 = std::nullopt;
      rep.krull0_status = DimStatus::exact;
      rep.krullt = dim;
      rep.krullt_status = DimStatus::exact;
      rep.primes_used = {pres.spec.modulus};
      if (dim) rep.best_prime = pres.spec.modulus;
      break;
    }
    case CoeffKind::integers: {
      // A single-term generator with coefficient +-1 is a unit of the Laurent
      // group ring, so the fitting ideal is the unit ideal over every
      // coefficient field: the module is zero and all parts are exact.
      bool unit_over_z = false;
      for (const auto& g : fitting_ideal0(pres)) {
        if (g.terms().size() != 1) continue;
        const mpq_class& c = g.terms().begin()->second;
        if (c == 1 || c == -1) {
          unit_over_z = true;
          break;
        }
      }
      if (unit_over_z) {
        rep.krull0 = std::nullopt;
        rep.krull0_status = DimStatus::exact;
        rep.krullt = std::nullopt;
        rep.krullt_status = DimStatus::exact;
        rep.krull_module = std::nullopt;
        rep.module_status = DimStatus::exact;
        break;
      }
      auto dimQ = module_krull_dim(convert_presentation(pres, CoeffSpec::Q()));
      rep.krull0 = dimQ ? std::optional<int>(*dimQ + 1) : std::nullopt;
      rep.krull0_status = DimStatus::exact;
      if (primes.empty() && pres.declared_torsion)
        primes = prime_factors(*pres.declared_torsion);
      std::sort(primes.begin(), primes.end());
      primes.erase(std::unique(primes.begin(), primes.end()), primes.end());
      rep.primes_used = primes;
      if (primes.empty()) {
        rep.krullt_status = DimStatus::not_computed;
      } else {
        std::optional<int> best;
        for (unsigned long p : primes) {
          auto dim = module_krull_dim(convert_presentation(pres, CoeffSpec::Fp(p)));
          if (dim && (!best || *dim > *best)) {
            best = dim;
            rep.best_prime = p;
          }
        }
        rep.krullt = best;
        rep.krullt_status =
            pres.declared_torsion ? DimStatus::exact : DimStatus::upper_bound;
      }
      rep.krull_module = maxopt(rep.krull0, rep.krullt);
      if (pres.declared_torsion)
        rep.module_status = DimStatus::exact;
      else if (rep.krull0 && *rep.krull0 == pres.d + 1)
        rep.module_status = DimStatus::exact;  // torsion dimension is at most d
      else if (rep.krullt_status == DimStatus::not_computed)
        rep.module_status = DimStatus::not_computed;
      else
        rep.module_status = DimStatus::upper_bound;
      break;
    }
    case CoeffKind::mod_ring:
      throw InputError("mod_ring presentations are not supported; declare torsion over Z");
  }
  rep.krull_group = group_krull_dim(rep);
  return rep;
}

int group_krull_dim(const KrullReport& report) {
  if (report.krull_module && *report.krull_module >= 1) return *report.krull_module;
  return report.group_infinite ? 1 : 0;
}

bool monomials_independent(int d, CoeffSpec field,
                           const std::vector<LaurentPolynomial>& ideal_gens,
                           const std::vector<ExponentVector>& family) {
  if (!field.is_field()) throw InputError("independence certificate needs field coefficients");
  if (family.empty()) return true;
  int j = static_cast<int>(family.size());
  int N = d + j;
  std::vector<LaurentPolynomial> gens;
  for (const auto& g : ideal_gens) {
    if (g.is_zero()) continue;
    LaurentPolynomial h = g.spec() == field ? g : lp_convert(g, field);
    ExponentVector mn = h.support_min();
    ExponentVector up(d, 0);
    for (int i = 0; i < d; ++i) up[i] = mn[i] < 0 ? -mn[i] : 0;
    h = lp_shift(h, up);
    LaurentPolynomial::TermMap terms;
    for (const auto& [e, c] : h.terms()) {
      ExponentVector e2 = e;
      e2.resize(N, 0);
      terms.emplace(std::move(e2), c);
    }
    gens.push_back(LaurentPolynomial::from_terms(N, field, terms));
  }
  for (int i = 0; i < j; ++i) {
    const ExponentVector& m = family[i];
    if (static_cast<int>(m.size()) != d) throw InputError("monomial rank mismatch");
    if (ev_is_zero(m)) return false;  // constant monomial is never transcendental
    ExponentVector lhs(N, 0), rhs(N, 0);
    for (int v = 0; v < d; ++v) {
      if (m[v] < 0)
        lhs[v] = -m[v];
      else
        rhs[v] = m[v];
    }
    lhs[d + i] = 1;
    gens.push_back(lp_sub(LaurentPolynomial::monomial(N, field, lhs),
                          LaurentPolynomial::monomial(N, field, rhs)));
  }
  PolyIdeal J = PolyIdeal::make(N, field, std::move(gens));
  ExponentVector prod(N, 0);
  for (int v = 0; v < d; ++v) prod[v] = 1;
  PolyIdeal sat = saturate(J, LaurentPolynomial::monomial(N, field, prod));
  std::vector<int> xs(d);
  for (int v = 0; v < d; ++v) xs[v] = v;
  PolyIdeal elim = eliminate(sat, xs);
  return elim.gens.empty();
}

MonomialFamily find_transcendental_monomials(int d, CoeffSpec field,
                                             const std::vector<LaurentPolynomial>& ideal_gens,
                                             int target, int64_t max_norm) {
  MonomialFamily fam;
  fam.certified = true;
  if (target <= 0) return fam;
  PolyIdeal contracted = laurent_contract(d, field, ideal_gens);
  GroebnerBasis gb = buchberger(contracted, MonomialOrder::Grevlex(d));
  DimensionResult dim = ideal_dimension(gb);
  if (dim.empty) throw InputError("transcendental monomial search over the unit ideal");
  for (int64_t norm = 1; norm <= max_norm; ++norm) {
    for (const auto& cand : ev_norm_shell(d, norm)) {
      if (static_cast<int>(fam.monomials.size()) == target) break;
      auto trial = fam.monomials;
      trial.push_back(cand);
      if (monomials_independent(d, field, ideal_gens, trial)) fam.monomials = std::move(trial);
    }
    if (static_cast<int>(fam.monomials.size()) == target) break;
    if (static_cast<int>(fam.monomials.size()) == dim.dimension) break;
  }
  if (static_cast<int>(fam.monomials.size()) < target)
    throw DimensionDeficitError(
        "only " + std::to_string(fam.monomials.size()) + " independent monomials exist (target " +
            std::to_string(target) + ", quotient dimension " + std::to_string(dim.dimension) + ")",
        fam);
  return fam;
}

std::string witness_kind_name(WitnessKind k) {
  switch (k) {
    case WitnessKind::none: return "none";
    case WitnessKind::lamplighter: return "lamplighter";
    case WitnessKind::Z_wr_Z: return "Z_wr_Z";
    case WitnessKind::B2p: return "B2p";
  }
  return "?";
}

SubgroupWitness special_subgroup_witness(const ModulePresentation& pres,
                                         std::vector<unsigned long> primes) {
  KrullReport rep = krull_report(pres, true, std::move(primes));
  SubgroupWitness w;
  auto fitt = fitting_ideal0(pres);
  if (rep.krull0 && *rep.krull0 >= 2) {
    w.kind = WitnessKind::Z_wr_Z;
    std::vector<LaurentPolynomial> gq;
    for (const auto& g : fitt) gq.push_back(lp_convert(g, CoeffSpec::Q()));
    w.family = find_transcendental_monomials(pres.d, CoeffSpec::Q(), gq, 1);
    return w;
  }
  if (rep.krullt && *rep.krullt >= 1 && rep.best_prime) {
    unsigned long p = *rep.best_prime;
    std::vector<LaurentPolynomial> gp;
    for (const auto& g : fitt) gp.push_back(lp_convert(g, CoeffSpec::Fp(p)));
    w.prime = p;
    if (*rep.krullt >= 2) {
      w.kind = WitnessKind::B2p;
      w.family = find_transcendental_monomials(pres.d, CoeffSpec::Fp(p), gp, 2);
    } else {
      w.kind = WitnessKind::lamplighter;
      w.family = find_transcendental_monomials(pres.d, CoeffSpec::Fp(p), gp, 1);
    }
    return w;
  }
  w.kind = WitnessKind::none;
  return w;
}

}  // namespace kw
