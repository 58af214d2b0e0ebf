#include "kw/groups.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "kw/errors.hpp"
#include "kw/rng.hpp"

namespace kw {

// ---------------------------------------------------------------------------
// Byte codec helpers (little-endian fixed-width integers, length-prefixed
// decimal strings for exact coefficients).
// ---------------------------------------------------------------------------

namespace {

void put_i64(std::string& out, int64_t v) {
  uint64_t u = static_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

int64_t get_i64(const std::string& s, size_t& pos) {
  if (pos + 8 > s.size()) throw InputError("truncated element key");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  pos += 8;
  return static_cast<int64_t>(u);
}

void put_u64(std::string& out, uint64_t v) { put_i64(out, static_cast<int64_t>(v)); }

uint64_t get_u64(const std::string& s, size_t& pos) { return static_cast<uint64_t>(get_i64(s, pos)); }

void put_ev(std::string& out, const ExponentVector& v) {
  for (int64_t x : v) put_i64(out, x);
}

ExponentVector get_ev(const std::string& s, size_t& pos, int rank) {
  ExponentVector v(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) v[static_cast<size_t>(i)] = get_i64(s, pos);
  return v;
}

void put_bytes(std::string& out, const std::string& b) {
  put_u64(out, b.size());
  out += b;
}

std::string get_bytes(const std::string& s, size_t& pos) {
  uint64_t n = get_u64(s, pos);
  if (pos + n > s.size()) throw InputError("truncated element key");
  std::string b = s.substr(pos, n);
  pos += n;
  return b;
}

void put_poly(std::string& out, const LaurentPolynomial& p) {
  put_u64(out, p.terms().size());
  for (const auto& [exps, coeff] : p.terms()) {
    put_ev(out, exps);
    put_bytes(out, coeff.get_str());
  }
}

LaurentPolynomial get_poly(const std::string& s, size_t& pos, int rank, const CoeffSpec& spec) {
  uint64_t n = get_u64(s, pos);
  LaurentPolynomial::TermMap terms;
  for (uint64_t i = 0; i < n; ++i) {
    ExponentVector e = get_ev(s, pos, rank);
    mpq_class c;
    if (c.set_str(get_bytes(s, pos), 10) != 0) throw InputError("bad coefficient in element key");
    c.canonicalize();
    terms.emplace(std::move(e), std::move(c));
  }
  return LaurentPolynomial::from_terms(rank, spec, terms);
}

// ---------------------------------------------------------------------------
// Modular value helpers
// ---------------------------------------------------------------------------

int64_t mod_reduce(int64_t v, int64_t k) {
  if (k == 0) return v;
  int64_t r = v % k;
  if (r < 0) r += k;
  return r;
}

QVec q_reduce(QVec q, const std::vector<int64_t>& orders) {
  if (q.size() != orders.size()) throw InputError("quotient element has wrong rank");
  for (size_t i = 0; i < q.size(); ++i) q[i] = mod_reduce(q[i], orders[i]);
  return q;
}

QVec q_add(const QVec& a, const QVec& b, const std::vector<int64_t>& orders) {
  QVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = mod_reduce(a[i] + b[i], orders[i]);
  return r;
}

QVec q_neg(const QVec& a, const std::vector<int64_t>& orders) {
  QVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = mod_reduce(-a[i], orders[i]);
  return r;
}

bool q_is_zero(const QVec& a) {
  return std::all_of(a.begin(), a.end(), [](int64_t x) { return x == 0; });
}

MVal mval_add(const MVal& a, const MVal& b, int64_t k) {
  MVal out = a;
  for (const auto& [site, val] : b) {
    int64_t v = mod_reduce(out.count(site) ? out[site] + val : val, k);
    if (v == 0)
      out.erase(site);
    else
      out[site] = v;
  }
  return out;
}

MVal mval_neg(const MVal& a, int64_t k) {
  MVal out;
  for (const auto& [site, val] : a) out[site] = mod_reduce(-val, k);
  return out;
}

MVal mval_translate(const MVal& a, const QVec& q, const std::vector<int64_t>& orders) {
  MVal out;
  for (const auto& [site, val] : a) out[q_add(site, q, orders)] = val;
  return out;
}

std::string qvec_str(const QVec& q) {
  std::string s = "(";
  for (size_t i = 0; i < q.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(q[i]);
  }
  return s + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// CocycleData
// ---------------------------------------------------------------------------

uint64_t CocycleData::q_size() const {
  uint64_t n = 1;
  for (int64_t o : q_orders) n *= static_cast<uint64_t>(o);
  return n;
}

MVal CocycleData::sigma(const QVec& a, const QVec& b) const {
  auto it = table.find({a, b});
  return it == table.end() ? MVal{} : it->second;
}

std::vector<QVec> CocycleData::enumerate_q() const {
  std::vector<QVec> out;
  QVec cur(q_orders.size(), 0);
  while (true) {
    out.push_back(cur);
    size_t i = 0;
    while (i < cur.size()) {
      if (++cur[i] < q_orders[i]) break;
      cur[i] = 0;
      ++i;
    }
    if (i == cur.size()) break;
    if (q_orders.empty()) break;
  }
  if (q_orders.empty()) out = {QVec{}};
  return out;
}

void CocycleData::validate() const {
  if (module_modulus < 2) throw InputError("cocycle module modulus must be at least 2");
  for (int64_t o : q_orders)
    if (o < 2) throw InputError("cocycle quotient orders must be at least 2");
  if (q_size() > (1u << 10)) throw InputError("cocycle quotient too large to validate exhaustively");
  for (const auto& [key, val] : table) {
    const auto& [a, b] = key;
    if (a.size() != q_orders.size() || b.size() != q_orders.size())
      throw InputError("cocycle table key has wrong rank");
    if (q_reduce(a, q_orders) != a || q_reduce(b, q_orders) != b)
      throw InputError("cocycle table key is not reduced");
    if ((q_is_zero(a) || q_is_zero(b)) && !val.empty())
      throw InputError("cocycle is not normalized: sigma must vanish when either argument is the identity");
    for (const auto& [site, v] : val) {
      if (site.size() != q_orders.size() || q_reduce(site, q_orders) != site)
        throw InputError("cocycle value has an unreduced support point");
      if (v <= 0 || v >= module_modulus) throw InputError("cocycle value out of range");
    }
  }
  std::vector<QVec> all = enumerate_q();
  for (const QVec& q1 : all)
    for (const QVec& q2 : all)
      for (const QVec& q3 : all) {
        MVal lhs = mval_add(mval_translate(sigma(q2, q3), q1, q_orders), sigma(q1, q_add(q2, q3, q_orders)),
                            module_modulus);
        MVal rhs = mval_add(sigma(q_add(q1, q2, q_orders), q3), sigma(q1, q2), module_modulus);
        if (lhs != rhs)
          throw InputError("cocycle identity fails at (" + qvec_str(q1) + "," + qvec_str(q2) + "," +
                           qvec_str(q3) + ")");
      }
}

std::shared_ptr<CocycleData> cocycle_demo() {
  auto data = std::make_shared<CocycleData>();
  data->q_orders = {2};
  data->module_modulus = 2;
  MVal v;
  v[QVec{0}] = 1;
  v[QVec{1}] = 1;
  data->table[{QVec{1}, QVec{1}}] = v;
  data->validate();
  return data;
}

// ---------------------------------------------------------------------------
// GroupSpec
// ---------------------------------------------------------------------------

GroupSpec GroupSpec::free_abelian(int d) {
  if (d < 0 || d > 16) throw InputError("free abelian rank out of range");
  GroupSpec s;
  s.family = Family::free_abelian;
  s.d = d;
  return s;
}

GroupSpec GroupSpec::lamplighter(int64_t k, int d) {
  if (k < 2) throw InputError("lamp modulus must be at least 2");
  if (d < 1 || d > 8) throw InputError("wreath base rank out of range");
  GroupSpec s;
  s.family = Family::wreath;
  s.d = d;
  s.lamp_modulus = k;
  return s;
}

GroupSpec GroupSpec::wreath_z(int d) {
  if (d < 1 || d > 8) throw InputError("wreath base rank out of range");
  GroupSpec s;
  s.family = Family::wreath;
  s.d = d;
  s.lamp_modulus = 0;
  return s;
}

GroupSpec GroupSpec::magnus_free_metabelian(int d) {
  if (d < 1 || d > 8) throw InputError("free metabelian rank out of range");
  GroupSpec s;
  s.family = Family::magnus_free;
  s.d = d;
  return s;
}

GroupSpec GroupSpec::magnus_p_metabelian(int d, int64_t k) {
  if (d < 1 || d > 8) throw InputError("metabelian rank out of range");
  if (k < 2) throw InputError("module modulus must be at least 2");
  GroupSpec s;
  s.family = Family::magnus_p;
  s.d = d;
  s.lamp_modulus = k;
  return s;
}

GroupSpec GroupSpec::ring_semidirect(std::vector<RingPtr> rings, int d) {
  if (rings.empty()) throw InputError("semidirect product needs at least one ring component");
  for (const auto& r : rings) {
    if (!r) throw InputError("null ring component");
    if (r->d() != d) throw InputError("ring component variable count must match translation rank");
  }
  GroupSpec s;
  s.family = Family::ring_semidirect;
  s.d = d;
  s.rings = std::move(rings);
  return s;
}

GroupSpec GroupSpec::cocycle_extension(std::shared_ptr<CocycleData> data) {
  if (!data) throw InputError("null cocycle data");
  data->validate();
  GroupSpec s;
  s.family = Family::cocycle_ext;
  s.d = 0;
  s.cocycle = std::move(data);
  return s;
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& args) {
  std::map<std::string, std::string> out;
  if (args.empty()) return out;
  size_t pos = 0;
  while (pos < args.size()) {
    size_t comma = args.find(',', pos);
    std::string item = args.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    size_t eq = item.find('=');
    if (eq == std::string::npos)
      out[""] = item;
    else
      out[item.substr(0, eq)] = item.substr(eq + 1);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int64_t kv_int(const std::map<std::string, std::string>& kv, const std::string& key, int64_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    // A bare value ("zd:3") stands for the primary parameter d.
    if (key == "d") {
      auto bare = kv.find("");
      if (bare != kv.end()) return std::stoll(bare->second);
    }
    return fallback;
  }
  return std::stoll(it->second);
}

}  // namespace

GroupSpec GroupSpec::parse(const std::string& text) {
  std::string fam = text, args;
  size_t colon = text.find(':');
  if (colon != std::string::npos) {
    fam = text.substr(0, colon);
    args = text.substr(colon + 1);
  }
  if (fam == "zd") {
    auto kv = parse_kv(args);
    return free_abelian(static_cast<int>(kv_int(kv, "d", 1)));
  }
  if (fam == "lamplighter") {
    auto kv = parse_kv(args);
    return lamplighter(kv_int(kv, "p", 2), static_cast<int>(kv_int(kv, "d", 1)));
  }
  if (fam == "wreath-z") {
    auto kv = parse_kv(args);
    return wreath_z(static_cast<int>(kv_int(kv, "d", 1)));
  }
  if (fam == "free-metabelian") {
    auto kv = parse_kv(args);
    return magnus_free_metabelian(static_cast<int>(kv_int(kv, "d", 2)));
  }
  if (fam == "p-metabelian") {
    auto kv = parse_kv(args);
    return magnus_p_metabelian(static_cast<int>(kv_int(kv, "d", 2)), kv_int(kv, "p", 2));
  }
  if (fam == "ring-semidirect") {
    if (args.empty()) throw InputError("ring-semidirect needs a presentation file path");
    ModulePresentation pres = load_presentation(args);
    if (pres.spec.kind != CoeffKind::prime_field)
      throw InputError("ring-semidirect presentation must have prime characteristic (char=p)");
    if (pres.ngens != 1)
      throw InputError("ring-semidirect presentation must have gens=1 (rows are ideal generators)");
    std::vector<LaurentPolynomial> gens;
    for (const auto& row : pres.relations) gens.push_back(row[0]);
    auto ring = std::make_shared<RingQuotient>(pres.d, pres.spec, std::move(gens));
    return ring_semidirect({ring}, pres.d);
  }
  if (fam == "cocycle-demo") return cocycle_extension(cocycle_demo());
  throw InputError("unknown group: \"" + text +
                   "\" (expected zd | lamplighter | wreath-z | free-metabelian | p-metabelian | "
                   "ring-semidirect:<file> | cocycle-demo)");
}

std::string GroupSpec::to_string() const {
  std::ostringstream os;
  switch (family) {
    case Family::free_abelian:
      os << "zd:d=" << d;
      break;
    case Family::wreath:
      if (lamp_modulus == 0)
        os << "wreath-z:d=" << d;
      else
        os << "lamplighter:p=" << lamp_modulus << ",d=" << d;
      break;
    case Family::magnus_free:
      os << "free-metabelian:d=" << d;
      break;
    case Family::magnus_p:
      os << "p-metabelian:d=" << d << ",p=" << lamp_modulus;
      break;
    case Family::ring_semidirect:
      os << "ring-semidirect:d=" << d << ",components=" << rings.size() << ",field="
         << rings[0]->field().to_string();
      break;
    case Family::cocycle_ext:
      os << "cocycle-ext:|Q|=" << cocycle->q_size() << ",k=" << cocycle->module_modulus;
      break;
  }
  return os.str();
}

int GroupSpec::num_generators() const {
  switch (family) {
    case Family::free_abelian: return d;
    case Family::wreath: return d + 1;
    case Family::magnus_free:
    case Family::magnus_p: return d;
    case Family::ring_semidirect: return d + static_cast<int>(rings.size());
    case Family::cocycle_ext: return static_cast<int>(cocycle->q_rank()) + 1;
  }
  return 0;
}

std::string GroupSpec::generator_name(int i) const {
  if (i < 0 || i >= num_generators()) throw InputError("generator index out of range");
  switch (family) {
    case Family::free_abelian: return "t" + std::to_string(i + 1);
    case Family::wreath: return i < d ? "t" + std::to_string(i + 1) : "a";
    case Family::magnus_free:
    case Family::magnus_p: return "s" + std::to_string(i + 1);
    case Family::ring_semidirect:
      return i < d ? "t" + std::to_string(i + 1) : "u" + std::to_string(i - d + 1);
    case Family::cocycle_ext:
      return i < static_cast<int>(cocycle->q_rank()) ? "q" + std::to_string(i + 1) : "a";
  }
  return "?";
}

CoeffSpec GroupSpec::module_coeffs() const {
  switch (family) {
    case Family::wreath:
      return lamp_modulus == 0 ? CoeffSpec::Z()
                               : (is_prime_u64(static_cast<unsigned long>(lamp_modulus))
                                      ? CoeffSpec::Fp(static_cast<unsigned long>(lamp_modulus))
                                      : CoeffSpec::Zk(static_cast<unsigned long>(lamp_modulus)));
    case Family::magnus_free: return CoeffSpec::Z();
    case Family::magnus_p:
      return is_prime_u64(static_cast<unsigned long>(lamp_modulus))
                 ? CoeffSpec::Fp(static_cast<unsigned long>(lamp_modulus))
                 : CoeffSpec::Zk(static_cast<unsigned long>(lamp_modulus));
    case Family::ring_semidirect: return rings[0]->field();
    default: throw InputError("group family has no module coefficient ring");
  }
}

// ---------------------------------------------------------------------------
// Element operations
// ---------------------------------------------------------------------------

namespace {

int64_t lamp_norm(int64_t v, int64_t k) { return k == 0 ? v : mod_reduce(v, k); }

void lamp_accumulate(std::map<ExponentVector, int64_t>& lamps, const ExponentVector& site, int64_t dv,
                     int64_t k) {
  auto it = lamps.find(site);
  int64_t v = lamp_norm((it == lamps.end() ? 0 : it->second) + dv, k);
  if (v == 0) {
    if (it != lamps.end()) lamps.erase(it);
  } else if (it == lamps.end()) {
    lamps.emplace(site, v);
  } else {
    it->second = v;
  }
}

const char* family_tag(GroupSpec::Family f) {
  switch (f) {
    case GroupSpec::Family::free_abelian: return "free abelian";
    case GroupSpec::Family::wreath: return "wreath";
    case GroupSpec::Family::magnus_free: return "free metabelian";
    case GroupSpec::Family::magnus_p: return "torsion metabelian";
    case GroupSpec::Family::ring_semidirect: return "ring semidirect";
    case GroupSpec::Family::cocycle_ext: return "cocycle extension";
  }
  return "?";
}

[[noreturn]] void wrong_element(const GroupSpec& spec) {
  throw InputError(std::string("element does not belong to a ") + family_tag(spec.family) + " group");
}

}  // namespace

GroupElement identity_element(const GroupSpec& spec) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: return ev_zero(spec.d);
    case GroupSpec::Family::wreath: return WreathElement{{}, ev_zero(spec.d)};
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      MagnusElement e;
      e.abelian = ev_zero(spec.d);
      e.module.assign(static_cast<size_t>(spec.d),
                      LaurentPolynomial::zero(spec.d, spec.module_coeffs()));
      return e;
    }
    case GroupSpec::Family::ring_semidirect: {
      SemidirectElement e;
      for (const auto& r : spec.rings) e.module.push_back(r->zero());
      e.translation = ev_zero(spec.d);
      return e;
    }
    case GroupSpec::Family::cocycle_ext:
      return CocycleElement{{}, QVec(spec.cocycle->q_rank(), 0)};
  }
  throw InputError("unknown group family");
}

bool is_identity(const GroupSpec& spec, const GroupElement& g) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      const auto* v = std::get_if<ExponentVector>(&g);
      if (!v) wrong_element(spec);
      return ev_is_zero(*v);
    }
    case GroupSpec::Family::wreath: {
      const auto* w = std::get_if<WreathElement>(&g);
      if (!w) wrong_element(spec);
      return w->lamps.empty() && ev_is_zero(w->cursor);
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      const auto* m = std::get_if<MagnusElement>(&g);
      if (!m) wrong_element(spec);
      if (!ev_is_zero(m->abelian)) return false;
      for (const auto& p : m->module)
        if (!p.is_zero()) return false;
      return true;
    }
    case GroupSpec::Family::ring_semidirect: {
      const auto* s = std::get_if<SemidirectElement>(&g);
      if (!s) wrong_element(spec);
      if (!ev_is_zero(s->translation)) return false;
      for (const auto& p : s->module)
        if (!p.is_zero()) return false;
      return true;
    }
    case GroupSpec::Family::cocycle_ext: {
      const auto* c = std::get_if<CocycleElement>(&g);
      if (!c) wrong_element(spec);
      return c->mval.empty() && q_is_zero(c->q);
    }
  }
  throw InputError("unknown group family");
}

GroupElement multiply(const GroupSpec& spec, const GroupElement& a, const GroupElement& b) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      const auto* x = std::get_if<ExponentVector>(&a);
      const auto* y = std::get_if<ExponentVector>(&b);
      if (!x || !y) wrong_element(spec);
      return ev_add(*x, *y);
    }
    case GroupSpec::Family::wreath: {
      const auto* x = std::get_if<WreathElement>(&a);
      const auto* y = std::get_if<WreathElement>(&b);
      if (!x || !y) wrong_element(spec);
      WreathElement out;
      out.cursor = ev_add(x->cursor, y->cursor);
      out.lamps = x->lamps;
      for (const auto& [site, val] : y->lamps)
        lamp_accumulate(out.lamps, ev_add(site, x->cursor), val, spec.lamp_modulus);
      return out;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      const auto* x = std::get_if<MagnusElement>(&a);
      const auto* y = std::get_if<MagnusElement>(&b);
      if (!x || !y) wrong_element(spec);
      MagnusElement out;
      out.abelian = ev_add(x->abelian, y->abelian);
      out.module.reserve(x->module.size());
      for (size_t i = 0; i < x->module.size(); ++i)
        out.module.push_back(lp_add(x->module[i], lp_shift(y->module[i], x->abelian)));
      return out;
    }
    case GroupSpec::Family::ring_semidirect: {
      const auto* x = std::get_if<SemidirectElement>(&a);
      const auto* y = std::get_if<SemidirectElement>(&b);
      if (!x || !y) wrong_element(spec);
      SemidirectElement out;
      out.translation = ev_add(x->translation, y->translation);
      out.module.reserve(spec.rings.size());
      // Canonical forms are closed under addition (reduction is linear), so
      // the sum below needs no further reduction.
      for (size_t c = 0; c < spec.rings.size(); ++c)
        out.module.push_back(lp_add(x->module[c], spec.rings[c]->shift_nf(y->module[c], x->translation)));
      return out;
    }
    case GroupSpec::Family::cocycle_ext: {
      const auto* x = std::get_if<CocycleElement>(&a);
      const auto* y = std::get_if<CocycleElement>(&b);
      if (!x || !y) wrong_element(spec);
      const CocycleData& data = *spec.cocycle;
      CocycleElement out;
      out.q = q_add(x->q, y->q, data.q_orders);
      out.mval = mval_add(mval_add(x->mval, mval_translate(y->mval, x->q, data.q_orders),
                                   data.module_modulus),
                          data.sigma(x->q, y->q), data.module_modulus);
      return out;
    }
  }
  throw InputError("unknown group family");
}

GroupElement inverse(const GroupSpec& spec, const GroupElement& g) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      const auto* v = std::get_if<ExponentVector>(&g);
      if (!v) wrong_element(spec);
      return ev_neg(*v);
    }
    case GroupSpec::Family::wreath: {
      const auto* w = std::get_if<WreathElement>(&g);
      if (!w) wrong_element(spec);
      WreathElement out;
      out.cursor = ev_neg(w->cursor);
      for (const auto& [site, val] : w->lamps)
        out.lamps.emplace(ev_sub(site, w->cursor), lamp_norm(-val, spec.lamp_modulus));
      return out;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      const auto* m = std::get_if<MagnusElement>(&g);
      if (!m) wrong_element(spec);
      MagnusElement out;
      out.abelian = ev_neg(m->abelian);
      out.module.reserve(m->module.size());
      for (const auto& p : m->module) out.module.push_back(lp_neg(lp_shift(p, out.abelian)));
      return out;
    }
    case GroupSpec::Family::ring_semidirect: {
      const auto* s = std::get_if<SemidirectElement>(&g);
      if (!s) wrong_element(spec);
      SemidirectElement out;
      out.translation = ev_neg(s->translation);
      out.module.reserve(spec.rings.size());
      for (size_t c = 0; c < spec.rings.size(); ++c)
        out.module.push_back(lp_neg(spec.rings[c]->shift_nf(s->module[c], out.translation)));
      return out;
    }
    case GroupSpec::Family::cocycle_ext: {
      const auto* c = std::get_if<CocycleElement>(&g);
      if (!c) wrong_element(spec);
      const CocycleData& data = *spec.cocycle;
      CocycleElement out;
      out.q = q_neg(c->q, data.q_orders);
      out.mval = mval_add(mval_neg(mval_translate(c->mval, out.q, data.q_orders), data.module_modulus),
                          mval_neg(data.sigma(out.q, c->q), data.module_modulus), data.module_modulus);
      return out;
    }
  }
  throw InputError("unknown group family");
}

MagnusElement magnus_generator(const GroupSpec& spec, int i, int sign) {
  if (spec.family != GroupSpec::Family::magnus_free && spec.family != GroupSpec::Family::magnus_p)
    throw InputError("matrix-model generators exist only for the metabelian matrix families");
  if (i < 0 || i >= spec.d) throw InputError("generator index out of range");
  CoeffSpec coeffs = spec.module_coeffs();
  MagnusElement e;
  e.abelian = ev_zero(spec.d);
  e.module.assign(static_cast<size_t>(spec.d), LaurentPolynomial::zero(spec.d, coeffs));
  ExponentVector unit = ev_unit(spec.d, i);
  if (sign >= 0) {
    e.abelian = unit;
    e.module[static_cast<size_t>(i)] = LaurentPolynomial::constant(spec.d, coeffs, mpq_class(1));
  } else {
    e.abelian = ev_neg(unit);
    e.module[static_cast<size_t>(i)] =
        LaurentPolynomial::monomial(spec.d, coeffs, e.abelian, mpq_class(-1));
  }
  return e;
}

GroupElement generator(const GroupSpec& spec, int i, int sign) {
  if (i < 0 || i >= spec.num_generators()) throw InputError("generator index out of range");
  int64_t dv = sign >= 0 ? 1 : -1;
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      ExponentVector v = ev_unit(spec.d, i);
      return sign >= 0 ? v : ev_neg(v);
    }
    case GroupSpec::Family::wreath: {
      WreathElement e;
      e.cursor = ev_zero(spec.d);
      if (i < spec.d) {
        e.cursor = ev_unit(spec.d, i);
        if (sign < 0) e.cursor = ev_neg(e.cursor);
      } else {
        lamp_accumulate(e.lamps, ev_zero(spec.d), dv, spec.lamp_modulus);
      }
      return e;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p:
      return magnus_generator(spec, i, sign);
    case GroupSpec::Family::ring_semidirect: {
      SemidirectElement e;
      e.translation = ev_zero(spec.d);
      for (const auto& r : spec.rings) e.module.push_back(r->zero());
      if (i < spec.d) {
        e.translation = ev_unit(spec.d, i);
        if (sign < 0) e.translation = ev_neg(e.translation);
      } else {
        size_t c = static_cast<size_t>(i - spec.d);
        e.module[c] = spec.rings[c]->nf(LaurentPolynomial::constant(
            spec.rings[c]->doubled_vars(), spec.rings[c]->field(), mpq_class(dv)));
      }
      return e;
    }
    case GroupSpec::Family::cocycle_ext: {
      const CocycleData& data = *spec.cocycle;
      int r = static_cast<int>(data.q_rank());
      CocycleElement base{{}, QVec(data.q_rank(), 0)};
      if (i < r) {
        base.q[static_cast<size_t>(i)] = 1;
        return sign >= 0 ? GroupElement(base) : inverse(spec, GroupElement(base));
      }
      int64_t v = mod_reduce(dv, data.module_modulus);
      if (v != 0) base.mval[QVec(data.q_rank(), 0)] = v;
      return base;
    }
  }
  throw InputError("unknown group family");
}

std::vector<GroupElement> symmetric_generators(const GroupSpec& spec) {
  std::vector<GroupElement> out;
  std::set<std::string> seen;
  for (int i = 0; i < spec.num_generators(); ++i)
    for (int sign : {+1, -1}) {
      GroupElement g = generator(spec, i, sign);
      std::string key = canonical_key(spec, g);
      if (seen.insert(key).second) out.push_back(std::move(g));
    }
  return out;
}

GroupElement word_evaluate(const GroupSpec& spec, const std::vector<int>& word) {
  GroupElement acc = identity_element(spec);
  int ng = spec.num_generators();
  for (int letter : word) {
    if (letter == 0 || std::abs(letter) > ng)
      throw InputError("word letter out of range: " + std::to_string(letter));
    acc = multiply(spec, acc, generator(spec, std::abs(letter) - 1, letter > 0 ? +1 : -1));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string canonical_key(const GroupSpec& spec, const GroupElement& g) {
  std::string out;
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      const auto* v = std::get_if<ExponentVector>(&g);
      if (!v) wrong_element(spec);
      put_ev(out, *v);
      return out;
    }
    case GroupSpec::Family::wreath: {
      const auto* w = std::get_if<WreathElement>(&g);
      if (!w) wrong_element(spec);
      put_ev(out, w->cursor);
      put_u64(out, w->lamps.size());
      for (const auto& [site, val] : w->lamps) {
        put_ev(out, site);
        put_i64(out, val);
      }
      return out;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      const auto* m = std::get_if<MagnusElement>(&g);
      if (!m) wrong_element(spec);
      put_ev(out, m->abelian);
      for (const auto& p : m->module) put_poly(out, p);
      return out;
    }
    case GroupSpec::Family::ring_semidirect: {
      const auto* s = std::get_if<SemidirectElement>(&g);
      if (!s) wrong_element(spec);
      put_ev(out, s->translation);
      for (const auto& p : s->module) put_poly(out, p);
      return out;
    }
    case GroupSpec::Family::cocycle_ext: {
      const auto* c = std::get_if<CocycleElement>(&g);
      if (!c) wrong_element(spec);
      put_ev(out, c->q);
      put_u64(out, c->mval.size());
      for (const auto& [site, val] : c->mval) {
        put_ev(out, site);
        put_i64(out, val);
      }
      return out;
    }
  }
  throw InputError("unknown group family");
}

GroupElement decode_key(const GroupSpec& spec, const std::string& key) {
  size_t pos = 0;
  GroupElement result = identity_element(spec);
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      result = get_ev(key, pos, spec.d);
      break;
    }
    case GroupSpec::Family::wreath: {
      WreathElement w;
      w.cursor = get_ev(key, pos, spec.d);
      uint64_t n = get_u64(key, pos);
      for (uint64_t i = 0; i < n; ++i) {
        ExponentVector site = get_ev(key, pos, spec.d);
        int64_t val = get_i64(key, pos);
        w.lamps.emplace(std::move(site), val);
      }
      result = std::move(w);
      break;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      MagnusElement m;
      m.abelian = get_ev(key, pos, spec.d);
      CoeffSpec coeffs = spec.module_coeffs();
      for (int i = 0; i < spec.d; ++i) m.module.push_back(get_poly(key, pos, spec.d, coeffs));
      result = std::move(m);
      break;
    }
    case GroupSpec::Family::ring_semidirect: {
      SemidirectElement s;
      s.translation = get_ev(key, pos, spec.d);
      for (const auto& r : spec.rings)
        s.module.push_back(get_poly(key, pos, r->doubled_vars(), r->field()));
      result = std::move(s);
      break;
    }
    case GroupSpec::Family::cocycle_ext: {
      CocycleElement c;
      c.q = get_ev(key, pos, static_cast<int>(spec.cocycle->q_rank()));
      uint64_t n = get_u64(key, pos);
      for (uint64_t i = 0; i < n; ++i) {
        QVec site = get_ev(key, pos, static_cast<int>(spec.cocycle->q_rank()));
        int64_t val = get_i64(key, pos);
        c.mval.emplace(std::move(site), val);
      }
      result = std::move(c);
      break;
    }
  }
  if (pos != key.size()) throw InputError("trailing bytes in element key");
  return result;
}

std::string element_brief(const GroupSpec& spec, const GroupElement& g) {
  std::ostringstream os;
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      os << ev_to_string(std::get<ExponentVector>(g));
      break;
    }
    case GroupSpec::Family::wreath: {
      const auto& w = std::get<WreathElement>(g);
      os << "cursor=" << ev_to_string(w.cursor) << " lamps={";
      bool first = true;
      for (const auto& [site, val] : w.lamps) {
        if (!first) os << ", ";
        first = false;
        os << ev_to_string(site) << ":" << val;
      }
      os << "}";
      break;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      const auto& m = std::get<MagnusElement>(g);
      os << "ab=" << ev_to_string(m.abelian) << " m=[";
      for (size_t i = 0; i < m.module.size(); ++i) {
        if (i) os << "; ";
        os << lp_to_string(m.module[i]);
      }
      os << "]";
      break;
    }
    case GroupSpec::Family::ring_semidirect: {
      const auto& s = std::get<SemidirectElement>(g);
      os << "t=" << ev_to_string(s.translation) << " m=[";
      for (size_t i = 0; i < s.module.size(); ++i) {
        if (i) os << "; ";
        os << lp_to_string(s.module[i]);
      }
      os << "]";
      break;
    }
    case GroupSpec::Family::cocycle_ext: {
      const auto& c = std::get<CocycleElement>(g);
      os << "q=" << qvec_str(c.q) << " m={";
      bool first = true;
      for (const auto& [site, val] : c.mval) {
        if (!first) os << ", ";
        first = false;
        os << qvec_str(site) << ":" << val;
      }
      os << "}";
      break;
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Wreath-style embedding for cocycle extensions
// ---------------------------------------------------------------------------

KKImage kk_embed(const GroupSpec& spec, const GroupElement& g) {
  if (spec.family != GroupSpec::Family::cocycle_ext)
    throw InputError("the wreath-style embedding applies to cocycle extensions only");
  const CocycleData& data = *spec.cocycle;
  const auto* ge = std::get_if<CocycleElement>(&g);
  if (!ge) wrong_element(spec);
  KKImage out;
  out.cursor = ge->q;
  for (const QVec& q : data.enumerate_q()) {
    GroupElement section_q = CocycleElement{{}, q};
    GroupElement moved = multiply(spec, g, section_q);
    GroupElement section_gq = CocycleElement{{}, q_add(ge->q, q, data.q_orders)};
    GroupElement fiber = multiply(spec, inverse(spec, section_gq), moved);
    const auto& fe = std::get<CocycleElement>(fiber);
    if (!q_is_zero(fe.q)) throw VerificationError("embedding fiber escaped the module");
    if (!fe.mval.empty()) out.table[q] = fe.mval;
  }
  return out;
}

KKImage kk_multiply(const GroupSpec& spec, const KKImage& a, const KKImage& b) {
  if (spec.family != GroupSpec::Family::cocycle_ext)
    throw InputError("the wreath-style embedding applies to cocycle extensions only");
  const CocycleData& data = *spec.cocycle;
  KKImage out;
  out.cursor = q_add(a.cursor, b.cursor, data.q_orders);
  auto lookup = [](const std::map<QVec, MVal>& t, const QVec& q) {
    auto it = t.find(q);
    return it == t.end() ? MVal{} : it->second;
  };
  for (const QVec& q : data.enumerate_q()) {
    MVal val = mval_add(lookup(a.table, q_add(b.cursor, q, data.q_orders)), lookup(b.table, q),
                        data.module_modulus);
    if (!val.empty()) out.table[q] = val;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relation checking
// ---------------------------------------------------------------------------

RelationSpec RelationSpec::parse(const std::string& text) {
  std::string kind = text, args;
  size_t colon = text.find(':');
  if (colon != std::string::npos) {
    kind = text.substr(0, colon);
    args = text.substr(colon + 1);
  }
  auto kv = parse_kv(args);
  RelationSpec r;
  if (kind == "metabelian") {
    r.kind = Kind::metabelian;
  } else if (kind == "commutator-power") {
    r.kind = Kind::commutator_power;
    r.k = kv_int(kv, "k", 0);
    if (r.k < 1) throw InputError("commutator-power needs k>=1");
  } else if (kind == "generator-order") {
    r.kind = Kind::generator_order;
    r.gen_index = static_cast<int>(kv_int(kv, "i", 1)) - 1;
    r.k = kv_int(kv, "k", 0);
    if (r.k < 1) throw InputError("generator-order needs k>=1");
  } else {
    throw InputError("unknown relation pattern: \"" + text +
                     "\" (expected metabelian | commutator-power:k=.. | generator-order:i=..,k=..)");
  }
  return r;
}

std::string RelationSpec::to_string() const {
  switch (kind) {
    case Kind::metabelian: return "metabelian";
    case Kind::commutator_power: return "commutator-power:k=" + std::to_string(k);
    case Kind::generator_order:
      return "generator-order:i=" + std::to_string(gen_index + 1) + ",k=" + std::to_string(k);
  }
  return "?";
}

namespace {

std::string word_str(const std::vector<int>& w) {
  std::string s = "[";
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w[i]);
  }
  return s + "]";
}

}  // namespace

RelationReport verify_relations(const GroupSpec& spec, const RelationSpec& rel, uint64_t trials,
                                uint64_t seed, int max_word_len) {
  if (max_word_len < 1) throw InputError("maximum word length must be positive");
  Xoshiro256pp rng(seed);
  int ng = spec.num_generators();
  auto random_word = [&]() {
    std::vector<int> w;
    uint32_t len = rng.below(static_cast<uint32_t>(max_word_len) + 1);
    w.reserve(len);
    for (uint32_t i = 0; i < len; ++i) {
      int idx = static_cast<int>(rng.below(static_cast<uint32_t>(ng))) + 1;
      w.push_back(rng.below(2) ? idx : -idx);
    }
    return w;
  };
  auto commutator = [&](const GroupElement& a, const GroupElement& b) {
    return multiply(spec, multiply(spec, inverse(spec, a), inverse(spec, b)), multiply(spec, a, b));
  };
  auto power = [&](const GroupElement& a, int64_t k) {
    GroupElement acc = identity_element(spec);
    for (int64_t i = 0; i < k; ++i) acc = multiply(spec, acc, a);
    return acc;
  };

  RelationReport report;
  for (uint64_t t = 0; t < trials; ++t) {
    ++report.trials;
    bool holds = true;
    std::string witness;
    switch (rel.kind) {
      case RelationSpec::Kind::metabelian: {
        std::vector<int> w1 = random_word(), w2 = random_word(), w3 = random_word(), w4 = random_word();
        GroupElement inner1 = commutator(word_evaluate(spec, w1), word_evaluate(spec, w2));
        GroupElement inner2 = commutator(word_evaluate(spec, w3), word_evaluate(spec, w4));
        holds = is_identity(spec, commutator(inner1, inner2));
        if (!holds)
          witness = "w1=" + word_str(w1) + " w2=" + word_str(w2) + " w3=" + word_str(w3) +
                    " w4=" + word_str(w4);
        break;
      }
      case RelationSpec::Kind::commutator_power: {
        std::vector<int> w1 = random_word(), w2 = random_word();
        GroupElement c = commutator(word_evaluate(spec, w1), word_evaluate(spec, w2));
        holds = is_identity(spec, power(c, rel.k));
        if (!holds) witness = "w1=" + word_str(w1) + " w2=" + word_str(w2);
        break;
      }
      case RelationSpec::Kind::generator_order: {
        if (rel.gen_index < 0 || rel.gen_index >= ng) throw InputError("generator index out of range");
        holds = is_identity(spec, power(generator(spec, rel.gen_index, +1), rel.k));
        if (!holds) witness = "generator " + spec.generator_name(rel.gen_index);
        break;
      }
    }
    if (!holds) {
      ++report.violations;
      if (report.witnesses.size() < 8) report.witnesses.push_back(witness);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Derived-subgroup module presentations
// ---------------------------------------------------------------------------

namespace {

// Pairs (i,j), i<j, in lexicographic order; returns the position of (i,j).
int pair_index(int i, int j, int d) {
  int idx = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      if (a == i && b == j) return idx;
      ++idx;
    }
  throw InputError("pair index out of range");
}

// The commutation constraints among the matrix-model commutator generators
// c_{ij}: for every i<j<k,
//   (X_i - 1) c_{jk} - (X_j - 1) c_{ik} + (X_k - 1) c_{ij} = 0.
std::vector<std::vector<LaurentPolynomial>> jacobi_rows(int d, const CoeffSpec& spec) {
  int ngens = d * (d - 1) / 2;
  std::vector<std::vector<LaurentPolynomial>> rows;
  auto var_minus_one = [&](int v) {
    return lp_sub(LaurentPolynomial::monomial(d, spec, ev_unit(d, v), mpq_class(1)),
                  LaurentPolynomial::constant(d, spec, mpq_class(1)));
  };
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        std::vector<LaurentPolynomial> row(static_cast<size_t>(ngens),
                                           LaurentPolynomial::zero(d, spec));
        row[static_cast<size_t>(pair_index(j, k, d))] = var_minus_one(i);
        row[static_cast<size_t>(pair_index(i, k, d))] = lp_neg(var_minus_one(j));
        row[static_cast<size_t>(pair_index(i, j, d))] = var_minus_one(k);
        rows.push_back(std::move(row));
      }
  return rows;
}

}  // namespace

ModulePresentation derived_module_presentation(const GroupSpec& spec) {
  ModulePresentation pres;
  pres.d = spec.d;
  pres.spec = CoeffSpec::Z();
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: {
      // Abelian group: trivial derived subgroup, presented as the zero module.
      pres.ngens = 1;
      pres.relations = {{LaurentPolynomial::constant(spec.d, pres.spec, mpq_class(1))}};
      return pres;
    }
    case GroupSpec::Family::wreath: {
      pres.ngens = 1;
      if (spec.lamp_modulus != 0) {
        pres.declared_torsion = static_cast<unsigned long>(spec.lamp_modulus);
        pres.relations = {
            {LaurentPolynomial::constant(spec.d, pres.spec, mpq_class(spec.lamp_modulus))}};
      }
      return pres;
    }
    case GroupSpec::Family::magnus_free:
    case GroupSpec::Family::magnus_p: {
      if (spec.d == 1) {
        pres.ngens = 1;
        pres.relations = {{LaurentPolynomial::constant(spec.d, pres.spec, mpq_class(1))}};
        return pres;
      }
      pres.ngens = spec.d * (spec.d - 1) / 2;
      pres.relations = jacobi_rows(spec.d, pres.spec);
      if (spec.family == GroupSpec::Family::magnus_p) {
        pres.declared_torsion = static_cast<unsigned long>(spec.lamp_modulus);
        for (int g = 0; g < pres.ngens; ++g) {
          std::vector<LaurentPolynomial> row(static_cast<size_t>(pres.ngens),
                                             LaurentPolynomial::zero(spec.d, pres.spec));
          row[static_cast<size_t>(g)] =
              LaurentPolynomial::constant(spec.d, pres.spec, mpq_class(spec.lamp_modulus));
          pres.relations.push_back(std::move(row));
        }
      }
      return pres;
    }
    case GroupSpec::Family::ring_semidirect: {
      const CoeffSpec field = spec.rings[0]->field();
      for (const auto& r : spec.rings)
        if (!(r->field() == field))
          throw InputError("mixed coefficient fields in a semidirect product have no single presentation");
      pres.spec = field;
      pres.ngens = static_cast<int>(spec.rings.size());
      for (size_t c = 0; c < spec.rings.size(); ++c) {
        for (const auto& gen : spec.rings[c]->laurent_gens()) {
          std::vector<LaurentPolynomial> row(spec.rings.size(),
                                             LaurentPolynomial::zero(spec.d, field));
          row[c] = lp_convert(gen, field);
          pres.relations.push_back(std::move(row));
        }
      }
      return pres;
    }
    case GroupSpec::Family::cocycle_ext:
      throw InputError("finite cocycle extensions have no Laurent module presentation");
  }
  throw InputError("unknown group family");
}

bool group_is_infinite(const GroupSpec& spec) {
  if (spec.family == GroupSpec::Family::cocycle_ext) return false;
  if (spec.family == GroupSpec::Family::free_abelian) return spec.d >= 1;
  return true;
}

}  // namespace kw
