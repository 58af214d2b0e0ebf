#include "kw/laurent.hpp"

#include <algorithm>
#include <cctype>

namespace kw {

std::vector<ExponentVector> ev_norm_shell(int rank, int64_t norm) {
  std::vector<ExponentVector> out;
  if (rank <= 0 || norm <= 0) return out;
  ExponentVector v(rank, -norm);
  while (true) {
    if (ev_max_norm(v) == norm) out.push_back(v);
    int i = rank - 1;
    while (i >= 0 && v[i] == norm) v[i--] = -norm;
    if (i < 0) break;
    ++v[i];
  }
  auto nnz = [](const ExponentVector& a) {
    return std::count_if(a.begin(), a.end(), [](int64_t x) { return x != 0; });
  };
  auto nneg = [](const ExponentVector& a) {
    return std::count_if(a.begin(), a.end(), [](int64_t x) { return x < 0; });
  };
  std::sort(out.begin(), out.end(), [&](const ExponentVector& a, const ExponentVector& b) {
    auto za = nnz(a), zb = nnz(b);
    if (za != zb) return za < zb;
    auto na = nneg(a), nb = nneg(b);
    if (na != nb) return na < nb;
    return a > b;
  });
  return out;
}

LaurentPolynomial LaurentPolynomial::constant(int rank, CoeffSpec spec, const mpq_class& c) {
  return monomial(rank, spec, ev_zero(rank), c);
}

LaurentPolynomial LaurentPolynomial::monomial(int rank, CoeffSpec spec, const ExponentVector& e,
                                              const mpq_class& c) {
  if (static_cast<int>(e.size()) != rank) throw InputError("monomial exponent rank mismatch");
  LaurentPolynomial p(rank, spec);
  p.insert_term(e, cf_normalize(spec, c));
  return p;
}

LaurentPolynomial LaurentPolynomial::from_terms(int rank, CoeffSpec spec, const TermMap& terms) {
  LaurentPolynomial p(rank, spec);
  for (const auto& [e, c] : terms) {
    if (static_cast<int>(e.size()) != rank) throw InputError("term exponent rank mismatch");
    p.insert_term(e, cf_normalize(spec, c));
  }
  return p;
}

mpq_class LaurentPolynomial::coeff(const ExponentVector& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? mpq_class(0) : it->second;
}

bool LaurentPolynomial::is_polynomial() const {
  for (const auto& [e, c] : terms_)
    if (!ev_is_nonneg(e)) return false;
  return true;
}

ExponentVector LaurentPolynomial::support_min() const {
  ExponentVector m = ev_zero(rank_);
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (first) {
      m = e;
      first = false;
    } else {
      for (int i = 0; i < rank_; ++i) m[i] = std::min(m[i], e[i]);
    }
  }
  return m;
}

void LaurentPolynomial::insert_term(const ExponentVector& e, const mpq_class& c) {
  if (cf_is_zero(c)) return;
  auto [it, fresh] = terms_.emplace(e, c);
  if (!fresh) {
    mpq_class s = cf_add(spec_, it->second, c);
    if (cf_is_zero(s))
      terms_.erase(it);
    else
      it->second = s;
  }
}

static void check_compatible(const LaurentPolynomial& a, const LaurentPolynomial& b) {
  if (a.rank() != b.rank()) throw InputError("polynomials of mixed rank");
  if (a.spec() != b.spec()) throw InputError("polynomials over mixed coefficient specs");
}

LaurentPolynomial lp_add(const LaurentPolynomial& a, const LaurentPolynomial& b) {
  check_compatible(a, b);
  LaurentPolynomial r = a;
  for (const auto& [e, c] : b.terms_) r.insert_term(e, c);
  return r;
}

LaurentPolynomial lp_sub(const LaurentPolynomial& a, const LaurentPolynomial& b) {
  check_compatible(a, b);
  LaurentPolynomial r = a;
  for (const auto& [e, c] : b.terms_) r.insert_term(e, cf_neg(b.spec(), c));
  return r;
}

LaurentPolynomial lp_mul(const LaurentPolynomial& a, const LaurentPolynomial& b) {
  check_compatible(a, b);
  LaurentPolynomial r(a.rank(), a.spec());
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_)
      r.insert_term(ev_add(ea, eb), cf_mul(a.spec(), ca, cb));
  return r;
}

LaurentPolynomial lp_neg(const LaurentPolynomial& a) {
  LaurentPolynomial r(a.rank(), a.spec());
  for (const auto& [e, c] : a.terms_) r.terms_.emplace(e, cf_neg(a.spec(), c));
  return r;
}

LaurentPolynomial lp_scale(const LaurentPolynomial& a, const mpq_class& c) {
  LaurentPolynomial r(a.rank(), a.spec());
  if (cf_is_zero(cf_normalize(a.spec(), c))) return r;
  for (const auto& [e, x] : a.terms_) r.insert_term(e, cf_mul(a.spec(), x, c));
  return r;
}

LaurentPolynomial lp_shift(const LaurentPolynomial& a, const ExponentVector& v) {
  if (static_cast<int>(v.size()) != a.rank()) throw InputError("shift vector rank mismatch");
  LaurentPolynomial r(a.rank(), a.spec());
  for (const auto& [e, c] : a.terms_) r.terms_.emplace(ev_add(e, v), c);
  return r;
}

LaurentPolynomial lp_convert(const LaurentPolynomial& a, const CoeffSpec& to) {
  LaurentPolynomial r(a.rank(), to);
  for (const auto& [e, c] : a.terms_) r.insert_term(e, cf_normalize(to, c));
  return r;
}

std::string lp_to_string(const LaurentPolynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  // Descending exponent order reads naturally (highest term first).
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [e, c] = *it;
    bool neg = sgn(c) < 0;
    mpq_class mag = neg ? mpq_class(-c) : c;
    if (out.empty())
      out += neg ? "-" : "";
    else
      out += neg ? " - " : " + ";
    std::string vars;
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!vars.empty()) vars += "*";
      vars += "X" + std::to_string(i + 1);
      if (e[i] != 1) vars += "^" + std::to_string(e[i]);
    }
    if (vars.empty()) {
      out += mag.get_str();
    } else if (mag == 1) {
      out += vars;
    } else {
      out += mag.get_str() + "*" + vars;
    }
  }
  return out;
}

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;
  int rank;
  CoeffSpec spec;

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool done() {
    skip_ws();
    return i >= s.size();
  }
  char peek() {
    skip_ws();
    return i < s.size() ? s[i] : '\0';
  }
  [[noreturn]] void fail(const std::string& why) {
    throw InputError("polynomial parse error at offset " + std::to_string(i) + ": " + why +
                     " in '" + s + "'");
  }

  int64_t parse_int() {
    skip_ws();
    size_t start = i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    size_t digits = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == digits) fail("expected integer");
    return std::stoll(s.substr(start, i - start));
  }

  mpq_class parse_number() {
    skip_ws();
    size_t start = i;
    parse_int();
    skip_ws();
    if (i < s.size() && s[i] == '/') {
      ++i;
      parse_int();
    }
    std::string text = s.substr(start, i - start);
    text.erase(std::remove_if(text.begin(), text.end(),
                              [](unsigned char c) { return std::isspace(c); }),
               text.end());
    return cf_parse(spec, text);
  }

  // Returns variable index, or -1 if the next token is not a variable.
  int try_parse_var() {
    skip_ws();
    if (i >= s.size()) return -1;
    char c = s[i];
    int idx = -1;
    if (c == 'X' || c == 'x') {
      size_t j = i + 1, digits = j;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j == digits) {
        idx = 0;  // bare X means X1
        i = j;
      } else {
        idx = std::stoi(s.substr(digits, j - digits)) - 1;
        i = j;
      }
    } else if (c == 'Y' || c == 'y') {
      idx = 1;
      ++i;
    } else if (c == 'Z' || c == 'z') {
      idx = 2;
      ++i;
    } else {
      return -1;
    }
    if (idx < 0 || idx >= rank) fail("variable index out of range for rank " + std::to_string(rank));
    return idx;
  }

  // term := number ['*' factors] | factors
  void parse_term(LaurentPolynomial::TermMap& terms, bool negate) {
    mpq_class coeff(1);
    ExponentVector e = ev_zero(rank);
    bool saw_anything = false;
    skip_ws();
    if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])))) {
      coeff = parse_number();
      saw_anything = true;
      skip_ws();
      if (i < s.size() && s[i] == '*') {
        ++i;
      } else if (try_peek_var()) {
        // allow omitted '*' between coefficient and variables
      }
    }
    while (true) {
      int idx = try_parse_var();
      if (idx < 0) break;
      saw_anything = true;
      int64_t exp = 1;
      skip_ws();
      if (i < s.size() && s[i] == '^') {
        ++i;
        exp = parse_int();
      }
      e[idx] += exp;
      skip_ws();
      if (i < s.size() && s[i] == '*') {
        ++i;
        continue;
      }
      if (try_peek_var()) continue;
      break;
    }
    if (!saw_anything) fail("expected term");
    if (negate) coeff = -coeff;
    auto [it, fresh] = terms.emplace(e, coeff);
    if (!fresh) it->second += coeff;
  }

  bool try_peek_var() {
    size_t save = i;
    bool ok = try_parse_var() >= 0;
    i = save;
    return ok;
  }

  LaurentPolynomial run() {
    LaurentPolynomial::TermMap terms;
    skip_ws();
    bool negate = false;
    if (peek() == '+' || peek() == '-') {
      negate = s[i] == '-';
      ++i;
    }
    parse_term(terms, negate);
    while (!done()) {
      char c = peek();
      if (c != '+' && c != '-') fail("expected '+' or '-'");
      ++i;
      parse_term(terms, c == '-');
    }
    return LaurentPolynomial::from_terms(rank, spec, terms);
  }
};

}  // namespace

LaurentPolynomial lp_parse(const std::string& text, int rank, CoeffSpec spec) {
  Parser p{text, 0, rank, spec};
  if (p.done()) throw InputError("empty polynomial text");
  return p.run();
}

}  // namespace kw
