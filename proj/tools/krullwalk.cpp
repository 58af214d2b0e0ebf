// Command-line front end: Krull dimensions of finitely presented modules over
// Laurent polynomial group rings, exact metabelian group arithmetic,
// return-probability estimation, decay-exponent fits, and nested-set
// (Folner couple) construction, verification, and descent.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kw/errors.hpp"
#include "kw/fit.hpp"
#include "kw/folner.hpp"
#include "kw/groups.hpp"
#include "kw/krull.hpp"
#include "kw/pipeline.hpp"
#include "kw/rng.hpp"
#include "kw/walk.hpp"

using json = nlohmann::ordered_json;
using namespace kw;

namespace {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

std::string hex_encode(const std::string& raw) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char c : raw) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

std::string hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw InputError("hex string has odd length");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw InputError("bad hex digit");
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2)
    out.push_back(static_cast<char>((nib(hex[i]) << 4) | nib(hex[i + 1])));
  return out;
}

std::string mpq_str(const mpq_class& q) {
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

mpq_class parse_ratio(const std::string& text) {
  mpq_class q;
  if (q.set_str(text, 10) != 0) throw InputError("bad rational: " + text);
  q.canonicalize();
  if (q < 0 || q > 1) throw InputError("ratio must lie in [0, 1]");
  return q;
}

json opt_int_json(const std::optional<int>& v) {
  if (!v) return nullptr;  // encodes -infinity (zero module / unit ideal)
  return *v;
}

std::string spec_char(const CoeffSpec& s) {
  switch (s.kind) {
    case CoeffKind::rationals: return "0";
    case CoeffKind::integers: return "Z";
    case CoeffKind::prime_field:
    case CoeffKind::mod_ring: return std::to_string(s.modulus);
  }
  return "?";
}

json krull_json(const KrullReport& r) {
  json j;
  j["krull_module"] = opt_int_json(r.krull_module);
  j["module_status"] = dim_status_name(r.module_status);
  j["krull0"] = opt_int_json(r.krull0);
  j["krull0_status"] = dim_status_name(r.krull0_status);
  j["krullt"] = opt_int_json(r.krullt);
  j["krullt_status"] = dim_status_name(r.krullt_status);
  j["primes_used"] = r.primes_used;
  if (r.best_prime)
    j["best_prime"] = *r.best_prime;
  else
    j["best_prime"] = nullptr;
  j["group_infinite"] = r.group_infinite;
  j["krull_group"] = r.krull_group;
  return j;
}

json presentation_json(const ModulePresentation& p) {
  json j;
  j["char"] = spec_char(p.spec);
  j["d"] = p.d;
  j["gens"] = p.ngens;
  if (p.declared_torsion)
    j["torsion"] = *p.declared_torsion;
  else
    j["torsion"] = nullptr;
  j["relations"] = p.relations.size();
  return j;
}

std::string presentation_text(const ModulePresentation& p) {
  std::ostringstream os;
  os << "ring char=" << spec_char(p.spec) << " d=" << p.d << " gens=" << p.ngens;
  if (p.declared_torsion) os << " torsion=" << *p.declared_torsion;
  os << "\n";
  for (const auto& row : p.relations) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ", ";
      os << lp_to_string(row[i]);
    }
    os << "\n";
  }
  return os.str();
}

json walk_point_json(const WalkEstimate& e) {
  json j;
  j["n"] = e.n;
  j["p_lower"] = e.p_lower;
  j["p_upper"] = e.p_upper;
  j["p"] = e.p_hat;
  if (e.exact_rational) j["exact"] = mpq_str(e.p_exact);
  if (e.samples > 0) {
    j["hits"] = e.hits;
    j["samples"] = e.samples;
    j["stderr"] = e.standard_error;
  }
  return j;
}

json fit_json(const FitResult& f) {
  json j;
  j["model"] = fit_model_name(f.model);
  j["alpha"] = f.alpha;
  j["alpha_lo"] = f.alpha_lo;
  j["alpha_hi"] = f.alpha_hi;
  j["c"] = f.c;
  j["log_c0"] = f.log_c0;
  j["gamma"] = f.gamma;
  j["residual_norm"] = f.residual_norm;
  j["points"] = f.points;
  return j;
}

json family_json(const MonomialFamily& f) {
  json j;
  json mons = json::array();
  for (const auto& m : f.monomials) mons.push_back(ev_to_string(m));
  j["monomials"] = mons;
  j["size"] = f.monomials.size();
  j["certified"] = f.certified;
  return j;
}

// ---------------------------------------------------------------------------
// Couple serialization (the `folner-*` commands exchange couples as JSON)
// ---------------------------------------------------------------------------

json couple_to_json(const FolnerCouple& c) {
  json j;
  j["kind"] = c.kind == FolnerCouple::Kind::ring ? "ring" : "explicit";
  j["m"] = c.m;
  if (c.kind == FolnerCouple::Kind::ring) {
    j["d"] = c.group.d;
    json rings = json::array();
    for (const auto& r : c.group.rings) {
      json rj;
      rj["char"] = r->field().modulus;
      rj["d"] = r->d();
      json gens = json::array();
      for (const auto& g : r->laurent_gens()) gens.push_back(lp_to_string(g));
      rj["ideal"] = gens;
      rings.push_back(rj);
    }
    j["rings"] = rings;
    json ranks = json::array();
    for (const auto& ms : c.modules) ranks.push_back(ms.rank());
    j["module_ranks"] = ranks;
  } else {
    j["group"] = c.group.to_string();
    json om = json::array(), omp = json::array();
    for (const auto& e : c.omega) om.push_back(hex_encode(canonical_key(c.group, e)));
    for (const auto& e : c.omega_prime) omp.push_back(hex_encode(canonical_key(c.group, e)));
    j["omega"] = om;
    j["omega_prime"] = omp;
    if (c.omega.size() <= 200) {
      json briefs = json::array();
      for (const auto& e : c.omega) briefs.push_back(element_brief(c.group, e));
      j["omega_briefs"] = briefs;
    }
  }
  j["size_omega"] = c.size_omega().get_str();
  j["size_omega_prime"] = c.size_omega_prime().get_str();
  j["ratio"] = mpq_str(c.ratio());
  return j;
}

FolnerCouple couple_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int64_t m = j.at("m").get<int64_t>();
  if (kind == "ring") {
    int d = j.at("d").get<int>();
    std::vector<RingPtr> rings;
    for (const auto& rj : j.at("rings")) {
      unsigned long p = rj.at("char").get<unsigned long>();
      int rd = rj.at("d").get<int>();
      if (rd != d) throw InputError("couple ring component rank mismatch");
      std::vector<LaurentPolynomial> gens;
      for (const auto& g : rj.at("ideal"))
        gens.push_back(lp_parse(g.get<std::string>(), rd, CoeffSpec::Fp(p)));
      rings.push_back(std::make_shared<RingQuotient>(rd, CoeffSpec::Fp(p), gens));
    }
    return build_ring_couple(GroupSpec::ring_semidirect(std::move(rings), d), m);
  }
  if (kind != "explicit") throw InputError("couple kind must be ring or explicit");
  FolnerCouple c;
  c.kind = FolnerCouple::Kind::explicit_set;
  c.group = GroupSpec::parse(j.at("group").get<std::string>());
  c.m = m;
  for (const auto& h : j.at("omega"))
    c.omega.push_back(decode_key(c.group, hex_decode(h.get<std::string>())));
  for (const auto& h : j.at("omega_prime"))
    c.omega_prime.push_back(decode_key(c.group, hex_decode(h.get<std::string>())));
  return c;
}

FolnerCouple load_couple(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open couple file: " + path);
  json j;
  f >> j;
  return couple_from_json(j);
}

json couple_report_json(const CoupleReport& r) {
  json j;
  j["ok"] = r.ok;
  j["containment_ok"] = r.containment_ok;
  j["ratio_ok"] = r.ratio_ok;
  j["size_ok"] = r.size_ok;
  j["sharp"] = r.sharp;
  j["size_omega"] = r.size_omega.get_str();
  j["size_omega_prime"] = r.size_omega_prime.get_str();
  j["ratio"] = mpq_str(r.ratio);
  j["states_visited"] = r.states_visited;
  j["backend"] = r.backend;
  j["witnesses"] = r.witnesses;
  j["sharp_witness"] = r.sharp_witness;
  return j;
}

// ---------------------------------------------------------------------------
// Shared input resolution
// ---------------------------------------------------------------------------

ModulePresentation resolve_presentation(const std::string& group_text,
                                        const std::string& pres_file, bool* infinite) {
  if (group_text.empty() == pres_file.empty())
    throw InputError("give exactly one of --group and --presentation");
  if (!group_text.empty()) {
    GroupSpec spec = GroupSpec::parse(group_text);
    if (infinite) *infinite = group_is_infinite(spec);
    return derived_module_presentation(spec);
  }
  return load_presentation(pres_file);
}

std::vector<FitPoint> read_points_file(const std::string& path, int n_col, int p_col,
                                       double min_n) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open points file: " + path);
  std::vector<FitPoint> pts;
  std::string line;
  while (std::getline(f, line)) {
    for (auto& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    std::vector<double> fields;
    double v;
    while (ls >> v) fields.push_back(v);
    if (!ls.eof() && fields.empty()) continue;  // header or comment line
    int need = std::max(n_col, p_col) + 1;
    if (static_cast<int>(fields.size()) < need) continue;
    FitPoint pt{fields[static_cast<size_t>(n_col)], fields[static_cast<size_t>(p_col)]};
    if (pt.n >= min_n && pt.p > 0) pts.push_back(pt);
  }
  return pts;
}

struct Emitter {
  std::string out_path;
  std::string format = "json";
  uint64_t seed = 1;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void emit(const std::string& command, const json& config, const json& results,
            const std::string& csv = "") const {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json art;
    art["tool"] = "krullwalk";
    art["version"] = "1.0.0";
    art["command"] = command;
    art["config"] = config;
    art["seed"] = seed;
    art["results"] = results;
    art["wall_time_s"] = wall;
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      if (!f) throw InputError("cannot write artifact: " + out_path);
      f << art.dump(2) << "\n";
    }
    if (format == "csv" && !csv.empty())
      std::cout << csv;
    else
      std::cout << art.dump(2) << "\n";
  }
};

void write_couple_file(const std::string& path, const FolnerCouple& c) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write couple file: " + path);
  f << couple_to_json(c).dump(2) << "\n";
}

std::vector<int> random_word(Xoshiro256pp& rng, int num_gens, int max_len) {
  int len = 1 + static_cast<int>(rng.below(static_cast<uint32_t>(max_len)));
  std::vector<int> w;
  w.reserve(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    int g = 1 + static_cast<int>(rng.below(static_cast<uint32_t>(num_gens)));
    w.push_back((rng.below(2) == 0) ? g : -g);
  }
  return w;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "krullwalk: Krull dimensions of module presentations over Laurent polynomial "
      "group rings, exact metabelian group arithmetic, return-probability "
      "estimation, and nested-set couple tooling"};
  app.require_subcommand(1);

  Emitter em;
  int exit_code = 0;
  app.add_option("--seed", em.seed, "base seed for all randomized stages")
      ->capture_default_str();
  int threads = 1;
  app.add_option("--threads", threads, "worker threads for sampling")->capture_default_str();
  app.add_option("--out", em.out_path, "write the JSON artifact to this file");
  app.add_option("--format", em.format, "stdout format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  // ---- krull-dim ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("krull-dim",
                                   "Krull dimension report for a module presentation or "
                                   "a group's derived module");
    auto group = std::make_shared<std::string>();
    auto pres_file = std::make_shared<std::string>();
    auto primes = std::make_shared<std::vector<unsigned long>>();
    auto finite = std::make_shared<bool>(false);
    cmd->add_option("--group", *group, "group spec, e.g. lamplighter:p=2,d=1");
    cmd->add_option("--presentation", *pres_file, "module presentation file");
    cmd->add_option("--primes", *primes, "torsion reduction primes to try");
    cmd->add_flag("--finite-group", *finite,
                  "treat the ambient group as finite (presentation input only)");
    cmd->callback([=, &em]() {
      bool infinite = !*finite;
      ModulePresentation pres =
          resolve_presentation(*group, *pres_file, group->empty() ? nullptr : &infinite);
      KrullReport rep = krull_report(pres, infinite, *primes);
      json config;
      config["group"] = *group;
      config["presentation"] = *pres_file;
      config["primes"] = *primes;
      json results;
      results["presentation"] = presentation_json(pres);
      results["report"] = krull_json(rep);
      em.emit("krull-dim", config, results);
    });
  }

  // ---- find-transcendental -------------------------------------------------
  {
    auto* cmd = app.add_subcommand("find-transcendental",
                                   "greedy certified search for algebraically independent "
                                   "monomials modulo the zeroth Fitting ideal");
    auto group = std::make_shared<std::string>();
    auto pres_file = std::make_shared<std::string>();
    auto target = std::make_shared<int>(-1);
    auto max_norm = std::make_shared<int64_t>(8);
    auto prime = std::make_shared<unsigned long>(0);
    cmd->add_option("--group", *group, "group spec");
    cmd->add_option("--presentation", *pres_file, "module presentation file");
    cmd->add_option("--target", *target, "family size to reach (default: the module dimension)");
    cmd->add_option("--max-norm", *max_norm, "largest exponent max-norm to try")
        ->capture_default_str();
    cmd->add_option("--prime", *prime, "work modulo this prime instead of over the rationals");
    cmd->callback([=, &em, &exit_code]() {
      ModulePresentation pres = resolve_presentation(*group, *pres_file, nullptr);
      CoeffSpec field = pres.spec;
      if (!field.is_field()) field = (*prime > 0) ? CoeffSpec::Fp(*prime) : CoeffSpec::Q();
      ModulePresentation fp = pres;
      fp.spec = field;
      for (auto& row : fp.relations)
        for (auto& e : row) e = lp_convert(e, field);
      std::vector<LaurentPolynomial> fitt = fitting_ideal0(fp);
      int goal = *target;
      if (goal < 0) goal = module_krull_dim(fp).value_or(0);
      json config;
      config["group"] = *group;
      config["presentation"] = *pres_file;
      config["field_char"] = spec_char(field);
      config["target"] = goal;
      config["max_norm"] = *max_norm;
      json results;
      try {
        MonomialFamily fam =
            find_transcendental_monomials(pres.d, field, fitt, goal, *max_norm);
        results["family"] = family_json(fam);
        results["reached_target"] = true;
      } catch (const DimensionDeficitError& e) {
        results["family"] = family_json(e.achieved);
        results["reached_target"] = false;
        results["note"] = e.what();
        exit_code = 1;
      }
      em.emit("find-transcendental", config, results);
    });
  }

  // ---- witness -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "witness", "special subgroup witness certified by the dimension data");
    auto group = std::make_shared<std::string>();
    auto pres_file = std::make_shared<std::string>();
    auto primes = std::make_shared<std::vector<unsigned long>>();
    cmd->add_option("--group", *group, "group spec");
    cmd->add_option("--presentation", *pres_file, "module presentation file");
    cmd->add_option("--primes", *primes, "torsion reduction primes to try");
    cmd->callback([=, &em]() {
      ModulePresentation pres = resolve_presentation(*group, *pres_file, nullptr);
      SubgroupWitness w = special_subgroup_witness(pres, *primes);
      json config;
      config["group"] = *group;
      config["presentation"] = *pres_file;
      config["primes"] = *primes;
      json results;
      results["kind"] = witness_kind_name(w.kind);
      results["prime"] = w.prime;
      results["family"] = family_json(w.family);
      em.emit("witness", config, results);
    });
  }

  // ---- derived-module ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "derived-module", "print the derived-module presentation of a group");
    auto group = std::make_shared<std::string>();
    cmd->add_option("--group", *group, "group spec")->required();
    cmd->callback([=, &em]() {
      GroupSpec spec = GroupSpec::parse(*group);
      ModulePresentation pres = derived_module_presentation(spec);
      std::string text = presentation_text(pres);
      json config;
      config["group"] = *group;
      json results;
      results["presentation"] = presentation_json(pres);
      results["text"] = text;
      em.emit("derived-module", config, results, text);
    });
  }

  // ---- verify-relations ----------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "verify-relations", "randomized verification of group laws on word samples");
    auto group = std::make_shared<std::string>();
    auto relations = std::make_shared<std::vector<std::string>>();
    auto trials = std::make_shared<uint64_t>(200);
    auto max_len = std::make_shared<int>(8);
    cmd->add_option("--group", *group, "group spec")->required();
    cmd->add_option("--relation", *relations,
                    "relation pattern (repeatable): metabelian | commutator-power:k=K | "
                    "generator-order:i=I,k=K; default: the group's defining laws");
    cmd->add_option("--trials", *trials, "random instantiations per relation")
        ->capture_default_str();
    cmd->add_option("--max-word-len", *max_len, "max length of sampled words")
        ->capture_default_str();
    cmd->callback([=, &em, &exit_code]() {
      GroupSpec spec = GroupSpec::parse(*group);
      std::vector<std::string> rels = *relations;
      if (rels.empty()) {
        rels.push_back("metabelian");
        if (spec.family == GroupSpec::Family::wreath && spec.lamp_modulus >= 2)
          rels.push_back("generator-order:i=" + std::to_string(spec.d + 1) +
                         ",k=" + std::to_string(spec.lamp_modulus));
        if (spec.family == GroupSpec::Family::magnus_p)
          rels.push_back("commutator-power:k=" + std::to_string(spec.lamp_modulus));
      }
      json config;
      config["group"] = *group;
      config["relations"] = rels;
      config["trials"] = *trials;
      config["max_word_len"] = *max_len;
      json results;
      json checks = json::array();
      bool pass = true;
      for (const auto& rtext : rels) {
        RelationSpec rel = RelationSpec::parse(rtext);
        RelationReport rep = verify_relations(spec, rel, *trials, em.seed, *max_len);
        json c;
        c["relation"] = rel.to_string();
        c["trials"] = rep.trials;
        c["violations"] = rep.violations;
        c["witnesses"] = rep.witnesses;
        checks.push_back(c);
        pass = pass && rep.violations == 0;
      }
      results["checks"] = checks;
      results["pass"] = pass;
      if (!pass) exit_code = 1;
      em.emit("verify-relations", config, results);
    });
  }

  // ---- embed-check ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "embed-check",
        "check multiplicativity of the wreath-style embedding of a finite "
        "cocycle extension on random word pairs");
    auto group = std::make_shared<std::string>("cocycle-demo");
    auto trials = std::make_shared<uint64_t>(200);
    auto max_len = std::make_shared<int>(6);
    cmd->add_option("--group", *group, "group spec")->capture_default_str();
    cmd->add_option("--trials", *trials, "random word pairs")->capture_default_str();
    cmd->add_option("--max-word-len", *max_len, "max length of sampled words")
        ->capture_default_str();
    cmd->callback([=, &em, &exit_code]() {
      GroupSpec spec = GroupSpec::parse(*group);
      Xoshiro256pp rng(derive_seed(em.seed, 0xebed, 0));
      int ng = spec.num_generators();
      uint64_t failures = 0;
      std::vector<std::string> witnesses;
      // identity goes to the identity image
      KKImage id = kk_embed(spec, identity_element(spec));
      if (!id.table.empty() || !std::all_of(id.cursor.begin(), id.cursor.end(),
                                            [](int64_t v) { return v == 0; })) {
        ++failures;
        witnesses.push_back("identity image is not the identity");
      }
      for (uint64_t t = 0; t < *trials; ++t) {
        std::vector<int> wu = random_word(rng, ng, *max_len);
        std::vector<int> wv = random_word(rng, ng, *max_len);
        GroupElement g = word_evaluate(spec, wu);
        GroupElement h = word_evaluate(spec, wv);
        KKImage lhs = kk_multiply(spec, kk_embed(spec, g), kk_embed(spec, h));
        KKImage rhs = kk_embed(spec, multiply(spec, g, h));
        if (!(lhs == rhs)) {
          ++failures;
          if (witnesses.size() < 8)
            witnesses.push_back("words " + std::to_string(t) + " disagree");
        }
      }
      json config;
      config["group"] = *group;
      config["trials"] = *trials;
      config["max_word_len"] = *max_len;
      json results;
      results["trials"] = *trials;
      results["failures"] = failures;
      results["witnesses"] = witnesses;
      results["pass"] = failures == 0;
      if (failures != 0) exit_code = 1;
      em.emit("embed-check", config, results);
    });
  }

  // ---- exact-return --------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "exact-return", "exact convolution of the uniform generator walk, with "
                        "certified truncation brackets");
    auto group = std::make_shared<std::string>();
    auto n_max = std::make_shared<int64_t>(128);
    auto epsilon = std::make_shared<double>(1e-10);
    auto max_support = std::make_shared<size_t>(2'000'000);
    auto rational = std::make_shared<bool>(false);
    auto force_generic = std::make_shared<bool>(false);
    auto progress = std::make_shared<bool>(false);
    cmd->add_option("--group", *group, "group spec")->required();
    cmd->add_option("--n-max", *n_max, "largest step count")->capture_default_str();
    cmd->add_option("--epsilon", *epsilon, "per-step mass threshold dropped into the bracket")
        ->capture_default_str();
    cmd->add_option("--max-support", *max_support, "support size budget per step")
        ->capture_default_str();
    cmd->add_flag("--rational", *rational, "exact rational masses, no truncation");
    cmd->add_flag("--force-generic", *force_generic, "bypass the packed element steppers");
    cmd->add_flag("--progress", *progress, "log step progress to stderr");
    cmd->callback([=, &em]() {
      GroupSpec spec = GroupSpec::parse(*group);
      ExactWalkOptions opts;
      opts.rational = *rational;
      opts.epsilon = *rational ? 0.0 : *epsilon;
      opts.max_support = *rational ? 0 : *max_support;
      opts.force_generic = *force_generic;
      if (*progress)
        opts.progress = [](int64_t step, size_t support) {
          std::cerr << "step " << step << " support " << support << "\n";
        };
      std::vector<WalkEstimate> est = exact_return_probabilities(spec, *n_max, opts);
      json config;
      config["group"] = *group;
      config["n_max"] = *n_max;
      config["epsilon"] = opts.epsilon;
      config["max_support"] = opts.max_support;
      config["rational"] = *rational;
      json results;
      json pts = json::array();
      std::ostringstream csv;
      csv << "n,p_lower,p_upper\n";
      for (const auto& e : est) {
        pts.push_back(walk_point_json(e));
        csv << e.n << "," << e.p_lower << "," << e.p_upper << "\n";
      }
      results["points"] = pts;
      em.emit("exact-return", config, results, csv.str());
    });
  }

  // ---- simulate ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "simulate", "Monte Carlo return-probability estimates with Wilson intervals");
    auto group = std::make_shared<std::string>();
    auto ns = std::make_shared<std::vector<int64_t>>();
    auto samples = std::make_shared<uint64_t>(1'000'000);
    cmd->add_option("--group", *group, "group spec")->required();
    cmd->add_option("--ns", *ns, "even step counts to sample")->required();
    cmd->add_option("--samples", *samples, "walks per step count")->capture_default_str();
    cmd->callback([=, &em, &threads]() {
      GroupSpec spec = GroupSpec::parse(*group);
      MonteCarloOptions opts;
      opts.samples = *samples;
      opts.seed = em.seed;
      opts.threads = threads;
      std::vector<WalkEstimate> est = monte_carlo_return(spec, *ns, opts);
      json config;
      config["group"] = *group;
      config["ns"] = *ns;
      config["samples"] = *samples;
      config["threads"] = threads;
      json results;
      json pts = json::array();
      std::ostringstream csv;
      csv << "n,p,stderr\n";
      for (const auto& e : est) {
        pts.push_back(walk_point_json(e));
        csv << e.n << "," << e.p_hat << "," << e.standard_error << "\n";
      }
      results["points"] = pts;
      em.emit("simulate", config, results, csv.str());
    });
  }

  // ---- fit -----------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "fit", "decay-law fit with grid + golden-section refinement and a "
               "bootstrap confidence interval");
    auto input = std::make_shared<std::string>();
    auto model_text = std::make_shared<std::string>("stretched");
    auto gamma = std::make_shared<double>(0.0);
    auto bootstrap = std::make_shared<size_t>(200);
    auto n_col = std::make_shared<int>(0);
    auto p_col = std::make_shared<int>(1);
    auto min_n = std::make_shared<double>(0.0);
    cmd->add_option("--input", *input, "points file (columns n and p; csv or whitespace)")
        ->required();
    cmd->add_option("--model", *model_text, "power | stretched | stretched-log")
        ->capture_default_str();
    cmd->add_option("--gamma", *gamma, "fixed log-power exponent for stretched-log")
        ->capture_default_str();
    cmd->add_option("--bootstrap", *bootstrap, "bootstrap resamples")->capture_default_str();
    cmd->add_option("--n-col", *n_col, "column index of n")->capture_default_str();
    cmd->add_option("--p-col", *p_col, "column index of p")->capture_default_str();
    cmd->add_option("--min-n", *min_n, "drop points below this n")->capture_default_str();
    cmd->callback([=, &em]() {
      FitModel model = fit_model_parse(*model_text);
      std::vector<FitPoint> pts = read_points_file(*input, *n_col, *p_col, *min_n);
      FitOptions opts;
      opts.gamma = *gamma;
      opts.bootstrap = *bootstrap;
      opts.seed = em.seed;
      FitResult fr = fit_exponent(pts, model, opts);
      json config;
      config["input"] = *input;
      config["model"] = *model_text;
      config["gamma"] = *gamma;
      config["bootstrap"] = *bootstrap;
      config["min_n"] = *min_n;
      json results;
      results["fit"] = fit_json(fr);
      em.emit("fit", config, results);
    });
  }

  // ---- folner-build --------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "folner-build", "build the structured nested couple (span x box) at scale m; "
                        "multiple groups are combined into a product couple");
    auto groups = std::make_shared<std::vector<std::string>>();
    auto m = std::make_shared<int64_t>(1);
    auto couple_out = std::make_shared<std::string>();
    cmd->add_option("--group", *groups,
                    "group spec (repeatable; prime-modulus lamplighter or ring-semidirect)")
        ->required();
    cmd->add_option("--m", *m, "couple scale")->required();
    cmd->add_option("--out-couple", *couple_out, "write the couple JSON here");
    cmd->callback([=, &em]() {
      FolnerCouple couple = build_ring_couple(GroupSpec::parse(groups->front()), *m);
      for (size_t i = 1; i < groups->size(); ++i)
        couple = product_couple(couple, build_ring_couple(GroupSpec::parse((*groups)[i]), *m));
      if (!couple_out->empty()) write_couple_file(*couple_out, couple);
      json config;
      config["groups"] = *groups;
      config["m"] = *m;
      json results;
      results["couple"] = couple_to_json(couple);
      em.emit("folner-build", config, results);
    });
  }

  // ---- folner-verify -------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "folner-verify", "exhaustively verify a couple: containment of the inner set's "
                         "m-ball expansion, the size ratio, and sharpness at m+1");
    auto couple_file = std::make_shared<std::string>();
    auto ratio = std::make_shared<std::string>();
    auto size_bound = std::make_shared<std::string>();
    auto ball = std::make_shared<int64_t>(-1);
    auto force_generic = std::make_shared<bool>(false);
    auto no_sharp = std::make_shared<bool>(false);
    auto state_cap = std::make_shared<uint64_t>(uint64_t{1} << 22);
    cmd->add_option("--couple", *couple_file, "couple JSON file")->required();
    cmd->add_option("--ratio", *ratio, "required lower bound on |inner|/|outer|, as p/q");
    cmd->add_option("--size-bound", *size_bound, "ceiling on |outer| as A*exp(B*m^k)");
    cmd->add_option("--ball", *ball, "expand this many levels instead of m");
    cmd->add_flag("--force-generic", *force_generic, "bypass the packed bit backend");
    cmd->add_flag("--no-sharpness", *no_sharp, "skip the m+1 escape probe");
    cmd->add_option("--state-cap", *state_cap, "hashed backend state budget")
        ->capture_default_str();
    cmd->callback([=, &em, &exit_code]() {
      FolnerCouple couple = load_couple(*couple_file);
      VerifyOptions opts;
      if (!ratio->empty()) {
        opts.check_ratio = true;
        opts.required_ratio = parse_ratio(*ratio);
      } else {
        opts.check_ratio = false;
      }
      if (!size_bound->empty()) opts.size_bound = SizeBound::parse(*size_bound);
      opts.ball_override = *ball;
      opts.force_generic = *force_generic;
      opts.check_sharpness = !*no_sharp;
      opts.generic_state_cap = *state_cap;
      CoupleReport rep = verify_couple(couple, opts);
      json config;
      config["couple"] = *couple_file;
      config["ratio"] = *ratio;
      config["size_bound"] = *size_bound;
      config["ball"] = *ball;
      config["force_generic"] = *force_generic;
      json results;
      results["couple"] = couple_to_json(couple);
      results["report"] = couple_report_json(rep);
      if (!rep.ok) exit_code = 1;
      em.emit("folner-verify", config, results);
    });
  }

  // ---- folner-descend ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "folner-descend", "push a couple through a projection by fiber-count "
                          "thresholding and emit the quotient couple");
    auto couple_file = std::make_shared<std::string>();
    auto projection = std::make_shared<std::string>("cursor");
    auto n = std::make_shared<int64_t>(1);
    auto couple_out = std::make_shared<std::string>();
    cmd->add_option("--couple", *couple_file, "couple JSON file")->required();
    cmd->add_option("--projection", *projection, "cursor | trivial")->capture_default_str();
    cmd->add_option("--n", *n, "quotient couple scale")->required();
    cmd->add_option("--out-couple", *couple_out, "write the quotient couple JSON here");
    cmd->callback([=, &em, &exit_code]() {
      FolnerCouple couple = load_couple(*couple_file);
      DescentResult res = quotient_descent(couple, projection_parse(*projection), *n);
      if (!couple_out->empty()) write_couple_file(*couple_out, res.couple);
      VerifyOptions vopts;
      vopts.check_ratio = false;
      CoupleReport rep = verify_couple(res.couple, vopts);
      json config;
      config["couple"] = *couple_file;
      config["projection"] = *projection;
      config["n"] = *n;
      json results;
      results["quotient"] = res.quotient.to_string();
      results["threshold"] = res.threshold.get_str();
      results["num_thresholds"] = res.num_thresholds;
      results["level_size"] = res.level_size;
      results["boundary_size"] = res.boundary_size;
      results["boundary_ratio"] = res.boundary_ratio;
      json fibers = json::array();
      for (const auto& [q, cnt] : res.fiber_counts) {
        json fj;
        fj["point"] = q;
        fj["count"] = cnt.get_str();
        fibers.push_back(fj);
      }
      results["fiber_counts"] = fibers;
      results["couple"] = couple_to_json(res.couple);
      results["output_verified"] = rep.ok;
      if (!rep.ok) exit_code = 1;
      em.emit("folner-descend", config, results);
    });
  }

  // ---- noether-growth ------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "noether-growth", "fit log-span-size growth of the window filtration of a "
                          "quotient ring: log |span_m| ~ log a + b*m^k");
    auto group = std::make_shared<std::string>();
    auto m_lo = std::make_shared<int64_t>(4);
    auto m_hi = std::make_shared<int64_t>(12);
    auto component = std::make_shared<size_t>(0);
    cmd->add_option("--group", *group,
                    "group spec (prime-modulus lamplighter or ring-semidirect)")
        ->required();
    cmd->add_option("--m-lo", *m_lo, "smallest window")->capture_default_str();
    cmd->add_option("--m-hi", *m_hi, "largest window")->capture_default_str();
    cmd->add_option("--component", *component, "ring component index")->capture_default_str();
    cmd->callback([=, &em]() {
      FolnerCouple probe = build_ring_couple(GroupSpec::parse(*group), 1);
      if (*component >= probe.group.rings.size())
        throw InputError("ring component index out of range");
      RingPtr ring = probe.group.rings[*component];
      json config;
      config["group"] = *group;
      config["m_lo"] = *m_lo;
      config["m_hi"] = *m_hi;
      config["component"] = *component;
      json results;
      json pts = json::array();
      std::vector<int64_t> ms;
      std::vector<double> logs;
      for (int64_t m = *m_lo; m <= *m_hi; ++m) {
        ModuleSpace sp = module_space(ring, m);
        double ls = static_cast<double>(sp.rank()) * std::log(static_cast<double>(sp.p));
        json pj;
        pj["m"] = m;
        pj["rank"] = sp.rank();
        pj["log_size"] = ls;
        pts.push_back(pj);
        ms.push_back(m);
        logs.push_back(ls);
      }
      GrowthFit gf = fit_growth(ms, logs);
      results["p"] = ring->field().modulus;
      results["points"] = pts;
      results["k_hat"] = gf.k_hat;
      results["b"] = gf.b;
      results["log_a"] = gf.log_a;
      results["residual_norm"] = gf.residual_norm;
      em.emit("noether-growth", config, results);
    });
  }

  // ---- dichotomy -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand(
        "dichotomy", "full probe: Krull dimension of the derived module vs the "
                     "fitted return-probability decay exponent");
    auto group = std::make_shared<std::string>();
    auto n_max = std::make_shared<int64_t>(256);
    auto epsilon = std::make_shared<double>(1e-12);
    auto max_support = std::make_shared<size_t>(2'000'000);
    auto no_mc = std::make_shared<bool>(false);
    auto mc_ns = std::make_shared<std::vector<int64_t>>();
    auto mc_samples = std::make_shared<uint64_t>(2'000'000);
    auto fit_min_n = std::make_shared<int64_t>(16);
    auto tol = std::make_shared<double>(0.08);
    auto progress = std::make_shared<bool>(false);
    cmd->add_option("--group", *group, "group spec")->required();
    cmd->add_option("--n-max", *n_max, "exact convolution range")->capture_default_str();
    cmd->add_option("--epsilon", *epsilon, "truncation threshold")->capture_default_str();
    cmd->add_option("--max-support", *max_support, "support budget")->capture_default_str();
    cmd->add_flag("--no-mc", *no_mc, "skip the Monte Carlo stage");
    cmd->add_option("--mc-ns", *mc_ns, "Monte Carlo step counts");
    cmd->add_option("--mc-samples", *mc_samples, "walks per Monte Carlo step count")
        ->capture_default_str();
    cmd->add_option("--fit-min-n", *fit_min_n, "smallest n used in fits")
        ->capture_default_str();
    cmd->add_option("--tol", *tol, "band around the critical exponent 1/3")
        ->capture_default_str();
    cmd->add_flag("--progress", *progress, "log stage progress to stderr");
    cmd->callback([=, &em, &threads, &exit_code]() {
      GroupSpec spec = GroupSpec::parse(*group);
      PipelineOptions opts;
      opts.exact_n_max = *n_max;
      opts.epsilon = *epsilon;
      opts.max_support = *max_support;
      opts.monte_carlo = !*no_mc;
      opts.mc_ns = *mc_ns;
      opts.mc_samples = *mc_samples;
      opts.threads = threads;
      opts.seed = em.seed;
      opts.fit_min_n = *fit_min_n;
      opts.tol = *tol;
      if (*progress) opts.log = [](const std::string& s) { std::cerr << s << "\n"; };
      PipelineResult res = run_pipeline(spec, opts);
      json config;
      config["group"] = *group;
      config["n_max"] = *n_max;
      config["epsilon"] = *epsilon;
      config["max_support"] = *max_support;
      config["monte_carlo"] = !*no_mc;
      config["mc_ns"] = *mc_ns;
      config["mc_samples"] = *mc_samples;
      config["fit_min_n"] = *fit_min_n;
      config["tol"] = *tol;
      json results;
      results["krull"] = krull_json(res.krull);
      results["krull_group"] = res.krull_group;
      json pred;
      pred["model"] = fit_model_name(res.predicted.model);
      pred["alpha"] = res.predicted.alpha;
      pred["gamma"] = res.predicted.gamma;
      pred["text"] = res.predicted.text;
      results["predicted"] = pred;
      json ep = json::array();
      for (const auto& e : res.exact_points) ep.push_back(walk_point_json(e));
      results["exact_points"] = ep;
      json mp = json::array();
      for (const auto& e : res.mc_points) mp.push_back(walk_point_json(e));
      results["mc_points"] = mp;
      results["plain_fit"] = fit_json(res.plain_fit);
      if (res.class_fit)
        results["class_fit"] = fit_json(*res.class_fit);
      else
        results["class_fit"] = nullptr;
      results["small_dimension"] = res.small_dimension;
      results["slow_decay"] = res.slow_decay;
      results["fast_decay"] = res.fast_decay;
      results["consistent"] = res.consistent;
      results["verdict"] = res.verdict;
      if (!res.consistent) exit_code = 1;
      em.emit("dichotomy", config, results);
    });
  }

  // let the global options (--seed, --out, --format, --threads) appear after
  // the subcommand name as well
  for (auto* sc : app.get_subcommands([](const CLI::App*) { return true; }))
    sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 2;
  } catch (const VerificationError& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
