#include "kw/walk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <memory>
#include <thread>

#include "kw/errors.hpp"
#include "kw/rng.hpp"

namespace kw {

namespace {

// ---------------------------------------------------------------------------
// Fixed-width little-endian scalar packing
// ---------------------------------------------------------------------------

int32_t read_i32(const char* p) {
  int32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

void write_i32(char* p, int32_t v) { std::memcpy(p, &v, 4); }

void put_i16(std::string& out, int16_t v) {
  char b[2];
  std::memcpy(b, &v, 2);
  out.append(b, 2);
}

int16_t read_i16(const char* p) {
  int16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

void put_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

uint32_t read_u32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

// ---------------------------------------------------------------------------
// Arena-backed open-addressing accumulator: key bytes live in one buffer,
// masses accumulate in place.  Iteration order is a deterministic function of
// the insertion sequence, which keeps whole walks reproducible bit for bit.
// ---------------------------------------------------------------------------

template <class Mass>
class KeyAccumulator {
 public:
  struct Entry {
    uint64_t off;
    uint32_t len;
    Mass mass;
  };

  void reset(size_t expected) {
    size_t want = 16;
    while (want * 5 < expected * 8) want <<= 1;  // load factor <= 0.625
    slots_.assign(want, Slot{});
    mask_ = want - 1;
    arena_.clear();
    count_ = 0;
  }

  void add(std::string_view key, const Mass& m) {
    uint64_t h = hash_bytes(key);
    size_t i = h & mask_;
    while (slots_[i].state) {
      Slot& s = slots_[i];
      if (s.hash == h && s.len == key.size() &&
          std::memcmp(arena_.data() + s.off, key.data(), key.size()) == 0) {
        s.mass += m;
        return;
      }
      i = (i + 1) & mask_;
    }
    Slot& s = slots_[i];
    s.hash = h;
    s.off = arena_.size();
    s.len = static_cast<uint32_t>(key.size());
    s.state = 1;
    s.mass = m;
    arena_.append(key.data(), key.size());
    if (++count_ * 8 > (mask_ + 1) * 5) grow();
  }

  const Mass* find(std::string_view key) const {
    uint64_t h = hash_bytes(key);
    size_t i = h & mask_;
    while (slots_[i].state) {
      const Slot& s = slots_[i];
      if (s.hash == h && s.len == key.size() &&
          std::memcmp(arena_.data() + s.off, key.data(), key.size()) == 0)
        return &s.mass;
      i = (i + 1) & mask_;
    }
    return nullptr;
  }

  size_t size() const { return count_; }

  // Moves the stored keys and entries out; the accumulator becomes empty.
  void take(std::string& arena, std::vector<Entry>& entries) {
    entries.clear();
    entries.reserve(count_);
    for (const Slot& s : slots_)
      if (s.state) entries.push_back(Entry{s.off, s.len, s.mass});
    arena = std::move(arena_);
    arena_.clear();
    slots_.clear();
    mask_ = 0;
    count_ = 0;
  }

 private:
  struct Slot {
    uint64_t hash = 0;
    uint64_t off = 0;
    uint32_t len = 0;
    uint32_t state = 0;
    Mass mass{};
  };

  static uint64_t hash_bytes(std::string_view key) {
    // FNV-1a on 8-byte lanes, finished with a splitmix round.
    uint64_t h = 1469598103934665603ull;
    size_t i = 0;
    while (i + 8 <= key.size()) {
      uint64_t lane;
      std::memcpy(&lane, key.data() + i, 8);
      h = (h ^ lane) * 1099511628211ull;
      i += 8;
    }
    uint64_t tail = 0;
    for (size_t j = 0; i + j < key.size(); ++j)
      tail |= static_cast<uint64_t>(static_cast<unsigned char>(key[i + j])) << (8 * j);
    h = (h ^ tail) * 1099511628211ull;
    uint64_t z = h + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  void grow() {
    std::vector<Slot> old = std::move(slots_);
    slots_.assign((mask_ + 1) * 2, Slot{});
    mask_ = slots_.size() - 1;
    for (Slot& s : old) {
      if (!s.state) continue;
      size_t i = s.hash & mask_;
      while (slots_[i].state) i = (i + 1) & mask_;
      slots_[i] = std::move(s);
    }
  }

  std::vector<Slot> slots_;
  std::string arena_;
  size_t mask_ = 0;
  size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Steppers: apply one generator to a packed state key
// ---------------------------------------------------------------------------

class StepperBase {
 public:
  virtual ~StepperBase() = default;
  virtual size_t num_gens() const = 0;
  virtual void apply(std::string_view key, size_t gi, std::string& out) const = 0;
  virtual std::string identity() const = 0;
};

class GenericStepper : public StepperBase {
 public:
  explicit GenericStepper(const GroupSpec& spec) : spec_(spec), gens_(symmetric_generators(spec)) {}
  size_t num_gens() const override { return gens_.size(); }
  void apply(std::string_view key, size_t gi, std::string& out) const override {
    GroupElement g = decode_key(spec_, std::string(key));
    out = canonical_key(spec_, multiply(spec_, g, gens_[gi]));
  }
  std::string identity() const override {
    return canonical_key(spec_, identity_element(spec_));
  }

 private:
  GroupSpec spec_;
  std::vector<GroupElement> gens_;
};

// Key layout: d x int32 coordinates.
class PackedAbelianStepper : public StepperBase {
 public:
  explicit PackedAbelianStepper(int d) : d_(d) {}
  size_t num_gens() const override { return 2 * static_cast<size_t>(d_); }
  void apply(std::string_view key, size_t gi, std::string& out) const override {
    out.assign(key.data(), key.size());
    int axis = static_cast<int>(gi >> 1);
    int32_t delta = (gi & 1) ? -1 : 1;
    char* p = out.data() + 4 * axis;
    write_i32(p, read_i32(p) + delta);
  }
  std::string identity() const override { return std::string(4 * static_cast<size_t>(d_), '\0'); }

 private:
  int d_;
};

// Key layout: cursor (d x int32), then lamp entries (site d x int32, value
// int16) ordered by the raw bytes of the site block.
class PackedWreathStepper : public StepperBase {
 public:
  PackedWreathStepper(int d, int64_t k) : d_(d), k_(k) {}
  size_t num_gens() const override {
    return 2 * static_cast<size_t>(d_) + (k_ == 2 ? 1 : 2);
  }
  void apply(std::string_view key, size_t gi, std::string& out) const override {
    size_t site_bytes = 4 * static_cast<size_t>(d_);
    size_t stride = site_bytes + 2;
    if (gi < 2 * static_cast<size_t>(d_)) {
      out.assign(key.data(), key.size());
      int axis = static_cast<int>(gi >> 1);
      int32_t delta = (gi & 1) ? -1 : 1;
      char* p = out.data() + 4 * axis;
      write_i32(p, read_i32(p) + delta);
      return;
    }
    int64_t dv = (gi == 2 * static_cast<size_t>(d_)) ? 1 : -1;  // k == 2 exposes only +1
    const char* cursor = key.data();                            // site block == cursor block
    const char* entries = key.data() + site_bytes;
    size_t n_entries = (key.size() - site_bytes) / stride;
    // Binary search for the cursor site among the lamp entries.
    size_t lo = 0, hi = n_entries;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      int c = std::memcmp(entries + mid * stride, cursor, site_bytes);
      if (c < 0)
        lo = mid + 1;
      else
        hi = mid;
    }
    bool found = lo < n_entries && std::memcmp(entries + lo * stride, cursor, site_bytes) == 0;
    int64_t old = found ? read_i16(entries + lo * stride + site_bytes) : 0;
    int64_t nv = old + dv;
    if (k_ != 0) {
      nv %= k_;
      if (nv < 0) nv += k_;
    }
    out.clear();
    out.reserve(key.size() + stride);
    out.append(key.data(), site_bytes + lo * stride);  // cursor + entries before slot
    if (nv != 0) {
      out.append(cursor, site_bytes);
      put_i16(out, static_cast<int16_t>(nv));
    }
    size_t resume = site_bytes + (lo + (found ? 1 : 0)) * stride;
    out.append(key.data() + resume, key.size() - resume);
  }
  std::string identity() const override { return std::string(4 * static_cast<size_t>(d_), '\0'); }

 private:
  int d_;
  int64_t k_;
};

// Key layout: abelian part (d x int32), then for each of the d module rows a
// uint32 term count followed by (exponent d x int32, coefficient int16)
// entries ordered by the raw exponent bytes.
class PackedMagnusStepper : public StepperBase {
 public:
  PackedMagnusStepper(int d, int64_t k) : d_(d), k_(k) {}
  size_t num_gens() const override { return 2 * static_cast<size_t>(d_); }
  void apply(std::string_view key, size_t gi, std::string& out) const override {
    int comp = static_cast<int>(gi >> 1);
    bool inv = (gi & 1) != 0;
    size_t blk = 4 * static_cast<size_t>(d_);
    size_t stride = blk + 2;

    // New abelian part and the exponent the unit monomial lands on.
    std::string abelian(key.data(), blk);
    std::string target(key.data(), blk);  // forward: X^{b_old}
    {
      char* p = abelian.data() + 4 * comp;
      write_i32(p, read_i32(p) + (inv ? -1 : 1));
    }
    if (inv) target = abelian;  // backward: X^{b_new}, coefficient -1
    int64_t dv = inv ? -1 : 1;

    // Locate each module row.
    size_t pos = blk;
    size_t row_begin[8], row_count[8];
    for (int r = 0; r < d_; ++r) {
      row_count[r] = read_u32(key.data() + pos);
      row_begin[r] = pos + 4;
      pos += 4 + row_count[r] * stride;
    }
    if (pos != key.size()) throw InputError("corrupt packed element key");

    const char* entries = key.data() + row_begin[comp];
    size_t n_entries = row_count[comp];
    size_t lo = 0, hi = n_entries;
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      int c = std::memcmp(entries + mid * stride, target.data(), blk);
      if (c < 0)
        lo = mid + 1;
      else
        hi = mid;
    }
    bool found = lo < n_entries && std::memcmp(entries + lo * stride, target.data(), blk) == 0;
    int64_t old = found ? read_i16(entries + lo * stride + blk) : 0;
    int64_t nv = old + dv;
    if (k_ != 0) {
      nv %= k_;
      if (nv < 0) nv += k_;
    }

    out.clear();
    out.reserve(key.size() + stride);
    out += abelian;
    for (int r = 0; r < d_; ++r) {
      if (r != comp) {
        out.append(key.data() + row_begin[r] - 4, 4 + row_count[r] * stride);
        continue;
      }
      uint32_t cnt = static_cast<uint32_t>(n_entries - (found ? 1 : 0) + (nv != 0 ? 1 : 0));
      put_u32(out, cnt);
      out.append(entries, lo * stride);
      if (nv != 0) {
        out.append(target.data(), blk);
        put_i16(out, static_cast<int16_t>(nv));
      }
      size_t resume = (lo + (found ? 1 : 0)) * stride;
      out.append(entries + resume, (n_entries * stride) - resume);
    }
  }
  std::string identity() const override {
    std::string s(4 * static_cast<size_t>(d_), '\0');
    for (int r = 0; r < d_; ++r) put_u32(s, 0);
    return s;
  }

 private:
  int d_;
  int64_t k_;
};

std::unique_ptr<StepperBase> make_stepper(const GroupSpec& spec, bool force_generic, int64_t n_max) {
  if (!force_generic) {
    switch (spec.family) {
      case GroupSpec::Family::free_abelian:
        if (spec.d >= 1 && spec.d <= 8) return std::make_unique<PackedAbelianStepper>(spec.d);
        break;
      case GroupSpec::Family::wreath:
        if (spec.d <= 4 && (spec.lamp_modulus == 0 ? n_max <= 30000 : spec.lamp_modulus <= 255))
          return std::make_unique<PackedWreathStepper>(spec.d, spec.lamp_modulus);
        break;
      case GroupSpec::Family::magnus_free:
        if (spec.d <= 4 && n_max <= 30000) return std::make_unique<PackedMagnusStepper>(spec.d, 0);
        break;
      case GroupSpec::Family::magnus_p:
        if (spec.d <= 4 && spec.lamp_modulus <= 255)
          return std::make_unique<PackedMagnusStepper>(spec.d, spec.lamp_modulus);
        break;
      default:
        break;
    }
  }
  return std::make_unique<GenericStepper>(spec);
}

// ---------------------------------------------------------------------------
// Shared truncation helper for string-keyed entry vectors
// ---------------------------------------------------------------------------

template <class Entry, class KeyOf>
double truncate_entries(std::vector<Entry>& entries, double epsilon, size_t max_support, KeyOf key_of) {
  double lost = 0.0;
  if (epsilon > 0.0) {
    size_t w = 0;
    for (size_t r = 0; r < entries.size(); ++r) {
      if (entries[r].mass < epsilon)
        lost += entries[r].mass;
      else
        entries[w++] = std::move(entries[r]);
    }
    entries.resize(w);
  }
  if (max_support != 0 && entries.size() > max_support) {
    auto heavier = [&](const Entry& a, const Entry& b) {
      if (a.mass != b.mass) return a.mass > b.mass;
      return key_of(a) < key_of(b);
    };
    // `heavier` is a strict total order (mass ties break on the key), so the
    // kept set is uniquely determined regardless of how the partition runs.
    std::nth_element(entries.begin(), entries.begin() + static_cast<ptrdiff_t>(max_support) - 1,
                     entries.end(), heavier);
    for (size_t r = max_support; r < entries.size(); ++r) lost += entries[r].mass;
    entries.resize(max_support);
  }
  return lost;
}

}  // namespace

// ---------------------------------------------------------------------------
// Uniform measures and convolution
// ---------------------------------------------------------------------------

namespace {

template <class Mass>
Mass uniform_weight(size_t count);

template <>
mpq_class uniform_weight<mpq_class>(size_t count) {
  mpq_class w(1, static_cast<unsigned long>(count));
  w.canonicalize();
  return w;
}

template <>
double uniform_weight<double>(size_t count) {
  return 1.0 / static_cast<double>(count);
}

template <class Mass>
SparseDistribution<Mass> uniform_measure_impl(const GroupSpec& spec) {
  std::vector<GroupElement> gens = symmetric_generators(spec);
  if (gens.empty()) throw InputError("the group has no generators to walk on");
  SparseDistribution<Mass> out;
  Mass w = uniform_weight<Mass>(gens.size());
  for (const GroupElement& g : gens) out.entries.emplace_back(canonical_key(spec, g), w);
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  out.step_count = 1;
  return out;
}

template <class Mass>
SparseDistribution<Mass> convolve_impl(const GroupSpec& spec, const SparseDistribution<Mass>& mu,
                                       const SparseDistribution<Mass>& nu, double epsilon,
                                       size_t max_support) {
  std::vector<std::pair<GroupElement, Mass>> rhs;
  rhs.reserve(nu.entries.size());
  for (const auto& [key, mass] : nu.entries) rhs.emplace_back(decode_key(spec, key), mass);
  KeyAccumulator<Mass> acc;
  acc.reset(mu.entries.size() * 2 + rhs.size());
  for (const auto& [ka, ma] : mu.entries) {
    GroupElement ga = decode_key(spec, ka);
    for (const auto& [gb, mb] : rhs)
      acc.add(canonical_key(spec, multiply(spec, ga, gb)), ma * mb);
  }
  std::string arena;
  std::vector<typename KeyAccumulator<Mass>::Entry> raw;
  acc.take(arena, raw);
  SparseDistribution<Mass> out;
  out.lost_mass = mu.lost_mass + nu.lost_mass;
  out.step_count = mu.step_count + nu.step_count;
  if constexpr (std::is_same_v<Mass, double>) {
    auto key_of = [&](const typename KeyAccumulator<Mass>::Entry& e) {
      return std::string_view(arena.data() + e.off, e.len);
    };
    out.lost_mass += truncate_entries(raw, epsilon, max_support, key_of);
  } else {
    (void)epsilon;
    (void)max_support;
  }
  out.entries.reserve(raw.size());
  for (const auto& e : raw)
    out.entries.emplace_back(std::string(arena.data() + e.off, e.len), e.mass);
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace

SparseDistribution<mpq_class> uniform_measure_exact(const GroupSpec& spec) {
  return uniform_measure_impl<mpq_class>(spec);
}

SparseDistribution<double> uniform_measure(const GroupSpec& spec) {
  return uniform_measure_impl<double>(spec);
}

SparseDistribution<mpq_class> convolve(const GroupSpec& spec, const SparseDistribution<mpq_class>& mu,
                                       const SparseDistribution<mpq_class>& nu) {
  return convolve_impl<mpq_class>(spec, mu, nu, 0.0, 0);
}

SparseDistribution<double> convolve(const GroupSpec& spec, const SparseDistribution<double>& mu,
                                    const SparseDistribution<double>& nu, const TruncationPolicy& policy) {
  if (policy.epsilon < 0) throw InputError("negative truncation threshold");
  return convolve_impl<double>(spec, mu, nu, policy.epsilon, policy.max_support);
}

// ---------------------------------------------------------------------------
// Exact walk
// ---------------------------------------------------------------------------

namespace {

template <class Mass>
std::vector<WalkEstimate> run_exact_walk(const GroupSpec& spec, int64_t n_max,
                                         const ExactWalkOptions& opts) {
  std::unique_ptr<StepperBase> stepper = make_stepper(spec, opts.force_generic, n_max);
  size_t gens = stepper->num_gens();
  if (gens == 0) throw InputError("the group has no generators to walk on");
  Mass w = uniform_weight<Mass>(gens);
  std::string identity_key = stepper->identity();

  using Entry = typename KeyAccumulator<Mass>::Entry;
  std::string arena = identity_key;
  std::vector<Entry> cur;
  cur.push_back(Entry{0, static_cast<uint32_t>(identity_key.size()), Mass(1)});

  double lost = 0.0;
  KeyAccumulator<Mass> acc;
  std::string buf;
  std::vector<WalkEstimate> estimates;

  for (int64_t step = 1; step <= n_max; ++step) {
    acc.reset(cur.size() * gens);
    for (const Entry& e : cur) {
      std::string_view key(arena.data() + e.off, e.len);
      Mass mw = e.mass * w;
      for (size_t gi = 0; gi < gens; ++gi) {
        stepper->apply(key, gi, buf);
        acc.add(buf, mw);
      }
    }
    const Mass* idmass = (step % 2 == 0) ? acc.find(identity_key) : nullptr;
    bool had_identity = idmass != nullptr;
    Mass id_val = had_identity ? *idmass : Mass(0);
    acc.take(arena, cur);

    if constexpr (std::is_same_v<Mass, double>) {
      auto key_of = [&](const Entry& e) { return std::string_view(arena.data() + e.off, e.len); };
      double dropped = truncate_entries(cur, opts.epsilon, opts.max_support, key_of);
      lost += dropped;
      if (dropped > 0.0 && had_identity) {
        // The identity entry itself may have been truncated away; recompute.
        bool still_there = false;
        for (const Entry& e : cur)
          if (e.len == identity_key.size() &&
              std::memcmp(arena.data() + e.off, identity_key.data(), e.len) == 0) {
            still_there = true;
            break;
          }
        if (!still_there) id_val = Mass(0);
      }
    }
    if (cur.size() > opts.hard_support_cap)
      throw BudgetError("walk support exceeded the hard cap of " +
                        std::to_string(opts.hard_support_cap) + " elements at step " +
                        std::to_string(step));

    if (step % 2 == 0) {
      WalkEstimate est;
      est.n = step;
      if constexpr (std::is_same_v<Mass, mpq_class>) {
        est.exact_rational = true;
        est.p_exact = id_val;
        est.p_hat = est.p_lower = est.p_upper = mpq_get_d(id_val.get_mpq_t());
      } else {
        est.p_lower = id_val;
        est.p_hat = id_val;
        est.p_upper = std::min(1.0, id_val + lost);
      }
      estimates.push_back(std::move(est));
    }
    if (opts.progress) opts.progress(step, cur.size());
  }
  return estimates;
}

}  // namespace

std::vector<WalkEstimate> exact_return_probabilities(const GroupSpec& spec, int64_t n_max,
                                                     const ExactWalkOptions& opts) {
  if (n_max < 0) throw InputError("negative walk length");
  if (opts.epsilon < 0) throw InputError("negative truncation threshold");
  if (opts.rational) {
    if (opts.epsilon != 0.0 || opts.max_support != 0)
      throw InputError("exact rational mode admits no truncation (epsilon and budget must be 0)");
    return run_exact_walk<mpq_class>(spec, n_max, opts);
  }
  return run_exact_walk<double>(spec, n_max, opts);
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

namespace {

constexpr uint64_t kBlockSize = 65536;

class SamplerBase {
 public:
  virtual ~SamplerBase() = default;
  virtual void prepare(int64_t n) = 0;
  virtual uint64_t run_block(Xoshiro256pp& rng, int64_t n, uint64_t count) = 0;
};

class ZdSampler : public SamplerBase {
 public:
  explicit ZdSampler(int d) : d_(d) {}
  void prepare(int64_t) override {}
  uint64_t run_block(Xoshiro256pp& rng, int64_t n, uint64_t count) override {
    uint32_t moves = static_cast<uint32_t>(2 * d_);
    uint64_t hits = 0;
    for (uint64_t s = 0; s < count; ++s) {
      int64_t pos[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      for (int64_t i = 0; i < n; ++i) {
        uint32_t r = rng.below(moves);
        pos[r >> 1] += (r & 1) ? -1 : 1;
      }
      bool zero = true;
      for (int a = 0; a < d_; ++a) zero &= (pos[a] == 0);
      hits += zero ? 1 : 0;
    }
    return hits;
  }

 private:
  int d_;
};

// Lamp array over a line, one walker at a time, reset via a touched list.
class Wreath1Sampler : public SamplerBase {
 public:
  explicit Wreath1Sampler(int64_t k) : k_(k) {}
  void prepare(int64_t n) override {
    lamps_.assign(static_cast<size_t>(2 * n + 1), 0);
    touched_.clear();
    touched_.reserve(static_cast<size_t>(n + 1));
  }
  uint64_t run_block(Xoshiro256pp& rng, int64_t n, uint64_t count) override {
    uint32_t moves = 2 + (k_ == 2 ? 1 : 2);
    uint64_t hits = 0;
    int64_t offset = n;
    for (uint64_t s = 0; s < count; ++s) {
      int64_t cursor = 0;
      int64_t nonzero = 0;
      for (int64_t i = 0; i < n; ++i) {
        uint32_t r = rng.below(moves);
        if (r < 2) {
          cursor += r ? -1 : 1;
        } else {
          int64_t dv = (moves == 3 || r == 2) ? 1 : -1;
          int32_t& slot = lamps_[static_cast<size_t>(cursor + offset)];
          int64_t old = slot;
          int64_t nv = old + dv;
          if (k_ != 0) {
            nv %= k_;
            if (nv < 0) nv += k_;
          }
          if (old == 0 && nv != 0) {
            touched_.push_back(static_cast<int32_t>(cursor + offset));
            ++nonzero;
          } else if (old != 0 && nv == 0) {
            --nonzero;
          }
          slot = static_cast<int32_t>(nv);
        }
      }
      hits += (cursor == 0 && nonzero == 0) ? 1 : 0;
      for (int32_t idx : touched_) lamps_[static_cast<size_t>(idx)] = 0;
      touched_.clear();
    }
    return hits;
  }

 private:
  int64_t k_;
  std::vector<int32_t> lamps_;
  std::vector<int32_t> touched_;
};

// Open-addressing lamp table keyed by packed coordinates, for base rank 2..3.
class WreathSparseSampler : public SamplerBase {
 public:
  WreathSparseSampler(int d, int64_t k) : d_(d), k_(k) {}
  void prepare(int64_t n) override {
    size_t want = 64;
    while (want < static_cast<size_t>(8 * (n + 2))) want <<= 1;
    keys_.assign(want, 0);
    vals_.assign(want, 0);
    used_.assign(want, 0);
    mask_ = want - 1;
    touched_.clear();
    touched_.reserve(static_cast<size_t>(n + 1));
    shift_ = 1;
    while ((int64_t(1) << shift_) < 2 * n + 2) ++shift_;
  }
  uint64_t run_block(Xoshiro256pp& rng, int64_t n, uint64_t count) override {
    uint32_t moves = static_cast<uint32_t>(2 * d_) + (k_ == 2 ? 1 : 2);
    uint64_t hits = 0;
    for (uint64_t s = 0; s < count; ++s) {
      int64_t pos[3] = {0, 0, 0};
      int64_t nonzero = 0;
      for (int64_t i = 0; i < n; ++i) {
        uint32_t r = rng.below(moves);
        if (r < 2 * static_cast<uint32_t>(d_)) {
          pos[r >> 1] += (r & 1) ? -1 : 1;
        } else {
          int64_t dv = (r == 2 * static_cast<uint32_t>(d_)) ? 1 : -1;
          uint64_t key = 1;  // nonzero sentinel bit keeps packed keys distinct from empty
          for (int a = 0; a < d_; ++a)
            key = (key << shift_) | static_cast<uint64_t>(pos[a] + n);
          size_t slot = probe(key);
          int64_t old = used_[slot] ? vals_[slot] : 0;
          int64_t nv = old + dv;
          if (k_ != 0) {
            nv %= k_;
            if (nv < 0) nv += k_;
          }
          if (!used_[slot]) {
            used_[slot] = 1;
            keys_[slot] = key;
            vals_[slot] = 0;
            touched_.push_back(static_cast<uint32_t>(slot));
          }
          if (old == 0 && nv != 0)
            ++nonzero;
          else if (old != 0 && nv == 0)
            --nonzero;
          vals_[slot] = static_cast<int32_t>(nv);
        }
      }
      bool zero = nonzero == 0;
      for (int a = 0; a < d_; ++a) zero &= (pos[a] == 0);
      hits += zero ? 1 : 0;
      for (uint32_t slot : touched_) {
        used_[slot] = 0;
        vals_[slot] = 0;
      }
      touched_.clear();
    }
    return hits;
  }

 private:
  size_t probe(uint64_t key) {
    uint64_t h = key + 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h ^= h >> 31;
    size_t slot = static_cast<size_t>(h) & mask_;
    while (used_[slot] && keys_[slot] != key) slot = (slot + 1) & mask_;
    return slot;
  }

  int d_;
  int64_t k_;
  std::vector<uint64_t> keys_;
  std::vector<int32_t> vals_;
  std::vector<uint8_t> used_;
  std::vector<uint32_t> touched_;
  size_t mask_ = 0;
  int shift_ = 1;
};

class GenericSampler : public SamplerBase {
 public:
  explicit GenericSampler(const GroupSpec& spec) : spec_(spec), gens_(symmetric_generators(spec)) {
    if (gens_.empty()) throw InputError("the group has no generators to walk on");
  }
  void prepare(int64_t) override {}
  uint64_t run_block(Xoshiro256pp& rng, int64_t n, uint64_t count) override {
    uint64_t hits = 0;
    uint32_t moves = static_cast<uint32_t>(gens_.size());
    for (uint64_t s = 0; s < count; ++s) {
      GroupElement g = identity_element(spec_);
      for (int64_t i = 0; i < n; ++i) g = multiply(spec_, g, gens_[rng.below(moves)]);
      hits += is_identity(spec_, g) ? 1 : 0;
    }
    return hits;
  }

 private:
  GroupSpec spec_;
  std::vector<GroupElement> gens_;
};

std::unique_ptr<SamplerBase> make_sampler(const GroupSpec& spec) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian:
      if (spec.d >= 1 && spec.d <= 8) return std::make_unique<ZdSampler>(spec.d);
      break;
    case GroupSpec::Family::wreath:
      if (spec.d == 1) return std::make_unique<Wreath1Sampler>(spec.lamp_modulus);
      if (spec.d <= 3) return std::make_unique<WreathSparseSampler>(spec.d, spec.lamp_modulus);
      break;
    default:
      break;
  }
  return std::make_unique<GenericSampler>(spec);
}

}  // namespace

bool has_fast_sampler(const GroupSpec& spec) {
  switch (spec.family) {
    case GroupSpec::Family::free_abelian: return spec.d >= 1 && spec.d <= 8;
    case GroupSpec::Family::wreath: return spec.d <= 3;
    default: return false;
  }
}

std::pair<double, double> wilson_interval(uint64_t hits, uint64_t samples) {
  if (samples == 0 || hits > samples) throw InputError("bad hit/sample counts");
  const double z = 1.959963984540054;
  double n = static_cast<double>(samples);
  double phat = static_cast<double>(hits) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (phat + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  // at the boundary the exact endpoints are 0 / 1; rounding would otherwise
  // leave a stray ~1e-19 residue
  double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = hits == samples ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

std::vector<WalkEstimate> monte_carlo_return(const GroupSpec& spec, const std::vector<int64_t>& ns,
                                             const MonteCarloOptions& opts) {
  if (opts.samples == 0) throw InputError("sample count must be positive");
  int threads = std::max(1, std::min(opts.threads, 64));
  std::vector<WalkEstimate> out;
  for (int64_t n : ns) {
    if (n <= 0 || n % 2 != 0)
      throw InputError("walk lengths must be positive even numbers (odd-step returns vanish)");
    uint64_t blocks = (opts.samples + kBlockSize - 1) / kBlockSize;
    std::atomic<uint64_t> next_block{0};
    std::atomic<uint64_t> total_hits{0};
    auto worker = [&]() {
      std::unique_ptr<SamplerBase> sampler = make_sampler(spec);
      sampler->prepare(n);
      uint64_t local = 0;
      while (true) {
        uint64_t b = next_block.fetch_add(1);
        if (b >= blocks) break;
        uint64_t lo = b * kBlockSize;
        uint64_t cnt = std::min(kBlockSize, opts.samples - lo);
        Xoshiro256pp rng(derive_seed(opts.seed, static_cast<uint64_t>(n), b));
        local += sampler->run_block(rng, n, cnt);
      }
      total_hits.fetch_add(local);
    };
    int nthreads = static_cast<int>(std::min<uint64_t>(static_cast<uint64_t>(threads), blocks));
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(nthreads));
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }
    uint64_t hits = total_hits.load();
    WalkEstimate est;
    est.n = n;
    est.hits = hits;
    est.samples = opts.samples;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(opts.samples);
    auto [lo, hi] = wilson_interval(hits, opts.samples);
    est.p_lower = lo;
    est.p_upper = hi;
    est.standard_error =
        std::sqrt(std::max(0.0, est.p_hat * (1.0 - est.p_hat)) / static_cast<double>(opts.samples));
    out.push_back(std::move(est));
  }
  return out;
}

}  // namespace kw
