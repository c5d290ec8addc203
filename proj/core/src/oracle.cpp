#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "gqf/oracle.hpp"

namespace gqf {

// ---------------------------------------------------------------------------
// ExactOracle
// ---------------------------------------------------------------------------

void ExactOracle::insert(uint64_t key) {
  key_positions_[key].push_back(live_keys_.size());
  live_keys_.push_back(key);
  ++fp_counts_[fp_of(key)];
}

void ExactOracle::erase(uint64_t key) {
  auto it = key_positions_.find(key);
  assert(it != key_positions_.end() && !it->second.empty());
  size_t idx = it->second.back();
  it->second.pop_back();
  if (it->second.empty()) key_positions_.erase(it);

  size_t last = live_keys_.size() - 1;
  if (idx != last) {
    uint64_t moved = live_keys_[last];
    live_keys_[idx] = moved;
    auto& mv = key_positions_[moved];
    *std::find(mv.begin(), mv.end(), last) = idx;
  }
  live_keys_.pop_back();

  auto fit = fp_counts_.find(fp_of(key));
  assert(fit != fp_counts_.end());
  if (--fit->second == 0) fp_counts_.erase(fit);
}

bool ExactOracle::contains_key(uint64_t key) const {
  return key_positions_.count(key) > 0;
}

bool ExactOracle::contains_fp(uint64_t fp) const {
  return fp_counts_.count(fp) > 0;
}

std::vector<uint64_t> ExactOracle::fingerprints() const {
  std::vector<uint64_t> out;
  out.reserve(live_keys_.size());
  for (const auto& [fp, count] : fp_counts_)
    for (uint64_t i = 0; i < count; ++i) out.push_back(fp);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Reference layout
// ---------------------------------------------------------------------------

GraveyardFilter ref_layout(const std::vector<uint64_t>& fps,
                           FilterConfig config) {
  config.validate();
  const uint64_t cap = config.capacity();
  const uint64_t mask = cap - 1;
  if (fps.size() > cap)
    throw std::invalid_argument("ref_layout: more fingerprints than slots");

  std::vector<std::vector<uint32_t>> per_bucket(cap);
  for (uint64_t fp : fps) {
    auto [quotient, remainder] = split_fingerprint(fp, config.q, config.r);
    per_bucket[quotient].push_back(remainder);
  }
  for (auto& v : per_bucket) std::sort(v.begin(), v.end());

  // Find a bucket whose run starts unshifted: the first bucket with elements
  // whose pending backlog (Lindley recursion over two laps) is zero.
  uint64_t anchor = kNoBucket;
  uint64_t backlog = 0;
  for (int lap = 0; lap < 2 && anchor == kNoBucket; ++lap) {
    for (uint64_t i = 0; i < cap; ++i) {
      if (lap == 1 && backlog == 0 && !per_bucket[i].empty()) {
        anchor = i;
        break;
      }
      backlog += per_bucket[i].size();
      if (backlog > 0) --backlog;
    }
  }

  std::vector<GraveyardFilter::RawSlot> slots(cap);
  if (anchor != kNoBucket) {
    uint64_t write = anchor;
    for (uint64_t step = 0; step < cap; ++step) {
      uint64_t b = (anchor + step) & mask;
      if (per_bucket[b].empty()) continue;
      if (((write - anchor) & mask) < ((b - anchor) & mask)) write = b;
      slots[b].occupied = true;
      bool first = true;
      for (uint32_t remainder : per_bucket[b]) {
        GraveyardFilter::RawSlot& s = slots[write];
        s.live = true;
        s.remainder = remainder;
        s.continuation = !first;
        s.shifted = (write != b);
        first = false;
        write = (write + 1) & mask;
      }
    }
  }
  return GraveyardFilter::from_slots(config, slots);
}

// ---------------------------------------------------------------------------
// Closed-form false positive probability
// ---------------------------------------------------------------------------

double closed_form_fp(uint64_t n, uint32_t q, uint32_t r) {
  if (n == 0) return 0.0;
  long double eps = std::ldexp(1.0L, -static_cast<int>(q + r));
  long double miss = static_cast<long double>(n) * std::log1p(-eps);
  return static_cast<double>(-std::expm1(miss));
}

// ---------------------------------------------------------------------------
// Structural validation (independent reconstruction)
// ---------------------------------------------------------------------------

std::optional<std::string> validate_structure(const GraveyardFilter& f) {
  const uint64_t cap = f.capacity();
  const uint64_t mask = cap - 1;
  auto nxt = [&](uint64_t i) { return (i + 1) & mask; };
  auto prv = [&](uint64_t i) { return (i - 1) & mask; };
  auto fd = [&](uint64_t a, uint64_t b) { return (b - a) & mask; };
  auto err = [](uint64_t i, const std::string& what) {
    std::ostringstream os;
    os << what << " (slot " << i << ")";
    return std::optional<std::string>(os.str());
  };

  std::vector<SlotView> v(cap);
  for (uint64_t i = 0; i < cap; ++i) v[i] = f.slot_view(i);

  uint64_t lives = 0;
  uint64_t tombs = 0;
  for (uint64_t i = 0; i < cap; ++i) {
    const SlotView& s = v[i];
    if (s.empty) {
      if (s.occupied) return err(i, "empty slot with is_occupied");
      if (s.continuation) return err(i, "empty slot with is_continuation");
      if (s.shifted) return err(i, "empty slot with is_shifted");
      continue;
    }
    if (s.tombstone)
      ++tombs;
    else
      ++lives;
    if (s.continuation && !s.shifted)
      return err(i, "continuation without is_shifted");
    if (s.shifted && v[prv(i)].empty)
      return err(i, "shifted slot preceded by an empty slot");
  }
  if (lives != f.element_count())
    return err(0, "element_count does not match a full scan");
  if (tombs != f.tombstone_count())
    return err(0, "tombstone_count does not match a full scan");

  if (f.payloads().size() != tombs)
    return err(0, "payload store size does not match tombstone count");
  for (uint64_t i = 0; i < cap; ++i) {
    if (v[i].tombstone && f.payloads().find(i) == f.payloads().end())
      return err(i, "tombstone without a payload entry");
  }

  // Cluster walks: run pairing, ordering, shapes, sortedness.
  std::vector<uint64_t> owner(cap, kNoBucket);
  std::vector<char> visited(cap, 0);
  std::vector<char> bucket_has_run(cap, 0);
  for (uint64_t i = 0; i < cap; ++i) {
    if (v[i].empty || v[i].shifted) continue;
    std::deque<uint64_t> buckets;
    uint64_t cur = kNoBucket;
    uint64_t last_bucket = kNoBucket;
    bool in_tomb_tail = false;
    bool have_prev_rem = false;
    uint32_t prev_rem = 0;
    uint64_t pos = i;
    uint64_t steps = 0;
    for (;;) {
      visited[pos] = 1;
      const SlotView& s = v[pos];
      if (s.occupied) buckets.push_back(pos);
      if (s.live()) {
        if (!s.continuation) {
          if (buckets.empty())
            return err(pos, "run start without an occupied bucket");
          cur = buckets.front();
          buckets.pop_front();
          bucket_has_run[cur] = 1;
          if (last_bucket != kNoBucket && fd(i, cur) <= fd(i, last_bucket))
            return err(pos, "run buckets out of order within cluster");
          last_bucket = cur;
          if (fd(i, pos) < fd(i, cur))
            return err(pos, "run start left of its canonical bucket");
          if (!s.shifted && pos != cur)
            return err(pos, "unshifted run start away from canonical");
          if (s.shifted && pos == cur)
            return err(pos, "shifted run start at its canonical slot");
          in_tomb_tail = false;
          have_prev_rem = false;
        } else {
          if (cur == kNoBucket)
            return err(pos, "live continuation attached to no run");
          if (in_tomb_tail)
            return err(pos, "live slot after the run's trailing tombstones");
        }
        if (have_prev_rem && s.remainder < prev_rem)
          return err(pos, "run remainders not sorted");
        prev_rem = s.remainder;
        have_prev_rem = true;
        owner[pos] = cur;
      } else {
        if (!s.continuation) {
          if (pos != i)
            return err(pos, "unattached tombstone inside a cluster");
          cur = kNoBucket;
        }
        in_tomb_tail = true;
      }
      uint64_t n = nxt(pos);
      if (v[n].empty || !v[n].shifted) break;
      pos = n;
      if (++steps > cap) return err(pos, "cluster never terminates");
    }
    if (!buckets.empty())
      return err(buckets.front(), "occupied bucket without a run in cluster");
  }
  for (uint64_t i = 0; i < cap; ++i) {
    if (!v[i].empty && !visited[i])
      return err(i, "non-empty slot unreachable from any cluster start");
    if (v[i].occupied && !bucket_has_run[i])
      return err(i, "occupied bucket with no run anywhere");
  }

  // Payload freshness, via an independent nearest-live scan.
  for (uint64_t i = 0; i < cap; ++i) {
    if (!v[i].tombstone) continue;
    TombstonePayload expect;
    if (lives > 0) {
      for (uint64_t d = 1; d <= cap; ++d) {
        uint64_t left = (i - d) & mask;
        if (v[left].live()) {
          expect.predecessor = owner[left];
          break;
        }
      }
      for (uint64_t d = 1; d <= cap; ++d) {
        uint64_t right = (i + d) & mask;
        if (v[right].live()) {
          expect.successor = owner[right];
          break;
        }
      }
    }
    auto it = f.payloads().find(i);
    if (it == f.payloads().end() || !(it->second == expect))
      return err(i, "stale tombstone payload");
  }

  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Differential harness
// ---------------------------------------------------------------------------

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kFalseNegative:
      return "false_negative";
    case ViolationKind::kDeleteMiss:
      return "delete_miss";
    case ViolationKind::kQueryDivergence:
      return "query_divergence";
    case ViolationKind::kDecodeMismatch:
      return "decode_mismatch";
    case ViolationKind::kStructureViolation:
      return "structure_violation";
  }
  return "unknown";
}

std::vector<std::string> DifferentialReport::machine_lines() const {
  std::vector<std::string> lines;
  lines.reserve(violations.size());
  for (const Violation& violation : violations) {
    std::ostringstream os;
    os << "seed=" << violation.seed << " op=" << violation.op_index
       << " policy=" << violation.lane << " kind=" << to_string(violation.kind);
    lines.push_back(os.str());
  }
  return lines;
}

std::string DifferentialReport::text() const {
  std::ostringstream os;
  os << "differential run: seed=" << seed << " ops=" << ops_executed;
  if (violations.empty()) {
    os << " zero violations\n";
    return os.str();
  }
  os << " " << violations.size() << " violation(s)\n";
  for (const Violation& violation : violations) {
    os << "  op " << violation.op_index << " lane " << violation.lane << " "
       << to_string(violation.kind);
    if (!violation.detail.empty()) os << ": " << violation.detail;
    os << " (reproduce: seed " << violation.seed << ", first "
       << (violation.op_index + 1) << " ops)\n";
  }
  return os.str();
}

namespace {

struct Lane {
  std::string name;
  std::variant<GraveyardFilter, BaseQuotientFilter> filter;

  void insert(uint64_t key) {
    std::visit([&](auto& f) { f.insert(key); }, filter);
  }
  bool erase(uint64_t key) {
    return std::visit([&](auto& f) { return f.erase(key); }, filter);
  }
  bool query(uint64_t key) {
    return std::visit([&](auto& f) { return f.query(key); }, filter);
  }
  std::vector<uint64_t> decode() const {
    return std::visit([&](const auto& f) { return f.decode(); }, filter);
  }
  GraveyardFilter* graveyard() {
    return std::get_if<GraveyardFilter>(&filter);
  }
};

}  // namespace

DifferentialReport differential_run(uint64_t seed, FilterConfig config,
                                    const DifferentialOptions& options) {
  DifferentialReport report;
  report.seed = seed;

  std::vector<Lane> lanes;
  for (PolicyKind policy : options.policies) {
    FilterConfig c = config;
    c.policy = policy;
    lanes.push_back(Lane{to_string(policy), GraveyardFilter(c)});
  }
  if (options.include_base_control)
    lanes.push_back(Lane{"BaseQF", BaseQuotientFilter(config)});

  ExactOracle oracle(config.q, config.r, config.seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const uint64_t cap = config.capacity();

  auto add = [&](size_t op, const std::string& lane, ViolationKind kind,
                 std::string detail) {
    report.violations.push_back({seed, op, lane, kind, std::move(detail)});
  };

  auto decode_check = [&](size_t op) {
    std::vector<uint64_t> expect = oracle.fingerprints();
    for (Lane& lane : lanes) {
      try {
        if (lane.decode() != expect)
          add(op, lane.name, ViolationKind::kDecodeMismatch,
              "decode differs from oracle multiset");
      } catch (const structural_corruption& e) {
        add(op, lane.name, ViolationKind::kStructureViolation, e.what());
      }
    }
  };

  auto validate_check = [&](size_t op) {
    for (Lane& lane : lanes) {
      if (GraveyardFilter* f = lane.graveyard()) {
        if (auto problem = validate_structure(*f))
          add(op, lane.name, ViolationKind::kStructureViolation, *problem);
      }
    }
  };

  size_t op = 0;
  for (; op < options.op_count; ++op) {
    if (report.violations.size() >= options.max_violations) break;
    if (op == options.fault_at && options.fault) {
      for (Lane& lane : lanes) {
        if (GraveyardFilter* f = lane.graveyard()) {
          options.fault(*f);
          break;
        }
      }
    }

    double x = u01(rng);
    enum { kInsert, kErase, kQuery } kind;
    if (x < options.insert_weight)
      kind = kInsert;
    else if (x < options.insert_weight + options.erase_weight)
      kind = kErase;
    else
      kind = kQuery;
    if (oracle.size() == 0 && kind == kErase) kind = kInsert;
    if (kind == kInsert &&
        oracle.size() >= (cap * 7) / 8)  // keep clear of capacity
      kind = oracle.size() > 0 ? kErase : kQuery;

    switch (kind) {
      case kInsert: {
        uint64_t key = rng();
        oracle.insert(key);
        for (Lane& lane : lanes) lane.insert(key);
        break;
      }
      case kErase: {
        uint64_t key = oracle.live_keys()[rng() % oracle.size()];
        for (Lane& lane : lanes) {
          if (!lane.erase(key))
            add(op, lane.name, ViolationKind::kDeleteMiss,
                "present key not found by erase");
        }
        oracle.erase(key);
        break;
      }
      case kQuery: {
        bool successful = oracle.size() > 0 && u01(rng) < 0.5;
        uint64_t key =
            successful ? oracle.live_keys()[rng() % oracle.size()] : rng();
        bool expect_present = oracle.contains_fp(oracle.fp_of(key));
        bool first = false;
        bool have_first = false;
        for (Lane& lane : lanes) {
          bool got = lane.query(key);
          if (expect_present && !got)
            add(op, lane.name, ViolationKind::kFalseNegative,
                "stored fingerprint not found");
          if (!have_first) {
            first = got;
            have_first = true;
          } else if (got != first) {
            add(op, lane.name, ViolationKind::kQueryDivergence,
                "query answer differs across lanes");
          }
        }
        break;
      }
    }

    if (options.decode_check_every != 0 &&
        (op + 1) % options.decode_check_every == 0)
      decode_check(op);
    if (options.validate_every != 0 && (op + 1) % options.validate_every == 0)
      validate_check(op);
  }

  decode_check(op == 0 ? 0 : op - 1);
  report.ops_executed = op;
  return report;
}

}  // namespace gqf
