#include <algorithm>
#include <cassert>
#include <cstring>
#include <deque>
#include <stdexcept>

#include "gqf/filter.hpp"

namespace gqf {

// ---------------------------------------------------------------------------
// Config and policy names
// ---------------------------------------------------------------------------

const char* to_string(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::kNoRedistribution:
      return "NoRedistribution";
    case PolicyKind::kAmortizedClean:
      return "AmortizedClean";
    case PolicyKind::kBetweenRuns:
      return "BetweenRuns";
    case PolicyKind::kCleanUp:
      return "CleanUp";
    case PolicyKind::kGraveyardHashing:
      return "GraveyardHashing";
  }
  return "UnknownPolicy";
}

bool parse_policy(std::string_view name, PolicyKind& out) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  auto is = [&](std::string_view a, std::string_view b = {}) {
    return lower == a || (!b.empty() && lower == b);
  };
  if (is("noredistribution", "none")) {
    out = PolicyKind::kNoRedistribution;
  } else if (is("amortizedclean", "amortized")) {
    out = PolicyKind::kAmortizedClean;
  } else if (is("betweenruns", "between-runs")) {
    out = PolicyKind::kBetweenRuns;
  } else if (is("cleanup", "clean-up")) {
    out = PolicyKind::kCleanUp;
  } else if (is("graveyardhashing", "graveyard")) {
    out = PolicyKind::kGraveyardHashing;
  } else {
    return false;
  }
  return true;
}

void FilterConfig::validate() const {
  if (q < 3 || q > 30)
    throw std::invalid_argument("FilterConfig: q must be in 3..30");
  if (r < 1 || r > 32)
    throw std::invalid_argument("FilterConfig: r must be in 1..32");
  if (q + r > 64)
    throw std::invalid_argument("FilterConfig: q + r must be at most 64");
}

// ---------------------------------------------------------------------------
// Hashing (MurmurHash64A)
// ---------------------------------------------------------------------------

uint64_t murmur64a(const void* data, size_t len, uint64_t seed) {
  const uint64_t m = 0xc6a4a7935bd1e995ULL;
  const int s = 47;
  uint64_t h = seed ^ (len * m);

  const auto* p = static_cast<const unsigned char*>(data);
  const unsigned char* end = p + (len & ~size_t{7});
  while (p != end) {
    uint64_t k;
    std::memcpy(&k, p, 8);
    p += 8;
    k *= m;
    k ^= k >> s;
    k *= m;
    h ^= k;
    h *= m;
  }

  switch (len & 7) {
    case 7:
      h ^= uint64_t{p[6]} << 48;
      [[fallthrough]];
    case 6:
      h ^= uint64_t{p[5]} << 40;
      [[fallthrough]];
    case 5:
      h ^= uint64_t{p[4]} << 32;
      [[fallthrough]];
    case 4:
      h ^= uint64_t{p[3]} << 24;
      [[fallthrough]];
    case 3:
      h ^= uint64_t{p[2]} << 16;
      [[fallthrough]];
    case 2:
      h ^= uint64_t{p[1]} << 8;
      [[fallthrough]];
    case 1:
      h ^= uint64_t{p[0]};
      h *= m;
  }

  h ^= h >> s;
  h *= m;
  h ^= h >> s;
  return h;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

GraveyardFilter::GraveyardFilter(FilterConfig config) : cfg_(config) {
  cfg_.validate();
  cap_ = cfg_.capacity();
  mask_ = cap_ - 1;
  meta_.assign(cap_, 0);
  rem_.assign(cap_, 0);
}

void GraveyardFilter::insert(std::span<const std::byte> key) {
  insert_fp(make_fp(key));
}

bool GraveyardFilter::query(std::span<const std::byte> key) {
  return query_fp(make_fp(key));
}

bool GraveyardFilter::erase(std::span<const std::byte> key) {
  return erase_fp(make_fp(key));
}

// ---------------------------------------------------------------------------
// Slot writes
// ---------------------------------------------------------------------------

void GraveyardFilter::write_live_(uint64_t i, uint32_t rem, bool continuation,
                                  bool shifted) {
  meta_[i] = static_cast<uint8_t>((meta_[i] & kOccBit) | kLiveBit |
                                  (continuation ? kContBit : 0) |
                                  (shifted ? kShiftBit : 0));
  rem_[i] = rem;
}

void GraveyardFilter::write_tomb_(uint64_t i, bool continuation, bool shifted) {
  meta_[i] = static_cast<uint8_t>((meta_[i] & kOccBit) | kTombBit |
                                  (continuation ? kContBit : 0) |
                                  (shifted ? kShiftBit : 0));
  rem_[i] = 0;
}

void GraveyardFilter::clear_slot_(uint64_t i) {
  meta_[i] = 0;
  rem_[i] = 0;
}

// ---------------------------------------------------------------------------
// Navigation
// ---------------------------------------------------------------------------

uint64_t GraveyardFilter::find_cluster_start(uint64_t i) const {
  assert(!slot_empty_(i));
  uint64_t steps = 0;
  while (shift_(i)) {
    i = prev_(i);
    if (++steps > cap_)
      throw structural_corruption("shifted slots wrap the whole table");
  }
  return i;
}

uint64_t GraveyardFilter::count_occupied_through_(uint64_t from,
                                                  uint64_t to) const {
  uint64_t n = 0;
  for (uint64_t i = from;; i = next_(i)) {
    if (occ_(i)) ++n;
    if (i == to) break;
  }
  return n;
}

uint64_t GraveyardFilter::nth_live_run_start_(uint64_t j,
                                              uint64_t count) const {
  assert(count > 0);
  uint64_t seen = 0;
  uint64_t steps = 0;
  for (uint64_t s = j;; s = next_(s)) {
    if (live_(s) && !cont_(s)) {
      if (++seen == count) return s;
    }
    if (++steps > cap_)
      throw structural_corruption("no matching run start in cluster");
  }
}

uint64_t GraveyardFilter::find_run(uint64_t bucket) const {
  assert(occ_(bucket));
  uint64_t j = find_cluster_start(bucket);
  return nth_live_run_start_(j, count_occupied_through_(j, bucket));
}

uint64_t GraveyardFilter::run_live_end_(uint64_t s) const {
  uint64_t e = s;
  for (;;) {
    uint64_t n = next_(e);
    if (live_(n) && cont_(n))
      e = n;
    else
      return e;
  }
}

uint64_t GraveyardFilter::run_of_slot_(uint64_t x) const {
  assert(live_(x));
  uint64_t j = find_cluster_start(x);
  std::deque<uint64_t> buckets;
  uint64_t cur = kNoBucket;
  uint64_t steps = 0;
  for (uint64_t pos = j;; pos = next_(pos)) {
    if (occ_(pos)) buckets.push_back(pos);
    if (live_(pos) && !cont_(pos)) {
      if (buckets.empty())
        throw structural_corruption("run start without an occupied bucket");
      cur = buckets.front();
      buckets.pop_front();
    }
    if (pos == x) {
      if (cur == kNoBucket)
        throw structural_corruption("live slot outside any run");
      return cur;
    }
    if (++steps > cap_) throw structural_corruption("unterminated run walk");
  }
}

// ---------------------------------------------------------------------------
// Insert
// ---------------------------------------------------------------------------

GraveyardFilter::InsertPoint GraveyardFilter::locate_insert_(
    uint64_t bucket, uint32_t remainder) const {
  InsertPoint ip;
  if (slot_empty_(bucket)) {
    ip.cluster_start = bucket;
    ip.pos = bucket;
    ip.action = InsertPoint::kWriteEmpty;
    return ip;
  }
  uint64_t j = find_cluster_start(bucket);
  ip.cluster_start = j;

  if (occ_(bucket)) {
    // Existing run: find the sorted position among its live remainders.
    ip.run_exists = true;
    uint64_t s = nth_live_run_start_(j, count_occupied_through_(j, bucket));
    ip.run_start = s;
    uint64_t e = run_live_end_(s);
    uint64_t p_int = kNoBucket;  // first live slot with remainder > new one
    for (uint64_t pos = s;; pos = next_(pos)) {
      if (rem_[pos] > remainder) {
        p_int = pos;
        break;
      }
      if (pos == e) break;
    }
    if (p_int == kNoBucket) {
      // Belongs after the live end.
      uint64_t t = next_(e);
      ip.pos = t;
      ip.action = tomb_(t) ? InsertPoint::kReuseTombstone
                 : slot_empty_(t) ? InsertPoint::kWriteEmpty
                                  : InsertPoint::kDisplace;
      return ip;
    }
    if (p_int == s) {
      // Belongs at the run head. A tombstone directly left can host the new
      // element if it lies inside the cluster at or right of the canonical
      // bucket.
      ip.at_run_head = true;
      uint64_t t = prev_(s);
      if (s != j && tomb_(t) && fdist_(j, t) >= fdist_(j, bucket)) {
        ip.pos = t;
        ip.action = InsertPoint::kReuseTombstone;
        return ip;
      }
      ip.pos = s;
      ip.action = InsertPoint::kDisplace;
      return ip;
    }
    ip.pos = p_int;
    ip.action = InsertPoint::kDisplace;
    return ip;
  }

  // New run: it belongs right after the runs of all smaller occupied buckets.
  uint64_t count = count_occupied_through_(j, bucket);  // all < bucket
  uint64_t p0;
  if (count == 0) {
    p0 = j;
  } else {
    uint64_t s = nth_live_run_start_(j, count);
    p0 = next_(run_live_end_(s));
  }
  // Never left of the canonical slot.
  uint64_t pos = fdist_(j, p0) >= fdist_(j, bucket) ? p0 : bucket;
  ip.pos = pos;
  ip.action = tomb_(pos) ? InsertPoint::kReuseTombstone
             : slot_empty_(pos) ? InsertPoint::kWriteEmpty
                                : InsertPoint::kDisplace;
  return ip;
}

std::optional<uint64_t> GraveyardFilter::first_fillable_(uint64_t p) const {
  uint64_t i = p;
  for (uint64_t steps = 0; steps < cap_; ++steps) {
    if (!live_(i)) return i;
    i = next_(i);
  }
  return std::nullopt;
}

std::optional<uint64_t> GraveyardFilter::first_empty_(uint64_t p) const {
  uint64_t i = p;
  for (uint64_t steps = 0; steps < cap_; ++steps) {
    if (slot_empty_(i)) return i;
    i = next_(i);
  }
  return std::nullopt;
}

void GraveyardFilter::displace_right_(uint64_t p, uint64_t stop) {
  // Slot `stop` is consumed: a tombstone there absorbs the shift.
  if (tomb_(stop)) {
    payloads_.erase(stop);
    --tombstone_count_;
  }
  for (uint64_t i = stop; i != p; i = prev_(i)) {
    uint64_t src = prev_(i);
    uint8_t moved = static_cast<uint8_t>(meta_[src] & ~kOccBit);
    meta_[i] = static_cast<uint8_t>((meta_[i] & kOccBit) | moved | kShiftBit);
    rem_[i] = rem_[src];
    if (moved & kTombBit) {
      auto it = payloads_.find(src);
      if (it != payloads_.end()) {
        payloads_[i] = it->second;
        payloads_.erase(src);
      }
    }
  }
}

ReuseDecision GraveyardFilter::try_reuse_tombstone(uint64_t bucket,
                                                   uint32_t remainder) const {
  if (slot_empty_(bucket)) return ReuseDecision::fallback();
  InsertPoint ip = locate_insert_(bucket, remainder);
  if (ip.action == InsertPoint::kReuseTombstone)
    return ReuseDecision::reuse_at(ip.pos);
  return ReuseDecision::fallback();
}

void GraveyardFilter::do_insert_(uint64_t bucket, uint32_t remainder) {
  InsertPoint ip = locate_insert_(bucket, remainder);
  switch (ip.action) {
    case InsertPoint::kWriteEmpty: {
      if (ip.run_exists)
        write_live_(ip.pos, remainder, true, true);  // appended at run end
      else
        write_live_(ip.pos, remainder, false, ip.pos != bucket);
      set_bit_(bucket, kOccBit, true);
      ++element_count_;
      refresh_payload_neighborhood_(ip.pos, ip.pos);
      return;
    }
    case InsertPoint::kReuseTombstone: {
      payloads_.erase(ip.pos);
      --tombstone_count_;
      if (ip.run_exists) {
        if (ip.at_run_head) {
          write_live_(ip.pos, remainder, false, ip.pos != bucket);
          // The old head becomes a continuation.
          set_bit_(ip.run_start, kContBit, true);
          set_bit_(ip.run_start, kShiftBit, true);
        } else {
          write_live_(ip.pos, remainder, true, true);
        }
      } else {
        write_live_(ip.pos, remainder, false, ip.pos != bucket);
      }
      set_bit_(bucket, kOccBit, true);
      ++element_count_;
      refresh_payload_neighborhood_(ip.pos, ip.pos);
      return;
    }
    case InsertPoint::kDisplace: {
      auto stop = first_fillable_(ip.pos);
      if (!stop) throw capacity_exhausted();
      displace_right_(ip.pos, *stop);
      if (ip.run_exists && ip.at_run_head) {
        write_live_(ip.pos, remainder, false, ip.pos != bucket);
        set_bit_(next_(ip.pos), kContBit, true);  // old head
      } else if (ip.run_exists) {
        write_live_(ip.pos, remainder, true, true);
      } else {
        // New run start; the displaced slot was the next run's start and
        // keeps its own continuation bit.
        write_live_(ip.pos, remainder, false, ip.pos != bucket);
      }
      set_bit_(bucket, kOccBit, true);
      ++element_count_;
      refresh_payload_neighborhood_(ip.pos, *stop);
      return;
    }
  }
}

void GraveyardFilter::insert_fp(uint64_t fp) {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (element_count_ == cap_) throw capacity_exhausted();
  do_insert_(bucket, remainder);
  after_mutation_();
}

void GraveyardFilter::after_mutation_() {
  ++redist_.ops_since_last;
  maybe_redistribute();
}

// ---------------------------------------------------------------------------
// Query
// ---------------------------------------------------------------------------

bool GraveyardFilter::query_fp(uint64_t fp) {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (!occ_(bucket)) {
    if (cfg_.policy == PolicyKind::kAmortizedClean && tomb_(bucket))
      amortized_clean_(bucket, bucket);
    return false;
  }
  uint64_t j = find_cluster_start(bucket);
  uint64_t s = nth_live_run_start_(j, count_occupied_through_(j, bucket));
  bool found = false;
  uint64_t pos = s;
  uint64_t last = s;
  for (;;) {
    last = pos;
    if (live_(pos)) {
      if (rem_[pos] == remainder) {
        found = true;
        break;
      }
      if (rem_[pos] > remainder) break;  // run is sorted: cannot match later
    }
    uint64_t n = next_(pos);
    if (slot_empty_(n) || !cont_(n)) break;
    pos = n;
  }
  if (cfg_.policy == PolicyKind::kAmortizedClean) {
    uint64_t hi = fdist_(j, last) >= fdist_(j, bucket) ? last : bucket;
    amortized_clean_(j, hi);
  }
  return found;
}

// ---------------------------------------------------------------------------
// Erase
// ---------------------------------------------------------------------------

bool GraveyardFilter::erase_fp(uint64_t fp) {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (!occ_(bucket)) return false;
  uint64_t j = find_cluster_start(bucket);
  uint64_t s = nth_live_run_start_(j, count_occupied_through_(j, bucket));
  uint64_t e = run_live_end_(s);

  uint64_t victim = kNoBucket;
  for (uint64_t pos = s;; pos = next_(pos)) {
    if (rem_[pos] == remainder) {
      victim = pos;
      break;
    }
    if (rem_[pos] > remainder) break;
    if (pos == e) break;
  }
  if (victim == kNoBucket) return false;

  make_tombstone_(j, s, e, victim, bucket);

  if (cfg_.policy == PolicyKind::kAmortizedClean && victim != j)
    amortized_clean_(j, prev_(victim));

  after_mutation_();
  return true;
}

void GraveyardFilter::make_tombstone_(uint64_t cluster_start,
                                      uint64_t run_start, uint64_t run_end,
                                      uint64_t victim, uint64_t bucket) {
  // Swap to the end of the run: live members after the victim compact left
  // one slot, the freed live end becomes the tombstone.
  for (uint64_t pos = victim; pos != run_end; pos = next_(pos))
    rem_[pos] = rem_[next_(pos)];

  bool run_died = (run_start == run_end);
  if (run_died) {
    if (run_start == cluster_start) {
      // The cluster's first run vanished; its tombstone leads the cluster
      // unattached.
      write_tomb_(run_start, false, false);
    } else {
      write_tomb_(run_start, true, true);  // attaches to the preceding run
    }
    set_bit_(bucket, kOccBit, false);
  } else {
    write_tomb_(run_end, true, true);
  }
  ++tombstone_count_;
  --element_count_;
  refresh_payload_neighborhood_(run_start, run_end);
}

// ---------------------------------------------------------------------------
// Decode
// ---------------------------------------------------------------------------

void GraveyardFilter::decode_cluster_(uint64_t start,
                                      std::vector<uint64_t>& out) const {
  std::deque<uint64_t> buckets;
  uint64_t cur = kNoBucket;
  uint64_t steps = 0;
  for (uint64_t pos = start;; pos = next_(pos)) {
    if (occ_(pos)) buckets.push_back(pos);
    if (live_(pos)) {
      if (!cont_(pos)) {
        if (buckets.empty())
          throw structural_corruption("run start without an occupied bucket");
        cur = buckets.front();
        buckets.pop_front();
      }
      if (cur == kNoBucket)
        throw structural_corruption("live continuation before any run start");
      out.push_back(join_fingerprint(cur, rem_[pos], cfg_.r));
    }
    uint64_t n = next_(pos);
    if (slot_empty_(n) || !shift_(n)) break;
    if (++steps > cap_)
      throw structural_corruption("cluster wraps the whole table");
  }
  if (!buckets.empty())
    throw structural_corruption("occupied bucket without a run in its cluster");
}

std::vector<uint64_t> GraveyardFilter::decode() const {
  std::vector<uint64_t> out;
  out.reserve(element_count_);
  for (uint64_t i = 0; i < cap_; ++i)
    if (!slot_empty_(i) && !shift_(i)) decode_cluster_(i, out);
  if (out.size() != element_count_)
    throw structural_corruption("decoded element count disagrees with counter");
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Introspection and raw construction
// ---------------------------------------------------------------------------

SlotView GraveyardFilter::slot_view(uint64_t i) const {
  SlotView v;
  v.empty = slot_empty_(i);
  v.tombstone = tomb_(i);
  v.occupied = occ_(i);
  v.continuation = cont_(i);
  v.shifted = shift_(i);
  v.remainder = live_(i) ? rem_[i] : 0;
  return v;
}

void GraveyardFilter::corrupt_metadata_bit(uint64_t i, MetaBit bit) {
  switch (bit) {
    case MetaBit::kOccupied:
      meta_[i] ^= kOccBit;
      break;
    case MetaBit::kContinuation:
      meta_[i] ^= kContBit;
      break;
    case MetaBit::kShifted:
      meta_[i] ^= kShiftBit;
      break;
    case MetaBit::kTombstone:
      meta_[i] ^= kTombBit;
      break;
  }
}

GraveyardFilter GraveyardFilter::from_slots(FilterConfig config,
                                            const std::vector<RawSlot>& slots) {
  GraveyardFilter f(config);
  if (slots.size() != f.cap_)
    throw std::invalid_argument("from_slots: slot count must equal capacity");
  uint32_t rmask_bits = config.r;
  uint64_t rmask = (uint64_t{1} << rmask_bits) - 1;
  for (uint64_t i = 0; i < f.cap_; ++i) {
    const RawSlot& s = slots[i];
    uint8_t m = 0;
    if (s.occupied) m |= kOccBit;
    if (s.continuation) m |= kContBit;
    if (s.shifted) m |= kShiftBit;
    if (s.tombstone)
      m |= kTombBit;
    else if (s.live)
      m |= kLiveBit;
    f.meta_[i] = m;
    f.rem_[i] = s.live ? static_cast<uint32_t>(s.remainder & rmask) : 0;
    if (s.tombstone)
      ++f.tombstone_count_;
    else if (s.live)
      ++f.element_count_;
  }
  f.rebuild_all_payloads_();
  return f;
}

}  // namespace gqf
