#include <cassert>
#include <deque>

#include "gqf/filter.hpp"

namespace gqf {

// ---------------------------------------------------------------------------
// Tombstone payloads
// ---------------------------------------------------------------------------

TombstonePayload GraveyardFilter::compute_payload(uint64_t i) const {
  TombstonePayload p;
  if (element_count_ == 0) return p;
  for (uint64_t d = 1; d <= cap_; ++d) {
    uint64_t left = (i - d) & mask_;
    if (live_(left)) {
      p.predecessor = run_of_slot_(left);
      break;
    }
  }
  for (uint64_t d = 1; d <= cap_; ++d) {
    uint64_t right = (i + d) & mask_;
    if (live_(right)) {
      p.successor = run_of_slot_(right);
      break;
    }
  }
  return p;
}

void GraveyardFilter::refresh_payload_neighborhood_(uint64_t lo, uint64_t hi) {
  if (tombstone_count_ == 0) return;
  auto refresh_at = [&](uint64_t t) {
    if (tomb_(t)) payloads_[t] = compute_payload(t);
  };
  uint64_t steps = 0;
  for (uint64_t i = lo;; i = next_(i)) {
    refresh_at(i);
    if (i == hi) break;
    if (++steps > cap_) break;
  }
  // Chains of tombstones (and empty slots) outward to the nearest live slot
  // on each side can also see their nearest-live neighbor change.
  for (uint64_t d = 1; d <= cap_; ++d) {
    uint64_t left = (lo - d) & mask_;
    if (live_(left)) break;
    refresh_at(left);
  }
  for (uint64_t d = 1; d <= cap_; ++d) {
    uint64_t right = (hi + d) & mask_;
    if (live_(right)) break;
    refresh_at(right);
  }
}

void GraveyardFilter::rebuild_all_payloads_() {
  payloads_.clear();
  if (tombstone_count_ == 0) return;

  if (element_count_ == 0) {
    for (uint64_t i = 0; i < cap_; ++i)
      if (tomb_(i)) payloads_[i] = TombstonePayload{};
    return;
  }

  // Owner bucket of every live slot, via one pass over all clusters.
  std::vector<uint64_t> owner(cap_, kNoBucket);
  for (uint64_t i = 0; i < cap_; ++i) {
    if (slot_empty_(i) || shift_(i)) continue;
    std::deque<uint64_t> buckets;
    uint64_t cur = kNoBucket;
    uint64_t steps = 0;
    for (uint64_t pos = i;; pos = next_(pos)) {
      if (occ_(pos)) buckets.push_back(pos);
      if (live_(pos)) {
        if (!cont_(pos)) {
          if (buckets.empty())
            throw structural_corruption("run start without an occupied bucket");
          cur = buckets.front();
          buckets.pop_front();
        }
        owner[pos] = cur;
      }
      uint64_t n = next_(pos);
      if (slot_empty_(n) || !shift_(n)) break;
      if (++steps > cap_)
        throw structural_corruption("cluster wraps the whole table");
    }
  }

  // Nearest live run on each side of every slot, two sweeps of two laps each.
  std::vector<uint64_t> pred(cap_, kNoBucket);
  std::vector<uint64_t> succ(cap_, kNoBucket);
  uint64_t cur = kNoBucket;
  for (int lap = 0; lap < 2; ++lap) {
    for (uint64_t i = 0; i < cap_; ++i) {
      pred[i] = cur;
      if (live_(i)) cur = owner[i];
    }
  }
  cur = kNoBucket;
  for (int lap = 0; lap < 2; ++lap) {
    for (uint64_t i = cap_; i-- > 0;) {
      succ[i] = cur;
      if (live_(i)) cur = owner[i];
    }
  }

  for (uint64_t i = 0; i < cap_; ++i)
    if (tomb_(i)) payloads_[i] = TombstonePayload{pred[i], succ[i]};
}

void GraveyardFilter::update_adjacent_tombstones(uint64_t bucket,
                                                 RunEvent event) {
  if (tombstone_count_ == 0) return;
  if (event == RunEvent::kRunCreated) {
    uint64_t s = find_run(bucket);
    refresh_payload_neighborhood_(s, run_live_end_(s));
    return;
  }
  // Run removed: any leftover tombstones sit where the run used to be, which
  // is exactly where a fresh run for this bucket would start.
  if (slot_empty_(bucket)) {
    refresh_payload_neighborhood_(bucket, bucket);
    return;
  }
  InsertPoint ip = locate_insert_(bucket, 0);
  refresh_payload_neighborhood_(ip.pos, ip.pos);
}

}  // namespace gqf
