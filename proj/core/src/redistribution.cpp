#include <algorithm>
#include <cassert>
#include <deque>

#include "gqf/filter.hpp"

namespace gqf {

// ---------------------------------------------------------------------------
// Trigger arithmetic
// ---------------------------------------------------------------------------

uint64_t cleanup_threshold(uint64_t table_size, double element_load) {
  if (element_load >= 1.0) return 0;
  double v = static_cast<double>(table_size) * (1.0 - element_load) / 4.0;
  return static_cast<uint64_t>(v);
}

uint64_t tombstone_budget(uint64_t table_size, double element_load) {
  if (element_load >= 1.0) return 0;
  double v = static_cast<double>(table_size) * (1.0 - element_load) / 2.0;
  return static_cast<uint64_t>(v);
}

void GraveyardFilter::maybe_redistribute() {
  switch (cfg_.policy) {
    case PolicyKind::kNoRedistribution:
    case PolicyKind::kAmortizedClean:
      return;
    default:
      break;
  }
  // Strict "exceeds": fires at threshold + 1. The threshold is evaluated at
  // the load captured when the previous redistribution ran.
  if (redist_.ops_since_last <= cleanup_threshold(cap_, redist_.load_at_last))
    return;
  switch (cfg_.policy) {
    case PolicyKind::kBetweenRuns:
      redistribute_between_runs();
      break;
    case PolicyKind::kCleanUp:
      redistribute_cleanup();
      break;
    case PolicyKind::kGraveyardHashing:
      redistribute_graveyard();
      break;
    default:
      break;
  }
  redist_.ops_since_last = 0;
  redist_.load_at_last = element_load();
}

// ---------------------------------------------------------------------------
// Region materialize / rewrite
// ---------------------------------------------------------------------------

std::vector<uint64_t> GraveyardFilter::region_starts_() const {
  std::vector<uint64_t> starts;
  bool any_empty = false;
  for (uint64_t i = 0; i < cap_; ++i) {
    if (slot_empty_(i)) {
      any_empty = true;
      break;
    }
  }
  if (!any_empty) {
    // Fully packed table: anchor the single wrapped region at a cluster start.
    for (uint64_t i = 0; i < cap_; ++i)
      if (!shift_(i)) return {i};
    throw structural_corruption("full table with no unshifted slot");
  }
  for (uint64_t i = 0; i < cap_; ++i)
    if (!slot_empty_(i) && slot_empty_(prev_(i))) starts.push_back(i);
  return starts;
}

GraveyardFilter::Region GraveyardFilter::materialize_region_(
    uint64_t start) const {
  Region region;
  region.start = start;
  std::deque<uint64_t> buckets;
  RegionItem* cur = nullptr;
  uint64_t pos = start;
  uint64_t len = 0;
  while (!slot_empty_(pos) && len < cap_) {
    if (!shift_(pos)) {
      if (!buckets.empty())
        throw structural_corruption("occupied bucket with no run in cluster");
    }
    if (occ_(pos)) buckets.push_back(pos);
    if (live_(pos)) {
      if (!cont_(pos)) {
        if (buckets.empty())
          throw structural_corruption("run start without an occupied bucket");
        region.items.emplace_back();
        cur = &region.items.back();
        cur->bucket = buckets.front();
        buckets.pop_front();
      }
      if (!cur || cur->bucket == kNoBucket)
        throw structural_corruption("live continuation outside a run");
      cur->rems.push_back(rem_[pos]);
    } else {
      if (!cont_(pos)) {
        // Tombstone block attached to no run (standalone / cluster head).
        region.items.emplace_back();
        cur = &region.items.back();
        cur->bucket = kNoBucket;
      }
      if (!cur)
        throw structural_corruption("continuation tombstone at region head");
      cur->tomb_positions.push_back(pos);
    }
    pos = next_(pos);
    ++len;
  }
  region.length = len;
  return region;
}

void GraveyardFilter::rewrite_region_(const Region& region,
                                      uint32_t keep_per_run) {
  // Wipe the old span; occupied bits stay put (they belong to buckets).
  uint64_t pos = region.start;
  for (uint64_t k = 0; k < region.length; ++k) {
    if (tomb_(pos)) {
      payloads_.erase(pos);
      --tombstone_count_;
    }
    meta_[pos] &= kOccBit;
    rem_[pos] = 0;
    pos = next_(pos);
  }

  // Lay the runs back down in order, compacting left but never left of a
  // run's canonical bucket; gaps and the freed tail become empty.
  uint64_t write = region.start;
  for (const RegionItem& item : region.items) {
    if (item.bucket == kNoBucket) continue;  // unattached tombstones: dropped
    if (fdist_(region.start, write) < fdist_(region.start, item.bucket))
      write = item.bucket;
    bool first = true;
    for (uint32_t remv : item.rems) {
      write_live_(write, remv, !first, first ? (write != item.bucket) : true);
      first = false;
      write = next_(write);
    }
    uint64_t keep = std::min<uint64_t>(keep_per_run, item.tomb_positions.size());
    for (uint64_t t = 0; t < keep; ++t) {
      write_tomb_(write, true, true);
      ++tombstone_count_;
      payloads_[write] = TombstonePayload{};  // recomputed by the caller
      write = next_(write);
    }
  }

  // Remaining occupied bits on now-empty slots would mean a run went missing.
  pos = region.start;
  for (uint64_t k = 0; k < region.length; ++k) {
    assert(!(slot_empty_(pos) && occ_(pos)));
    pos = next_(pos);
  }
}

// ---------------------------------------------------------------------------
// Between-runs
// ---------------------------------------------------------------------------

void GraveyardFilter::redistribute_between_runs() {
  if (tombstone_count_ == 0) return;
  for (uint64_t start : region_starts_())
    rewrite_region_(materialize_region_(start), 1);
  rebuild_all_payloads_();
}

// ---------------------------------------------------------------------------
// Clean-up: between-runs plus a fresh tombstone at every within-cluster run
// boundary that lacks one, as long as empty space follows the cluster.
// ---------------------------------------------------------------------------

void GraveyardFilter::redistribute_cleanup() {
  redistribute_between_runs();

  std::vector<uint64_t> cluster_starts;
  for (uint64_t i = 0; i < cap_; ++i)
    if (!slot_empty_(i) && !shift_(i)) cluster_starts.push_back(i);

  for (uint64_t j : cluster_starts) {
    // Run starts inside this cluster, skipping the first.
    std::vector<uint64_t> run_starts;
    {
      uint64_t pos = j;
      uint64_t steps = 0;
      for (;;) {
        if (live_(pos) && !cont_(pos) && pos != j) run_starts.push_back(pos);
        uint64_t n = next_(pos);
        if (slot_empty_(n) || !shift_(n)) break;
        pos = n;
        if (++steps > cap_) break;
      }
    }
    // Right to left so earlier boundary positions stay valid.
    for (auto it = run_starts.rbegin(); it != run_starts.rend(); ++it) {
      uint64_t rs = *it;
      if (tomb_(prev_(rs))) continue;  // boundary already carries a tombstone
      // Find the current cluster end; the shift may not overrun into another
      // cluster.
      uint64_t end = rs;
      uint64_t steps = 0;
      while (!slot_empty_(end) && (shift_(end) || end == j)) {
        end = next_(end);
        if (++steps > cap_) break;
      }
      if (!slot_empty_(end)) continue;  // would merge clusters: skip
      displace_right_(rs, end);
      write_tomb_(rs, true, true);
      ++tombstone_count_;
      payloads_[rs] = TombstonePayload{};
    }
  }
  rebuild_all_payloads_();
}

// ---------------------------------------------------------------------------
// Graveyard hashing: clear everything, then place the budgeted tombstones at
// evenly spaced targets.
// ---------------------------------------------------------------------------

std::vector<GraveyardFilter::GraveyardPlacement>
GraveyardFilter::redistribute_graveyard() {
  if (tombstone_count_ != 0) {
    for (uint64_t start : region_starts_())
      rewrite_region_(materialize_region_(start), 0);
    payloads_.clear();
  }
  assert(tombstone_count_ == 0);

  std::vector<GraveyardPlacement> placements;
  if (element_count_ >= cap_) return placements;
  uint64_t budget = tombstone_budget(cap_, element_load());
  placements.reserve(budget);

  for (uint64_t n = 0; n < budget; ++n) {
    uint64_t target = (n * cap_) / budget;
    if (slot_empty_(target)) {
      // Standalone tombstone: its own trivial cluster.
      write_tomb_(target, false, false);
      ++tombstone_count_;
      placements.push_back({target, target});
      continue;
    }
    // Append at the end of the segment covering the target (a run plus its
    // trailing tombstones, or a standalone block), shifting the rest of the
    // cluster right. Already-placed tombstones drift rather than absorb.
    uint64_t end = target;
    uint64_t steps = 0;
    while (cont_(next_(end))) {
      end = next_(end);
      if (++steps > cap_) break;
    }
    uint64_t pos = next_(end);
    if (!slot_empty_(pos)) {
      auto stop = first_empty_(pos);
      if (!stop) continue;  // saturated: skip this target
      displace_right_(pos, *stop);
    }
    write_tomb_(pos, true, true);
    ++tombstone_count_;
    placements.push_back({target, pos});
  }
  rebuild_all_payloads_();
  return placements;
}

// ---------------------------------------------------------------------------
// Amortized clean: drop the tombstones a query or delete traversed,
// compacting the remainder of their cluster left.
// ---------------------------------------------------------------------------

void GraveyardFilter::amortized_clean_(uint64_t lo, uint64_t hi) {
  if (tombstone_count_ == 0) return;
  bool any = false;
  uint64_t steps = 0;
  for (uint64_t i = lo;; i = next_(i)) {
    if (tomb_(i)) {
      any = true;
      break;
    }
    if (i == hi) break;
    if (++steps > cap_) break;
  }
  if (!any) return;
  rewrite_cluster_dropping_(find_cluster_start(lo), lo, hi);
}

void GraveyardFilter::rewrite_cluster_dropping_(uint64_t cluster_start,
                                                uint64_t lo, uint64_t hi) {
  auto in_range = [&](uint64_t p) { return fdist_(lo, p) <= fdist_(lo, hi); };

  // Materialize just this navigation cluster.
  Region cluster;
  cluster.start = cluster_start;
  {
    std::deque<uint64_t> buckets;
    RegionItem* cur = nullptr;
    uint64_t pos = cluster_start;
    uint64_t len = 0;
    for (;;) {
      if (occ_(pos)) buckets.push_back(pos);
      if (live_(pos)) {
        if (!cont_(pos)) {
          if (buckets.empty())
            throw structural_corruption("run start without an occupied bucket");
          cluster.items.emplace_back();
          cur = &cluster.items.back();
          cur->bucket = buckets.front();
          buckets.pop_front();
        }
        if (!cur || cur->bucket == kNoBucket)
          throw structural_corruption("live continuation outside a run");
        cur->rems.push_back(rem_[pos]);
      } else {
        if (!cont_(pos)) {
          cluster.items.emplace_back();
          cur = &cluster.items.back();
          cur->bucket = kNoBucket;
        }
        if (!cur)
          throw structural_corruption("continuation tombstone at cluster head");
        cur->tomb_positions.push_back(pos);
      }
      ++len;
      uint64_t n = next_(pos);
      if (slot_empty_(n) || !shift_(n)) break;
      pos = n;
      if (len > cap_)
        throw structural_corruption("cluster wraps the whole table");
    }
    cluster.length = len;
    if (!buckets.empty())
      throw structural_corruption("occupied bucket with no run in cluster");
  }

  // Wipe the span.
  uint64_t pos = cluster.start;
  for (uint64_t k = 0; k < cluster.length; ++k) {
    if (tomb_(pos)) {
      payloads_.erase(pos);
      --tombstone_count_;
    }
    meta_[pos] &= kOccBit;
    rem_[pos] = 0;
    pos = next_(pos);
  }

  // Re-lay items, keeping tombstones outside [lo..hi].
  uint64_t write = cluster.start;
  uint64_t last_written = cluster.start;
  bool wrote_any = false;
  for (const RegionItem& item : cluster.items) {
    if (item.bucket == kNoBucket) {
      // Head block: kept tombstones stay at the cluster front.
      bool first_kept = !wrote_any;
      for (uint64_t t : item.tomb_positions) {
        if (in_range(t)) continue;  // dropped
        write_tomb_(write, !first_kept, !first_kept);
        ++tombstone_count_;
        payloads_[write] = TombstonePayload{};
        last_written = write;
        wrote_any = true;
        first_kept = false;
        write = next_(write);
      }
      continue;
    }
    if (fdist_(cluster.start, write) < fdist_(cluster.start, item.bucket))
      write = item.bucket;
    bool first = true;
    for (uint32_t remv : item.rems) {
      write_live_(write, remv, !first, first ? (write != item.bucket) : true);
      first = false;
      last_written = write;
      wrote_any = true;
      write = next_(write);
    }
    for (uint64_t t : item.tomb_positions) {
      if (in_range(t)) continue;
      write_tomb_(write, true, true);
      ++tombstone_count_;
      payloads_[write] = TombstonePayload{};
      last_written = write;
      write = next_(write);
    }
  }

  refresh_payload_neighborhood_(cluster.start, last_written);
}

}  // namespace gqf
