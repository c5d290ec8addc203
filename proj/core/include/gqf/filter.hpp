#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gqf/hash.hpp"
#include "gqf/types.hpp"

namespace gqf {

/// Snapshot of one slot, for tests and diagnostics.
struct SlotView {
  bool empty = true;
  bool tombstone = false;
  bool occupied = false;
  bool continuation = false;
  bool shifted = false;
  uint32_t remainder = 0;  // meaningful only when live (non-empty, non-tombstone)

  bool live() const { return !empty && !tombstone; }
};

enum class RunEvent { kRunCreated, kRunRemoved };

struct ReuseDecision {
  enum Kind { kReuseAt, kFallback };
  Kind kind = kFallback;
  uint64_t index = 0;  // valid when kind == kReuseAt

  static ReuseDecision reuse_at(uint64_t i) { return {kReuseAt, i}; }
  static ReuseDecision fallback() { return {kFallback, 0}; }
  bool operator==(const ReuseDecision&) const = default;
};

/// Redistribution trigger bookkeeping.
struct RedistState {
  uint64_t ops_since_last = 0;  // insertions + deletions since last redistribution
  double load_at_last = 0.0;    // element load captured at the last redistribution
};

/// Tombstone payloads are held out of line: two bucket indices do not fit in
/// an r-bit slot, so the slot keeps only its metadata bits and the payload
/// lives here, keyed by slot index.
using PayloadStore = std::unordered_map<uint64_t, TombstonePayload>;

/// Quotient filter with graveyard hashing: deletions leave tombstones at run
/// ends, insertions reuse tombstones when run ordering allows, and the
/// configured policy decides when tombstones are cleaned up or deliberately
/// re-placed.
///
/// Single-threaded per instance. Queries mutate the table under
/// PolicyKind::kAmortizedClean, so there is no const query path.
class GraveyardFilter {
 public:
  explicit GraveyardFilter(FilterConfig config);

  // Key-level operations. A key is hashed to a (q+r)-bit fingerprint; the
  // filter stores fingerprints only, so distinct keys may collide.
  void insert(std::span<const std::byte> key);
  bool query(std::span<const std::byte> key);
  bool erase(std::span<const std::byte> key);

  void insert(uint64_t key) { insert_fp(make_fp(key)); }
  bool query(uint64_t key) { return query_fp(make_fp(key)); }
  bool erase(uint64_t key) { return erase_fp(make_fp(key)); }

  // Fingerprint-level operations, used by tests and the reference oracle.
  void insert_fp(uint64_t fp);
  bool query_fp(uint64_t fp);
  bool erase_fp(uint64_t fp);

  uint64_t make_fp(std::span<const std::byte> key) const {
    return fingerprint(key, cfg_.seed, cfg_.q, cfg_.r);
  }
  uint64_t make_fp(uint64_t key) const {
    return fingerprint_u64(key, cfg_.seed, cfg_.q, cfg_.r);
  }

  const FilterConfig& config() const { return cfg_; }
  uint64_t capacity() const { return cap_; }
  uint64_t element_count() const { return element_count_; }
  uint64_t tombstone_count() const { return tombstone_count_; }
  double element_load() const {
    return static_cast<double>(element_count_) / static_cast<double>(cap_);
  }
  double physical_load() const {
    return static_cast<double>(element_count_ + tombstone_count_) /
           static_cast<double>(cap_);
  }

  /// Reconstructs the stored fingerprint multiset from the slot metadata,
  /// skipping tombstones. Returns fingerprints sorted ascending. Throws
  /// structural_corruption when the metadata bits are inconsistent.
  std::vector<uint64_t> decode() const;

  SlotView slot_view(uint64_t i) const;
  const PayloadStore& payloads() const { return payloads_; }
  const RedistState& redist_state() const { return redist_; }

  // Navigation primitives of the underlying quotient filter.

  /// Nearest index j <= i (walking left circularly over shifted slots) with
  /// is_shifted = 0. Precondition: slot i is non-empty.
  uint64_t find_cluster_start(uint64_t i) const;

  /// Index of the first live slot of bucket b's run.
  /// Precondition: is_occupied(b).
  uint64_t find_run(uint64_t bucket) const;

  /// Payload a tombstone at slot i would carry: buckets of the runs owning
  /// the nearest live slots scanning left and right. Pure read.
  TombstonePayload compute_payload(uint64_t i) const;

  /// Whether inserting (bucket, remainder) can consume a tombstone while
  /// keeping run order intact. Pure read; insert_fp takes the same decision.
  ReuseDecision try_reuse_tombstone(uint64_t bucket, uint32_t remainder) const;

  /// Recompute payloads of every tombstone adjacent (across non-live slots)
  /// to bucket's run, after that run was created or entirely removed.
  void update_adjacent_tombstones(uint64_t bucket, RunEvent event);

  // Redistribution.

  /// Trigger hook, called internally after every insert and erase. Fires the
  /// configured policy's redistribution once the operation count since the
  /// last redistribution exceeds cleanup_threshold evaluated at the load
  /// captured back then. No-op for kNoRedistribution and kAmortizedClean.
  void maybe_redistribute();

  /// Remove tombstones cluster by cluster, leaving at most one at the end of
  /// each run; freed slots become empty.
  void redistribute_between_runs();

  /// redistribute_between_runs, then insert a fresh tombstone at every run
  /// boundary inside a cluster that lacks one, where empty space after the
  /// cluster allows the shift.
  void redistribute_cleanup();

  struct GraveyardPlacement {
    uint64_t target;  // ideal evenly spaced index
    uint64_t index;   // slot the tombstone ended up in
  };

  /// Clear all tombstones, then place tombstone_budget(capacity,
  /// element_load) tombstones evenly: empty targets become standalone
  /// tombstones, covered targets append a tombstone to the covering run,
  /// shifting the cluster suffix right (which may merge clusters). Returns
  /// the placement list for diagnostics.
  std::vector<GraveyardPlacement> redistribute_graveyard();

  // Diagnostics.

  enum class MetaBit { kOccupied, kContinuation, kShifted, kTombstone };

  /// Fault injection for detector self-tests: flips one metadata bit.
  void corrupt_metadata_bit(uint64_t i, MetaBit bit);

  struct RawSlot {
    bool tombstone = false;
    bool live = false;
    bool occupied = false;
    bool continuation = false;
    bool shifted = false;
    uint32_t remainder = 0;
  };

  /// Raw table construction for reference layouts; bypasses the insert path
  /// entirely. Counters are derived from the slots and tombstone payloads are
  /// computed from scratch.
  static GraveyardFilter from_slots(FilterConfig config,
                                    const std::vector<RawSlot>& slots);

 private:
  // Metadata bit layout of meta_[i].
  static constexpr uint8_t kOccBit = 1;
  static constexpr uint8_t kContBit = 2;
  static constexpr uint8_t kShiftBit = 4;
  static constexpr uint8_t kTombBit = 8;
  static constexpr uint8_t kLiveBit = 16;

  bool slot_empty_(uint64_t i) const {
    return (meta_[i] & (kTombBit | kLiveBit)) == 0;
  }
  bool live_(uint64_t i) const { return meta_[i] & kLiveBit; }
  bool tomb_(uint64_t i) const { return meta_[i] & kTombBit; }
  bool occ_(uint64_t i) const { return meta_[i] & kOccBit; }
  bool cont_(uint64_t i) const { return meta_[i] & kContBit; }
  bool shift_(uint64_t i) const { return meta_[i] & kShiftBit; }
  void set_bit_(uint64_t i, uint8_t bit, bool on) {
    if (on)
      meta_[i] |= bit;
    else
      meta_[i] &= static_cast<uint8_t>(~bit);
  }

  uint64_t next_(uint64_t i) const { return (i + 1) & mask_; }
  uint64_t prev_(uint64_t i) const { return (i - 1) & mask_; }
  // Forward circular distance from a to b.
  uint64_t fdist_(uint64_t a, uint64_t b) const { return (b - a) & mask_; }

  void write_live_(uint64_t i, uint32_t rem, bool continuation, bool shifted);
  void write_tomb_(uint64_t i, bool continuation, bool shifted);
  void clear_slot_(uint64_t i);

  // Counts slots with is_occupied in the circular range [from..to].
  uint64_t count_occupied_through_(uint64_t from, uint64_t to) const;
  // Position of the count-th live run start scanning from cluster start j.
  uint64_t nth_live_run_start_(uint64_t j, uint64_t count) const;
  // Last live slot of the run whose first live slot is s.
  uint64_t run_live_end_(uint64_t s) const;
  // Bucket of the run owning live slot x.
  uint64_t run_of_slot_(uint64_t x) const;

  struct InsertPoint {
    uint64_t cluster_start = 0;
    uint64_t pos = 0;        // where the new entry's slot is
    bool run_exists = false;
    uint64_t run_start = 0;  // valid when run_exists
    enum Action { kWriteEmpty, kReuseTombstone, kDisplace } action = kWriteEmpty;
    bool at_run_head = false;  // inserting as new first element of existing run
  };
  InsertPoint locate_insert_(uint64_t bucket, uint32_t remainder) const;

  // First index at or after p whose slot is empty or a tombstone; nullopt if
  // the scan wraps all the way around.
  std::optional<uint64_t> first_fillable_(uint64_t p) const;
  std::optional<uint64_t> first_empty_(uint64_t p) const;
  // Move contents of [p..stop) one slot right; slot stop is consumed (must be
  // empty or a tombstone). Moved slots become shifted; payload keys move.
  void displace_right_(uint64_t p, uint64_t stop);

  // Recompute payloads of tombstones reachable from [lo..hi] by scanning
  // outward over non-live slots to the nearest live slot on each side.
  void refresh_payload_neighborhood_(uint64_t lo, uint64_t hi);
  void rebuild_all_payloads_();

  // Region/cluster rebuild machinery shared by the redistribution passes.
  struct RegionItem {
    uint64_t bucket = kNoBucket;          // kNoBucket: tombstone block with no run
    std::vector<uint32_t> rems;           // live remainders, in slot order
    std::vector<uint64_t> tomb_positions; // trailing (or free-block) tombstones
  };
  struct Region {
    uint64_t start = 0;
    uint64_t length = 0;
    std::vector<RegionItem> items;
  };
  Region materialize_region_(uint64_t start) const;
  // Rewrites a region keeping at most keep_per_run trailing tombstones per
  // run and dropping tombstone blocks that trail no run.
  void rewrite_region_(const Region& region, uint32_t keep_per_run);
  // Rewrites one navigation cluster dropping exactly the tombstones whose
  // index lies in the circular range [lo..hi]; everything else keeps its
  // relative order, content compacts left (clamped at canonical buckets).
  void rewrite_cluster_dropping_(uint64_t cluster_start, uint64_t lo,
                                 uint64_t hi);

  // All maximal non-empty span starts (slot non-empty, predecessor empty); a
  // completely full table yields the single anchor cluster start.
  std::vector<uint64_t> region_starts_() const;

  void amortized_clean_(uint64_t lo, uint64_t hi);

  // Delete primitive: compacts the victim's run and converts the freed live
  // end into a tombstone, clearing the occupied bit when the run dies.
  void make_tombstone_(uint64_t cluster_start, uint64_t run_start,
                       uint64_t run_end, uint64_t victim, uint64_t bucket);

  void do_insert_(uint64_t bucket, uint32_t remainder);
  void after_mutation_();

  void decode_cluster_(uint64_t start, std::vector<uint64_t>& out) const;

  FilterConfig cfg_;
  uint64_t cap_ = 0;
  uint64_t mask_ = 0;
  std::vector<uint8_t> meta_;
  std::vector<uint32_t> rem_;
  PayloadStore payloads_;
  uint64_t element_count_ = 0;
  uint64_t tombstone_count_ = 0;
  RedistState redist_;
};

/// Policy trigger: redistribute once insertions+deletions since the last
/// cleanup exceed table_size * (1 - element_load) / 4 (the paper's
/// table_size / 4x with x = 1 / (1 - load)).
uint64_t cleanup_threshold(uint64_t table_size, double element_load);

/// Graveyard placement budget: table_size * (1 - element_load) / 2
/// (table_size / 2x) tombstones, spread evenly.
uint64_t tombstone_budget(uint64_t table_size, double element_load);

}  // namespace gqf
