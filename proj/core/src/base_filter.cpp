#include <algorithm>
#include <cassert>
#include <deque>

#include "gqf/base_filter.hpp"

namespace gqf {

BaseQuotientFilter::BaseQuotientFilter(FilterConfig config) : cfg_(config) {
  cfg_.validate();
  cap_ = cfg_.capacity();
  mask_ = cap_ - 1;
  meta_.assign(cap_, 0);
  rem_.assign(cap_, 0);
}

uint64_t BaseQuotientFilter::find_cluster_start_(uint64_t i) const {
  uint64_t steps = 0;
  while (shift_(i)) {
    i = prev_(i);
    if (++steps > cap_)
      throw structural_corruption("shifted slots wrap the whole table");
  }
  return i;
}

uint64_t BaseQuotientFilter::find_run_(uint64_t bucket) const {
  uint64_t j = find_cluster_start_(bucket);
  uint64_t count = 0;
  for (uint64_t i = j;; i = next_(i)) {
    if (occ_(i)) ++count;
    if (i == bucket) break;
  }
  uint64_t seen = 0;
  uint64_t steps = 0;
  for (uint64_t s = j;; s = next_(s)) {
    if (!cont_(s)) {
      if (++seen == count) return s;
    }
    if (++steps > cap_)
      throw structural_corruption("no matching run start in cluster");
  }
}

uint64_t BaseQuotientFilter::run_end_(uint64_t s) const {
  while (cont_(next_(s))) s = next_(s);
  return s;
}

void BaseQuotientFilter::insert_fp(uint64_t fp) {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (element_count_ == cap_) throw capacity_exhausted();

  if (!used_(bucket)) {
    meta_[bucket] = kUsedBit | kOccBit;
    rem_[bucket] = remainder;
    ++element_count_;
    return;
  }

  uint64_t j = find_cluster_start_(bucket);
  uint64_t pos;
  bool continuation;
  bool at_run_head = false;
  uint64_t run_start = 0;

  if (occ_(bucket)) {
    uint64_t s = find_run_(bucket);
    run_start = s;
    uint64_t e = run_end_(s);
    pos = next_(e);
    continuation = true;
    for (uint64_t p = s;; p = next_(p)) {
      if (rem_[p] > remainder) {
        pos = p;
        at_run_head = (p == s);
        continuation = !at_run_head;
        break;
      }
      if (p == e) break;
    }
  } else {
    // New run goes after the runs of all smaller occupied buckets.
    uint64_t count = 0;
    for (uint64_t i = j;; i = next_(i)) {
      if (occ_(i)) ++count;
      if (i == bucket) break;
    }
    uint64_t p0;
    if (count == 0) {
      p0 = j;
    } else {
      uint64_t seen = 0;
      uint64_t s = j;
      for (;; s = next_(s)) {
        if (!cont_(s) && ++seen == count) break;
      }
      p0 = next_(run_end_(s));
    }
    pos = ((p0 - j) & mask_) >= ((bucket - j) & mask_) ? p0 : bucket;
    continuation = false;
  }

  if (used_(pos)) {
    // Shift the cluster suffix right into the first empty slot.
    uint64_t stop = pos;
    uint64_t steps = 0;
    while (used_(stop)) {
      stop = next_(stop);
      if (++steps >= cap_) throw capacity_exhausted();
    }
    for (uint64_t i = stop; i != pos; i = prev_(i)) {
      uint64_t src = prev_(i);
      meta_[i] = static_cast<uint8_t>((meta_[i] & kOccBit) |
                                      (meta_[src] & ~kOccBit) | kShiftBit);
      rem_[i] = rem_[src];
    }
    if (at_run_head) set_bit_(next_(pos), kContBit, true);
  }

  meta_[pos] = static_cast<uint8_t>((meta_[pos] & kOccBit) | kUsedBit |
                                    (continuation ? kContBit : 0) |
                                    (pos != bucket ? kShiftBit : 0));
  rem_[pos] = remainder;
  set_bit_(bucket, kOccBit, true);
  ++element_count_;
}

bool BaseQuotientFilter::query_fp(uint64_t fp) const {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (!occ_(bucket)) return false;
  uint64_t p = find_run_(bucket);
  for (;;) {
    if (rem_[p] == remainder) return true;
    if (rem_[p] > remainder) return false;  // runs are sorted
    uint64_t n = next_(p);
    if (!used_(n) || !cont_(n)) return false;
    p = n;
  }
}

bool BaseQuotientFilter::erase_fp(uint64_t fp) {
  auto [bucket, remainder] = split_fingerprint(fp, cfg_.q, cfg_.r);
  if (!occ_(bucket)) return false;
  uint64_t s = find_run_(bucket);
  uint64_t e = run_end_(s);

  uint64_t victim = kNoBucket;
  for (uint64_t p = s;; p = next_(p)) {
    if (rem_[p] == remainder) {
      victim = p;
      break;
    }
    if (rem_[p] > remainder) break;
    if (p == e) break;
  }
  if (victim == kNoBucket) return false;

  // Compact the run over the victim.
  for (uint64_t p = victim; p != e; p = next_(p)) rem_[p] = rem_[next_(p)];

  bool run_died = (s == e);
  if (run_died) set_bit_(bucket, kOccBit, false);

  // Pull the rest of the cluster left into the hole, fixing metadata as run
  // starts land on (or stay right of) their canonical buckets.
  uint64_t hole = e;
  // Bucket pairing for runs after this one: occupied indices beyond `bucket`.
  uint64_t bq = bucket;
  auto next_occupied = [&]() {
    uint64_t steps = 0;
    do {
      bq = next_(bq);
      if (++steps > cap_)
        throw structural_corruption("run start without an occupied bucket");
    } while (!occ_(bq));
    return bq;
  };
  for (;;) {
    uint64_t n = next_(hole);
    if (!used_(n) || !shift_(n)) break;
    bool ncont = cont_(n);
    uint64_t nbucket = kNoBucket;
    if (!ncont) nbucket = next_occupied();
    meta_[hole] = static_cast<uint8_t>(
        (meta_[hole] & kOccBit) | kUsedBit | (ncont ? kContBit : 0) |
        ((!ncont && nbucket == hole) ? 0 : kShiftBit));
    rem_[hole] = rem_[n];
    hole = n;
  }
  assert(!occ_(hole));
  meta_[hole] = 0;
  rem_[hole] = 0;
  --element_count_;
  return true;
}

std::vector<uint64_t> BaseQuotientFilter::decode() const {
  std::vector<uint64_t> out;
  out.reserve(element_count_);
  for (uint64_t i = 0; i < cap_; ++i) {
    if (!used_(i) || shift_(i)) continue;
    std::deque<uint64_t> buckets;
    uint64_t cur = kNoBucket;
    uint64_t steps = 0;
    for (uint64_t pos = i;; pos = next_(pos)) {
      if (occ_(pos)) buckets.push_back(pos);
      if (!cont_(pos)) {
        if (buckets.empty())
          throw structural_corruption("run start without an occupied bucket");
        cur = buckets.front();
        buckets.pop_front();
      }
      out.push_back(join_fingerprint(cur, rem_[pos], cfg_.r));
      uint64_t n = next_(pos);
      if (!used_(n) || !shift_(n)) break;
      if (++steps > cap_)
        throw structural_corruption("cluster wraps the whole table");
    }
    if (!buckets.empty())
      throw structural_corruption("occupied bucket without a run");
  }
  if (out.size() != element_count_)
    throw structural_corruption("decoded element count disagrees with counter");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gqf
