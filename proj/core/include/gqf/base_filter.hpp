#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gqf/hash.hpp"
#include "gqf/types.hpp"

namespace gqf {

/// Plain quotient filter without tombstones: deletions compact the cluster by
/// shifting content left. Serves as the control the graveyard variants are
/// measured against.
class BaseQuotientFilter {
 public:
  explicit BaseQuotientFilter(FilterConfig config);

  void insert(std::span<const std::byte> key) { insert_fp(make_fp(key)); }
  bool query(std::span<const std::byte> key) const {
    return query_fp(make_fp(key));
  }
  bool erase(std::span<const std::byte> key) { return erase_fp(make_fp(key)); }

  void insert(uint64_t key) { insert_fp(make_fp(key)); }
  bool query(uint64_t key) const { return query_fp(make_fp(key)); }
  bool erase(uint64_t key) { return erase_fp(make_fp(key)); }

  void insert_fp(uint64_t fp);
  bool query_fp(uint64_t fp) const;
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
  double element_load() const {
    return static_cast<double>(element_count_) / static_cast<double>(cap_);
  }

  std::vector<uint64_t> decode() const;

 private:
  static constexpr uint8_t kOccBit = 1;
  static constexpr uint8_t kContBit = 2;
  static constexpr uint8_t kShiftBit = 4;
  static constexpr uint8_t kUsedBit = 8;

  bool used_(uint64_t i) const { return meta_[i] & kUsedBit; }
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

  uint64_t find_cluster_start_(uint64_t i) const;
  uint64_t find_run_(uint64_t bucket) const;
  uint64_t run_end_(uint64_t s) const;

  FilterConfig cfg_;
  uint64_t cap_ = 0;
  uint64_t mask_ = 0;
  std::vector<uint8_t> meta_;
  std::vector<uint32_t> rem_;
  uint64_t element_count_ = 0;
};

}  // namespace gqf
