#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace gqf {

/// MurmurHash64A over an arbitrary byte sequence. Seedable, well mixed.
uint64_t murmur64a(const void* data, size_t len, uint64_t seed);

/// Hash `key` and keep the low q+r bits: the fingerprint is the only
/// information the filter retains about a key.
inline uint64_t fingerprint(std::span<const std::byte> key, uint64_t seed,
                            uint32_t q, uint32_t r) {
  uint64_t h = murmur64a(key.data(), key.size(), seed);
  uint32_t bits = q + r;
  return bits >= 64 ? h : (h & ((uint64_t{1} << bits) - 1));
}

inline uint64_t fingerprint_u64(uint64_t key, uint64_t seed, uint32_t q,
                                uint32_t r) {
  return fingerprint(std::as_bytes(std::span<const uint64_t, 1>(&key, 1)),
                     seed, q, r);
}

/// Split a fingerprint into (quotient, remainder): the high q bits index the
/// canonical bucket, the low r bits are the stored value.
inline std::pair<uint64_t, uint32_t> split_fingerprint(uint64_t fp, uint32_t q,
                                                       uint32_t r) {
  (void)q;
  uint64_t quotient = fp >> r;
  uint32_t remainder =
      static_cast<uint32_t>(fp & ((uint64_t{1} << r) - 1));
  return {quotient, remainder};
}

inline uint64_t join_fingerprint(uint64_t quotient, uint32_t remainder,
                                 uint32_t r) {
  return (quotient << r) | remainder;
}

}  // namespace gqf
