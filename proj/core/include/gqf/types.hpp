#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gqf {

/// Tombstone redistribution policy, fixed per filter at construction.
enum class PolicyKind {
  kNoRedistribution,
  kAmortizedClean,
  kBetweenRuns,
  kCleanUp,
  kGraveyardHashing,
};

inline constexpr PolicyKind kAllPolicies[] = {
    PolicyKind::kNoRedistribution, PolicyKind::kAmortizedClean,
    PolicyKind::kBetweenRuns, PolicyKind::kCleanUp,
    PolicyKind::kGraveyardHashing};

const char* to_string(PolicyKind policy);
bool parse_policy(std::string_view name, PolicyKind& out);

struct FilterConfig {
  uint32_t q = 10;                                   // bucket bits, 3..30
  uint32_t r = 6;                                    // remainder bits, 1..32
  uint64_t seed = 0;                                 // hash seed
  PolicyKind policy = PolicyKind::kNoRedistribution;

  uint64_t capacity() const { return uint64_t{1} << q; }
  uint32_t fingerprint_bits() const { return q + r; }

  /// Throws std::invalid_argument if q is outside 3..30, r outside 1..32,
  /// or q + r > 64.
  void validate() const;
};

class capacity_exhausted : public std::runtime_error {
 public:
  capacity_exhausted()
      : std::runtime_error("filter capacity exhausted: no empty slot or "
                           "reusable tombstone on the probe path") {}
};

class structural_corruption : public std::runtime_error {
 public:
  explicit structural_corruption(const std::string& what)
      : std::runtime_error("structural corruption: " + what) {}
};

/// Sentinel bucket index for tombstone payloads with no live neighbor.
inline constexpr uint64_t kNoBucket = ~uint64_t{0};

/// Buckets of the runs owning the nearest live slots on either side of a
/// tombstone, scanning circularly; kNoBucket when the table holds no live
/// element.
struct TombstonePayload {
  uint64_t predecessor = kNoBucket;
  uint64_t successor = kNoBucket;

  bool operator==(const TombstonePayload&) const = default;
};

}  // namespace gqf
