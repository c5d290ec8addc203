#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gqf/base_filter.hpp"
#include "gqf/filter.hpp"

namespace gqf {

/// Exact ground truth for differential testing: the fingerprint multiset a
/// correct filter must represent, plus the live key multiset for generating
/// deletes and successful queries.
class ExactOracle {
 public:
  ExactOracle(uint32_t q, uint32_t r, uint64_t seed)
      : q_(q), r_(r), seed_(seed) {}

  void insert(uint64_t key);
  void erase(uint64_t key);  // precondition: key currently present
  bool contains_key(uint64_t key) const;
  bool contains_fp(uint64_t fp) const;

  size_t size() const { return live_keys_.size(); }
  const std::vector<uint64_t>& live_keys() const { return live_keys_; }

  /// Sorted fingerprint multiset, directly comparable with
  /// GraveyardFilter::decode().
  std::vector<uint64_t> fingerprints() const;

  uint64_t fp_of(uint64_t key) const {
    return fingerprint_u64(key, seed_, q_, r_);
  }

 private:
  uint32_t q_;
  uint32_t r_;
  uint64_t seed_;
  std::vector<uint64_t> live_keys_;
  std::unordered_map<uint64_t, uint64_t> fp_counts_;
  // Positions of each key's occurrences inside live_keys_, for O(1) removal.
  std::unordered_map<uint64_t, std::vector<size_t>> key_positions_;
};

/// Builds the unique tombstone-free layout for a fingerprint multiset by
/// direct construction (no insert calls): runs sorted by bucket, placed left
/// to right with linear-probe shifting from an unshifted anchor bucket.
GraveyardFilter ref_layout(const std::vector<uint64_t>& fps,
                           FilterConfig config);

/// Probability that a uniformly random absent key's fingerprint collides with
/// at least one of n independently stored fingerprints:
/// 1 - (1 - 2^-(q+r))^n.
double closed_form_fp(uint64_t n, uint32_t q, uint32_t r);

/// Full structural check of a filter table, reimplemented from first
/// principles (independent of the filter's own walks): metadata soundness,
/// run ordering and sortedness, counter accuracy, payload store key set and
/// freshness. Returns a description of the first violation, or nullopt.
std::optional<std::string> validate_structure(const GraveyardFilter& f);

enum class ViolationKind {
  kFalseNegative,
  kDeleteMiss,
  kQueryDivergence,
  kDecodeMismatch,
  kStructureViolation,
};

const char* to_string(ViolationKind kind);

struct Violation {
  uint64_t seed = 0;
  size_t op_index = 0;  // ops [0..op_index] reproduce the violation
  std::string lane;
  ViolationKind kind = ViolationKind::kFalseNegative;
  std::string detail;
};

struct DifferentialReport {
  uint64_t seed = 0;
  size_t ops_executed = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  /// One violation per line: seed, op index, lane, kind.
  std::vector<std::string> machine_lines() const;
  std::string text() const;
};

struct DifferentialOptions {
  size_t op_count = 10000;
  std::vector<PolicyKind> policies{std::begin(kAllPolicies),
                                   std::end(kAllPolicies)};
  bool include_base_control = true;
  size_t decode_check_every = 1000;  // 0 disables periodic decode checks
  size_t validate_every = 0;         // 0 disables structural validation
  size_t max_violations = 16;
  // Weights for insert/erase/query; erase and query fall back to insert
  // while the table is empty, inserts turn into erases near capacity.
  double insert_weight = 0.45;
  double erase_weight = 0.25;
  // Test hook, invoked before the op at fault_at executes.
  size_t fault_at = SIZE_MAX;
  std::function<void(GraveyardFilter&)> fault = nullptr;
};

/// Drives one randomized insert/erase/query sequence through one filter per
/// policy (plus the base quotient filter control) and the exact oracle,
/// checking for false negatives, decode equivalence, and cross-policy query
/// agreement. Violations are report content, not errors.
DifferentialReport differential_run(uint64_t seed, FilterConfig config,
                                    const DifferentialOptions& options = {});

}  // namespace gqf
