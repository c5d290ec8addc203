#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gqf/types.hpp"

namespace gqf::bench {

enum class WorkloadKind { kInsertOnly, kDeleteOnly, kMixed };

const char* to_string(WorkloadKind kind);
bool parse_workload(std::string_view name, WorkloadKind& out);

/// One benchmarked filter variant: a redistribution policy or the plain
/// quotient filter control.
struct LaneSpec {
  bool base_control = false;
  PolicyKind policy = PolicyKind::kNoRedistribution;

  std::string name() const {
    return base_control ? "BaseQF" : to_string(policy);
  }
};

/// All five policies plus the BaseQF control.
std::vector<LaneSpec> default_lanes();

/// Comma-separated lane list ("graveyard,between-runs,base" or "all").
bool parse_lanes(std::string_view list, std::vector<LaneSpec>& out,
                 std::string& error);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kInsertOnly;
  uint32_t q = 16;
  uint32_t r = 8;
  uint64_t seed = 1;
  double step = 0.05;       // load-factor increment per timed phase
  double query_secs = 2.0;  // wall-clock duration of each query phase
  double max_load = 0.95;
  std::vector<LaneSpec> lanes = default_lanes();
  bool parallel = false;  // one thread per lane, independent clocks

  void validate() const;  // throws std::invalid_argument
};

struct BenchSample {
  std::string policy;
  std::string workload;
  uint32_t q = 0;
  uint32_t r = 0;
  uint64_t seed = 0;
  double load_factor = 0.0;  // element load at the end of the phase
  std::string op_kind;       // insert | delete | random_query | successful_query
  uint64_t op_count = 0;
  uint64_t elapsed_ns = 0;
  double throughput_ops_s = 0.0;
  bool truncated = false;  // capacity exhausted mid-phase; not serialized

  bool operator==(const BenchSample& other) const {
    return policy == other.policy && workload == other.workload &&
           q == other.q && r == other.r && seed == other.seed &&
           load_factor == other.load_factor && op_kind == other.op_kind &&
           op_count == other.op_count && elapsed_ns == other.elapsed_ns &&
           throughput_ops_s == other.throughput_ops_s;
  }
};

/// Runs the configured workload once per lane. Mutation key streams are
/// derived from the seed alone, so every lane sees the identical operation
/// sequence; only timings (and wall-clock-bounded query counts) differ.
std::vector<BenchSample> run_workload(const WorkloadSpec& spec);

}  // namespace gqf::bench
