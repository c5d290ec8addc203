#pragma once

#include <string>
#include <vector>

#include "bench/workload.hpp"

namespace gqf::bench {

inline constexpr const char* kCsvHeader =
    "policy,workload,q,r,seed,load_factor,op_kind,op_count,elapsed_ns,"
    "throughput_ops_s";

/// Writes the header plus one row per sample, in the given order.
/// Throws std::runtime_error naming the path on I/O failure.
void emit_csv(const std::vector<BenchSample>& samples,
              const std::string& path);

/// Reads a CSV produced by emit_csv. Throws std::runtime_error naming the
/// missing column or the offending line number.
std::vector<BenchSample> parse_csv(const std::string& path);

}  // namespace gqf::bench
