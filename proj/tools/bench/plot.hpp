#pragma once

#include <string>

namespace gqf::bench {

/// Renders the CSV as a static SVG: one panel per op_kind (throughput over
/// load factor), one series per policy. Propagates parse_csv errors.
void emit_plot(const std::string& csv_path, const std::string& out_path);

}  // namespace gqf::bench
