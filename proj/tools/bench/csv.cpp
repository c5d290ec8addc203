#include "bench/csv.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gqf::bench {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void fail_line(const std::string& path, size_t line_no,
                            const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  throw std::runtime_error(os.str());
}

}  // namespace

void emit_csv(const std::vector<BenchSample>& samples,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kCsvHeader << "\n";
  char buf[64];
  for (const BenchSample& s : samples) {
    out << s.policy << ',' << s.workload << ',' << s.q << ',' << s.r << ','
        << s.seed << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", s.load_factor);
    out << buf << ',' << s.op_kind << ',' << s.op_count << ',' << s.elapsed_ns
        << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", s.throughput_ops_s);
    out << buf << "\n";
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<BenchSample> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> header = split(line);

  const char* required[] = {"policy",   "workload", "q",
                            "r",        "seed",     "load_factor",
                            "op_kind",  "op_count", "elapsed_ns",
                            "throughput_ops_s"};
  size_t index[10];
  for (size_t c = 0; c < 10; ++c) {
    bool found = false;
    for (size_t i = 0; i < header.size(); ++i) {
      if (header[i] == required[c]) {
        index[c] = i;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error(path + ": missing column '" +
                               std::string(required[c]) + "'");
  }

  std::vector<BenchSample> samples;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = split(line);
    if (f.size() < header.size())
      fail_line(path, line_no, "expected " + std::to_string(header.size()) +
                                   " fields, got " + std::to_string(f.size()));
    BenchSample s;
    try {
      s.policy = f[index[0]];
      s.workload = f[index[1]];
      s.q = static_cast<uint32_t>(std::stoul(f[index[2]]));
      s.r = static_cast<uint32_t>(std::stoul(f[index[3]]));
      s.seed = std::stoull(f[index[4]]);
      s.load_factor = std::stod(f[index[5]]);
      s.op_kind = f[index[6]];
      s.op_count = std::stoull(f[index[7]]);
      s.elapsed_ns = std::stoull(f[index[8]]);
      s.throughput_ops_s = std::stod(f[index[9]]);
    } catch (const std::exception&) {
      fail_line(path, line_no, "malformed numeric field");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace gqf::bench
