#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "bench/csv.hpp"
#include "bench/plot.hpp"
#include "bench/workload.hpp"

namespace gqf::bench {
namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

WorkloadSpec quick_spec(WorkloadKind kind) {
  WorkloadSpec spec;
  spec.kind = kind;
  spec.q = 10;
  spec.r = 6;
  spec.seed = 7;
  spec.step = 0.05;
  spec.query_secs = 0.005;
  spec.max_load = 0.95;
  spec.lanes = {{false, PolicyKind::kGraveyardHashing}, {true, {}}};
  return spec;
}

size_t count_kind(const std::vector<BenchSample>& samples,
                  const std::string& policy, const std::string& kind) {
  size_t n = 0;
  for (const BenchSample& s : samples)
    if (s.policy == policy && s.op_kind == kind) ++n;
  return n;
}

TEST(Workload, InsertOnlyPhaseCounts) {
  std::vector<BenchSample> samples = run_workload(quick_spec(WorkloadKind::kInsertOnly));
  for (const char* policy : {"GraveyardHashing", "BaseQF"}) {
    EXPECT_EQ(count_kind(samples, policy, "insert"), 19u) << policy;
    EXPECT_EQ(count_kind(samples, policy, "random_query"), 19u) << policy;
    EXPECT_EQ(count_kind(samples, policy, "successful_query"), 19u) << policy;
    EXPECT_EQ(count_kind(samples, policy, "delete"), 0u) << policy;
  }
}

TEST(Workload, DeleteOnlyPhaseCounts) {
  std::vector<BenchSample> samples = run_workload(quick_spec(WorkloadKind::kDeleteOnly));
  for (const char* policy : {"GraveyardHashing", "BaseQF"}) {
    EXPECT_EQ(count_kind(samples, policy, "delete"), 19u) << policy;
    EXPECT_EQ(count_kind(samples, policy, "insert"), 0u) << policy;
  }
  // The final phase drains the table completely.
  double last_load = 1.0;
  for (const BenchSample& s : samples)
    if (s.policy == "BaseQF" && s.op_kind == "delete") last_load = s.load_factor;
  EXPECT_EQ(last_load, 0.0);
}

TEST(Workload, MixedAlternatesTwoInsertsOneDelete) {
  std::vector<BenchSample> samples = run_workload(quick_spec(WorkloadKind::kMixed));
  std::vector<std::string> pattern;
  for (const BenchSample& s : samples)
    if (s.policy == "BaseQF" && (s.op_kind == "insert" || s.op_kind == "delete"))
      pattern.push_back(s.op_kind);
  ASSERT_GE(pattern.size(), 5u);
  // Repeating insert,insert,delete; the tail of the schedule ends on inserts
  // once max_load is reached.
  for (size_t i = 0; i + 3 < pattern.size() - 2; i += 3) {
    EXPECT_EQ(pattern[i], "insert");
    EXPECT_EQ(pattern[i + 1], "insert");
    EXPECT_EQ(pattern[i + 2], "delete");
  }
  // Net growth reaches max_load.
  double final_load = 0.0;
  for (const BenchSample& s : samples)
    if (s.policy == "BaseQF" && s.op_kind == "insert")
      final_load = std::max(final_load, s.load_factor);
  EXPECT_GE(final_load, 0.94);
}

TEST(Workload, MutationScheduleIsDeterministic) {
  WorkloadSpec spec = quick_spec(WorkloadKind::kMixed);
  std::vector<BenchSample> a = run_workload(spec);
  std::vector<BenchSample> b = run_workload(spec);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].op_kind == "insert" || a[i].op_kind == "delete") {
      EXPECT_EQ(a[i].op_count, b[i].op_count) << i;
      EXPECT_EQ(a[i].load_factor, b[i].load_factor) << i;
    }
  }
  // Mutation schedules agree across lanes too.
  size_t half = a.size() / 2;
  for (size_t i = 0; i < half; ++i) {
    if (a[i].op_kind == "insert" || a[i].op_kind == "delete") {
      EXPECT_EQ(a[i].op_kind, a[half + i].op_kind);
      EXPECT_EQ(a[i].op_count, a[half + i].op_count);
    }
  }
}

TEST(Csv, EmptySampleListWritesHeaderOnly) {
  auto path = temp_file("gqf_empty.csv");
  emit_csv({}, path.string());
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, kCsvHeader);
  EXPECT_FALSE(std::getline(in, line));
  std::filesystem::remove(path);
}

TEST(Csv, SingleSampleFieldsInDeclaredOrder) {
  BenchSample s;
  s.policy = "GraveyardHashing";
  s.workload = "mixed";
  s.q = 20;
  s.r = 8;
  s.seed = 42;
  s.load_factor = 0.75;
  s.op_kind = "insert";
  s.op_count = 1000;
  s.elapsed_ns = 2000000;
  s.throughput_ops_s = 500000.0;
  auto path = temp_file("gqf_single.csv");
  emit_csv({s}, path.string());
  std::ifstream in(path);
  std::string header, row;
  ASSERT_TRUE(std::getline(in, header));
  ASSERT_TRUE(std::getline(in, row));
  EXPECT_EQ(row.substr(0, 38), "GraveyardHashing,mixed,20,8,42,0.75,in");
  EXPECT_FALSE(std::getline(in, row));
  std::filesystem::remove(path);
}

TEST(Csv, RoundTrip) {
  WorkloadSpec spec = quick_spec(WorkloadKind::kInsertOnly);
  spec.q = 8;
  std::vector<BenchSample> samples = run_workload(spec);
  auto path = temp_file("gqf_roundtrip.csv");
  emit_csv(samples, path.string());
  std::vector<BenchSample> parsed = parse_csv(path.string());
  ASSERT_EQ(parsed.size(), samples.size());
  for (size_t i = 0; i < samples.size(); ++i)
    EXPECT_TRUE(parsed[i] == samples[i]) << "row " << i;
  std::filesystem::remove(path);
}

TEST(Csv, MissingColumnNamed) {
  auto path = temp_file("gqf_missing.csv");
  {
    std::ofstream out(path);
    out << "policy,workload,q,r,seed,load_factor,op_kind,op_count,elapsed_ns\n";
  }
  try {
    parse_csv(path.string());
    FAIL() << "expected parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("throughput_ops_s"),
              std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Csv, MalformedRowReportsLineNumber) {
  auto path = temp_file("gqf_malformed.csv");
  {
    std::ofstream out(path);
    out << kCsvHeader << "\n";
    out << "GraveyardHashing,mixed,20,8,42,0.75,insert,1000,2000000,5e5\n";
    out << "broken,row\n";
  }
  try {
    parse_csv(path.string());
    FAIL() << "expected parse error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(Plot, RendersSeriesPerPolicy) {
  WorkloadSpec spec = quick_spec(WorkloadKind::kInsertOnly);
  spec.q = 8;
  std::vector<BenchSample> samples = run_workload(spec);
  auto csv = temp_file("gqf_plot.csv");
  auto svg = temp_file("gqf_plot.svg");
  emit_csv(samples, csv.string());
  emit_plot(csv.string(), svg.string());
  std::ifstream in(svg);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  EXPECT_NE(content.find("<svg"), std::string::npos);
  EXPECT_NE(content.find("GraveyardHashing"), std::string::npos);
  EXPECT_NE(content.find("BaseQF"), std::string::npos);
  EXPECT_NE(content.find("Insertions"), std::string::npos);
  EXPECT_NE(content.find("polyline"), std::string::npos);
  std::filesystem::remove(csv);
  std::filesystem::remove(svg);
}

TEST(Plot, PropagatesCsvErrors) {
  auto path = temp_file("gqf_plot_missing.csv");
  {
    std::ofstream out(path);
    out << "policy,workload\n";
  }
  EXPECT_THROW(emit_plot(path.string(), temp_file("x.svg").string()),
               std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Lanes, ParseList) {
  std::vector<LaneSpec> lanes;
  std::string error;
  ASSERT_TRUE(parse_lanes("graveyard,between-runs,base", lanes, error));
  ASSERT_EQ(lanes.size(), 3u);
  EXPECT_EQ(lanes[0].name(), "GraveyardHashing");
  EXPECT_EQ(lanes[1].name(), "BetweenRuns");
  EXPECT_EQ(lanes[2].name(), "BaseQF");
  EXPECT_FALSE(parse_lanes("bogus", lanes, error));
  EXPECT_NE(error.find("bogus"), std::string::npos);
  ASSERT_TRUE(parse_lanes("all", lanes, error));
  EXPECT_EQ(lanes.size(), 6u);
}

}  // namespace
}  // namespace gqf::bench
