#include "bench/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <variant>

#include "gqf/base_filter.hpp"
#include "gqf/filter.hpp"

namespace gqf::bench {

const char* to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::kInsertOnly:
      return "insert";
    case WorkloadKind::kDeleteOnly:
      return "delete";
    case WorkloadKind::kMixed:
      return "mixed";
  }
  return "?";
}

bool parse_workload(std::string_view name, WorkloadKind& out) {
  if (name == "insert") {
    out = WorkloadKind::kInsertOnly;
  } else if (name == "delete") {
    out = WorkloadKind::kDeleteOnly;
  } else if (name == "mixed") {
    out = WorkloadKind::kMixed;
  } else {
    return false;
  }
  return true;
}

std::vector<LaneSpec> default_lanes() {
  std::vector<LaneSpec> lanes;
  for (PolicyKind policy : kAllPolicies) lanes.push_back({false, policy});
  lanes.push_back({true, PolicyKind::kNoRedistribution});
  return lanes;
}

bool parse_lanes(std::string_view list, std::vector<LaneSpec>& out,
                 std::string& error) {
  out.clear();
  if (list == "all" || list.empty()) {
    out = default_lanes();
    return true;
  }
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    std::string_view token = list.substr(
        pos, comma == std::string_view::npos ? std::string_view::npos
                                             : comma - pos);
    if (!token.empty()) {
      if (token == "base" || token == "baseqf" || token == "BaseQF") {
        out.push_back({true, PolicyKind::kNoRedistribution});
      } else {
        PolicyKind policy;
        if (!parse_policy(token, policy)) {
          error = "unknown policy '" + std::string(token) + "'";
          return false;
        }
        out.push_back({false, policy});
      }
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) {
    error = "empty policy list";
    return false;
  }
  return true;
}

void WorkloadSpec::validate() const {
  FilterConfig{q, r, seed, PolicyKind::kNoRedistribution}.validate();
  if (!(step > 0.0 && step < 1.0))
    throw std::invalid_argument("step must be in (0,1)");
  if (!(max_load > 0.0 && max_load < 1.0))
    throw std::invalid_argument("max_load must be in (0,1)");
  if (query_secs < 0.0)
    throw std::invalid_argument("query_secs must be non-negative");
  if (lanes.empty()) throw std::invalid_argument("no lanes configured");
}

namespace {

using Clock = std::chrono::steady_clock;

struct LaneFilter {
  std::variant<GraveyardFilter, BaseQuotientFilter> f;

  explicit LaneFilter(const LaneSpec& lane, const WorkloadSpec& spec)
      : f(make(lane, spec)) {}

  static std::variant<GraveyardFilter, BaseQuotientFilter> make(
      const LaneSpec& lane, const WorkloadSpec& spec) {
    FilterConfig config{spec.q, spec.r, spec.seed, lane.policy};
    if (lane.base_control)
      return std::variant<GraveyardFilter, BaseQuotientFilter>(
          std::in_place_type<BaseQuotientFilter>, config);
    return std::variant<GraveyardFilter, BaseQuotientFilter>(
        std::in_place_type<GraveyardFilter>, config);
  }

  void insert(uint64_t key) {
    std::visit([&](auto& filter) { filter.insert(key); }, f);
  }
  bool erase(uint64_t key) {
    return std::visit([&](auto& filter) { return filter.erase(key); }, f);
  }
  bool query(uint64_t key) {
    return std::visit([&](auto& filter) { return filter.query(key); }, f);
  }
  uint64_t element_count() const {
    return std::visit([&](const auto& filter) { return filter.element_count(); },
                      f);
  }
};

uint64_t mix_seed(uint64_t seed, uint64_t phase, uint64_t salt) {
  uint64_t x = seed ^ (phase * 0x9e3779b97f4a7c15ULL) ^ (salt << 32);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

struct LaneRun {
  const WorkloadSpec& spec;
  const LaneSpec& lane;
  LaneFilter filter;
  std::mt19937_64 mutation_rng;  // drives the shared mutation key stream
  std::vector<uint64_t> live;    // keys currently present, in insertion state
  std::vector<BenchSample> samples;
  uint64_t phase_index = 0;
  bool truncated = false;

  LaneRun(const WorkloadSpec& s, const LaneSpec& l)
      : spec(s), lane(l), filter(l, s), mutation_rng(s.seed) {}

  uint64_t capacity() const { return uint64_t{1} << spec.q; }

  double load() const {
    return static_cast<double>(filter.element_count()) /
           static_cast<double>(capacity());
  }

  void add_sample(const std::string& op_kind, uint64_t ops, uint64_t ns) {
    BenchSample sample;
    sample.policy = lane.name();
    sample.workload = to_string(spec.kind);
    sample.q = spec.q;
    sample.r = spec.r;
    sample.seed = spec.seed;
    sample.load_factor = load();
    sample.op_kind = op_kind;
    sample.op_count = ops;
    sample.elapsed_ns = ns;
    sample.throughput_ops_s =
        ns == 0 ? 0.0
                : static_cast<double>(ops) * 1e9 / static_cast<double>(ns);
    sample.truncated = truncated;
    samples.push_back(std::move(sample));
  }

  // Untimed prefill used by the delete-only workload.
  void prefill(uint64_t target_count) {
    while (filter.element_count() < target_count) {
      uint64_t key = mutation_rng();
      filter.insert(key);
      live.push_back(key);
    }
  }

  // Timed batch: insert until the element count reaches target_count.
  bool timed_inserts(uint64_t target_count) {
    uint64_t ops = 0;
    auto t0 = Clock::now();
    try {
      while (filter.element_count() < target_count) {
        uint64_t key = mutation_rng();
        filter.insert(key);
        live.push_back(key);
        ++ops;
      }
    } catch (const capacity_exhausted&) {
      truncated = true;
    }
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                  Clock::now() - t0)
                  .count();
    add_sample("insert", ops, static_cast<uint64_t>(ns));
    return !truncated;
  }

  // Timed batch: delete uniformly chosen present keys down to target_count.
  void timed_deletes(uint64_t target_count) {
    uint64_t ops = 0;
    auto t0 = Clock::now();
    while (filter.element_count() > target_count && !live.empty()) {
      size_t idx = mutation_rng() % live.size();
      uint64_t key = live[idx];
      live[idx] = live.back();
      live.pop_back();
      filter.erase(key);
      ++ops;
    }
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                  Clock::now() - t0)
                  .count();
    add_sample("delete", ops, static_cast<uint64_t>(ns));
  }

  void query_phases() {
    run_query_phase("random_query", /*successful=*/false);
    run_query_phase("successful_query", /*successful=*/true);
    ++phase_index;
  }

  void run_query_phase(const std::string& kind, bool successful) {
    if (successful && live.empty()) {
      add_sample(kind, 0, 0);
      return;
    }
    std::mt19937_64 rng(mix_seed(spec.seed, phase_index, successful ? 2 : 1));
    const auto budget = std::chrono::duration<double>(spec.query_secs);
    uint64_t ops = 0;
    uint64_t found = 0;
    auto t0 = Clock::now();
    auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(budget);
    for (;;) {
      for (int i = 0; i < 256; ++i) {
        uint64_t key = successful ? live[rng() % live.size()] : rng();
        found += filter.query(key) ? 1 : 0;
      }
      ops += 256;
      if (Clock::now() >= deadline) break;
    }
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                  Clock::now() - t0)
                  .count();
    volatile uint64_t sink = found;
    (void)sink;
    add_sample(kind, ops, static_cast<uint64_t>(ns));
  }

  void run() {
    const uint64_t cap = capacity();
    auto count_at = [&](double load_factor) {
      return static_cast<uint64_t>(load_factor * static_cast<double>(cap));
    };
    switch (spec.kind) {
      case WorkloadKind::kInsertOnly: {
        for (double boundary = spec.step;
             boundary <= spec.max_load + 1e-12 && !truncated;
             boundary += spec.step) {
          if (!timed_inserts(count_at(boundary))) break;
          query_phases();
        }
        break;
      }
      case WorkloadKind::kDeleteOnly: {
        prefill(count_at(spec.max_load));
        for (double boundary = spec.max_load - spec.step; boundary >= -1e-12;
             boundary -= spec.step) {
          timed_deletes(count_at(std::max(boundary, 0.0)));
          query_phases();
        }
        break;
      }
      case WorkloadKind::kMixed: {
        // Insert 10% of capacity (two step boundaries), then delete 5%,
        // until the element load reaches max_load.
        double level = 0.0;
        while (level + 2 * spec.step <= spec.max_load + 1e-12 && !truncated) {
          bool ok = true;
          for (int half = 0; half < 2 && ok; ++half) {
            level += spec.step;
            ok = timed_inserts(count_at(level));
            query_phases();
          }
          if (!ok || level >= spec.max_load - 1e-12) break;
          level -= spec.step;
          timed_deletes(count_at(level));
          query_phases();
        }
        break;
      }
    }
  }
};

}  // namespace

std::vector<BenchSample> run_workload(const WorkloadSpec& spec) {
  spec.validate();
  std::vector<std::vector<BenchSample>> per_lane(spec.lanes.size());

  auto run_one = [&](size_t i) {
    LaneRun run(spec, spec.lanes[i]);
    run.run();
    if (run.truncated)
      std::cerr << "bench: lane " << spec.lanes[i].name()
                << " truncated: capacity exhausted\n";
    per_lane[i] = std::move(run.samples);
  };

  if (spec.parallel) {
    std::vector<std::thread> threads;
    threads.reserve(spec.lanes.size());
    for (size_t i = 0; i < spec.lanes.size(); ++i)
      threads.emplace_back(run_one, i);
    for (auto& t : threads) t.join();
  } else {
    for (size_t i = 0; i < spec.lanes.size(); ++i) run_one(i);
  }

  std::vector<BenchSample> all;
  for (auto& v : per_lane)
    for (auto& s : v) all.push_back(std::move(s));
  return all;
}

}  // namespace gqf::bench
