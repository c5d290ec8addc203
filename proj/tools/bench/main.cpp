#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bench/csv.hpp"
#include "bench/plot.hpp"
#include "bench/workload.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Quotient filter / graveyard filter throughput benchmark: timed "
      "insert/delete batches per load-factor step, with random and "
      "successful query phases after each step."};
  app.name("bench");

  std::string workload_name = "insert";
  std::string policies = "all";
  std::string csv_path;
  std::string plot_path;
  gqf::bench::WorkloadSpec spec;

  app.add_option("--workload", workload_name,
                 "Workload: insert | delete | mixed (mixed alternates "
                 "inserting 10% of capacity with deleting 5% of capacity)")
      ->required();
  app.add_option("--q", spec.q, "Bucket bits (table has 2^q slots)")
      ->capture_default_str();
  app.add_option("--r", spec.r, "Remainder bits per slot")
      ->capture_default_str();
  app.add_option("--seed", spec.seed, "Seed for hash and key streams")
      ->capture_default_str();
  app.add_option("--step", spec.step, "Load-factor increment per timed phase")
      ->capture_default_str();
  app.add_option("--query-secs", spec.query_secs,
                 "Wall-clock seconds per query phase (the original protocol "
                 "used 30)")
      ->capture_default_str();
  app.add_option("--max-load", spec.max_load, "Stop at this element load")
      ->capture_default_str();
  app.add_option("--policies", policies,
                 "Comma-separated lanes: none, amortized, between-runs, "
                 "cleanup, graveyard, base; or 'all'")
      ->capture_default_str();
  app.add_option("--csv", csv_path, "Output CSV path")->required();
  app.add_option("--plot", plot_path, "Optional SVG plot path");
  app.add_flag("--parallel", spec.parallel,
               "Run one thread per lane (independent filters and clocks)");

  CLI11_PARSE(app, argc, argv);

  if (!gqf::bench::parse_workload(workload_name, spec.kind)) {
    std::cerr << "bench: unknown workload '" << workload_name << "'\n";
    return 2;
  }
  std::string error;
  if (!gqf::bench::parse_lanes(policies, spec.lanes, error)) {
    std::cerr << "bench: " << error << "\n";
    return 2;
  }

  try {
    std::vector<gqf::bench::BenchSample> samples =
        gqf::bench::run_workload(spec);
    gqf::bench::emit_csv(samples, csv_path);
    std::cout << "bench: wrote " << samples.size() << " samples to "
              << csv_path << "\n";
    if (!plot_path.empty()) {
      gqf::bench::emit_plot(csv_path, plot_path);
      std::cout << "bench: wrote plot to " << plot_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
