#include "bench/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "bench/csv.hpp"

namespace gqf::bench {

namespace {

constexpr int kPanelW = 760;
constexpr int kPanelH = 260;
constexpr int kMarginL = 80;
constexpr int kMarginR = 170;
constexpr int kMarginT = 40;
constexpr int kMarginB = 45;

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
  std::string policy;
  std::vector<std::pair<double, double>> points;  // (load, throughput)
};

std::string human(double v) {
  char buf[32];
  if (v >= 1e6)
    std::snprintf(buf, sizeof(buf), "%.1fM", v / 1e6);
  else if (v >= 1e3)
    std::snprintf(buf, sizeof(buf), "%.0fk", v / 1e3);
  else
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  return buf;
}

}  // namespace

void emit_plot(const std::string& csv_path, const std::string& out_path) {
  std::vector<BenchSample> samples = parse_csv(csv_path);

  const char* kind_order[] = {"insert", "delete", "random_query",
                              "successful_query"};
  const char* kind_title[] = {"Insertions", "Deletions", "Random queries",
                              "Successful queries"};

  std::vector<int> kinds_present;
  for (int k = 0; k < 4; ++k) {
    for (const BenchSample& s : samples) {
      if (s.op_kind == kind_order[k]) {
        kinds_present.push_back(k);
        break;
      }
    }
  }

  const int total_w = kMarginL + kPanelW + kMarginR;
  const int panel_span = kMarginT + kPanelH + kMarginB;
  const int total_h =
      std::max<int>(1, static_cast<int>(kinds_present.size())) * panel_span;

  std::ofstream out(out_path);
  if (!out)
    throw std::runtime_error("cannot open " + out_path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w
      << "\" height=\"" << total_h << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  int panel_idx = 0;
  for (int k : kinds_present) {
    // Collect series per policy, ordered by first appearance.
    std::vector<Series> series;
    for (const BenchSample& s : samples) {
      if (s.op_kind != kind_order[k]) continue;
      auto it = std::find_if(series.begin(), series.end(), [&](const Series& x) {
        return x.policy == s.policy;
      });
      if (it == series.end()) {
        series.push_back({s.policy, {}});
        it = series.end() - 1;
      }
      it->points.emplace_back(s.load_factor, s.throughput_ops_s);
    }
    for (Series& s : series)
      std::sort(s.points.begin(), s.points.end());

    double ymax = 0.0;
    for (const Series& s : series)
      for (auto& [x, y] : s.points) ymax = std::max(ymax, y);
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    const int ox = kMarginL;
    const int oy = panel_idx * panel_span + kMarginT;
    auto px = [&](double load) { return ox + load * kPanelW; };
    auto py = [&](double v) { return oy + kPanelH - (v / ymax) * kPanelH; };

    out << "<text x=\"" << ox << "\" y=\"" << oy - 14
        << "\" font-size=\"16\">" << kind_title[k]
        << " — throughput vs load factor</text>\n";
    out << "<rect x=\"" << ox << "\" y=\"" << oy << "\" width=\"" << kPanelW
        << "\" height=\"" << kPanelH
        << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (int t = 0; t <= 10; t += 2) {
      double load = t / 10.0;
      out << "<line x1=\"" << px(load) << "\" y1=\"" << oy + kPanelH
          << "\" x2=\"" << px(load) << "\" y2=\"" << oy + kPanelH + 5
          << "\" stroke=\"#333\"/>\n";
      out << "<text x=\"" << px(load) << "\" y=\"" << oy + kPanelH + 20
          << "\" font-size=\"11\" text-anchor=\"middle\">" << load
          << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
      double v = ymax * t / 4.0;
      out << "<line x1=\"" << ox - 5 << "\" y1=\"" << py(v) << "\" x2=\""
          << ox << "\" y2=\"" << py(v) << "\" stroke=\"#333\"/>\n";
      out << "<text x=\"" << ox - 8 << "\" y=\"" << py(v) + 4
          << "\" font-size=\"11\" text-anchor=\"end\">" << human(v)
          << "</text>\n";
    }
    out << "<text x=\"" << ox + kPanelW / 2 << "\" y=\""
        << oy + kPanelH + 38
        << "\" font-size=\"12\" text-anchor=\"middle\">load factor</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
      const char* color = kColors[si % 8];
      const Series& s = series[si];
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (auto& [x, y] : s.points) out << px(x) << "," << py(y) << " ";
      out << "\"/>\n";
      for (auto& [x, y] : s.points)
        out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
      int ly = oy + 14 + static_cast<int>(si) * 16;
      out << "<line x1=\"" << ox + kPanelW + 10 << "\" y1=\"" << ly
          << "\" x2=\"" << ox + kPanelW + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      out << "<text x=\"" << ox + kPanelW + 35 << "\" y=\"" << ly + 4
          << "\" font-size=\"11\">" << s.policy << "</text>\n";
    }
    ++panel_idx;
  }

  out << "</svg>\n";
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + out_path);
}

}  // namespace gqf::bench
