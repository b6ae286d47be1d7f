#include "uql/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "uql/experiment.hpp"
#include "uql/gridworld.hpp"

namespace uql {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

struct CurveSeries {
  std::string metric;
  std::vector<double> steps;
  std::vector<double> means;
  std::vector<double> stds;
};

void draw_axes(std::ostringstream& svg, double x0, double y0, double x1,
               double y1, double xmin, double xmax, double ymin, double ymax,
               const std::string& x_label, const std::string& y_label) {
  svg << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y1) << "\" x2=\""
      << fmt(x1) << "\" y2=\"" << fmt(y1)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\""
      << fmt(x0) << "\" y2=\"" << fmt(y1)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double tx = x0 + (x1 - x0) * i / 4.0;
    double tv = xmin + (xmax - xmin) * i / 4.0;
    svg << "<line x1=\"" << fmt(tx) << "\" y1=\"" << fmt(y1) << "\" x2=\""
        << fmt(tx) << "\" y2=\"" << fmt(y1 + 4)
        << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(tx) << "\" y=\"" << fmt(y1 + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#222222\""
        << " text-anchor=\"middle\">" << fmt_tick(tv) << "</text>\n";
    double ty = y1 - (y1 - y0) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    svg << "<line x1=\"" << fmt(x0 - 4) << "\" y1=\"" << fmt(ty) << "\" x2=\""
        << fmt(x0) << "\" y2=\"" << fmt(ty)
        << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(ty + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#222222\""
        << " text-anchor=\"end\">" << fmt_tick(yv) << "</text>\n";
  }
  svg << "<text x=\"" << fmt((x0 + x1) / 2.0) << "\" y=\"" << fmt(y1 + 32)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\""
      << " text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text x=\"" << fmt(x0 - 44) << "\" y=\"" << fmt((y0 + y1) / 2.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#222222\""
      << " text-anchor=\"middle\" transform=\"rotate(-90 " << fmt(x0 - 44)
      << ' ' << fmt((y0 + y1) / 2.0) << ")\">" << y_label << "</text>\n";
}

std::string render_curve(const std::string& input_path, PlotKind kind) {
  std::vector<AggregateRow> rows = read_aggregate_csv(input_path);
  const std::string prefix =
      kind == PlotKind::value_curve ? "probe_value_" : "probe_bias_";

  std::vector<CurveSeries> series;
  for (const AggregateRow& row : rows) {
    if (row.metric.rfind(prefix, 0) != 0) continue;
    CurveSeries* s = nullptr;
    for (CurveSeries& existing : series)
      if (existing.metric == row.metric) s = &existing;
    if (s == nullptr) {
      series.push_back({row.metric, {}, {}, {}});
      s = &series.back();
    }
    s->steps.push_back(static_cast<double>(row.step));
    s->means.push_back(row.mean);
    s->stds.push_back(row.std_dev);
  }
  if (!rows.empty() && series.empty())
    throw std::invalid_argument(input_path + ": no " + prefix +
                                "* metrics to plot");

  const double x0 = 64, y0 = 24, x1 = 472, y1 = 372;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!series.empty()) {
    xmin = xmax = series[0].steps[0];
    ymin = ymax = series[0].means[0];
    for (const CurveSeries& s : series) {
      for (std::size_t i = 0; i < s.steps.size(); ++i) {
        xmin = std::min(xmin, s.steps[i]);
        xmax = std::max(xmax, s.steps[i]);
        ymin = std::min(ymin, s.means[i] - s.stds[i]);
        ymax = std::max(ymax, s.means[i] + s.stds[i]);
      }
    }
    if (xmin == xmax) {
      xmin -= 1.0;
      xmax += 1.0;
    }
    double pad = (ymax - ymin) * 0.05;
    if (pad == 0.0) pad = 1.0;
    ymin -= pad;
    ymax += pad;
  }
  auto sx = [&](double v) { return x0 + (v - xmin) / (xmax - xmin) * (x1 - x0); };
  auto sy = [&](double v) { return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
         "height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg << "<rect width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";
  draw_axes(svg, x0, y0, x1, y1, xmin, xmax, ymin, ymax, "step",
            kind == PlotKind::value_curve ? "probe value" : "probe bias");
  for (std::size_t k = 0; k < series.size(); ++k) {
    const CurveSeries& s = series[k];
    const char* color = kPalette[k % kPaletteSize];
    if (s.steps.size() > 1) {
      std::ostringstream band;
      for (std::size_t i = 0; i < s.steps.size(); ++i)
        band << fmt(sx(s.steps[i])) << ',' << fmt(sy(s.means[i] + s.stds[i]))
             << ' ';
      for (std::size_t i = s.steps.size(); i-- > 0;)
        band << fmt(sx(s.steps[i])) << ',' << fmt(sy(s.means[i] - s.stds[i]))
             << ' ';
      svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color
          << "\" fill-opacity=\"0.18\"/>\n";
      std::ostringstream line;
      for (std::size_t i = 0; i < s.steps.size(); ++i)
        line << fmt(sx(s.steps[i])) << ',' << fmt(sy(s.means[i])) << ' ';
      svg << "<polyline points=\"" << line.str()
          << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
    } else if (s.steps.size() == 1) {
      svg << "<circle cx=\"" << fmt(sx(s.steps[0])) << "\" cy=\""
          << fmt(sy(s.means[0])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    double ly = y0 + 14.0 * static_cast<double>(k) + 8.0;
    svg << "<line x1=\"" << fmt(x1 + 10) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(x1 + 28) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(x1 + 32) << "\" y=\"" << fmt(ly + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#222222\">"
        << s.metric << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

struct MapCell {
  double value = 0.0;
  bool has_value = false;
  int greedy_action = -1;
  double greedy_value = 0.0;
};

std::string render_map(const std::string& input_path, PlotKind kind) {
  std::ifstream in(input_path);
  if (!in) throw std::invalid_argument("cannot open " + input_path);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(input_path + ": empty file");
  std::vector<std::string> header;
  {
    std::string cell;
    std::istringstream hs(line);
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  int row_col = column("row");
  int col_col = column("col");
  if (row_col < 0 || col_col < 0)
    throw std::invalid_argument(input_path + ": missing column row/col");
  int action_col = column("action");
  int value_col = column("q_mean");
  if (value_col < 0) value_col = column("value");
  if (value_col < 0) value_col = column("q_star");
  if (value_col < 0)
    throw std::invalid_argument(input_path +
                                ": missing column q_mean/value/q_star");
  if (kind == PlotKind::policy_map && action_col < 0)
    throw std::invalid_argument(input_path + ": missing column action");

  std::map<std::pair<int, int>, MapCell> cells;
  std::vector<int> seen_actions;
  int height = 0, width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    {
      std::string cell;
      std::istringstream ls(line);
      while (std::getline(ls, cell, ',')) fields.push_back(cell);
    }
    if (fields.size() != header.size())
      throw std::invalid_argument(input_path + ": malformed row '" + line + "'");
    int r = std::stoi(fields[row_col]);
    int c = std::stoi(fields[col_col]);
    if (r < 0 || c < 0)
      throw std::invalid_argument(input_path +
                                  ": map plots need grid coordinates");
    double v = std::strtod(fields[value_col].c_str(), nullptr);
    height = std::max(height, r + 1);
    width = std::max(width, c + 1);
    MapCell& cell = cells[{r, c}];
    int a = -1;
    if (action_col >= 0) {
      a = std::stoi(fields[action_col]);
      if (std::find(seen_actions.begin(), seen_actions.end(), a) ==
          seen_actions.end())
        seen_actions.push_back(a);
    }
    if (!cell.has_value || v > cell.value) cell.value = v;
    if (!cell.has_value || v > cell.greedy_value ||
        (v == cell.greedy_value && a >= 0 && a < cell.greedy_action)) {
      cell.greedy_value = v;
      cell.greedy_action = a;
    }
    cell.has_value = true;
  }
  bool compass = action_col >= 0 &&
                 static_cast<int>(seen_actions.size()) == kNumGridActions;

  double vmin = 0.0, vmax = 1.0;
  if (!cells.empty()) {
    vmin = vmax = cells.begin()->second.value;
    for (const auto& [rc, cell] : cells) {
      vmin = std::min(vmin, cell.value);
      vmax = std::max(vmax, cell.value);
    }
  }
  if (width == 0) width = 1;
  if (height == 0) height = 1;

  const double cs = 48.0, margin = 24.0;
  double svg_w = margin * 2 + cs * width;
  double svg_h = margin * 2 + cs * height;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(svg_w)
      << "\" height=\"" << fmt(svg_h) << "\" viewBox=\"0 0 " << fmt(svg_w)
      << ' ' << fmt(svg_h) << "\">\n";
  svg << "<rect width=\"" << fmt(svg_w) << "\" height=\"" << fmt(svg_h)
      << "\" fill=\"#ffffff\"/>\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double x = margin + cs * c;
      double y = margin + cs * r;
      auto it = cells.find({r, c});
      std::string fill = "#3c3c3c";  // absent cells are walls
      double norm = 0.5;
      if (it != cells.end()) {
        norm = vmax > vmin ? (it->second.value - vmin) / (vmax - vmin) : 0.5;
        int red = static_cast<int>(247 + norm * (33 - 247));
        int green = static_cast<int>(251 + norm * (102 - 251));
        int blue = static_cast<int>(255 + norm * (172 - 255));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", red, green, blue);
        fill = buf;
      }
      svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
          << fmt(cs) << "\" height=\"" << fmt(cs) << "\" fill=\"" << fill
          << "\" stroke=\"#aaaaaa\" stroke-width=\"0.5\"/>\n";
      if (it == cells.end()) continue;
      const MapCell& cell = it->second;
      double cx = x + cs / 2.0;
      double cy = y + cs / 2.0;
      std::string ink = norm > 0.55 ? "#ffffff" : "#1a1a1a";
      if (cell.greedy_action >= 0 && compass &&
          cell.greedy_action < kNumGridActions) {
        double dr = kGridDr[cell.greedy_action];
        double dc = kGridDc[cell.greedy_action];
        double len = std::sqrt(dr * dr + dc * dc);
        double ux = dc / len, uy = dr / len;
        double tail_x = cx - ux * cs * 0.28, tail_y = cy - uy * cs * 0.28;
        double tip_x = cx + ux * cs * 0.28, tip_y = cy + uy * cs * 0.28;
        svg << "<line x1=\"" << fmt(tail_x) << "\" y1=\"" << fmt(tail_y)
            << "\" x2=\"" << fmt(tip_x) << "\" y2=\"" << fmt(tip_y)
            << "\" stroke=\"" << ink << "\" stroke-width=\"1.5\"/>\n";
        double bx = tip_x - ux * cs * 0.12, by = tip_y - uy * cs * 0.12;
        double px = -uy * cs * 0.07, py = ux * cs * 0.07;
        svg << "<polygon points=\"" << fmt(tip_x) << ',' << fmt(tip_y) << ' '
            << fmt(bx + px) << ',' << fmt(by + py) << ' ' << fmt(bx - px)
            << ',' << fmt(by - py) << "\" fill=\"" << ink << "\"/>\n";
      } else if (cell.greedy_action >= 0 && kind == PlotKind::policy_map) {
        svg << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(cy + 4)
            << "\" font-family=\"monospace\" font-size=\"11\" fill=\"" << ink
            << "\" text-anchor=\"middle\">" << cell.greedy_action
            << "</text>\n";
      }
      if (kind == PlotKind::value_map) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", cell.value);
        svg << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(y + cs - 4)
            << "\" font-family=\"monospace\" font-size=\"9\" fill=\"" << ink
            << "\" text-anchor=\"middle\">" << buf << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "value-curve") return PlotKind::value_curve;
  if (name == "bias-curve") return PlotKind::bias_curve;
  if (name == "policy-map") return PlotKind::policy_map;
  if (name == "value-map") return PlotKind::value_map;
  throw std::invalid_argument(
      "plot: unknown kind '" + std::string(name) +
      "' (value-curve, bias-curve, policy-map, value-map)");
}

std::string_view plot_kind_name(PlotKind kind) {
  switch (kind) {
    case PlotKind::value_curve: return "value-curve";
    case PlotKind::bias_curve: return "bias-curve";
    case PlotKind::policy_map: return "policy-map";
    case PlotKind::value_map: return "value-map";
  }
  return "";
}

std::string render_plot(const std::string& input_path, PlotKind kind,
                        const std::string& output_path) {
  std::string svg;
  if (kind == PlotKind::value_curve || kind == PlotKind::bias_curve)
    svg = render_curve(input_path, kind);
  else
    svg = render_map(input_path, kind);

  std::string out = output_path;
  if (out.empty()) {
    std::string name(plot_kind_name(kind));
    std::replace(name.begin(), name.end(), '-', '_');
    std::filesystem::path parent = std::filesystem::path(input_path).parent_path();
    out = ((parent.empty() ? std::filesystem::path(".") : parent) /
           (name + ".svg"))
              .string();
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << svg;
  if (!file) throw std::runtime_error("write failed: " + out);
  return out;
}

}  // namespace uql
