#include "harness/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "peat/train_log.hpp"

namespace peat::harness {

namespace {

constexpr int kWidth = 880;
constexpr int kHeight = 520;
constexpr int kMarginLeft = 90;
constexpr int kMarginRight = 210;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 64;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Rounds the step to 1/2/5 x 10^k for readable axis ticks.
double nice_step(double range, int target_ticks) {
  const double raw = range / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) {
    step = 1.0;
  } else if (norm <= 2.0) {
    step = 2.0;
  } else if (norm <= 5.0) {
    step = 5.0;
  }
  return step * mag;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

}  // namespace

std::string render_line_chart(const std::vector<std::string>& log_files,
                              const std::string& metric) {
  const auto valid = peat::train_log_metric_names();
  if (std::find(valid.begin(), valid.end(), metric) == valid.end()) {
    std::string msg = "unknown metric '" + metric + "'; valid metrics:";
    for (const auto& name : valid) msg += " " + name;
    throw std::invalid_argument(msg);
  }
  if (log_files.empty()) throw std::invalid_argument("no log files given");

  std::vector<Series> series;
  for (const auto& path : log_files) {
    const auto rows = peat::read_train_log(path);
    if (rows.empty()) throw std::runtime_error("log file has no rows: " + path);
    Series s;
    s.label = std::filesystem::path(path).parent_path().filename().string();
    if (s.label.empty()) s.label = std::filesystem::path(path).filename().string();
    for (const auto& row : rows) {
      s.x.push_back(static_cast<double>(row.env_steps));
      s.y.push_back(peat::train_log_metric(row, metric));
    }
    series.push_back(std::move(s));
  }

  double xmin = series[0].x.front(), xmax = series[0].x.back();
  double ymin = series[0].y[0], ymax = series[0].y[0];
  for (const auto& s : series) {
    for (double v : s.x) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : s.y) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymax += std::abs(ymax) * 0.1 + 1.0;
    ymin -= std::abs(ymin) * 0.1 + 1.0;
  } else {
    const double pad = (ymax - ymin) * 0.05;
    ymin -= pad;
    ymax += pad;
  }

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto to_px = [&](double x, double y) {
    const double px = kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w;
    const double py = kMarginTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h;
    return std::make_pair(px, py);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

  // grid and ticks
  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  const double xstep = nice_step(xmax - xmin, 6);
  for (double tick = std::ceil(xmin / xstep) * xstep; tick <= xmax + 1e-9; tick += xstep) {
    const auto [px, py] = to_px(tick, ymin);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << kMarginTop << "\" x2=\"" << fmt(px)
        << "\" y2=\"" << fmt(py) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(py + 18) << "\" text-anchor=\"middle\">"
        << fmt(tick) << "</text>\n";
  }
  const double ystep = nice_step(ymax - ymin, 6);
  for (double tick = std::ceil(ymin / ystep) * ystep; tick <= ymax + 1e-9; tick += ystep) {
    const auto [px, py] = to_px(xmin, tick);
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << fmt(py) << "\" x2=\""
        << fmt(kMarginLeft + plot_w) << "\" y2=\"" << fmt(py) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt(px - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">"
        << fmt(tick) << "</text>\n";
  }
  svg << "</g>\n";

  // axes
  svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << fmt(plot_w)
      << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  svg << "<text x=\"" << fmt(kMarginLeft + plot_w / 2) << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">environment "
         "steps</text>\n";
  std::string ylabel = metric;
  if (metric == "total_delay_min") ylabel += " (minutes)";
  svg << "<text x=\"20\" y=\"" << fmt(kMarginTop + plot_h / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
         "transform=\"rotate(-90 20 "
      << fmt(kMarginTop + plot_h / 2) << ")\">" << xml_escape(ylabel) << "</text>\n";

  // polylines
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k) {
      const auto [px, py] = to_px(series[i].x[k], series[i].y[k]);
      if (k > 0) svg << ' ';
      svg << fmt(px) << ',' << fmt(py);
    }
    svg << "\"/>\n";
  }

  // legend
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double ly = kMarginTop + 8 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"" << fmt(kMarginLeft + plot_w + 12) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(kMarginLeft + plot_w + 34) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(kMarginLeft + plot_w + 40) << "\" y=\"" << fmt(ly + 4) << "\">"
        << xml_escape(series[i].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void write_line_chart(const std::string& out_path, const std::vector<std::string>& log_files,
                      const std::string& metric) {
  const std::string body = render_line_chart(log_files, metric);  // may throw; write nothing then
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << body;
}

}  // namespace peat::harness
