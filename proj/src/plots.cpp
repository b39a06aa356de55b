#include "uninfo/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "uninfo/tensor_archive.hpp"

namespace uninfo {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
}

/// Linear map from data range to pixel range; degenerate ranges are padded.
struct Axis {
  double lo, hi, p0, p1;
  Axis(double lo_, double hi_, double p0_, double p1_) : lo(lo_), hi(hi_), p0(p0_), p1(p1_) {
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.1, 0.5);
      lo -= pad;
      hi += pad;
    }
  }
  double operator()(double v) const { return p0 + (v - lo) / (hi - lo) * (p1 - p0); }
};

std::string header(const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << title << "</text>\n";
  return s.str();
}

std::string frame(const Axis& x, const Axis& y, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n"
    << "<line x1=\"" << num(x.p0) << "\" y1=\"" << num(y.p0) << "\" x2=\"" << num(x.p1) << "\" y2=\"" << num(y.p0)
    << "\"/>\n"
    << "<line x1=\"" << num(x.p0) << "\" y1=\"" << num(y.p0) << "\" x2=\"" << num(x.p0) << "\" y2=\"" << num(y.p1)
    << "\"/>\n</g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = x.lo + (x.hi - x.lo) * i / 4.0;
    const double vy = y.lo + (y.hi - y.lo) * i / 4.0;
    s << "<text x=\"" << num(x(vx)) << "\" y=\"" << num(y.p0 + 16) << "\" text-anchor=\"middle\">" << num(vx)
      << "</text>\n";
    s << "<text x=\"" << num(x.p0 - 6) << "\" y=\"" << num(y(vy) + 4) << "\" text-anchor=\"end\">" << num(vy)
      << "</text>\n";
  }
  s << "<text x=\"" << num((x.p0 + x.p1) / 2) << "\" y=\"" << num(kHeight - 8) << "\" text-anchor=\"middle\">"
    << xlabel << "</text>\n";
  s << "<text x=\"14\" y=\"" << num((y.p0 + y.p1) / 2) << "\" transform=\"rotate(-90 14 " << num((y.p0 + y.p1) / 2)
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n</g>\n";
  return s.str();
}

}  // namespace

std::vector<ProjectedPoint> parse_projection_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "set,x,y", ErrorCode::ParseError,
          "line 1: expected header 'set,x,y'");
  std::vector<ProjectedPoint> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == 3, ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields");
    ProjectedPoint p{cells[0], parse_number(cells[1], line_no), parse_number(cells[2], line_no)};
    require(std::abs(std::hypot(p.x, p.y) - 1.0) <= 1e-4, ErrorCode::ParseError,
            "line " + std::to_string(line_no) + ": point is not on the unit circle");
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "value,mean,std", ErrorCode::ParseError,
          "line 1: expected header 'value,mean,std'");
  std::vector<SweepRow> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == 3, ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 3 fields");
    out.push_back({parse_number(cells[0], line_no), parse_number(cells[1], line_no), parse_number(cells[2], line_no)});
  }
  return out;
}

std::string weights_svg(const std::vector<MetricsRecord>& records) {
  require(!records.empty(), ErrorCode::ParseError, "no metrics rows to plot");
  double lo = 1.0, hi = 1.0;
  for (const auto& r : records) {
    lo = std::min({lo, r.w, 1.0 / r.w});
    hi = std::max({hi, r.w, 1.0 / r.w});
  }
  const Axis x(static_cast<double>(records.front().step), static_cast<double>(records.back().step), kMargin,
               kWidth - kMargin);
  const Axis y(lo, hi, kHeight - kMargin, kMargin);
  std::ostringstream s;
  s << header("Balancing weights") << frame(x, y, "step", "weight");
  auto line = [&](const char* id, const char* color, auto value) {
    s << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < records.size(); ++i) {
      s << (i ? " " : "") << num(x(static_cast<double>(records[i].step))) << ',' << num(y(value(records[i])));
    }
    s << "\"/>\n";
  };
  line("w", "#1f77b4", [](const MetricsRecord& r) { return r.w; });
  line("inv_w", "#d62728", [](const MetricsRecord& r) { return 1.0 / r.w; });
  s << "<g font-family=\"sans-serif\" font-size=\"11\"><text x=\"" << kWidth - 120 << "\" y=\"44\" fill=\"#1f77b4\">"
    << "entropy weight w</text><text x=\"" << kWidth - 120 << "\" y=\"58\" fill=\"#d62728\">uniformity 1/w</text></g>\n";
  s << "</svg>\n";
  return s.str();
}

std::string spca_svg(const std::vector<ProjectedPoint>& points) {
  const double cx = kWidth / 2, cy = kHeight / 2 + 10, r = kHeight / 2 - kMargin;
  std::ostringstream s;
  s << header("Spherical PCA projection");
  s << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
    << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (const auto& p : points) {
    const bool text = p.set == "text";
    s << "<circle class=\"" << (text ? "text" : "image") << "\" cx=\"" << num(cx + r * p.x) << "\" cy=\""
      << num(cy - r * p.y) << "\" r=\"" << (text ? 5 : 2.5) << "\" fill=\"" << (text ? "#d62728" : "#1f77b4")
      << "\" fill-opacity=\"" << (text ? 1.0 : 0.5) << "\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string sweep_svg(const std::vector<SweepRow>& rows, const std::string& param) {
  require(!rows.empty(), ErrorCode::ParseError, "no sweep rows to plot");
  double xlo = rows.front().value, xhi = xlo, ylo = rows.front().mean, yhi = ylo;
  for (const auto& r : rows) {
    xlo = std::min(xlo, r.value);
    xhi = std::max(xhi, r.value);
    ylo = std::min(ylo, r.mean - r.std);
    yhi = std::max(yhi, r.mean + r.std);
  }
  const Axis x(xlo, xhi, kMargin + 10, kWidth - kMargin);
  const Axis y(ylo, yhi, kHeight - kMargin, kMargin);
  std::vector<SweepRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) { return a.value < b.value; });
  std::ostringstream s;
  s << header("Sensitivity sweep") << frame(x, y, param, "mean accuracy");
  s << "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
  for (std::size_t i = 0; i < sorted.size(); ++i) s << (i ? " " : "") << num(x(sorted[i].value)) << ',' << num(y(sorted[i].mean));
  s << "\"/>\n";
  for (const auto& r : sorted) {
    const double px = x(r.value);
    s << "<line class=\"errorbar\" x1=\"" << num(px) << "\" y1=\"" << num(y(r.mean - r.std)) << "\" x2=\"" << num(px)
      << "\" y2=\"" << num(y(r.mean + r.std)) << "\" stroke=\"#333\"/>\n";
    s << "<circle class=\"point\" cx=\"" << num(px) << "\" cy=\"" << num(y(r.mean)) << "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "weights") return PlotKind::Weights;
  if (name == "spca") return PlotKind::Spca;
  if (name == "sweep") return PlotKind::Sweep;
  fail(ErrorCode::ConfigError, "plot kind must be weights, spca or sweep, got '" + name + "'");
}

std::vector<std::filesystem::path> cmd_plot(const std::vector<std::filesystem::path>& inputs, PlotKind kind,
                                            const std::filesystem::path& out_dir) {
  require(!inputs.empty(), ErrorCode::ConfigError, "no input files to plot");
  std::vector<std::filesystem::path> written;
  for (const auto& in : inputs) {
    require(std::filesystem::exists(in), ErrorCode::IoError, "input not found: " + in.string());
    const std::string text = read_file(in);
    std::string svg;
    const char* suffix = "";
    try {
      switch (kind) {
        case PlotKind::Weights: svg = weights_svg(parse_metrics_csv(text)); suffix = "weights"; break;
        case PlotKind::Spca: svg = spca_svg(parse_projection_csv(text)); suffix = "spca"; break;
        case PlotKind::Sweep: svg = sweep_svg(parse_sweep_csv(text)); suffix = "sweep"; break;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) fail(ErrorCode::ParseError, in.string() + ": " + e.what());
      throw;
    }
    // Inputs usually share a file name (metrics.csv), so fold the parent in.
    std::string stem = in.parent_path().filename().string();
    stem = stem.empty() ? in.stem().string() : stem + "_" + in.stem().string();
    const auto path = out_dir / (stem + "_" + suffix + ".svg");
    write_file_atomic(path, svg);
    written.push_back(path);
  }
  return written;
}

}  // namespace uninfo
