#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uninfo/experiment.hpp"
#include "uninfo/tta.hpp"

namespace uninfo {

struct ProjectedPoint {
  std::string set;  // "image" or "text"
  double x = 0.0;
  double y = 0.0;
};

/// Points of a `set,x,y` projection CSV. Every point must lie on the unit
/// circle within 1e-4.
std::vector<ProjectedPoint> parse_projection_csv(const std::string& text);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

/// w and 1/w against the step index.
std::string weights_svg(const std::vector<MetricsRecord>& records);
/// Scatter of projected image and text points inside the unit circle.
std::string spca_svg(const std::vector<ProjectedPoint>& points);
/// Mean accuracy per swept value with one-std error bars.
std::string sweep_svg(const std::vector<SweepRow>& rows, const std::string& param = "value");

enum class PlotKind { Weights, Spca, Sweep };
PlotKind parse_plot_kind(const std::string& name);

/// Reads each input, renders it and writes <out>/<stem>_<kind>.svg. Returns
/// the written paths.
std::vector<std::filesystem::path> cmd_plot(const std::vector<std::filesystem::path>& inputs, PlotKind kind,
                                            const std::filesystem::path& out_dir);

}  // namespace uninfo
