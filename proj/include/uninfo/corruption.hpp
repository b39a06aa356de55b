#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uninfo/image.hpp"

namespace uninfo {

enum class CorruptionKind {
  GaussianNoise,
  ShotNoise,
  ImpulseNoise,
  DefocusBlur,
  MotionBlur,
  Contrast,
  Brightness,
  Pixelate,
  JpegLike,
};

const char* to_string(CorruptionKind kind);
CorruptionKind parse_corruption_kind(const std::string& name);
const std::vector<CorruptionKind>& all_corruption_kinds();

/// Whether the kind draws random numbers (noise kinds only).
bool is_stochastic(CorruptionKind kind);

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::GaussianNoise;
  int severity = 5;
  std::uint64_t seed = 0;
  // Replaces the severity-indexed parameter (sigma, photons, ...).
  std::optional<double> parameter;

  std::string label() const;
};

/// Severity-indexed strength for a kind, severity in 1..5.
double severity_parameter(CorruptionKind kind, int severity);

ImageBatch apply_corruption(const ImageBatch& clean, const CorruptionSpec& spec);

/// One corrupted copy of `clean` per kind, keyed by kind name. Each kind gets
/// its own seed derived from `seed`.
std::map<std::string, ImageBatch> corruption_suite(const ImageBatch& clean, const std::vector<CorruptionKind>& kinds,
                                                   int severity, std::uint64_t seed);

}  // namespace uninfo
