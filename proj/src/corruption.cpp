#include "uninfo/corruption.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace uninfo {

namespace {

constexpr std::array<const char*, 9> kNames = {"gaussian_noise", "shot_noise", "impulse_noise",
                                               "defocus_blur",   "motion_blur", "contrast",
                                               "brightness",     "pixelate",    "jpeg_like"};

constexpr std::array<std::array<double, 5>, 9> kSchedule = {{
    {0.04, 0.08, 0.12, 0.18, 0.26},  // gaussian sigma
    {60, 25, 12, 5, 3},              // shot-noise photon count
    {0.01, 0.03, 0.06, 0.1, 0.17},   // impulse flip fraction
    {1, 2, 3, 4, 6},                 // defocus disk radius (px)
    {3, 5, 7, 9, 12},                // motion kernel length (px)
    {0.75, 0.5, 0.4, 0.3, 0.15},     // contrast scale
    {0.1, 0.2, 0.3, 0.4, 0.5},       // brightness offset
    {0.6, 0.5, 0.4, 0.3, 0.25},      // pixelate downscale factor
    {80, 60, 40, 25, 10},            // jpeg quality
}};

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Kernel {
  int radius = 0;
  std::vector<double> weights;  // (2r+1)^2, row-major, sums to 1

  double at(int dy, int dx) const {
    const int size = 2 * radius + 1;
    return weights[static_cast<std::size_t>((dy + radius) * size + dx + radius)];
  }
};

Kernel normalized(Kernel k) {
  double sum = 0;
  for (double w : k.weights) sum += w;
  for (double& w : k.weights) w /= sum;
  return k;
}

Kernel disk_kernel(double radius) {
  Kernel k;
  k.radius = static_cast<int>(std::ceil(radius));
  const int size = 2 * k.radius + 1;
  k.weights.assign(static_cast<std::size_t>(size * size), 0.0);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) k.weights[static_cast<std::size_t>((dy + k.radius) * size + dx + k.radius)] = 1.0;
    }
  }
  return normalized(std::move(k));
}

// Line of `length` taps through the origin at 45 degrees.
Kernel motion_kernel(double length) {
  const int taps = std::max(1, static_cast<int>(std::lround(length)));
  Kernel k;
  k.radius = static_cast<int>(std::ceil((taps - 1) / 2.0 * std::numbers::sqrt2 / 2.0)) + 1;
  const int size = 2 * k.radius + 1;
  k.weights.assign(static_cast<std::size_t>(size * size), 0.0);
  for (int i = 0; i < taps; ++i) {
    const double t = i - (taps - 1) / 2.0;
    const int dx = static_cast<int>(std::lround(t * std::numbers::sqrt2 / 2.0));
    const int dy = -dx;
    k.weights[static_cast<std::size_t>((dy + k.radius) * size + dx + k.radius)] += 1.0;
  }
  return normalized(std::move(k));
}

// Convolution with edge-replicated borders, so constants are preserved.
void convolve(ImageBatch& img, Index b, const Kernel& k) {
  const int h = img.height, w = img.width;
  std::vector<double> src(static_cast<std::size_t>(img.row_length()));
  for (Index i = 0; i < img.row_length(); ++i) src[static_cast<std::size_t>(i)] = img.pixels(b, i);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int dy = -k.radius; dy <= k.radius; ++dy) {
          const int sy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -k.radius; dx <= k.radius; ++dx) {
            const double wgt = k.at(dy, dx);
            if (wgt == 0.0) continue;
            const int sx = std::clamp(x + dx, 0, w - 1);
            acc += wgt * src[static_cast<std::size_t>((sy * w + sx) * 3 + c)];
          }
        }
        img.at(b, y, x, c) = clip01(acc);
      }
    }
  }
}

void pixelate(ImageBatch& img, Index b, double factor) {
  const int h = img.height, w = img.width;
  const int sh = std::max(1, static_cast<int>(std::lround(h * factor)));
  const int sw = std::max(1, static_cast<int>(std::lround(w * factor)));
  std::vector<double> small(static_cast<std::size_t>(sh * sw * 3), 0.0);
  std::vector<double> count(static_cast<std::size_t>(sh * sw), 0.0);
  for (int y = 0; y < h; ++y) {
    const int cy = y * sh / h;
    for (int x = 0; x < w; ++x) {
      const int cx = x * sw / w;
      count[static_cast<std::size_t>(cy * sw + cx)] += 1.0;
      for (int c = 0; c < 3; ++c) small[static_cast<std::size_t>((cy * sw + cx) * 3 + c)] += img.at(b, y, x, c);
    }
  }
  for (int y = 0; y < h; ++y) {
    const int cy = y * sh / h;
    for (int x = 0; x < w; ++x) {
      const int cx = x * sw / w;
      const double n = count[static_cast<std::size_t>(cy * sw + cx)];
      for (int c = 0; c < 3; ++c) img.at(b, y, x, c) = clip01(small[static_cast<std::size_t>((cy * sw + cx) * 3 + c)] / n);
    }
  }
}

constexpr std::array<int, 64> kLumaTable = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                            14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                            18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                            49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

// 8x8 block DCT quantization per channel with the IJG quality scaling.
void jpeg_like(ImageBatch& img, Index b, double quality) {
  const double q = std::clamp(quality, 1.0, 100.0);
  const double scale = q < 50 ? 5000.0 / q : 200.0 - 2.0 * q;
  std::array<double, 64> table{};
  for (int i = 0; i < 64; ++i) table[static_cast<std::size_t>(i)] = std::clamp(std::floor((kLumaTable[static_cast<std::size_t>(i)] * scale + 50.0) / 100.0), 1.0, 255.0);
  std::array<std::array<double, 8>, 8> basis{};
  for (int u = 0; u < 8; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int x = 0; x < 8; ++x) basis[static_cast<std::size_t>(u)][static_cast<std::size_t>(x)] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
  }
  const int h = img.height, w = img.width;
  for (int c = 0; c < 3; ++c) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        double block[8][8], coef[8][8], tmp[8][8];
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            block[y][x] = img.at(b, std::min(by + y, h - 1), std::min(bx + x, w - 1), c) * 255.0 - 128.0;
        for (int u = 0; u < 8; ++u)
          for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int y = 0; y < 8; ++y) s += basis[u][y] * block[y][x];
            tmp[u][x] = s;
          }
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int x = 0; x < 8; ++x) s += tmp[u][x] * basis[v][x];
            const double qv = table[static_cast<std::size_t>(u * 8 + v)];
            coef[u][v] = std::round(s / qv) * qv;
          }
        for (int y = 0; y < 8; ++y)
          for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += basis[u][y] * coef[u][v];
            tmp[y][v] = s;
          }
        for (int y = 0; y < 8 && by + y < h; ++y)
          for (int x = 0; x < 8 && bx + x < w; ++x) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += tmp[y][v] * basis[v][x];
            img.at(b, by + y, bx + x, c) = clip01((s + 128.0) / 255.0);
          }
      }
    }
  }
}

}  // namespace

const char* to_string(CorruptionKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

CorruptionKind parse_corruption_kind(const std::string& name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (name == kNames[i]) return static_cast<CorruptionKind>(i);
  }
  fail(ErrorCode::UnknownKind, "unknown corruption kind '" + name + "'");
}

const std::vector<CorruptionKind>& all_corruption_kinds() {
  static const std::vector<CorruptionKind> kinds = [] {
    std::vector<CorruptionKind> out;
    for (std::size_t i = 0; i < kNames.size(); ++i) out.push_back(static_cast<CorruptionKind>(i));
    return out;
  }();
  return kinds;
}

bool is_stochastic(CorruptionKind kind) {
  return kind == CorruptionKind::GaussianNoise || kind == CorruptionKind::ShotNoise ||
         kind == CorruptionKind::ImpulseNoise;
}

std::string CorruptionSpec::label() const {
  return std::string(to_string(kind)) + ":" + std::to_string(severity) + ":" + std::to_string(seed);
}

double severity_parameter(CorruptionKind kind, int severity) {
  require(severity >= 1 && severity <= 5, ErrorCode::InvalidArgument, "severity must be in 1..5");
  return kSchedule[static_cast<std::size_t>(kind)][static_cast<std::size_t>(severity - 1)];
}

ImageBatch apply_corruption(const ImageBatch& clean, const CorruptionSpec& spec) {
  clean.validate();
  const std::size_t k = static_cast<std::size_t>(spec.kind);
  require(k < kNames.size(), ErrorCode::UnknownKind, "unknown corruption kind");
  const double param = spec.parameter ? *spec.parameter : severity_parameter(spec.kind, spec.severity);
  ImageBatch out = clean;
  out.corruption = spec.label();
  const Index len = out.row_length();
  for (Index b = 0; b < out.size(); ++b) {
    std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(b)));
    switch (spec.kind) {
      case CorruptionKind::GaussianNoise: {
        std::normal_distribution<double> noise(0.0, 1.0);
        for (Index i = 0; i < len; ++i) out.pixels(b, i) = clip01(out.pixels(b, i) + param * noise(rng));
        break;
      }
      case CorruptionKind::ShotNoise: {
        for (Index i = 0; i < len; ++i) {
          std::poisson_distribution<long> photons(std::max(out.pixels(b, i) * param, 1e-12));
          out.pixels(b, i) = clip01(static_cast<double>(photons(rng)) / param);
        }
        break;
      }
      case CorruptionKind::ImpulseNoise: {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Index i = 0; i < len; ++i) {
          if (u(rng) < param) out.pixels(b, i) = u(rng) < 0.5 ? 0.0f : 1.0f;
        }
        break;
      }
      case CorruptionKind::DefocusBlur: convolve(out, b, disk_kernel(param)); break;
      case CorruptionKind::MotionBlur: convolve(out, b, motion_kernel(param)); break;
      case CorruptionKind::Contrast: {
        const double mean = out.pixels.row(b).cast<double>().mean();
        for (Index i = 0; i < len; ++i) out.pixels(b, i) = clip01((out.pixels(b, i) - mean) * param + mean);
        break;
      }
      case CorruptionKind::Brightness:
        for (Index i = 0; i < len; ++i) out.pixels(b, i) = clip01(out.pixels(b, i) + param);
        break;
      case CorruptionKind::Pixelate: pixelate(out, b, param); break;
      case CorruptionKind::JpegLike: jpeg_like(out, b, param); break;
    }
  }
  return out;
}

std::map<std::string, ImageBatch> corruption_suite(const ImageBatch& clean, const std::vector<CorruptionKind>& kinds,
                                                   int severity, std::uint64_t seed) {
  require(!kinds.empty(), ErrorCode::EmptyKinds, "no corruption kinds requested");
  std::map<std::string, ImageBatch> out;
  for (CorruptionKind kind : kinds) {
    CorruptionSpec spec{kind, severity, derive_seed(seed, 0xc0 + static_cast<std::uint64_t>(kind)), std::nullopt};
    out[to_string(kind)] = apply_corruption(clean, spec);
  }
  return out;
}

}  // namespace uninfo
