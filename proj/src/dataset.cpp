#include "uninfo/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "uninfo/tensor_archive.hpp"

namespace uninfo {

namespace fs = std::filesystem;

namespace {

struct Vec2 {
  double x, y;
};

double box_sdf(Vec2 p, double hx, double hy) {
  const double dx = std::abs(p.x) - hx;
  const double dy = std::abs(p.y) - hy;
  const double ox = std::max(dx, 0.0), oy = std::max(dy, 0.0);
  return std::hypot(ox, oy) + std::min(std::max(dx, dy), 0.0);
}

Vec2 rotate(Vec2 p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x + s * p.y, -s * p.x + c * p.y};
}

double triangle_sdf(Vec2 p, double r) {
  // Equilateral triangle pointing up, circumradius-ish size r.
  const double k = std::sqrt(3.0);
  p.x = std::abs(p.x) - r;
  p.y = -p.y + r / k;
  if (p.x + k * p.y > 0.0) p = {(p.x - k * p.y) / 2.0, (-k * p.x - p.y) / 2.0};
  p.x -= std::clamp(p.x, -2.0 * r, 0.0);
  return -std::hypot(p.x, p.y) * (p.y < 0.0 ? -1.0 : 1.0);
}

double shape_sdf(int label, Vec2 p, double s) {
  switch (label) {
    case 0: return std::hypot(p.x, p.y) - s;
    case 1: return box_sdf(p, 0.85 * s, 0.85 * s);
    case 2: return triangle_sdf({p.x, p.y - 0.15 * s}, 1.1 * s);
    case 3: return std::min(box_sdf(p, s, 0.3 * s), box_sdf(p, 0.3 * s, s));
    case 4: return std::abs(std::hypot(p.x, p.y) - 0.72 * s) - 0.26 * s;
    case 5: {
      const Vec2 q = rotate(p, std::numbers::pi / 4.0);
      return std::min(box_sdf(q, 1.1 * s, 0.28 * s), box_sdf(q, 0.28 * s, 1.1 * s));
    }
    case 6: return box_sdf(p, 1.05 * s, 0.35 * s);
    case 7: return box_sdf(p, 0.35 * s, 1.05 * s);
    case 8: return (std::abs(p.x) + std::abs(p.y) - 1.15 * s) / std::numbers::sqrt2;
    case 9: return std::abs(box_sdf(p, 0.72 * s, 0.72 * s)) - 0.22 * s;
    default: return 1e9;
  }
}

double luminance(const std::array<double, 3>& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

}  // namespace

const std::vector<std::string>& shape_class_names() {
  static const std::vector<std::string> names = {"disk",  "square", "triangle", "plus",    "ring",
                                                 "cross", "hbar",   "vbar",     "diamond", "frame"};
  return names;
}

LabeledImages make_shapes_dataset(Index count, int image_size, std::uint64_t seed) {
  require(count >= 0 && image_size >= 8, ErrorCode::InvalidArgument, "bad synthetic dataset size");
  LabeledImages out;
  out.images.height = image_size;
  out.images.width = image_size;
  out.images.pixels.resize(count, static_cast<Index>(image_size) * image_size * 3);
  out.images.source = "shapes:" + std::to_string(seed);
  out.images.corruption = "clean";
  out.labels.resize(static_cast<std::size_t>(count));
  const double scale = image_size / 32.0;
  for (Index i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int label = static_cast<int>(rng() % kShapeClasses);
    out.labels[static_cast<std::size_t>(i)] = label;

    const double size = (6.0 + 4.0 * u(rng)) * scale;
    const double cx = image_size / 2.0 + (u(rng) - 0.5) * 8.0 * scale;
    const double cy = image_size / 2.0 + (u(rng) - 0.5) * 8.0 * scale;
    const double angle = (u(rng) - 0.5) * std::numbers::pi / 6.0;
    std::array<double, 3> bg{}, fg{};
    do {
      for (auto& v : bg) v = 0.1 + 0.8 * u(rng);
      for (auto& v : fg) v = 0.05 + 0.9 * u(rng);
    } while (std::abs(luminance(bg) - luminance(fg)) < 0.25);
    const double grad_angle = 2.0 * std::numbers::pi * u(rng);
    const double grad_amp = 0.12 * u(rng);

    for (int y = 0; y < image_size; ++y) {
      for (int x = 0; x < image_size; ++x) {
        const Vec2 p = rotate({x + 0.5 - cx, y + 0.5 - cy}, angle);
        const double alpha = std::clamp(0.5 - shape_sdf(label, p, size), 0.0, 1.0);
        const double shade = grad_amp * ((x / (image_size - 1.0) - 0.5) * std::cos(grad_angle) +
                                         (y / (image_size - 1.0) - 0.5) * std::sin(grad_angle));
        for (int c = 0; c < 3; ++c) {
          const double v = (bg[static_cast<std::size_t>(c)] + shade) * (1.0 - alpha) + fg[static_cast<std::size_t>(c)] * alpha;
          out.images.at(i, y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

namespace {

bool read_png_rgb(const fs::path& path, int& h, int& w, std::vector<float>& rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) return false;
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    return false;
  }
  h = static_cast<int>(image.height);
  w = static_cast<int>(image.width);
  rgb.resize(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) rgb[i] = buffer[i] / 255.0f;
  return true;
}

}  // namespace

LabeledImages load_png_dir(const fs::path& dir, std::vector<std::string>* class_names) {
  require(fs::is_directory(dir), ErrorCode::IoError, "dataset directory not found: " + dir.string());
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  require(!classes.empty(), ErrorCode::IoError, "no class subdirectories in " + dir.string());
  std::vector<std::vector<float>> rows;
  LabeledImages out;
  int height = 0, width = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (class_names != nullptr) class_names->push_back(classes[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c])) {
      if (e.path().extension() == ".png" || e.path().extension() == ".PNG") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      int h = 0, w = 0;
      std::vector<float> rgb;
      require(read_png_rgb(f, h, w, rgb), ErrorCode::IoError, "cannot decode PNG " + f.string());
      if (rows.empty()) {
        height = h;
        width = w;
      }
      require(h == height && w == width, ErrorCode::BadImageShape, f.string() + " differs in size from the first image");
      rows.push_back(std::move(rgb));
      out.labels.push_back(static_cast<int>(c));
    }
  }
  require(!rows.empty(), ErrorCode::IoError, "no PNG files under " + dir.string());
  out.images.height = height;
  out.images.width = width;
  out.images.source = dir.string();
  out.images.corruption = "clean";
  out.images.pixels.resize(static_cast<Index>(rows.size()), static_cast<Index>(height) * width * 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.images.pixels.row(static_cast<Index>(i)) = Eigen::Map<const RowVector<float>>(rows[i].data(), out.images.pixels.cols());
  }
  return out;
}

LabeledImages load_image_archive(const fs::path& dir) {
  const TensorArchive archive = TensorArchive::read(dir);
  const auto& t = archive.get("images");
  require(t.shape.size() == 4 && t.shape[3] == 3, ErrorCode::BadImageShape, "images must have shape [B, H, W, 3]");
  LabeledImages out;
  out.images.height = static_cast<int>(t.shape[1]);
  out.images.width = static_cast<int>(t.shape[2]);
  out.images.pixels = archive.matrix("images");
  out.images.source = dir.string();
  out.images.corruption = "clean";
  if (archive.has_sidecar("meta.json")) {
    const auto& meta = archive.sidecar("meta.json");
    out.images.source = meta.value("source", out.images.source);
    out.images.corruption = meta.value("corruption", out.images.corruption);
  }
  if (archive.contains("labels")) {
    for (float v : archive.get("labels").values) out.labels.push_back(static_cast<int>(std::lround(v)));
    require(static_cast<Index>(out.labels.size()) == out.images.size(), ErrorCode::LengthMismatch,
            "labels and images differ in count");
  }
  return out;
}

void save_image_archive(const fs::path& dir, const LabeledImages& data, const nlohmann::json& meta) {
  TensorArchive archive;
  const auto& px = data.images.pixels;
  archive.put("images", {px.rows(), data.images.height, data.images.width, 3},
              std::vector<float>(px.data(), px.data() + px.size()));
  if (!data.labels.empty()) {
    const auto n = static_cast<std::int64_t>(data.labels.size());
    archive.put("labels", {n}, std::vector<float>(data.labels.begin(), data.labels.end()));
  }
  nlohmann::json m = meta;
  m["source"] = data.images.source;
  m["corruption"] = data.images.corruption;
  archive.put_sidecar("meta.json", m);
  archive.write(dir);
}

LabeledImages slice(const LabeledImages& data, Index begin, Index count) {
  LabeledImages out;
  out.images = data.images.slice(begin, count);
  if (!data.labels.empty()) {
    out.labels.assign(data.labels.begin() + begin, data.labels.begin() + begin + count);
  }
  return out;
}

}  // namespace uninfo
