#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "uninfo/image.hpp"

namespace uninfo {

inline constexpr int kShapeClasses = 10;

/// Names of the synthetic shape classes, index-aligned with the labels.
const std::vector<std::string>& shape_class_names();

/// Procedural 10-class shapes benchmark: one anti-aliased shape per image with
/// random position, size, rotation, and colors on a shaded background.
/// Image i depends only on (seed, i).
LabeledImages make_shapes_dataset(Index count, int image_size, std::uint64_t seed);

/// ImageFolder-style directory: one subdirectory per class holding PNGs.
/// Classes are the sorted subdirectory names.
LabeledImages load_png_dir(const std::filesystem::path& dir, std::vector<std::string>* class_names = nullptr);

/// Tensor archive with `images` [B, H, W, 3] and optional `labels` [B].
LabeledImages load_image_archive(const std::filesystem::path& dir);
void save_image_archive(const std::filesystem::path& dir, const LabeledImages& data,
                        const nlohmann::json& meta = nlohmann::json::object());

/// Rows [begin, begin + count).
LabeledImages slice(const LabeledImages& data, Index begin, Index count);

}  // namespace uninfo
