#pragma once

#include "uninfo/errors.hpp"

namespace uninfo {

/// Shape of the toy vision transformer.
struct EncoderConfig {
  int image_size = 32;
  int patch_size = 4;
  int channels = 3;
  int depth = 4;
  int width = 64;
  int heads = 4;
  int mlp_ratio = 4;
  int embed_dim = 64;

  int patches_per_side() const { return image_size / patch_size; }
  int num_patches() const { return patches_per_side() * patches_per_side(); }
  int num_tokens() const { return num_patches() + 1; }
  int patch_dim() const { return patch_size * patch_size * channels; }
  int head_dim() const { return width / heads; }
  int mlp_width() const { return width * mlp_ratio; }

  void validate() const {
    require(image_size > 0 && patch_size > 0 && image_size % patch_size == 0, ErrorCode::InvalidArgument,
            "image_size must be divisible by patch_size");
    require(heads > 0 && width % heads == 0, ErrorCode::InvalidArgument, "width must be divisible by heads");
    require(depth >= 1 && embed_dim >= 2 && mlp_ratio >= 1 && channels == 3, ErrorCode::InvalidArgument,
            "bad encoder dimensions");
  }

  bool operator==(const EncoderConfig&) const = default;
};

}  // namespace uninfo
