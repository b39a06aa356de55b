#pragma once

#include <string>
#include <vector>

#include "uninfo/common.hpp"
#include "uninfo/errors.hpp"

namespace uninfo {

/// B RGB images stored one per row, HWC order, values in [0,1].
struct ImageBatch {
  int height = 0;
  int width = 0;
  Matrix<float> pixels;
  std::string source;      // clean-source identifier
  std::string corruption;  // "clean" or "<kind>:<severity>:<seed>"

  static constexpr int kChannels = 3;

  Index size() const { return pixels.rows(); }
  Index row_length() const { return static_cast<Index>(height) * width * kChannels; }

  float& at(Index b, int y, int x, int c) { return pixels(b, (static_cast<Index>(y) * width + x) * kChannels + c); }
  float at(Index b, int y, int x, int c) const {
    return pixels(b, (static_cast<Index>(y) * width + x) * kChannels + c);
  }

  void validate() const {
    require(height > 0 && width > 0 && pixels.cols() == row_length(), ErrorCode::BadImageShape,
            "pixel rows do not match " + std::to_string(height) + "x" + std::to_string(width) + "x3");
  }

  /// Rows [begin, begin + count) as a new batch with the same provenance.
  ImageBatch slice(Index begin, Index count) const {
    ImageBatch out{height, width, pixels.middleRows(begin, count), source, corruption};
    return out;
  }
};

/// Clean images with their ground-truth class indices.
struct LabeledImages {
  ImageBatch images;
  std::vector<int> labels;
};

}  // namespace uninfo
