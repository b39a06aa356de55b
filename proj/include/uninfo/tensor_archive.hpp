#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uninfo/common.hpp"
#include "uninfo/errors.hpp"

namespace uninfo {

/// A directory holding `manifest.json` plus raw little-endian f32 blobs.
/// The manifest maps tensor name -> {dtype, shape, file, byte_offset}.
class TensorArchive {
 public:
  struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<float> values;
  };

  void put(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> values);

  template <typename Derived>
  void put_matrix(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
    Matrix<float> rm = m.template cast<float>();
    put(name, {rm.rows(), rm.cols()}, std::vector<float>(rm.data(), rm.data() + rm.size()));
  }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;

  /// Tensor reshaped to rows = shape[0], cols = product of the rest.
  Matrix<float> matrix(const std::string& name) const;

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  /// Free-form JSON documents stored next to the manifest (e.g. class names).
  void put_sidecar(const std::string& file_name, nlohmann::json doc) { sidecars_[file_name] = std::move(doc); }
  bool has_sidecar(const std::string& file_name) const { return sidecars_.count(file_name) != 0; }
  const nlohmann::json& sidecar(const std::string& file_name) const;

  /// Writes into a temporary sibling directory and renames it into place.
  void write(const std::filesystem::path& dir) const;
  static TensorArchive read(const std::filesystem::path& dir);

  static constexpr const char* kManifest = "manifest.json";
  static constexpr const char* kBlob = "tensors.bin";

 private:
  std::map<std::string, Tensor> tensors_;
  std::map<std::string, nlohmann::json> sidecars_;
};

/// Writes text to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace uninfo
