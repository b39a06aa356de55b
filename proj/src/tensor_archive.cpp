#include "uninfo/tensor_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace uninfo {

static_assert(std::endian::native == std::endian::little, "tensor archives assume a little-endian host");

namespace fs = std::filesystem;

namespace {

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

fs::path temp_sibling(const fs::path& target) {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  return target.parent_path() / (target.filename().string() + ".tmp" + std::to_string(rng() % 1000000007ULL));
}

}  // namespace

void TensorArchive::put(const std::string& name, std::vector<std::int64_t> shape, std::vector<float> values) {
  require(element_count(shape) == static_cast<std::int64_t>(values.size()), ErrorCode::ShapeMismatch,
          "tensor '" + name + "' shape does not match its value count");
  tensors_[name] = Tensor{std::move(shape), std::move(values)};
}

const TensorArchive::Tensor& TensorArchive::get(const std::string& name) const {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), ErrorCode::IoError, "archive has no tensor '" + name + "'");
  return it->second;
}

Matrix<float> TensorArchive::matrix(const std::string& name) const {
  const Tensor& t = get(name);
  const Index rows = t.shape.empty() ? 1 : t.shape.front();
  const Index cols = rows == 0 ? 0 : static_cast<Index>(t.values.size()) / rows;
  return Eigen::Map<const Matrix<float>>(t.values.data(), rows, cols);
}

const nlohmann::json& TensorArchive::sidecar(const std::string& file_name) const {
  auto it = sidecars_.find(file_name);
  require(it != sidecars_.end(), ErrorCode::IoError, "archive has no sidecar '" + file_name + "'");
  return it->second;
}

void TensorArchive::write(const fs::path& dir) const {
  if (!dir.parent_path().empty()) fs::create_directories(dir.parent_path());
  const fs::path tmp = temp_sibling(dir);
  fs::create_directories(tmp);
  nlohmann::json manifest = nlohmann::json::object();
  {
    std::ofstream blob(tmp / kBlob, std::ios::binary);
    require(static_cast<bool>(blob), ErrorCode::IoError, "cannot write " + (tmp / kBlob).string());
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors_) {
      manifest[name] = {{"dtype", "f32"}, {"shape", t.shape}, {"file", kBlob}, {"byte_offset", offset}};
      const auto bytes = static_cast<std::streamsize>(t.values.size() * sizeof(float));
      blob.write(reinterpret_cast<const char*>(t.values.data()), bytes);
      offset += static_cast<std::uint64_t>(bytes);
    }
    require(static_cast<bool>(blob), ErrorCode::IoError, "short write to " + (tmp / kBlob).string());
  }
  {
    std::ofstream out(tmp / kManifest);
    out << manifest.dump(2) << '\n';
  }
  for (const auto& [file, doc] : sidecars_) {
    std::ofstream out(tmp / file);
    out << doc.dump(2) << '\n';
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::rename(tmp, dir);
}

TensorArchive TensorArchive::read(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifest;
  require(fs::exists(manifest_path), ErrorCode::IoError, "missing tensor archive manifest: " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, manifest_path.string() + ": " + e.what());
  }
  TensorArchive archive;
  std::map<std::string, std::string> blobs;
  for (const auto& [name, entry] : manifest.items()) {
    require(entry.value("dtype", "") == "f32", ErrorCode::ParseError, "tensor '" + name + "' is not f32");
    Tensor t;
    t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const std::string file = entry.at("file").get<std::string>();
    const auto offset = entry.at("byte_offset").get<std::uint64_t>();
    if (!blobs.count(file)) blobs[file] = read_file(dir / file);
    const std::string& blob = blobs[file];
    const auto count = static_cast<std::size_t>(element_count(t.shape));
    require(offset + count * sizeof(float) <= blob.size(), ErrorCode::ParseError,
            "tensor '" + name + "' extends past the end of " + file);
    t.values.resize(count);
    std::memcpy(t.values.data(), blob.data() + offset, count * sizeof(float));
    archive.tensors_[name] = std::move(t);
  }
  for (const auto& item : fs::directory_iterator(dir)) {
    const auto name = item.path().filename().string();
    if (item.path().extension() == ".json" && name != kManifest) {
      try {
        archive.sidecars_[name] = nlohmann::json::parse(read_file(item.path()));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, item.path().string() + ": " + e.what());
      }
    }
  }
  return archive;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + tmp.string());
    out << contents;
    require(static_cast<bool>(out), ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace uninfo
