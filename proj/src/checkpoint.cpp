#include "uninfo/checkpoint.hpp"

namespace uninfo {

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg) {
  return {{"image_size", cfg.image_size}, {"patch_size", cfg.patch_size}, {"depth", cfg.depth},
          {"width", cfg.width},           {"heads", cfg.heads},           {"mlp_ratio", cfg.mlp_ratio},
          {"embed_dim", cfg.embed_dim}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig cfg;
  cfg.image_size = j.value("image_size", cfg.image_size);
  cfg.patch_size = j.value("patch_size", cfg.patch_size);
  cfg.depth = j.value("depth", cfg.depth);
  cfg.width = j.value("width", cfg.width);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.mlp_ratio = j.value("mlp_ratio", cfg.mlp_ratio);
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.validate();
  return cfg;
}

void save_stem(const std::filesystem::path& dir, const EncoderWeights<float>& stem) {
  TensorArchive archive;
  put_params(archive, stem);
  archive.put_sidecar("encoder.json", encoder_config_to_json(stem.config));
  archive.write(dir);
}

EncoderWeights<float> load_stem(const std::filesystem::path& dir) {
  const TensorArchive archive = TensorArchive::read(dir);
  require(archive.has_sidecar("encoder.json"), ErrorCode::IoError, dir.string() + " has no encoder.json");
  auto stem = EncoderWeights<float>::zeros(encoder_config_from_json(archive.sidecar("encoder.json")));
  get_params(archive, stem);
  return stem;
}

void save_lora(const std::filesystem::path& dir, const LoRAParams<float>& lora) {
  TensorArchive archive;
  put_params(archive, lora);
  nlohmann::json adapters = nlohmann::json::array();
  for (const auto& ad : lora.adapters) {
    adapters.push_back({{"layer", ad.layer},
                        {"target", to_string(ad.target)},
                        {"width", ad.a.rows()},
                        {"rank", ad.a.cols()}});
  }
  archive.put_sidecar("lora.json", {{"scale", lora.scale}, {"adapters", adapters}});
  archive.write(dir);
}

LoRAParams<float> load_lora(const std::filesystem::path& dir) {
  const TensorArchive archive = TensorArchive::read(dir);
  require(archive.has_sidecar("lora.json"), ErrorCode::IoError, dir.string() + " has no lora.json");
  const auto& meta = archive.sidecar("lora.json");
  LoRAParams<float> lora;
  lora.scale = meta.at("scale").get<double>();
  for (const auto& a : meta.at("adapters")) {
    const std::string t = a.at("target").get<std::string>();
    const Projection target = t == "q" ? Projection::Q : t == "k" ? Projection::K : Projection::V;
    const Index width = a.at("width").get<Index>();
    const Index rank = a.at("rank").get<Index>();
    lora.adapters.push_back({a.at("layer").get<int>(), target, Matrix<float>::Zero(width, rank),
                             Matrix<float>::Zero(rank, width)});
  }
  get_params(archive, lora);
  return lora;
}

}  // namespace uninfo
