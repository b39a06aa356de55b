#pragma once

#include <filesystem>
#include <string>

#include "uninfo/encoder.hpp"
#include "uninfo/tensor_archive.hpp"

namespace uninfo {

template <typename Params>
void put_params(TensorArchive& archive, const Params& params) {
  params.for_each_tensor([&](const std::string& name, const auto& t) {
    archive.put(name, {static_cast<std::int64_t>(t.rows()), static_cast<std::int64_t>(t.cols())},
                std::vector<float>(t.data(), t.data() + t.size()));
  });
}

/// Fills every tensor of an already-shaped container from the archive.
template <typename Params>
void get_params(const TensorArchive& archive, Params& params) {
  params.for_each_tensor([&](const std::string& name, auto& t) {
    const auto& src = archive.get(name);
    require(static_cast<Index>(src.values.size()) == t.size(), ErrorCode::ShapeMismatch,
            "tensor '" + name + "' has the wrong size");
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<typename std::decay_t<decltype(t)>::Scalar>(src.values[i]);
  });
}

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

void save_stem(const std::filesystem::path& dir, const EncoderWeights<float>& stem);
EncoderWeights<float> load_stem(const std::filesystem::path& dir);

void save_lora(const std::filesystem::path& dir, const LoRAParams<float>& lora);
LoRAParams<float> load_lora(const std::filesystem::path& dir);

}  // namespace uninfo
