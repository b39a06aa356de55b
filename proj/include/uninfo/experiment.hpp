#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uninfo/corruption.hpp"
#include "uninfo/dataset.hpp"
#include "uninfo/pretrain.hpp"
#include "uninfo/tta.hpp"

namespace uninfo {

/// Clean images: an image archive or PNG folder, or the synthetic shapes set
/// when `path` is empty.
struct DatasetSource {
  std::string path;
  Index count = 5000;
  int image_size = 32;
  std::uint64_t seed = 0;
};

/// A prompt-embedding archive, or a toy orthonormal bank when `path` is empty.
struct PrototypeSource {
  std::string path;
  Index classes = 10;
  std::uint64_t seed = 0;
  double temperature = 0.01;
};

struct ExperimentConfig {
  DatasetSource dataset;
  PrototypeSource prototypes;
  std::string stem;  // checkpoint directory; empty uses a random stem
  EncoderConfig encoder;
  TTAConfig tta;
  std::string inference = "teacher";  // teacher | student | auto
  std::vector<CorruptionKind> kinds{CorruptionKind::GaussianNoise};
  int severity = 5;
  std::string preset = "full";
  std::string out = "runs";
  std::vector<std::uint64_t> seeds{1};
  int threads = 1;
  PretrainConfig pretrain;

  void validate() const;
  /// TTA settings for one seed with the preset and inference rule applied.
  TTAConfig tta_for(std::uint64_t seed) const;
};

/// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// Parallelism cap from UNINFO_THREADS, default 1.
int threads_from_env();

LabeledImages load_clean_dataset(const DatasetSource& src);
PrototypeBank<float> load_bank(const ExperimentConfig& cfg);
EncoderWeights<float> load_encoder(const ExperimentConfig& cfg);

/// 64-bit FNV-1a over raw bytes, chained through `h`.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t content_hash(const LabeledImages& data);

struct CorruptedStream {
  CorruptionSpec spec;
  std::uint64_t run_seed = 0;
  std::filesystem::path path;
  bool cache_hit = false;
};

/// Materializes one archive per (kind, seed) under <out>/corrupted and a
/// manifest of the specs. Existing archives with the same content hash are
/// reused.
std::vector<CorruptedStream> cmd_corrupt(const ExperimentConfig& cfg);

struct RunOutcome {
  std::string kind;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::optional<double> posthoc_accuracy;
  std::filesystem::path metrics_path;
  StreamResult stream;
};

struct KindSummary {
  std::string kind;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_seed;
};

struct RunReport {
  std::vector<RunOutcome> runs;  // kind-major, seeds in config order
  std::vector<KindSummary> summary;
  double mean_over_kinds = 0.0;
};

/// Sample standard deviation (zero for a single value).
double sample_std(const std::vector<double>& values);

std::string summary_csv(const RunReport& report);

/// Adapts every (kind, seed) stream and writes metrics, checkpoints, and a
/// summary table under `cfg.out`.
RunReport cmd_run(const ExperimentConfig& cfg);

/// Unadapted zero-shot evaluation of every (kind, seed) stream, with a
/// diagnostics report and projection CSV per stream.
RunReport cmd_eval(const ExperimentConfig& cfg);

enum class SweepParam { Lambda, I0 };
SweepParam parse_sweep_param(const std::string& name);

struct SweepRow {
  double value = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

/// One full run per distinct value; rows in first-seen order.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, SweepParam param, std::vector<double> values);
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Pre-trains a stem on the synthetic set and writes <out>/stem and
/// <out>/prototypes.
PretrainResult cmd_pretrain(const ExperimentConfig& cfg);

}  // namespace uninfo
