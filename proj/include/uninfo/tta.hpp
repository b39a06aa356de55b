#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uninfo/encoder.hpp"
#include "uninfo/objectives.hpp"
#include "uninfo/optimizer.hpp"

namespace uninfo {

/// Which parameters produce the predictions that are scored.
enum class InferenceSource { Teacher, Student };

struct TTAConfig {
  Index batch_size = 64;
  AdamWConfig optimizer;  // lr 1e-3, weight decay 0.01
  BalanceConfig balance;  // lambda 1, i0 3
  double momentum = 0.001;
  LoRAConfig lora;
  InferenceSource inference = InferenceSource::Teacher;
  bool posthoc_eval = false;  // second pass with the final teacher
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named ablations of the objective.
BalanceConfig apply_preset(const std::string& preset, BalanceConfig base);
const std::vector<std::string>& preset_names();

struct TTAState {
  LoRAParams<float> student;
  TeacherState<float> teacher;
  AdamWState<float> optimizer;
  long step = 0;
};

TTAState init_tta_state(const EncoderConfig& enc, const TTAConfig& cfg);

struct MetricsRecord {
  long step = 0;
  double loss_ent = 0.0;
  double loss_unif = 0.0;
  double loss_pl = 0.0;
  double mi = 0.0;
  double w = 1.0;
  std::optional<double> acc_teacher;
  std::optional<double> acc_student;
  double uniformity_metric = 0.0;
  double marginal_entropy = 0.0;
  Index batch = 0;
  double loss_total = 0.0;
};

struct StepResult {
  MetricsRecord metrics;
  PredictionBatch<float> teacher;  // pre-update teacher predictions
  PredictionBatch<float> student;  // pre-update student predictions
  const PredictionBatch<float>& scored(InferenceSource src) const { return src == InferenceSource::Teacher ? teacher : student; }
};

/// One adaptation step: student and teacher forward, balanced objective,
/// AdamW on the student adapters, EMA update of the teacher.
StepResult tta_step(TTAState& state, const EncoderWeights<float>& stem, const Matrix<float>& pixels,
                    std::optional<std::span<const int>> truth, const PrototypeBank<float>& bank, const TTAConfig& cfg);

struct StreamResult {
  std::vector<MetricsRecord> records;
  std::vector<int> predictions;  // scored predictions, in stream order
  double online_accuracy = 0.0;  // batch-size weighted, when labels exist
  std::optional<double> posthoc_accuracy;
  TTAState final_state;
  Index processed = 0;
};

/// Called with the state as it was before the failing step.
using FailureHook = std::function<void(const TTAState&, const std::vector<MetricsRecord>&)>;

/// Adapts over `stream` in order, batch by batch. A trailing batch of one
/// image is skipped with a warning.
StreamResult run_stream(const EncoderWeights<float>& stem, const LabeledImages& stream, const PrototypeBank<float>& bank,
                        const TTAConfig& cfg, const FailureHook& on_failure = {});

/// Zero-shot predictions of the unadapted stem over the stream.
StreamResult evaluate_stream(const EncoderWeights<float>& stem, const LabeledImages& stream,
                             const PrototypeBank<float>& bank, Index batch_size);

const std::vector<std::string>& metrics_csv_columns();
std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);

}  // namespace uninfo
