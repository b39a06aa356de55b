#include "uninfo/tta.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "uninfo/logging.hpp"

namespace uninfo {

void TTAConfig::validate() const {
  require(batch_size >= 2, ErrorCode::ConfigError, "batch_size must be at least 2");
  require(optimizer.lr >= 0.0, ErrorCode::ConfigError, "lr must be nonnegative");
  require(momentum > 0.0 && momentum < 1.0, ErrorCode::ConfigError, "momentum must be in (0, 1)");
  require(balance.lambda >= 0.0, ErrorCode::ConfigError, "lambda must be nonnegative");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"full", "ent_only", "ent_pl", "ent_unif_pl", "no_balancing"};
  return names;
}

BalanceConfig apply_preset(const std::string& preset, BalanceConfig base) {
  if (preset == "full") {
    base.balancing_enabled = base.unif_enabled = base.pl_enabled = true;
  } else if (preset == "ent_only") {
    base.balancing_enabled = base.unif_enabled = base.pl_enabled = false;
  } else if (preset == "ent_pl") {
    base.balancing_enabled = base.unif_enabled = false;
    base.pl_enabled = true;
  } else if (preset == "ent_unif_pl" || preset == "no_balancing") {
    base.balancing_enabled = false;
    base.unif_enabled = base.pl_enabled = true;
  } else {
    fail(ErrorCode::ConfigError, "unknown preset '" + preset + "'");
  }
  return base;
}

TTAState init_tta_state(const EncoderConfig& enc, const TTAConfig& cfg) {
  cfg.validate();
  TTAState st;
  st.student = init_lora<float>(cfg.lora, enc);
  st.teacher.ema = st.student;
  st.teacher.momentum = cfg.momentum;
  st.optimizer = AdamWState<float>::for_params(st.student);
  return st;
}

StepResult tta_step(TTAState& state, const EncoderWeights<float>& stem, const Matrix<float>& pixels,
                    std::optional<std::span<const int>> truth, const PrototypeBank<float>& bank, const TTAConfig& cfg) {
  require(pixels.rows() >= 2, ErrorCode::BatchTooSmall, "adaptation needs batches of at least two images");
  if (truth) {
    require(static_cast<Index>(truth->size()) == pixels.rows(), ErrorCode::ShapeMismatch, "labels and batch differ in size");
  }
  auto non_finite = [&](const char* what) {
    fail(ErrorCode::NumericFailure, std::string("non-finite ") + what + " at step " + std::to_string(state.step));
  };
  EncoderCache<float> cache;
  const Matrix<float> raw = encode_raw(stem, &state.student, pixels, &cache);
  if (!raw.allFinite()) non_finite("student embeddings");
  const Matrix<float> teacher_raw = encode_raw<float>(stem, &state.teacher.ema, pixels);
  if (!teacher_raw.allFinite()) non_finite("teacher embeddings");
  const EmbeddingBatch<float> z = normalize_rows(raw);
  StepResult out;
  out.student = zero_shot_probs(z, bank);
  out.teacher = zero_shot_probs(normalize_rows(teacher_raw), bank);

  const CompositeGradient<float> grad = composite_loss_gradient(z, out.student, out.teacher, bank, cfg.balance);
  const LossBreakdown& loss = grad.loss;
  if (!std::isfinite(loss.total) || !grad.dz.allFinite()) non_finite("loss");
  LoRAParams<float> lora_grad = state.student.zeros_like();
  encoder_backward<float>(stem, &state.student, cache, normalize_rows_backward(raw, grad.dz), &lora_grad, nullptr);
  adamw_step(state.student, lora_grad, state.optimizer, cfg.optimizer);
  state.teacher.momentum = cfg.momentum;
  ema_update(state.teacher, state.student);

  MetricsRecord& m = out.metrics;
  m.step = state.step;
  m.loss_ent = loss.ent;
  m.loss_unif = loss.unif;
  m.loss_pl = loss.pl;
  m.mi = loss.mi;
  m.w = loss.w;
  m.loss_total = loss.total;
  m.uniformity_metric = std::exp(loss.unif);
  m.marginal_entropy = marginal_entropy(out.student);
  m.batch = pixels.rows();
  if (truth) {
    m.acc_teacher = batch_accuracy(out.teacher, *truth);
    m.acc_student = batch_accuracy(out.student, *truth);
  }
  ++state.step;
  return out;
}

namespace {

template <typename Fn>
void for_each_batch(const LabeledImages& stream, Index batch_size, Fn&& fn) {
  const Index n = stream.images.size();
  for (Index begin = 0; begin < n; begin += batch_size) {
    const Index count = std::min(batch_size, n - begin);
    if (count < 2) {
      log_warning("skipping trailing batch of " + std::to_string(count) + " image(s) at offset " + std::to_string(begin));
      continue;
    }
    fn(begin, count);
  }
}

}  // namespace

StreamResult run_stream(const EncoderWeights<float>& stem, const LabeledImages& stream, const PrototypeBank<float>& bank,
                        const TTAConfig& cfg, const FailureHook& on_failure) {
  cfg.validate();
  stream.images.validate();
  require(stream.images.size() >= 2, ErrorCode::EmptyStream, "stream holds no batch of two or more images");
  const bool labelled = !stream.labels.empty();
  StreamResult result;
  result.final_state = init_tta_state(stem.config, cfg);
  double hits = 0.0;
  for_each_batch(stream, cfg.batch_size, [&](Index begin, Index count) {
    std::optional<std::span<const int>> truth;
    if (labelled) truth = std::span<const int>(stream.labels.data() + begin, static_cast<std::size_t>(count));
    const Matrix<float> pixels = stream.images.pixels.middleRows(begin, count);
    StepResult step;
    try {
      step = tta_step(result.final_state, stem, pixels, truth, bank, cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NumericFailure && on_failure) on_failure(result.final_state, result.records);
      throw;
    }
    const auto& scored = step.scored(cfg.inference);
    result.predictions.insert(result.predictions.end(), scored.labels().begin(), scored.labels().end());
    if (labelled) hits += batch_accuracy(scored, *truth) * static_cast<double>(count);
    result.processed += count;
    result.records.push_back(step.metrics);
  });
  if (labelled && result.processed > 0) result.online_accuracy = hits / static_cast<double>(result.processed);
  if (cfg.posthoc_eval && labelled) {
    const LoRAParams<float>& params =
        cfg.inference == InferenceSource::Teacher ? result.final_state.teacher.ema : result.final_state.student;
    std::size_t correct = 0, total = 0;
    for_each_batch(stream, cfg.batch_size, [&](Index begin, Index count) {
      const auto pred = zero_shot_probs(encoder_forward<float>(stem, &params, stream.images.pixels.middleRows(begin, count).eval()), bank);
      for (Index i = 0; i < count; ++i) {
        correct += pred.labels()[static_cast<std::size_t>(i)] == stream.labels[static_cast<std::size_t>(begin + i)];
        ++total;
      }
    });
    result.posthoc_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
  return result;
}

StreamResult evaluate_stream(const EncoderWeights<float>& stem, const LabeledImages& stream,
                             const PrototypeBank<float>& bank, Index batch_size) {
  stream.images.validate();
  require(stream.images.size() >= 1, ErrorCode::EmptyStream, "empty stream");
  const bool labelled = !stream.labels.empty();
  StreamResult result;
  double hits = 0.0;
  long step = 0;
  for (Index begin = 0; begin < stream.images.size(); begin += batch_size) {
    const Index count = std::min(batch_size, stream.images.size() - begin);
    const auto z = encoder_forward<float>(stem, nullptr, stream.images.pixels.middleRows(begin, count).eval());
    const auto pred = zero_shot_probs(z, bank);
    MetricsRecord m;
    m.step = step++;
    m.batch = count;
    m.loss_ent = entropy_loss(pred);
    m.mi = mutual_information(pred);
    m.marginal_entropy = marginal_entropy(pred);
    if (count >= 2) {
      m.loss_unif = uniformity_loss(z);
      m.uniformity_metric = uniformity_metric(z);
    }
    if (labelled) {
      const std::span<const int> truth(stream.labels.data() + begin, static_cast<std::size_t>(count));
      const double acc = batch_accuracy(pred, truth);
      m.acc_teacher = m.acc_student = acc;
      hits += acc * static_cast<double>(count);
    }
    result.predictions.insert(result.predictions.end(), pred.labels().begin(), pred.labels().end());
    result.records.push_back(m);
    result.processed += count;
  }
  if (labelled) result.online_accuracy = hits / static_cast<double>(result.processed);
  return result;
}

const std::vector<std::string>& metrics_csv_columns() {
  static const std::vector<std::string> cols = {"step", "loss_ent", "loss_unif", "loss_pl", "mi",
                                                "w", "acc_teacher", "acc_student", "uniformity_metric",
                                                "marginal_entropy"};
  return cols;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream out;
  const auto& cols = metrics_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    out << r.step << ',' << fmt(r.loss_ent) << ',' << fmt(r.loss_unif) << ',' << fmt(r.loss_pl) << ',' << fmt(r.mi)
        << ',' << fmt(r.w) << ',' << fmt(r.acc_teacher) << ',' << fmt(r.acc_student) << ','
        << fmt(r.uniformity_metric) << ',' << fmt(r.marginal_entropy) << '\n';
  }
  return out.str();
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError, "line 1: empty metrics file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  require(header == metrics_csv_columns(), ErrorCode::ParseError, "line 1: unexpected metrics header");
  std::vector<MetricsRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    require(cells.size() == header.size(), ErrorCode::ParseError,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
    auto num = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[i], &used);
        require(used == cells[i].size(), ErrorCode::ParseError, "trailing characters");
        return v;
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" + cells[i] + "'");
      }
    };
    auto opt = [&](std::size_t i) -> std::optional<double> {
      if (cells[i].empty()) return std::nullopt;
      return num(i);
    };
    MetricsRecord r;
    r.step = static_cast<long>(num(0));
    r.loss_ent = num(1);
    r.loss_unif = num(2);
    r.loss_pl = num(3);
    r.mi = num(4);
    r.w = num(5);
    r.acc_teacher = opt(6);
    r.acc_student = opt(7);
    r.uniformity_metric = num(8);
    r.marginal_entropy = num(9);
    out.push_back(r);
  }
  return out;
}

}  // namespace uninfo
