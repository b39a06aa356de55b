#include <gtest/gtest.h>

#include <cstring>

#include "test_util.hpp"
#include "uninfo/logging.hpp"
#include "uninfo/prompt_bank.hpp"
#include "uninfo/tta.hpp"

using namespace uninfo;
using namespace uninfo::testing;

namespace {

EncoderConfig tiny() { return EncoderConfig{16, 4, 3, 1, 16, 2, 2, 8}; }

LabeledImages random_stream(Index n, std::uint64_t seed, int classes = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  LabeledImages out;
  out.images.height = out.images.width = 16;
  out.images.pixels.resize(n, 16 * 16 * 3);
  for (Index i = 0; i < out.images.pixels.size(); ++i) out.images.pixels.data()[i] = u(rng);
  for (Index i = 0; i < n; ++i) out.labels.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(classes)));
  return out;
}

struct Fixture {
  EncoderWeights<float> stem = init_stem<float>(tiny(), 5);
  PrototypeBank<float> bank = make_toy_bank<float>(3, 8, 6, 0.05f);
  TTAConfig cfg = [] {
    TTAConfig c;
    c.batch_size = 8;
    c.lora.seed = 7;
    c.momentum = 0.1;
    c.balance.i0 = 0.5;
    return c;
  }();
};

double eval_accuracy(const Fixture& f, const LabeledImages& s, const LoRAParams<float>* lora) {
  const auto pred = zero_shot_probs(encoder_forward<float>(f.stem, lora, s.images.pixels), f.bank);
  return batch_accuracy(pred, s.labels);
}

/// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  LogSink old;
  WarningCapture() {
    old = set_log_sink([this](LogLevel level, const std::string& m) {
      if (level == LogLevel::Warning) messages.push_back(m);
    });
  }
  ~WarningCapture() { set_log_sink(old); }
};

}  // namespace

TEST(AdamW, ZeroGradientZeroDecayIsNoop) {
  std::vector<double> theta{0.5, -1.0}, g{0, 0}, m{0, 0}, v{0, 0};
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_update<double>(theta, g, m, v, 1, cfg);
  EXPECT_EQ(theta, (std::vector<double>{0.5, -1.0}));
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  std::vector<double> theta{2.0}, g{1.0}, m{0}, v{0};
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_update<double>(theta, g, m, v, 1, cfg);
  // m_hat / sqrt(v_hat) = 1 at step 1, up to eps.
  EXPECT_NEAR(theta[0], 2.0 - cfg.lr, 1e-10);
}

TEST(AdamW, PureDecayShrinksGeometrically) {
  std::vector<double> theta{3.0}, g{0.0}, m{0}, v{0};
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.5;
  for (long s = 1; s <= 3; ++s) adamw_update<double>(theta, g, m, v, s, cfg);
  EXPECT_NEAR(theta[0], 3.0 * std::pow(1 - 0.05, 3), 1e-12);
}

TEST(AdamW, ShapeMismatchAndStateCounter) {
  std::vector<double> theta{1, 2}, g{1}, m{0, 0}, v{0, 0};
  EXPECT_EQ(error_code_of([&] { adamw_update<double>(theta, g, m, v, 1, AdamWConfig{}); }), ErrorCode::ShapeMismatch);
  LoRAConfig lc;
  auto params = init_lora<float>(lc, tiny());
  auto st = AdamWState<float>::for_params(params);
  adamw_step(params, params.zeros_like(), st, AdamWConfig{});
  adamw_step(params, params.zeros_like(), st, AdamWConfig{});
  EXPECT_EQ(st.step, 2);
  EXPECT_EQ(st.first.size(), params.adapters.size() * 2);
}

TEST(TTAConfig, Validation) {
  TTAConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 1;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::ConfigError);
  c = TTAConfig{};
  c.momentum = 1.0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::ConfigError);
  c = TTAConfig{};
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_EQ(c.optimizer.lr, 1e-3);
  EXPECT_EQ(c.optimizer.weight_decay, 0.01);
  EXPECT_EQ(c.momentum, 0.001);
  EXPECT_EQ(c.balance.lambda, 1.0);
  EXPECT_EQ(c.balance.i0, 3.0);
}

TEST(Presets, Switches) {
  const BalanceConfig base;
  const auto full = apply_preset("full", base);
  const auto nb = apply_preset("no_balancing", base);
  EXPECT_TRUE(full.balancing_enabled && full.unif_enabled && full.pl_enabled);
  EXPECT_FALSE(nb.balancing_enabled);
  EXPECT_EQ(full.unif_enabled, nb.unif_enabled);
  EXPECT_EQ(full.pl_enabled, nb.pl_enabled);
  EXPECT_EQ(full.lambda, nb.lambda);
  EXPECT_EQ(full.i0, nb.i0);
  const auto ent = apply_preset("ent_only", base);
  EXPECT_FALSE(ent.balancing_enabled || ent.unif_enabled || ent.pl_enabled);
  const auto ent_pl = apply_preset("ent_pl", base);
  EXPECT_TRUE(ent_pl.pl_enabled && !ent_pl.unif_enabled && !ent_pl.balancing_enabled);
  EXPECT_EQ(error_code_of([&] { apply_preset("bogus", base); }), ErrorCode::ConfigError);
}

TEST(TTAStep, FirstStepMatchesNoAdapt) {
  Fixture f;
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto s = random_stream(8, 11);
  const auto r = tta_step(st, f.stem, s.images.pixels, std::span<const int>(s.labels), f.bank, f.cfg);
  const double base = eval_accuracy(f, s, nullptr);
  EXPECT_EQ(*r.metrics.acc_teacher, base);
  EXPECT_EQ(*r.metrics.acc_student, base);
  EXPECT_EQ(st.step, 1);
}

TEST(TTAStep, ZeroLearningRateIsPureEvaluation) {
  Fixture f;
  f.cfg.optimizer.lr = 0.0;
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto student0 = st.student;
  const auto s = random_stream(8, 12);
  const auto r = tta_step(st, f.stem, s.images.pixels, std::nullopt, f.bank, f.cfg);
  for (std::size_t i = 0; i < student0.adapters.size(); ++i) {
    EXPECT_EQ(st.student.adapters[i].a, student0.adapters[i].a);
    EXPECT_EQ(st.student.adapters[i].b, student0.adapters[i].b);
    EXPECT_EQ(st.teacher.ema.adapters[i].a, student0.adapters[i].a);
  }
  EXPECT_EQ(st.step, 1);
  EXPECT_EQ(st.optimizer.step, 1);
  const auto z = encoder_forward<float>(f.stem, nullptr, s.images.pixels);
  const auto p = zero_shot_probs(z, f.bank);
  const auto l = composite_loss(z, p, p, f.cfg.balance);
  EXPECT_EQ(r.metrics.loss_ent, l.ent);
  EXPECT_EQ(r.metrics.loss_unif, l.unif);
  EXPECT_EQ(r.metrics.loss_total, l.total);
  EXPECT_FALSE(r.metrics.acc_teacher.has_value());
}

TEST(TTAStep, SmallStepDescends) {
  Fixture f;
  f.cfg.optimizer.lr = 1e-4;
  f.cfg.optimizer.weight_decay = 0.0;
  auto st = init_tta_state(f.stem.config, f.cfg);
  // Move away from the zero-B start so every factor has a gradient.
  std::mt19937_64 rng(13);
  std::normal_distribution<float> n(0.0f, 0.2f);
  for (auto& ad : st.student.adapters)
    for (Index i = 0; i < ad.b.size(); ++i) ad.b.data()[i] = n(rng);
  st.teacher.ema = st.student;
  const auto s = random_stream(16, 14);
  const auto teacher = zero_shot_probs(encoder_forward<float>(f.stem, &st.teacher.ema, s.images.pixels), f.bank);
  auto total = [&](const LoRAParams<float>& lora) {
    const auto z = encoder_forward<float>(f.stem, &lora, s.images.pixels);
    return composite_loss(z, zero_shot_probs(z, f.bank), teacher, f.cfg.balance).total;
  };
  const double before = total(st.student);
  tta_step(st, f.stem, s.images.pixels, std::nullopt, f.bank, f.cfg);
  EXPECT_LT(total(st.student), before);
}

TEST(TTAStep, Errors) {
  Fixture f;
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto one = random_stream(1, 15);
  EXPECT_EQ(error_code_of([&] { tta_step(st, f.stem, one.images.pixels, std::nullopt, f.bank, f.cfg); }),
            ErrorCode::BatchTooSmall);
  const auto s = random_stream(4, 16);
  const std::vector<int> short_labels{0, 1};
  EXPECT_EQ(error_code_of([&] {
              tta_step(st, f.stem, s.images.pixels, std::span<const int>(short_labels), f.bank, f.cfg);
            }),
            ErrorCode::ShapeMismatch);
  EXPECT_EQ(st.step, 0);
}

TEST(TTAStep, NonFiniteInputsRaiseNumericFailure) {
  Fixture f;
  f.stem.proj(0, 0) = std::numeric_limits<float>::quiet_NaN();
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto s = random_stream(4, 17);
  EXPECT_EQ(error_code_of([&] { tta_step(st, f.stem, s.images.pixels, std::nullopt, f.bank, f.cfg); }),
            ErrorCode::NumericFailure);
  bool dumped = false;
  EXPECT_EQ(error_code_of([&] {
              run_stream(f.stem, s, f.bank, f.cfg, [&](const TTAState& state, const std::vector<MetricsRecord>& rows) {
                dumped = state.step == 0 && rows.empty();
              });
            }),
            ErrorCode::NumericFailure);
  EXPECT_TRUE(dumped);
}

TEST(TTAStep, OnlyAdaptersChange) {
  Fixture f;
  f.cfg.optimizer.lr = 1e-2;
  const auto stem_copy = f.stem;
  const auto bank_copy = f.bank.prototypes();
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto s = random_stream(8, 18);
  for (int k = 0; k < 3; ++k) tta_step(st, f.stem, s.images.pixels, std::nullopt, f.bank, f.cfg);
  std::vector<const float*> a, b;
  std::vector<Index> sizes;
  stem_copy.for_each_tensor([&](const std::string&, const auto& t) {
    a.push_back(t.data());
    sizes.push_back(t.size());
  });
  f.stem.for_each_tensor([&](const std::string&, const auto& t) { b.push_back(t.data()); });
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(std::memcmp(a[i], b[i], sizeof(float) * sizes[i]), 0);
  EXPECT_EQ(std::memcmp(bank_copy.data(), f.bank.prototypes().data(), sizeof(float) * bank_copy.size()), 0);
  double moved = 0;
  for (const auto& ad : st.student.adapters) moved += ad.b.cwiseAbs().sum();
  EXPECT_GT(moved, 0.0);
}

TEST(TTAStep, TeacherPredictionsArePreUpdate) {
  Fixture f;
  f.cfg.optimizer.lr = 5e-2;
  f.cfg.momentum = 0.5;
  auto st = init_tta_state(f.stem.config, f.cfg);
  const auto s = random_stream(24, 19);
  for (Index k = 0; k < 3; ++k) {
    const auto teacher_before = st.teacher.ema;
    const Matrix<float> px = s.images.pixels.middleRows(k * 8, 8);
    const auto r = tta_step(st, f.stem, px, std::nullopt, f.bank, f.cfg);
    const auto replay = zero_shot_probs(encoder_forward<float>(f.stem, &teacher_before, px), f.bank);
    EXPECT_EQ(r.teacher.probs(), replay.probs());
  }
}

TEST(RunStream, BatchingAndWarnings) {
  Fixture f;
  f.cfg.optimizer.lr = 0.0;
  {
    WarningCapture w;
    const auto r = run_stream(f.stem, random_stream(17, 20), f.bank, f.cfg);
    EXPECT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.processed, 16);
    EXPECT_EQ(w.messages.size(), 1u);
  }
  const auto r = run_stream(f.stem, random_stream(18, 20), f.bank, f.cfg);
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records.back().batch, 2);
  EXPECT_EQ(r.predictions.size(), 18u);
  EXPECT_EQ(error_code_of([&] { run_stream(f.stem, random_stream(1, 21), f.bank, f.cfg); }), ErrorCode::EmptyStream);
  EXPECT_EQ(error_code_of([&] { run_stream(f.stem, random_stream(0, 21), f.bank, f.cfg); }), ErrorCode::EmptyStream);
}

TEST(RunStream, ZeroLearningRateMatchesEvaluation) {
  Fixture f;
  f.cfg.optimizer.lr = 0.0;
  const auto s = random_stream(40, 22);
  const auto adapted = run_stream(f.stem, s, f.bank, f.cfg);
  const auto plain = evaluate_stream(f.stem, s, f.bank, f.cfg.batch_size);
  EXPECT_EQ(adapted.online_accuracy, plain.online_accuracy);
  EXPECT_EQ(adapted.predictions, plain.predictions);
  EXPECT_EQ(adapted.online_accuracy, eval_accuracy(f, s, nullptr));
}

TEST(RunStream, OnlineAccuracyIsBatchWeighted) {
  Fixture f;
  f.cfg.optimizer.lr = 1e-2;
  const auto s = random_stream(21, 23);  // batches of 8, 8, 5
  const auto r = run_stream(f.stem, s, f.bank, f.cfg);
  double hits = 0;
  for (const auto& rec : r.records) hits += *rec.acc_teacher * static_cast<double>(rec.batch);
  EXPECT_NEAR(r.online_accuracy, hits / 21.0, 1e-12);
}

TEST(RunStream, DeterministicMetricsAndPosthoc) {
  Fixture f;
  f.cfg.optimizer.lr = 1e-2;
  f.cfg.posthoc_eval = true;
  const auto s = random_stream(32, 24);
  const auto a = run_stream(f.stem, s, f.bank, f.cfg);
  const auto b = run_stream(f.stem, s, f.bank, f.cfg);
  EXPECT_EQ(metrics_csv(a.records), metrics_csv(b.records));
  ASSERT_TRUE(a.posthoc_accuracy.has_value());
  EXPECT_EQ(*a.posthoc_accuracy, eval_accuracy(f, s, &a.final_state.teacher.ema));
}

TEST(RunStream, StudentInferenceScoresStudent) {
  Fixture f;
  f.cfg.optimizer.lr = 5e-2;
  f.cfg.inference = InferenceSource::Student;
  const auto s = random_stream(32, 25);
  const auto r = run_stream(f.stem, s, f.bank, f.cfg);
  double hits = 0;
  for (const auto& rec : r.records) hits += *rec.acc_student * static_cast<double>(rec.batch);
  EXPECT_NEAR(r.online_accuracy, hits / 32.0, 1e-12);
}

TEST(MetricsCsv, HeaderAndRoundTrip) {
  Fixture f;
  LabeledImages unlabeled = random_stream(16, 26);
  unlabeled.labels.clear();
  const auto r = run_stream(f.stem, unlabeled, f.bank, f.cfg);
  const std::string csv = metrics_csv(r.records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,loss_ent,loss_unif,loss_pl,mi,w,acc_teacher,acc_student,uniformity_metric,marginal_entropy");
  const auto parsed = parse_metrics_csv(csv);
  ASSERT_EQ(parsed.size(), r.records.size());
  EXPECT_FALSE(parsed[0].acc_teacher.has_value());
  EXPECT_NEAR(parsed[1].w, r.records[1].w, 1e-9 * r.records[1].w);
  EXPECT_EQ(metrics_csv(parsed), csv);
  EXPECT_EQ(error_code_of([] { parse_metrics_csv("step,w\n1,2\n"); }), ErrorCode::ParseError);
}
