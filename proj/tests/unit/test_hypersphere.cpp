#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace uninfo;
using namespace uninfo::testing;

TEST(NormalizeRows, ScalesToUnitNorm) {
  Matrix<double> m(1, 2);
  m << 3, 4;
  const auto z = normalize_rows(m);
  EXPECT_NEAR(z.data()(0, 0), 0.6, 1e-12);
  EXPECT_NEAR(z.data()(0, 1), 0.8, 1e-12);
}

TEST(NormalizeRows, AxisAligned) {
  Matrix<double> m(2, 2);
  m << 1, 0, 0, -2;
  const auto z = normalize_rows(m);
  EXPECT_EQ(z.data()(0, 0), 1.0);
  EXPECT_EQ(z.data()(0, 1), 0.0);
  EXPECT_EQ(z.data()(1, 0), 0.0);
  EXPECT_EQ(z.data()(1, 1), -1.0);
}

TEST(NormalizeRows, ZeroRowIsRejected) {
  EXPECT_EQ(error_code_of([] { normalize_rows<double>(Matrix<double>::Zero(1, 2)); }), ErrorCode::ZeroVectorRow);
  Matrix<double> tiny(2, 2);
  tiny << 1, 1, 1e-13, 0;
  EXPECT_EQ(error_code_of([&] { normalize_rows(tiny); }), ErrorCode::ZeroVectorRow);
}

TEST(NormalizeRows, Idempotent) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto once = normalize_rows<double>(gaussian(5, 7, rng, 10.0));
    const auto twice = normalize_rows(once.data());
    EXPECT_LE((once.data() - twice.data()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(NormalizeRows, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const Matrix<double> raw = gaussian(3, 5, rng);
  const Matrix<double> weights = gaussian(3, 5, rng);
  const auto f = [&](const Matrix<double>& x) { return normalize_rows(x).data().cwiseProduct(weights).sum(); };
  EXPECT_LE(max_rel_error(normalize_rows_backward(raw, weights), numeric_grad(raw, f)), 1e-6);
}

TEST(EmbeddingBatch, RejectsBadShapesAndNorms) {
  EXPECT_EQ(error_code_of([] { EmbeddingBatch<double>::from_unit_rows(Matrix<double>::Ones(2, 1)); }),
            ErrorCode::ShapeMismatch);
  EXPECT_EQ(error_code_of([] { EmbeddingBatch<double>::from_unit_rows(Matrix<double>::Ones(2, 2)); }),
            ErrorCode::InvalidArgument);
}

TEST(PrototypeBank, Invariants) {
  Matrix<double> one(1, 2);
  one << 1, 0;
  EXPECT_ANY_THROW(PrototypeBank<double>(one, 1.0));
  EXPECT_ANY_THROW(PrototypeBank<double>(Matrix<double>::Identity(2, 2), 0.0));
  EXPECT_ANY_THROW(PrototypeBank<double>(Matrix<double>::Identity(2, 2) * 2, 1.0));
  const PrototypeBank<double> bank(Matrix<double>::Identity(3, 3), 0.5);
  EXPECT_EQ(bank.class_names().size(), 3u);
  EXPECT_EQ(bank.num_classes(), 3);
}

TEST(ZeroShot, TwoPrototypesUnitTemperature) {
  Matrix<double> z(1, 2);
  z << 1, 0;
  const PrototypeBank<double> bank(Matrix<double>::Identity(2, 2), 1.0);
  const auto p = zero_shot_probs(EmbeddingBatch<double>::from_unit_rows(z), bank);
  // e / (e + 1) and 1 / (e + 1)
  const double e = std::exp(1.0);
  EXPECT_NEAR(p.probs()(0, 0), e / (e + 1), 1e-12);
  EXPECT_NEAR(p.probs()(0, 1), 1 / (e + 1), 1e-12);
  EXPECT_NEAR(p.probs()(0, 0), 0.73106, 1e-5);
  EXPECT_EQ(p.labels()[0], 0);
}

TEST(ZeroShot, SaturatesAtSmallTemperature) {
  Matrix<double> z(1, 2);
  z << 1, 0;
  const PrototypeBank<double> bank(Matrix<double>::Identity(2, 2), 0.01);
  const auto p = zero_shot_probs(EmbeddingBatch<double>::from_unit_rows(z), bank);
  EXPECT_DOUBLE_EQ(p.probs()(0, 0), 1.0);
  EXPECT_LT(p.probs()(0, 1), 1e-40);
  EXPECT_EQ(p.labels()[0], 0);
}

TEST(ZeroShot, FloatLogitsDoNotOverflow) {
  Matrix<float> z(1, 2);
  z << 1, 0;
  const PrototypeBank<float> bank(Matrix<float>::Identity(2, 2), 1e-4f);
  const auto p = zero_shot_probs(EmbeddingBatch<float>::from_unit_rows(z), bank);
  EXPECT_TRUE(p.probs().allFinite());
  EXPECT_EQ(p.probs()(0, 0), 1.0f);
}

TEST(ZeroShot, EquidistantGivesUniformAndLowestIndexTie) {
  Matrix<double> t(4, 5);
  t.setZero();
  for (int c = 0; c < 4; ++c) t(c, c) = 1;
  Matrix<double> z = Matrix<double>::Zero(1, 5);
  z(0, 4) = 1;  // orthogonal to every prototype
  const auto p = zero_shot_probs(EmbeddingBatch<double>::from_unit_rows(z), PrototypeBank<double>(t, 0.01));
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(p.probs()(0, c), 0.25, 1e-12);
  EXPECT_EQ(p.labels()[0], 0);
  EXPECT_EQ(probs({{0.25, 0.5, 0.25}}).labels()[0], 1);
  EXPECT_EQ(probs({{0.4, 0.2, 0.4}}).labels()[0], 0);
}

TEST(ZeroShot, DimensionMismatch) {
  const auto z = EmbeddingBatch<double>::from_unit_rows(Matrix<double>::Identity(2, 2));
  const PrototypeBank<double> bank(Matrix<double>::Identity(3, 3), 1.0);
  EXPECT_EQ(error_code_of([&] { zero_shot_probs(z, bank); }), ErrorCode::DimensionMismatch);
}

TEST(ZeroShot, RowsSumToOneAndShiftInvariant) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto z = EmbeddingBatch<double>::from_unit_rows(unit_rows(6, 8, rng));
    const PrototypeBank<double> bank(unit_rows(5, 8, rng), 0.01 + 0.1 * (t % 5));
    const auto p = zero_shot_probs(z, bank);
    for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p.probs().row(i).sum(), 1.0, 1e-6);
    Matrix<double> logits = zero_shot_logits(z, bank);
    logits.array() += 17.5;
    EXPECT_LE((softmax_rows<double>(logits) - p.probs()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ZeroShot, ArgmaxInvariantToTemperature) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto z = EmbeddingBatch<double>::from_unit_rows(unit_rows(8, 6, rng));
    const PrototypeBank<double> bank(unit_rows(4, 6, rng), 1.0);
    const auto a = zero_shot_probs(z, bank);
    const auto b = zero_shot_probs(z, bank.with_temperature(0.01));
    EXPECT_EQ(a.labels(), b.labels());
    EXPECT_GT((a.probs() - b.probs()).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(PredictionBatch, RejectsInvalidRows) {
  Matrix<double> bad(1, 2);
  bad << 0.7, 0.7;
  EXPECT_EQ(error_code_of([&] { PredictionBatch<double>::from_probs(bad); }), ErrorCode::InvalidArgument);
  bad << 1.5, -0.5;
  EXPECT_EQ(error_code_of([&] { PredictionBatch<double>::from_probs(bad); }), ErrorCode::InvalidArgument);
}

TEST(BatchAccuracy, Counts) {
  const auto p2 = probs({{1, 0, 0}, {0, 1, 0}});
  const std::vector<int> same{0, 1}, swapped{1, 0};
  EXPECT_EQ(batch_accuracy(p2, same), 1.0);
  EXPECT_EQ(batch_accuracy(p2, swapped), 0.0);
  const auto p4 = probs({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  const std::vector<int> truth{0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(batch_accuracy(p4, truth), 0.75);
  const std::vector<int> short_truth{0};
  EXPECT_EQ(error_code_of([&] { batch_accuracy(p2, short_truth); }), ErrorCode::LengthMismatch);
}
