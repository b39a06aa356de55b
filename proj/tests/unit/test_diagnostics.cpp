#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_util.hpp"
#include "uninfo/diagnostics.hpp"

using namespace uninfo;
using namespace uninfo::testing;

namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

/// Minimum mean matched distance over all n! permutations.
double brute_force_emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<int> perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Index i = 0; i < a.rows(); ++i) s += (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm();
    best = std::min(best, s / static_cast<double>(a.rows()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Eigen::MatrixXd repeat_rows(const Eigen::MatrixXd& m, Index times) {
  Eigen::MatrixXd out(m.rows() * times, m.cols());
  for (Index t = 0; t < times; ++t) out.middleRows(t * m.rows(), m.rows()) = m;
  return out;
}

/// Cyclic Jacobi rotations; returns eigenvalues on the diagonal and
/// eigenvectors as columns of `vectors`.
Eigen::VectorXd jacobi_eigen(Eigen::MatrixXd a, Eigen::MatrixXd& vectors) {
  const Index n = a.rows();
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p)
      for (Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n);
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transpose() * a * j;
        vectors = vectors * j;
      }
    }
  }
  return a.diagonal();
}

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd normal(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gaussian(n, d, rng);
}

Eigen::MatrixXd random_unit(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return unit_rows(n, d, rng);
}

}  // namespace

TEST(Emd, SpecExamples) {
  const auto a = random_unit(5, 4, 1);
  Eigen::MatrixXd shuffled = a;
  shuffled.row(0).swap(shuffled.row(3));
  EXPECT_NEAR(emd(a, shuffled), 0.0, 1e-12);
  EXPECT_NEAR(emd(rows({{1, 0}}), rows({{-1, 0}})), 2.0, 1e-12);
  const auto z = rows({{0.6, 0.8}}), t = rows({{0, 1}});
  EXPECT_NEAR(emd(z, t), (z - t).norm(), 1e-12);
  EXPECT_NEAR(emd(rows({{1, 0}, {0, 1}}), rows({{0, 1}, {1, 0}})), 0.0, 1e-12);
  EXPECT_NEAR(emd(rows({{1, 0}, {-1, 0}}), rows({{0, 1}, {0, -1}})), 1.41421356, 1e-5);
}

TEST(Emd, MatchesBruteForceUpToSix) {
  for (Index n = 1; n <= 6; ++n) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto a = random_unit(n, 3, 100 + s * 7 + static_cast<std::uint64_t>(n));
      const auto b = random_unit(n, 3, 200 + s * 7 + static_cast<std::uint64_t>(n));
      EXPECT_NEAR(emd(a, b), brute_force_emd(a, b), 1e-12) << "n=" << n;
    }
  }
}

TEST(Emd, SymmetricAndTriangle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index n = 2 + static_cast<Index>(s % 7);
    const auto a = random_unit(n, 4, 300 + s), b = random_unit(n, 4, 400 + s), c = random_unit(n, 4, 500 + s);
    EXPECT_NEAR(emd(a, b), emd(b, a), 1e-12);
    EXPECT_LE(emd(a, c), emd(a, b) + emd(b, c) + 1e-12);
    EXPECT_GE(emd(a, b), 0.0);
  }
}

TEST(Emd, UnequalSizesMatchReplicatedAssignment) {
  // With weights 1/n and 1/m, replicating each set to lcm(n, m) points gives
  // an equivalent assignment problem.
  const auto a = random_unit(2, 3, 600), b = random_unit(3, 3, 601);
  EXPECT_NEAR(emd(a, b), brute_force_emd(repeat_rows(a, 3), repeat_rows(b, 2)), 1e-10);
  const auto one = random_unit(1, 3, 602), many = random_unit(4, 3, 603);
  double mean = 0.0;
  for (Index j = 0; j < 4; ++j) mean += (one.row(0) - many.row(j)).norm() / 4.0;
  EXPECT_NEAR(emd(one, many), mean, 1e-12);
  EXPECT_NEAR(emd(many, one), mean, 1e-12);
}

TEST(Emd, GeodesicCost) {
  EXPECT_NEAR(emd(rows({{1, 0}}), rows({{0, 1}}), GroundCost::Geodesic), kPi / 2, 1e-12);
  EXPECT_NEAR(emd(rows({{1, 0}}), rows({{-1, 0}}), GroundCost::Geodesic), kPi, 1e-9);
}

TEST(Emd, SubsamplingIsSeededAndClose) {
  const auto a = random_unit(40, 3, 700), b = random_unit(40, 3, 701);
  const double exact = emd(a, b);
  const double approx1 = emd(a, b, GroundCost::Euclidean, 20, 5, 9);
  EXPECT_EQ(approx1, emd(a, b, GroundCost::Euclidean, 20, 5, 9));
  EXPECT_NEAR(approx1, exact, 0.25 * exact);
}

TEST(Emd, Errors) {
  const Eigen::MatrixXd empty(0, 3);
  EXPECT_EQ(error_code_of([&] { emd(empty, random_unit(2, 3, 1)); }), ErrorCode::EmptySet);
  EXPECT_EQ(error_code_of([&] { emd(random_unit(2, 3, 1), empty); }), ErrorCode::EmptySet);
  EXPECT_EQ(error_code_of([&] { emd(random_unit(2, 3, 1), random_unit(2, 4, 1)); }), ErrorCode::DimensionMismatch);
}

TEST(Assignment, SmallKnownCase) {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  EXPECT_EQ(min_cost_assignment(c), (std::vector<int>{1, 0, 2}));
}

TEST(SphericalPca, PlanarCircleKeepsAngles) {
  const int n = 12;
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(n, 4);
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n + 0.1 * (i % 3);
    angles.push_back(a);
    pts(i, 1) = std::cos(a);
    pts(i, 3) = std::sin(a);
  }
  const auto proj = spherical_pca_project(pts.topRows(9), pts.bottomRows(3));
  Eigen::MatrixXd all(n, 2);
  all << proj.images, proj.texts;
  // Angular differences are preserved up to a global rotation or reflection.
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(all.row(i).norm(), 1.0, 1e-6);
    for (int j = 0; j < n; ++j) {
      const double want = std::cos(angles[i] - angles[j]);
      EXPECT_NEAR(all.row(i).dot(all.row(j)), want, 1e-6);
    }
  }
}

TEST(SphericalPca, PlaneMatchesJacobiOracle) {
  Eigen::MatrixXd x = normal(30, 3, 800);
  x.col(0) *= 3.0;
  x.col(2) *= 2.0;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  x = x * rot.transpose();
  const auto proj = spherical_pca_project(x.topRows(20), x.bottomRows(10));
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / 30.0;
  Eigen::MatrixXd vecs;
  const Eigen::VectorXd vals = jacobi_eigen(cov, vecs);
  std::vector<Index> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return vals(a) > vals(b); });
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd oracle = vecs.col(order[static_cast<std::size_t>(k)]);
    EXPECT_NEAR(std::abs(oracle.dot(proj.basis.col(k))), 1.0, 1e-8) << "axis " << k;
  }
}

TEST(SphericalPca, RotationInvariantDistances) {
  const auto z = random_unit(15, 6, 900), t = random_unit(5, 6, 901);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(normal(6, 6, 902)).householderQ();
  const auto a = spherical_pca_project(z, t);
  const auto b = spherical_pca_project(Eigen::MatrixXd(z * q), Eigen::MatrixXd(t * q));
  Eigen::MatrixXd pa(20, 2), pb(20, 2);
  pa << a.images, a.texts;
  pb << b.images, b.texts;
  const Eigen::MatrixXd ga = pa * pa.transpose(), gb = pb * pb.transpose();
  EXPECT_LE((ga - gb).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(SphericalPca, DegenerateAndSmall) {
  const Eigen::MatrixXd same = Eigen::MatrixXd::Ones(4, 3);
  EXPECT_EQ(error_code_of([&] { spherical_pca_project(same, Eigen::MatrixXd(same.topRows(1))); }),
            ErrorCode::DegenerateSpectrum);
  EXPECT_EQ(error_code_of([&] { spherical_pca_project(random_unit(1, 3, 1), random_unit(1, 3, 2)); }),
            ErrorCode::InvalidArgument);
}

TEST(BatchMetrics, OneHotBalanced) {
  Matrix<double> eye = Matrix<double>::Identity(4, 4);
  const auto z = EmbeddingBatch<double>::from_unit_rows(eye);
  const auto pred = PredictionBatch<double>::from_probs(eye);
  const PrototypeBank<double> bank(eye, 0.01);
  const std::vector<int> truth{0, 1, 2, 3};
  const auto r = collect_batch_metrics(z, pred, bank, std::span<const int>(truth));
  EXPECT_NEAR(r.mean_entropy, 0.0, 1e-12);
  for (double h : r.histogram) EXPECT_DOUBLE_EQ(h, 0.25);
  EXPECT_NEAR(r.emd_modality_gap, 0.0, 1e-12);
  EXPECT_NEAR(r.mutual_information, std::log(4.0), 1e-12);
  EXPECT_EQ(*r.accuracy, 1.0);
}

TEST(BatchMetrics, CollapsedPredictions) {
  Matrix<double> p = Matrix<double>::Zero(5, 3);
  p.col(1).setOnes();
  const auto z = EmbeddingBatch<double>::from_unit_rows(random_unit(5, 3, 10));
  const PrototypeBank<double> bank(random_unit(3, 3, 11), 0.01);
  const auto r = collect_batch_metrics(z, PredictionBatch<double>::from_probs(p), bank);
  EXPECT_EQ(r.histogram, (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_NEAR(r.mutual_information, 0.0, 1e-12);
  EXPECT_FALSE(r.accuracy.has_value());
  EXPECT_EQ(error_code_of([&] {
              collect_batch_metrics(z, PredictionBatch<double>::from_probs(p.topRows(4)), bank);
            }),
            ErrorCode::ShapeMismatch);
}
