#include "uninfo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "uninfo/logging.hpp"
#include "uninfo/objectives.hpp"

namespace uninfo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd ground_costs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, GroundCost kind) {
  Eigen::MatrixXd c(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      if (kind == GroundCost::Euclidean) {
        c(i, j) = (a.row(i) - b.row(j)).norm();
      } else {
        c(i, j) = std::acos(std::clamp(a.row(i).dot(b.row(j)), -1.0, 1.0));
      }
    }
  }
  return c;
}

double assignment_cost(const Eigen::MatrixXd& cost) {
  const std::vector<int> match = min_cost_assignment(cost);
  double sum = 0.0;
  for (Index i = 0; i < cost.rows(); ++i) sum += cost(i, match[static_cast<std::size_t>(i)]);
  return sum / static_cast<double>(cost.rows());
}

// Transportation problem with supplies m at each of n sources and demands n at
// each of m sinks (uniform weights scaled to integers), solved by successive
// shortest paths with potentials on the dense bipartite residual graph.
double transport_cost(const Eigen::MatrixXd& cost) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  std::vector<long> supply(static_cast<std::size_t>(n), static_cast<long>(m));
  std::vector<long> demand(static_cast<std::size_t>(m), static_cast<long>(n));
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> flow = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, m);
  // Node ids: sources 0..n-1, sinks n..n+m-1. Potentials keep reduced costs
  // nonnegative on residual edges.
  const Index nodes = n + m;
  std::vector<double> potential(static_cast<std::size_t>(nodes), 0.0);
  for (Index j = 0; j < m; ++j) potential[static_cast<std::size_t>(n + j)] = cost.col(j).minCoeff();

  long remaining = static_cast<long>(n * m);
  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<Index> parent(static_cast<std::size_t>(nodes));
  std::vector<char> done(static_cast<std::size_t>(nodes));
  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Index i = 0; i < n; ++i) {
      if (supply[static_cast<std::size_t>(i)] > 0) dist[static_cast<std::size_t>(i)] = 0.0;
    }
    // Dense Dijkstra.
    for (;;) {
      Index u = -1;
      for (Index v = 0; v < nodes; ++v) {
        if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < kInf &&
            (u < 0 || dist[static_cast<std::size_t>(v)] < dist[static_cast<std::size_t>(u)]))
          u = v;
      }
      if (u < 0) break;
      done[static_cast<std::size_t>(u)] = 1;
      const double du = dist[static_cast<std::size_t>(u)];
      if (u < n) {
        for (Index j = 0; j < m; ++j) {
          const Index v = n + j;
          const double rc = cost(u, j) + potential[static_cast<std::size_t>(u)] - potential[static_cast<std::size_t>(v)];
          if (du + rc < dist[static_cast<std::size_t>(v)]) {
            dist[static_cast<std::size_t>(v)] = du + rc;
            parent[static_cast<std::size_t>(v)] = u;
          }
        }
      } else {
        const Index j = u - n;
        for (Index i = 0; i < n; ++i) {
          if (flow(i, j) <= 0) continue;
          const double rc = -cost(i, j) + potential[static_cast<std::size_t>(u)] - potential[static_cast<std::size_t>(i)];
          if (du + rc < dist[static_cast<std::size_t>(i)]) {
            dist[static_cast<std::size_t>(i)] = du + rc;
            parent[static_cast<std::size_t>(i)] = u;
          }
        }
      }
    }
    Index sink = -1;
    for (Index j = 0; j < m; ++j) {
      const Index v = n + j;
      if (demand[static_cast<std::size_t>(j)] > 0 && dist[static_cast<std::size_t>(v)] < kInf &&
          (sink < 0 || dist[static_cast<std::size_t>(v)] < dist[static_cast<std::size_t>(sink)]))
        sink = v;
    }
    require(sink >= 0, ErrorCode::NumericFailure, "transportation problem has no augmenting path");
    for (Index v = 0; v < nodes; ++v) {
      if (dist[static_cast<std::size_t>(v)] < kInf) potential[static_cast<std::size_t>(v)] += dist[static_cast<std::size_t>(v)];
    }
    // Bottleneck along the path.
    long push = demand[static_cast<std::size_t>(sink - n)];
    Index v = sink;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const Index u = parent[static_cast<std::size_t>(v)];
      if (u >= n) push = std::min(push, flow(v, u - n));  // backward edge sink u -> source v
      v = u;
    }
    push = std::min(push, supply[static_cast<std::size_t>(v)]);
    const Index source = v;
    v = sink;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const Index u = parent[static_cast<std::size_t>(v)];
      if (u < n) {
        flow(u, v - n) += push;
      } else {
        flow(v, u - n) -= push;
      }
      v = u;
    }
    supply[static_cast<std::size_t>(source)] -= push;
    demand[static_cast<std::size_t>(sink - n)] -= push;
    remaining -= push;
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      if (flow(i, j) > 0) total += static_cast<double>(flow(i, j)) * cost(i, j);
    }
  }
  return total / static_cast<double>(n * m);
}

double exact_emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, GroundCost kind) {
  const Eigen::MatrixXd cost = ground_costs(a, b, kind);
  return a.rows() == b.rows() ? assignment_cost(cost) : transport_cost(cost);
}

Eigen::MatrixXd subsample(const Eigen::MatrixXd& x, Index k, std::mt19937_64& rng) {
  if (x.rows() <= k) return x;
  std::vector<Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, x.rows() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  Eigen::MatrixXd out(k, x.cols());
  for (Index i = 0; i < k; ++i) out.row(i) = x.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  require(cost.rows() == cost.cols(), ErrorCode::ShapeMismatch, "assignment needs a square cost matrix");
  const Index n = cost.rows();
  // 1-based arrays, column 0 is a virtual start.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match_col(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    match_col[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match_col[static_cast<std::size_t>(j0)];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match_col[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match_col[static_cast<std::size_t>(j0)] = match_col[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(match_col[static_cast<std::size_t>(j)] - 1)] = static_cast<int>(j - 1);
  return assignment;
}

double emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, GroundCost cost, Index max_exact, int draws,
           std::uint64_t seed) {
  require(a.rows() >= 1 && b.rows() >= 1, ErrorCode::EmptySet, "EMD needs two nonempty point sets");
  require(a.cols() == b.cols(), ErrorCode::DimensionMismatch, "point sets differ in dimension");
  if (a.rows() <= max_exact && b.rows() <= max_exact) return exact_emd(a, b, cost);
  std::mt19937_64 rng(derive_seed(seed, 0xe3d));
  double sum = 0.0;
  for (int d = 0; d < draws; ++d) sum += exact_emd(subsample(a, max_exact, rng), subsample(b, max_exact, rng), cost);
  return sum / draws;
}

SphericalProjection spherical_pca_project(const Eigen::MatrixXd& images, const Eigen::MatrixXd& texts) {
  require(images.cols() == texts.cols() || texts.rows() == 0, ErrorCode::DimensionMismatch,
          "image and text dimensions differ");
  const Index total = images.rows() + texts.rows();
  require(total >= 3, ErrorCode::InvalidArgument, "spherical PCA needs at least three points");
  Eigen::MatrixXd all(total, images.cols());
  all << images, texts;
  const Eigen::RowVectorXd mean = all.colwise().mean();
  const Eigen::MatrixXd centered = all.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(total);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Index d = cov.rows();
  const double top = eig.eigenvalues()(d - 1);
  const double second = eig.eigenvalues()(d - 2);
  require(top >= 1e-10 || second >= 1e-10, ErrorCode::DegenerateSpectrum, "point set has no principal plane");
  SphericalProjection out;
  out.basis.resize(d, 2);
  out.basis.col(0) = eig.eigenvectors().col(d - 1);
  out.basis.col(1) = eig.eigenvectors().col(d - 2);
  auto project = [&](const Eigen::MatrixXd& x, const char* what) {
    Eigen::MatrixXd p = x * out.basis;
    for (Index i = 0; i < p.rows(); ++i) {
      const double n = p.row(i).norm();
      if (n <= kZeroNorm) {
        log_warning(std::string("spherical PCA: ") + what + " point " + std::to_string(i) +
                    " projects to the origin; placed at angle 0");
        p.row(i) << 1.0, 0.0;
      } else {
        p.row(i) /= n;
      }
    }
    return p;
  };
  out.images = project(images, "image");
  out.texts = project(texts, "text");
  return out;
}

DiagnosticsReport collect_batch_metrics(const EmbeddingBatch<double>& z, const PredictionBatch<double>& pred,
                                        const PrototypeBank<double>& bank, std::optional<std::span<const int>> truth) {
  require(z.size() == pred.size() && pred.num_classes() == bank.num_classes(), ErrorCode::ShapeMismatch,
          "metrics inputs differ in shape");
  DiagnosticsReport r;
  r.mean_entropy = entropy_loss(pred);
  r.uniformity_metric = z.size() >= 2 ? uniformity_metric(z) : 1.0;
  r.emd_modality_gap = modality_gap_emd(z, bank);
  r.mutual_information = mutual_information(pred);
  r.histogram.assign(static_cast<std::size_t>(bank.num_classes()), 0.0);
  for (int label : pred.labels()) r.histogram[static_cast<std::size_t>(label)] += 1.0 / static_cast<double>(pred.size());
  if (truth) r.accuracy = batch_accuracy(pred, *truth);
  return r;
}

}  // namespace uninfo
