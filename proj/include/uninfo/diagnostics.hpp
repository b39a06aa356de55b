#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uninfo/hypersphere.hpp"

namespace uninfo {

enum class GroundCost { Euclidean, Geodesic };

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials). Returns assignment[row] = column.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Earth mover's distance between two uniformly weighted point clouds (rows).
/// Equal sizes are solved as an assignment problem, unequal sizes as an exact
/// transportation problem. Sets larger than `max_exact` are subsampled
/// `draws` times with seeded draws and the results averaged.
double emd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, GroundCost cost = GroundCost::Euclidean,
           Index max_exact = 512, int draws = 5, std::uint64_t seed = 0);

template <typename Scalar>
double modality_gap_emd(const EmbeddingBatch<Scalar>& images, const PrototypeBank<Scalar>& texts,
                        GroundCost cost = GroundCost::Euclidean) {
  require(images.dim() == texts.dim(), ErrorCode::DimensionMismatch, "image and text dimensions differ");
  return emd(images.data().template cast<double>(), texts.prototypes().template cast<double>(), cost);
}

struct SphericalProjection {
  Eigen::MatrixXd images;  // B x 2, unit rows
  Eigen::MatrixXd texts;   // C x 2, unit rows
  Eigen::MatrixXd basis;   // d x 2, principal plane
};

/// Projects both sets onto the top-2 principal plane of their mean-centered
/// union, then onto the unit circle.
SphericalProjection spherical_pca_project(const Eigen::MatrixXd& images, const Eigen::MatrixXd& texts);

template <typename Scalar>
SphericalProjection spherical_pca_project(const EmbeddingBatch<Scalar>& z, const PrototypeBank<Scalar>& t) {
  return spherical_pca_project(z.data().template cast<double>(), t.prototypes().template cast<double>());
}

struct DiagnosticsReport {
  double mean_entropy = 0.0;
  double uniformity_metric = 0.0;
  double emd_modality_gap = 0.0;
  double mutual_information = 0.0;
  std::vector<double> histogram;  // fraction of predictions per class
  std::optional<double> accuracy;
};

DiagnosticsReport collect_batch_metrics(const EmbeddingBatch<double>& z, const PredictionBatch<double>& pred,
                                        const PrototypeBank<double>& bank,
                                        std::optional<std::span<const int>> truth = std::nullopt);

}  // namespace uninfo
