#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "uninfo/hypersphere.hpp"

namespace uninfo {

inline constexpr double kDefaultTemperature = 0.01;

/// Averages per-prompt text embeddings class by class and renormalizes.
/// `per_prompt[p]` is the C x d embedding matrix of prompt template p.
template <typename Scalar>
PrototypeBank<Scalar> ensemble_prototypes(const std::vector<Matrix<Scalar>>& per_prompt,
                                          Scalar temperature = static_cast<Scalar>(kDefaultTemperature),
                                          std::vector<std::string> class_names = {}) {
  require(!per_prompt.empty(), ErrorCode::InvalidArgument, "need at least one prompt");
  const Index c = per_prompt.front().rows();
  const Index d = per_prompt.front().cols();
  Matrix<Scalar> sum = Matrix<Scalar>::Zero(c, d);
  for (const auto& m : per_prompt) {
    require(m.rows() == c && m.cols() == d, ErrorCode::ShapeMismatch, "prompt embeddings differ in shape");
    require(rows_unit_norm(m), ErrorCode::InvalidArgument, "prompt embeddings must have unit norm");
    sum += m;
  }
  sum /= static_cast<Scalar>(per_prompt.size());
  for (Index i = 0; i < c; ++i) {
    const Scalar n = sum.row(i).norm();
    require(static_cast<double>(n) > kZeroNorm, ErrorCode::ZeroMeanVector,
            "prompt embeddings of class " + std::to_string(i) + " cancel out");
    sum.row(i) /= n;
  }
  return PrototypeBank<Scalar>(std::move(sum), temperature, std::move(class_names));
}

/// C rows of a seeded random orthonormal basis of R^d.
template <typename Scalar>
PrototypeBank<Scalar> make_toy_bank(Index classes, Index dim, std::uint64_t seed,
                                    Scalar temperature = static_cast<Scalar>(kDefaultTemperature)) {
  require(classes <= dim, ErrorCode::TooManyClasses,
          std::to_string(classes) + " classes do not fit orthogonally in dimension " + std::to_string(dim));
  std::mt19937_64 rng(derive_seed(seed, 0xba4c));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(dim, classes);
  for (Index j = 0; j < classes; ++j) {
    for (Index i = 0; i < dim; ++i) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, classes);
  Matrix<Scalar> rows = q.transpose().cast<Scalar>();
  return PrototypeBank<Scalar>(std::move(rows), temperature);
}

/// Reads `text_embeddings` [P, C, d] (and `class_names.json` when present)
/// from a tensor archive and ensembles them.
PrototypeBank<float> load_prompt_bank(const std::filesystem::path& archive_dir,
                                      float temperature = static_cast<float>(kDefaultTemperature));

void save_prototype_bank(const std::filesystem::path& archive_dir, const PrototypeBank<float>& bank);

/// One template per non-blank line, each containing a single `{}`.
std::vector<std::string> load_prompt_templates(const std::filesystem::path& file);

/// `[Name]` headers followed by synonyms, one per line; `#` starts a comment.
std::map<std::string, std::vector<std::string>> load_corruption_synonyms(const std::filesystem::path& file);

/// Substitutes `name` for the `{}` placeholder.
std::string format_prompt(const std::string& templ, const std::string& name);

}  // namespace uninfo
