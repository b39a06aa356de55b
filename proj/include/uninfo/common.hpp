#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace uninfo {

// Rows are samples / tokens throughout, so everything is row-major. This also
// matches the byte layout of the tensor archive.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Floor applied to probabilities before taking logs.
inline constexpr double kProbFloor = 1e-12;

// Row-sum tolerance for probability matrices.
template <typename Scalar>
constexpr Scalar prob_tolerance() {
  return sizeof(Scalar) >= 8 ? Scalar(1e-6) : Scalar(1e-5);
}

// splitmix64 finalizer; used to derive independent seeds for sub-streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace uninfo
