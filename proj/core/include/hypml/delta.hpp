#pragma once

// Gromov delta-hyperbolicity of finite point sets.

#include "hypml/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>

namespace hypml::delta {

/// Symmetric, non-negative pairwise distances with an exactly zero diagonal.
class DistanceMatrix {
 public:
  /// Validates symmetry (1e-12 absolute), non-negativity and the zero diagonal.
  explicit DistanceMatrix(Matrix values);

  /// Euclidean distances between the rows of points.
  static DistanceMatrix euclidean(const Matrix& points);
  /// Chord distance |a/|a| - b/|b|| between the rows of points (sqrt of the cosine distance).
  static DistanceMatrix cosine(const Matrix& points);

  Index size() const noexcept { return values_.rows(); }
  double operator()(Index i, Index j) const { return values_(i, j); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

/// Normalizing constant in c(X) = (0.144 / delta_rel)^2.
inline constexpr double kCurvatureConstant = 0.144;

struct GromovReport {
  double delta = 0.0;
  double diameter = 0.0;
  double delta_rel = 0.0;
  /// Empty when delta_rel == 0 (the recommendation diverges).
  std::optional<double> c_recommended;
  std::size_t basepoint_index = 0;
  std::size_t sample_size = 0;
};

/// (0.144 / delta_rel)^2, or nullopt for delta_rel == 0.
std::optional<double> recommended_curvature(double delta_rel);

/// M[y][z] = (d(x,y) + d(x,z) - d(y,z)) / 2 for base point x.
Matrix gromov_product_matrix(const DistanceMatrix& d, Index base);

/// (A (x) B)[i][j] = max_k min(A[i][k], B[k][j]).
Matrix minmax_product(const Matrix& a, const Matrix& b);

/// Largest entry of (M (x) M) - M for the Gromov product matrix at basepoint.
GromovReport delta_from_matrix(const DistanceMatrix& d, Index basepoint);

/// Maximum of delta_from_matrix over every basepoint. Limited to n <= 256.
GromovReport delta_all_basepoints(const DistanceMatrix& d);

inline constexpr Index kMaxAllBasepoints = 256;

enum class PointMetric { Euclidean, Cosine };

/// Draws min(sample_size, m) rows uniformly without replacement, uses the
/// first drawn row as basepoint and evaluates delta_from_matrix. With
/// all_basepoints the sample is passed to delta_all_basepoints instead.
GromovReport delta_of_embeddings(const Matrix& points, PointMetric metric, std::size_t sample_size,
                                 std::uint64_t seed, bool all_basepoints = false);

inline constexpr std::size_t kDefaultSampleSize = 1500;

}  // namespace hypml::delta
