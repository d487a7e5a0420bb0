#include "hypml/delta.hpp"

#include "hypml/error.hpp"
#include "hypml/parallel.hpp"
#include "hypml/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace hypml::delta {

DistanceMatrix::DistanceMatrix(Matrix values) : values_(std::move(values)) {
  require(values_.rows() == values_.cols(), ErrorKind::Data, "distance matrix must be square");
  require(values_.allFinite(), ErrorKind::Data, "distance matrix has non-finite entries");
  const Index n = values_.rows();
  for (Index i = 0; i < n; ++i) {
    require(values_(i, i) == 0.0, ErrorKind::Data, "distance matrix diagonal must be zero");
    for (Index j = i + 1; j < n; ++j) {
      require(values_(i, j) >= 0.0 && values_(j, i) >= 0.0, ErrorKind::Data,
              "distances must be non-negative");
      require(std::abs(values_(i, j) - values_(j, i)) <= 1e-12, ErrorKind::Data,
              "distance matrix is not symmetric");
    }
  }
}

DistanceMatrix DistanceMatrix::euclidean(const Matrix& points) {
  const Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    for (Index j = 0; j < n; ++j) {
      if (j != static_cast<Index>(i)) d(i, j) = (points.row(i) - points.row(j)).norm();
    }
  });
  return DistanceMatrix(std::move(d));
}

DistanceMatrix DistanceMatrix::cosine(const Matrix& points) {
  Matrix unit = points;
  for (Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    require(norm > 0.0, ErrorKind::Data, "cosine distance: zero-norm point");
    unit.row(i) /= norm;
  }
  return euclidean(unit);
}

std::optional<double> recommended_curvature(double delta_rel) {
  require(std::isfinite(delta_rel) && delta_rel >= 0.0, ErrorKind::Data,
          "relative delta must be non-negative");
  if (delta_rel == 0.0) return std::nullopt;
  const double ratio = kCurvatureConstant / delta_rel;
  return ratio * ratio;
}

Matrix gromov_product_matrix(const DistanceMatrix& d, Index base) {
  const Index n = d.size();
  require(base >= 0 && base < n, ErrorKind::Data, "basepoint index out of range");
  Matrix m(n, n);
  for (Index y = 0; y < n; ++y) {
    for (Index z = 0; z < n; ++z) m(y, z) = 0.5 * (d(base, y) + d(base, z) - d(y, z));
  }
  return m;
}

Matrix minmax_product(const Matrix& a, const Matrix& b) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(), ErrorKind::Data,
          "minmax_product: operands must be square and of equal size");
  const Index n = a.rows();
  Matrix out = Matrix::Constant(n, n, -INFINITY);
  // Row-streaming (i, k, j) order keeps the inner loop contiguous in b and out.
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    double* out_row = out.row(i).data();
    for (Index k = 0; k < n; ++k) {
      const double aik = a(i, k);
      const double* b_row = b.row(k).data();
      for (Index j = 0; j < n; ++j) out_row[j] = std::max(out_row[j], std::min(aik, b_row[j]));
    }
  });
  return out;
}

GromovReport delta_from_matrix(const DistanceMatrix& d, Index basepoint) {
  const Index n = d.size();
  require(n >= 3, ErrorKind::Data, "delta needs at least 3 points");
  const double diameter = d.values().maxCoeff();
  require(diameter > 0.0, ErrorKind::Data, "degenerate point set: zero diameter");

  const Matrix m = gromov_product_matrix(d, basepoint);
  const Matrix mm = minmax_product(m, m);
  double delta = (mm - m).maxCoeff();
  if (delta < 0.0 && delta >= -1e-12) delta = 0.0;

  GromovReport report;
  report.delta = delta;
  report.diameter = diameter;
  report.delta_rel = 2.0 * delta / diameter;
  report.c_recommended = recommended_curvature(report.delta_rel);
  report.basepoint_index = static_cast<std::size_t>(basepoint);
  report.sample_size = static_cast<std::size_t>(n);
  return report;
}

GromovReport delta_all_basepoints(const DistanceMatrix& d) {
  require(d.size() <= kMaxAllBasepoints, ErrorKind::Config,
          "all-basepoint delta is limited to 256 points");
  GromovReport best = delta_from_matrix(d, 0);
  for (Index x = 1; x < d.size(); ++x) {
    GromovReport candidate = delta_from_matrix(d, x);
    if (candidate.delta > best.delta) best = candidate;
  }
  return best;
}

GromovReport delta_of_embeddings(const Matrix& points, PointMetric metric, std::size_t sample_size,
                                 std::uint64_t seed, bool all_basepoints) {
  const std::size_t m = static_cast<std::size_t>(points.rows());
  require(m >= 3, ErrorKind::Data, "delta needs at least 3 points");
  require(sample_size >= 3, ErrorKind::Config, "delta sample size must be at least 3");
  const std::size_t take = std::min(sample_size, m);

  // Partial Fisher-Yates: the first `take` slots are a uniform sample without replacement.
  Rng rng(seed);
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.uniform_index(m - i);
    std::swap(order[i], order[j]);
  }

  Matrix sample(static_cast<Index>(take), points.cols());
  for (std::size_t i = 0; i < take; ++i) sample.row(i) = points.row(order[i]);

  const DistanceMatrix d =
      metric == PointMetric::Euclidean ? DistanceMatrix::euclidean(sample) : DistanceMatrix::cosine(sample);
  return all_basepoints ? delta_all_basepoints(d) : delta_from_matrix(d, 0);
}

}  // namespace hypml::delta
