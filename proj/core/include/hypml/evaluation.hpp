#pragma once

// Recall@K retrieval evaluation.

#include "hypml/types.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hypml::eval {

struct RetrievalMetric {
  enum class Kind { Cosine, Hyperbolic };

  Kind kind = Kind::Cosine;
  double curvature = 0.1;
  double clip_radius = 2.3;
  /// Hyperbolic only: run clip_features -> exp_map_zero -> clip_ball on the
  /// embeddings first. Disable for points that are already in the ball.
  bool map_to_ball = true;

  static RetrievalMetric cosine() { return {}; }
  static RetrievalMetric hyperbolic(double c, double r, bool map_to_ball = true) {
    return {Kind::Hyperbolic, c, r, map_to_ball};
  }

  std::string name() const;
};

struct RetrievalMetrics {
  std::vector<std::pair<int, double>> recall_at;  // ascending K
  std::size_t num_queries = 0;
  std::string metric;
  std::string space;

  /// Recall at K; throws Config if K was not evaluated.
  double at(int k) const;
};

inline const std::vector<int> kDefaultKs{1, 2, 4, 8};

/// Leave-one-out retrieval: each row queries all other rows. Distance ties are
/// broken by the smaller candidate index. Requires every K < m.
RetrievalMetrics recall_at_k(const Matrix& embeddings, std::span<const Label> labels,
                             std::span<const int> ks, const RetrievalMetric& metric);

/// Queries against a separate gallery, without self-exclusion. Requires K <= gallery size.
RetrievalMetrics query_gallery_recall(const Matrix& queries, std::span<const Label> query_labels,
                                      const Matrix& gallery, std::span<const Label> gallery_labels,
                                      std::span<const int> ks, const RetrievalMetric& metric);

/// Row-wise representation the metric compares (ball points for Hyperbolic).
Matrix prepare(const Matrix& embeddings, const RetrievalMetric& metric);

}  // namespace hypml::eval
