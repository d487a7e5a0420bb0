#pragma once

// Pairwise cross-entropy loss over hyperbolic or cosine distances.
//
// A batch holds N classes with d samples each. The t-th occurrence of a class
// (in row order) belongs to subset t, so every subset holds one sample per
// class. For each unordered pair of subsets the loss is evaluated over the
// 2N samples of that pair: every sample is an anchor whose positive is the
// same-class sample of the other subset, and whose softmax runs over the
// other 2N - 1 samples. The reported value is the mean over all anchor terms.

#include "hypml/types.hpp"

#include <string_view>
#include <vector>

namespace hypml::loss {

enum class Metric { Hyperbolic, Spherical };

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view name);

struct LossConfig {
  Metric metric = Metric::Hyperbolic;
  double tau = 0.2;
  double curvature = 0.1;
  double clip_radius = 2.3;

  static LossConfig hyperbolic() { return {Metric::Hyperbolic, 0.2, 0.1, 2.3}; }
  static LossConfig spherical() { return {Metric::Spherical, 0.1, 0.1, 2.3}; }

  void validate() const;
};

struct BatchLayout {
  int classes = 0;          // N
  int samples_per_class = 0;  // d
};

/// Head outputs (Euclidean, before clipping and the exponential map) with labels.
class LossBatch {
 public:
  LossBatch(Matrix features, Labels labels, BatchLayout layout);

  const Matrix& features() const noexcept { return features_; }
  const Labels& labels() const noexcept { return labels_; }
  BatchLayout layout() const noexcept { return layout_; }
  Index size() const noexcept { return features_.rows(); }

  /// subsets()[t][k]: row of the t-th occurrence of the k-th class (classes in first-seen order).
  const std::vector<std::vector<Index>>& subsets() const noexcept { return subsets_; }

 private:
  Matrix features_;
  Labels labels_;
  BatchLayout layout_;
  std::vector<std::vector<Index>> subsets_;
};

struct LossGrad {
  double value = 0.0;
  Matrix grad;  // d value / d features
};

/// 2 - 2 cos(a, b). Both inputs must be non-zero.
double dist_cos(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// Row-wise map from head outputs into the space the metric compares:
/// clip_features -> exp_map_zero -> clip_ball for Hyperbolic, identity for Spherical.
Matrix embed(const Matrix& features, const LossConfig& cfg);

/// Distance between two rows already passed through embed().
double embedded_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const LossConfig& cfg);

/// Loss of a batch with exactly two subsets (d = 2); value only.
double pair_loss(const LossBatch& batch, const LossConfig& cfg);

/// Mean loss over all subset pairs together with its exact gradient.
LossGrad batch_loss(const LossBatch& batch, const LossConfig& cfg);

}  // namespace hypml::loss
