#include "hypml/loss.hpp"

#include "hypml/error.hpp"
#include "hypml/geometry.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace hypml::loss {
namespace {

namespace geo = hypml::geometry;

struct Forward {
  Matrix clipped;  // after clip_features (hyperbolic only)
  Matrix mapped;   // after exp_map_zero (hyperbolic only)
  Matrix z;        // compared embeddings
  Matrix dist;     // K x K
};

Forward forward(const Matrix& features, const LossConfig& cfg) {
  const Index k = features.rows();
  Forward fw;
  if (cfg.metric == Metric::Hyperbolic) {
    fw.clipped.resize(k, features.cols());
    fw.mapped.resize(k, features.cols());
    fw.z.resize(k, features.cols());
    for (Index i = 0; i < k; ++i) {
      fw.clipped.row(i) = geo::clip_features(features.row(i).transpose(), cfg.clip_radius).transpose();
      fw.mapped.row(i) = geo::raw::exp_map_zero(fw.clipped.row(i).transpose(), cfg.curvature).transpose();
      fw.z.row(i) = geo::raw::clip_ball(fw.mapped.row(i).transpose(), cfg.curvature).transpose();
    }
  } else {
    for (Index i = 0; i < k; ++i) {
      require(features.row(i).squaredNorm() > 0.0, ErrorKind::Data,
              "spherical loss: zero-norm feature row " + std::to_string(i));
    }
    fw.z = features;
  }

  fw.dist = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      const double d = embedded_distance(fw.z.row(i).transpose(), fw.z.row(j).transpose(), cfg);
      fw.dist(i, j) = d;
      fw.dist(j, i) = d;
    }
  }
  return fw;
}

// Accumulates the anchor terms of one subset pair. weights(a, k) receives
// d(sum of terms)/d dist(a, k).
double accumulate_pair(const std::vector<Index>& first, const std::vector<Index>& second,
                       const Matrix& dist, double tau, Matrix* weights, std::size_t& terms) {
  std::vector<Index> members(first);
  members.insert(members.end(), second.begin(), second.end());
  const std::size_t n = first.size();

  double total = 0.0;
  std::vector<double> logits(members.size());
  for (std::size_t a = 0; a < members.size(); ++a) {
    const Index anchor = members[a];
    const Index positive = members[a < n ? a + n : a - n];

    double max_logit = -INFINITY;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m == a) continue;
      logits[m] = -dist(anchor, members[m]) / tau;
      max_logit = std::max(max_logit, logits[m]);
    }
    double sum = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (m != a) sum += std::exp(logits[m] - max_logit);
    }
    const double log_norm = max_logit + std::log(sum);
    total += dist(anchor, positive) / tau + log_norm;
    ++terms;

    if (weights != nullptr) {
      for (std::size_t m = 0; m < members.size(); ++m) {
        if (m == a) continue;
        (*weights)(anchor, members[m]) -= std::exp(logits[m] - log_norm) / tau;
      }
      (*weights)(anchor, positive) += 1.0 / tau;
    }
  }
  return total;
}

LossGrad evaluate(const LossBatch& batch, const LossConfig& cfg, bool with_grad) {
  cfg.validate();
  const Matrix& features = batch.features();
  const Index k = batch.size();
  const Forward fw = forward(features, cfg);
  const auto& subsets = batch.subsets();

  Matrix weights;
  if (with_grad) weights = Matrix::Zero(k, k);

  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (std::size_t t = s + 1; t < subsets.size(); ++t) {
      total += accumulate_pair(subsets[s], subsets[t], fw.dist, cfg.tau,
                               with_grad ? &weights : nullptr, terms);
    }
  }

  LossGrad out;
  out.value = total / static_cast<double>(terms);
  require(std::isfinite(out.value), ErrorKind::Numerical, "pairwise loss is not finite");
  if (!with_grad) return out;

  weights /= static_cast<double>(terms);

  Matrix grad_z = Matrix::Zero(k, features.cols());
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      const double w = weights(i, j) + weights(j, i);
      if (w == 0.0) continue;
      const Vector zi = fw.z.row(i).transpose();
      const Vector zj = fw.z.row(j).transpose();
      if (cfg.metric == Metric::Hyperbolic) {
        const auto g = geo::grad::dist_hyp(zi, zj, cfg.curvature);
        grad_z.row(i) += w * g.d_x.transpose();
        grad_z.row(j) += w * g.d_y.transpose();
      } else {
        const double ni = zi.norm();
        const double nj = zj.norm();
        const Vector ui = zi / ni;
        const Vector uj = zj / nj;
        const double cosine = ui.dot(uj);
        grad_z.row(i) += (w * -2.0 / ni) * (uj - cosine * ui).transpose();
        grad_z.row(j) += (w * -2.0 / nj) * (ui - cosine * uj).transpose();
      }
    }
  }

  if (cfg.metric == Metric::Spherical) {
    out.grad = std::move(grad_z);
  } else {
    out.grad.resize(k, features.cols());
    for (Index i = 0; i < k; ++i) {
      Vector g = geo::grad::clip_ball(fw.mapped.row(i).transpose(), cfg.curvature,
                                      grad_z.row(i).transpose());
      g = geo::grad::exp_map_zero(fw.clipped.row(i).transpose(), cfg.curvature, g);
      g = geo::grad::clip_features(features.row(i).transpose(), cfg.clip_radius, g);
      out.grad.row(i) = g.transpose();
    }
  }
  require(out.grad.allFinite(), ErrorKind::Numerical, "pairwise loss gradient is not finite");
  return out;
}

}  // namespace

std::string_view to_string(Metric metric) noexcept {
  return metric == Metric::Hyperbolic ? "hyperbolic" : "spherical";
}

Metric parse_metric(std::string_view name) {
  if (name == "hyperbolic" || name == "hyp") return Metric::Hyperbolic;
  if (name == "spherical" || name == "sph") return Metric::Spherical;
  fail(ErrorKind::Config, "unknown metric '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  require(std::isfinite(tau) && tau > 0.0, ErrorKind::Config, "temperature must be positive");
  if (metric == Metric::Hyperbolic) {
    require(std::isfinite(curvature) && curvature > 0.0, ErrorKind::Config,
            "curvature must be positive");
    require(std::isfinite(clip_radius) && clip_radius > 0.0, ErrorKind::Config,
            "clip radius must be positive");
  }
}

LossBatch::LossBatch(Matrix features, Labels labels, BatchLayout layout)
    : features_(std::move(features)), labels_(std::move(labels)), layout_(layout) {
  require(layout_.samples_per_class >= 2, ErrorKind::Data, "need at least 2 samples per class");
  require(layout_.classes >= 2, ErrorKind::Data, "no negatives: a batch needs at least 2 classes");
  const Index expected = static_cast<Index>(layout_.classes) * layout_.samples_per_class;
  require(features_.rows() == expected, ErrorKind::Data, "batch size does not equal N * d");
  require(static_cast<Index>(labels_.size()) == expected, ErrorKind::Data,
          "label count does not match the batch size");
  require(features_.allFinite(), ErrorKind::Numerical, "batch features are not finite");

  std::map<Label, std::size_t> class_slot;
  std::vector<std::size_t> seen;
  subsets_.assign(layout_.samples_per_class, std::vector<Index>(layout_.classes, -1));
  for (Index row = 0; row < expected; ++row) {
    auto [it, inserted] = class_slot.try_emplace(labels_[row], class_slot.size());
    if (inserted) {
      require(it->second < static_cast<std::size_t>(layout_.classes), ErrorKind::Data,
              "batch holds more than N classes");
      seen.push_back(0);
    }
    const std::size_t occurrence = seen[it->second]++;
    if (occurrence >= static_cast<std::size_t>(layout_.samples_per_class)) {
      std::ostringstream msg;
      msg << "class " << labels_[row] << " appears more than d = " << layout_.samples_per_class
          << " times (duplicate class inside a subset)";
      fail(ErrorKind::Data, msg.str());
    }
    subsets_[occurrence][it->second] = row;
  }
  for (std::size_t count : seen) {
    require(count == static_cast<std::size_t>(layout_.samples_per_class), ErrorKind::Data,
            "every class must appear exactly d times");
  }
}

double dist_cos(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  require(a.size() == b.size(), ErrorKind::Data, "dist_cos: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, ErrorKind::Data, "dist_cos: zero-norm input");
  return 2.0 - 2.0 * a.dot(b) / (na * nb);
}

Matrix embed(const Matrix& features, const LossConfig& cfg) {
  cfg.validate();
  if (cfg.metric == Metric::Spherical) return features;
  Matrix z(features.rows(), features.cols());
  for (Index i = 0; i < features.rows(); ++i) {
    const Vector clipped = geo::clip_features(features.row(i).transpose(), cfg.clip_radius);
    z.row(i) = geo::raw::clip_ball(geo::raw::exp_map_zero(clipped, cfg.curvature), cfg.curvature)
                   .transpose();
  }
  return z;
}

double embedded_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                         const LossConfig& cfg) {
  if (cfg.metric == Metric::Spherical) return dist_cos(a, b);
  const Vector diff = a - b;
  const double u = diff.squaredNorm();
  const double c = cfg.curvature;
  const double t = 2.0 * c * u / ((1.0 - c * a.squaredNorm()) * (1.0 - c * b.squaredNorm()));
  return std::log1p(t + std::sqrt(t * (t + 2.0))) / std::sqrt(c);
}

double pair_loss(const LossBatch& batch, const LossConfig& cfg) {
  require(batch.layout().samples_per_class == 2, ErrorKind::Data,
          "pair_loss expects exactly two subsets");
  return evaluate(batch, cfg, false).value;
}

LossGrad batch_loss(const LossBatch& batch, const LossConfig& cfg) {
  return evaluate(batch, cfg, true);
}

}  // namespace hypml::loss
