#include "hypml/evaluation.hpp"

#include "hypml/error.hpp"
#include "hypml/geometry.hpp"
#include "hypml/loss.hpp"
#include "hypml/parallel.hpp"

#include <algorithm>
#include <sstream>

namespace hypml::eval {
namespace {

void validate_ks(std::span<const int> ks, std::size_t candidates) {
  require(!ks.empty(), ErrorKind::Config, "no K values requested");
  for (int k : ks) {
    require(k >= 1, ErrorKind::Config, "K must be at least 1");
    require(static_cast<std::size_t>(k) <= candidates, ErrorKind::Config,
            "K = " + std::to_string(k) + " exceeds the " + std::to_string(candidates) +
                " available candidates");
  }
}

double distance(const Matrix& a, Index i, const Matrix& b, Index j, const RetrievalMetric& metric) {
  if (metric.kind == RetrievalMetric::Kind::Cosine) {
    return 2.0 - 2.0 * a.row(i).dot(b.row(j));  // rows pre-normalized
  }
  return geometry::raw::dist_hyp(a.row(i).transpose(), b.row(j).transpose(), metric.curvature);
}

// Rank (0-based) of the best same-label candidate under (distance, index)
// ordering, or candidates.size() when no candidate shares the label.
template <typename Skip>
std::size_t first_hit_rank(const Matrix& queries, Index q, Label label, const Matrix& gallery,
                           std::span<const Label> gallery_labels, const RetrievalMetric& metric,
                           Skip skip) {
  const Index n = gallery.rows();
  std::vector<double> dist(static_cast<std::size_t>(n));
  bool found = false;
  double best_dist = 0.0;
  Index best_index = 0;
  for (Index j = 0; j < n; ++j) {
    if (skip(j)) continue;
    dist[static_cast<std::size_t>(j)] = distance(queries, q, gallery, j, metric);
    if (gallery_labels[static_cast<std::size_t>(j)] == label && !found) {
      found = true;
      best_dist = dist[static_cast<std::size_t>(j)];
      best_index = j;
    } else if (gallery_labels[static_cast<std::size_t>(j)] == label &&
               dist[static_cast<std::size_t>(j)] < best_dist) {
      best_dist = dist[static_cast<std::size_t>(j)];
      best_index = j;
    }
  }
  if (!found) return static_cast<std::size_t>(n);
  std::size_t rank = 0;
  for (Index j = 0; j < n; ++j) {
    if (skip(j)) continue;
    const double d = dist[static_cast<std::size_t>(j)];
    if (d < best_dist || (d == best_dist && j < best_index)) ++rank;
  }
  return rank;
}

RetrievalMetrics summarize(const std::vector<std::size_t>& ranks, std::span<const int> ks,
                           const RetrievalMetric& metric) {
  std::vector<int> sorted(ks.begin(), ks.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  RetrievalMetrics out;
  out.num_queries = ranks.size();
  out.metric = metric.name();
  for (int k : sorted) {
    std::size_t hits = 0;
    for (std::size_t r : ranks) hits += r < static_cast<std::size_t>(k) ? 1 : 0;
    out.recall_at.emplace_back(k, static_cast<double>(hits) / static_cast<double>(ranks.size()));
  }
  return out;
}

}  // namespace

std::string RetrievalMetric::name() const {
  if (kind == Kind::Cosine) return "cosine";
  std::ostringstream out;
  out << "hyperbolic(c=" << curvature << ")";
  return out.str();
}

double RetrievalMetrics::at(int k) const {
  for (const auto& [key, value] : recall_at) {
    if (key == k) return value;
  }
  fail(ErrorKind::Config, "Recall@" + std::to_string(k) + " was not evaluated");
}

Matrix prepare(const Matrix& embeddings, const RetrievalMetric& metric) {
  if (metric.kind == RetrievalMetric::Kind::Cosine) {
    Matrix unit = embeddings;
    for (Index i = 0; i < unit.rows(); ++i) {
      const double norm = unit.row(i).norm();
      require(norm > 0.0, ErrorKind::Data, "cosine retrieval: zero-norm embedding");
      unit.row(i) /= norm;
    }
    return unit;
  }
  if (!metric.map_to_ball) {
    const geometry::Curvature c(metric.curvature);
    for (Index i = 0; i < embeddings.rows(); ++i) {
      geometry::BallPoint(embeddings.row(i).transpose(), c);  // validates membership
    }
    return embeddings;
  }
  loss::LossConfig cfg{loss::Metric::Hyperbolic, 1.0, metric.curvature, metric.clip_radius};
  return loss::embed(embeddings, cfg);
}

RetrievalMetrics recall_at_k(const Matrix& embeddings, std::span<const Label> labels,
                             std::span<const int> ks, const RetrievalMetric& metric) {
  const std::size_t m = static_cast<std::size_t>(embeddings.rows());
  require(labels.size() == m, ErrorKind::Data, "recall_at_k: labels and embeddings differ in length");
  require(m >= 2, ErrorKind::Data, "recall_at_k needs at least 2 samples");
  validate_ks(ks, m - 1);

  const Matrix points = prepare(embeddings, metric);
  std::vector<std::size_t> ranks(m);
  parallel_for(m, [&](std::size_t q) {
    const Index qi = static_cast<Index>(q);
    ranks[q] = first_hit_rank(points, qi, labels[q], points, labels, metric,
                              [qi](Index j) { return j == qi; });
  });
  return summarize(ranks, ks, metric);
}

RetrievalMetrics query_gallery_recall(const Matrix& queries, std::span<const Label> query_labels,
                                      const Matrix& gallery, std::span<const Label> gallery_labels,
                                      std::span<const int> ks, const RetrievalMetric& metric) {
  require(query_labels.size() == static_cast<std::size_t>(queries.rows()), ErrorKind::Data,
          "query labels and embeddings differ in length");
  require(gallery_labels.size() == static_cast<std::size_t>(gallery.rows()), ErrorKind::Data,
          "gallery labels and embeddings differ in length");
  require(queries.rows() >= 1 && gallery.rows() >= 1, ErrorKind::Data, "empty query or gallery set");
  require(queries.cols() == gallery.cols(), ErrorKind::Data, "query and gallery dimensions differ");
  validate_ks(ks, static_cast<std::size_t>(gallery.rows()));

  const Matrix q_points = prepare(queries, metric);
  const Matrix g_points = prepare(gallery, metric);
  std::vector<std::size_t> ranks(static_cast<std::size_t>(queries.rows()));
  parallel_for(ranks.size(), [&](std::size_t q) {
    ranks[q] = first_hit_rank(q_points, static_cast<Index>(q), query_labels[q], g_points, gallery_labels,
                              metric, [](Index) { return false; });
  });
  return summarize(ranks, ks, metric);
}

}  // namespace hypml::eval
