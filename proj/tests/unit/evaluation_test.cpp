#include "hypml/error.hpp"
#include "hypml/evaluation.hpp"
#include "hypml/geometry.hpp"
#include "hypml/loss.hpp"

#include "../support/oracles.hpp"
#include "../support/test_utils.hpp"

#include <gtest/gtest.h>

#include <random>

namespace {

using namespace hypml;
using namespace hypml::eval;

const std::vector<int> kAll{1, 2, 4, 8};

double cosine_oracle(const oracle::Vec& a, const oracle::Vec& b) { return oracle::dist_cos(a, b); }

Labels cyclic_labels(std::size_t m, Label classes) {
  Labels labels(m);
  for (std::size_t i = 0; i < m; ++i) labels[i] = static_cast<Label>(i % classes);
  return labels;
}

TEST(Recall, TwoPoints) {
  Matrix pts(2, 2);
  pts << 1, 0, 0, 1;
  const std::vector<int> one{1};
  EXPECT_EQ(recall_at_k(pts, Labels{3, 3}, one, RetrievalMetric::cosine()).at(1), 1.0);
  EXPECT_EQ(recall_at_k(pts, Labels{3, 4}, one, RetrievalMetric::cosine()).at(1), 0.0);
}

TEST(Recall, CosineMatchesExhaustiveOracle) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix pts = testutil::random_matrix(20, 3, gen);
    const Labels labels = cyclic_labels(20, 4);
    const auto result = recall_at_k(pts, labels, kAll, RetrievalMetric::cosine());
    EXPECT_EQ(result.num_queries, 20u);
    for (int k : kAll) {
      EXPECT_DOUBLE_EQ(result.at(k), oracle::recall_bruteforce(testutil::to_std(pts), labels, k, cosine_oracle));
    }
  }
}

TEST(Recall, HyperbolicMatchesExhaustiveOracle) {
  std::mt19937_64 gen(2);
  const double c = 0.3, r = 2.3;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix pts = testutil::random_matrix(20, 3, gen, 2.0);
    const Labels labels = cyclic_labels(20, 4);
    const auto result = recall_at_k(pts, labels, kAll, RetrievalMetric::hyperbolic(c, r));
    auto dist = [&](const oracle::Vec& a, const oracle::Vec& b) {
      return oracle::dist_hyp(oracle::to_ball(a, c, r), oracle::to_ball(b, c, r), c);
    };
    for (int k : kAll) EXPECT_DOUBLE_EQ(result.at(k), oracle::recall_bruteforce(testutil::to_std(pts), labels, k, dist));
  }
}

TEST(Recall, TiesGoToSmallerIndex) {
  // Candidates 1 and 2 are equidistant from query 0, so query 0 retrieves row 1.
  // Rows 1 and 2 are antipodal and both retrieve row 0.
  Matrix pts(3, 2);
  pts << 1, 0, 0, 1, 0, -1;
  const std::vector<int> one{1};
  // Hits: query 0 and query 1.
  EXPECT_EQ(recall_at_k(pts, Labels{0, 0, 1}, one, RetrievalMetric::cosine()).at(1), 2.0 / 3.0);
  // Hit: query 2 only; query 0 would hit if the tie went to index 2.
  EXPECT_EQ(recall_at_k(pts, Labels{0, 1, 0}, one, RetrievalMetric::cosine()).at(1), 1.0 / 3.0);
}

TEST(Recall, MonotoneAndSaturating) {
  std::mt19937_64 gen(3);
  const Matrix pts = testutil::random_matrix(30, 4, gen);
  const Labels labels = cyclic_labels(30, 6);
  std::vector<int> ks(29);
  for (int k = 1; k <= 29; ++k) ks[static_cast<std::size_t>(k - 1)] = k;
  for (const auto& metric : {RetrievalMetric::cosine(), RetrievalMetric::hyperbolic(1.0, 2.3)}) {
    const auto result = recall_at_k(pts, labels, ks, metric);
    for (std::size_t i = 1; i < result.recall_at.size(); ++i) {
      EXPECT_GE(result.recall_at[i].second, result.recall_at[i - 1].second);
    }
    EXPECT_EQ(result.at(29), 1.0);
  }
}

TEST(Recall, RotationInvariantForCosine) {
  std::mt19937_64 gen(4);
  const Matrix pts = testutil::random_matrix(40, 5, gen);
  const Labels labels = cyclic_labels(40, 5);
  const Eigen::HouseholderQR<Matrix> qr(testutil::random_matrix(5, 5, gen));
  const Matrix rotation = qr.householderQ();
  const auto a = recall_at_k(pts, labels, kAll, RetrievalMetric::cosine());
  const auto b = recall_at_k(pts * rotation, labels, kAll, RetrievalMetric::cosine());
  for (int k : kAll) EXPECT_EQ(a.at(k), b.at(k));
}

TEST(Recall, RejectsBadArguments) {
  const Matrix pts = Matrix::Identity(4, 4);
  const Labels labels{0, 0, 1, 1};
  const std::vector<int> too_big{4};
  EXPECT_THROW(recall_at_k(pts, labels, too_big, RetrievalMetric::cosine()), Error);
  const std::vector<int> zero{0};
  EXPECT_THROW(recall_at_k(pts, labels, zero, RetrievalMetric::cosine()), Error);
  const std::vector<int> one{1};
  EXPECT_THROW(recall_at_k(pts, Labels{0, 0, 1}, one, RetrievalMetric::cosine()), Error);
  EXPECT_THROW(recall_at_k(pts, labels, one, RetrievalMetric::cosine()).at(2), Error);
}

TEST(QueryGallery, SingleItemGalleries) {
  Matrix q(1, 2), g(1, 2);
  q << 1, 0;
  g << 0.5, 0.5;
  const std::vector<int> one{1};
  EXPECT_EQ(query_gallery_recall(q, Labels{2}, g, Labels{2}, one, RetrievalMetric::cosine()).at(1), 1.0);
  EXPECT_EQ(query_gallery_recall(q, Labels{2}, g, Labels{3}, one, RetrievalMetric::cosine()).at(1), 0.0);
}

TEST(QueryGallery, MatchesExhaustiveOracle) {
  std::mt19937_64 gen(5);
  const Matrix q = testutil::random_matrix(15, 3, gen);
  const Matrix g = testutil::random_matrix(25, 3, gen);
  const Labels ql = cyclic_labels(15, 5);
  const Labels gl = cyclic_labels(25, 5);
  const auto result = query_gallery_recall(q, ql, g, gl, kAll, RetrievalMetric::cosine());
  for (int k : kAll) {
    EXPECT_DOUBLE_EQ(result.at(k), oracle::recall_query_gallery(testutil::to_std(q), ql, testutil::to_std(g), gl, k,
                                                                cosine_oracle));
  }
  const std::vector<int> too_big{26};
  EXPECT_THROW(query_gallery_recall(q, ql, g, gl, too_big, RetrievalMetric::cosine()), Error);
}

TEST(Prepare, HyperbolicUsesTrainingPipeline) {
  std::mt19937_64 gen(6);
  const Matrix pts = testutil::random_matrix(5, 3, gen, 3.0);
  const auto metric = RetrievalMetric::hyperbolic(0.1, 2.3);
  loss::LossConfig cfg = loss::LossConfig::hyperbolic();
  EXPECT_EQ(prepare(pts, metric), loss::embed(pts, cfg));
  const auto raw = RetrievalMetric::hyperbolic(0.1, 2.3, false);
  const Matrix inside = 0.5 * pts / pts.norm();
  EXPECT_EQ(prepare(inside, raw), inside);
}

}  // namespace
