#include "hypml/delta.hpp"
#include "hypml/evaluation.hpp"
#include "hypml/geometry.hpp"
#include "hypml/loss.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace hypml;

Matrix gaussian(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
  return m;
}

void BM_DistHyp(benchmark::State& state) {
  const Index dim = state.range(0);
  const Matrix pts = gaussian(2, dim, 1, 0.5 / std::sqrt(static_cast<double>(dim)));
  const Vector x = pts.row(0).transpose(), y = pts.row(1).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(geometry::raw::dist_hyp(x, y, 1.0));
}
BENCHMARK(BM_DistHyp)->Arg(16)->Arg(128)->Arg(512);

void BM_MinmaxProduct(benchmark::State& state) {
  const Index n = state.range(0);
  const auto d = delta::DistanceMatrix::euclidean(gaussian(n, 8, 2));
  const Matrix g = delta::gromov_product_matrix(d, 0);
  for (auto _ : state) benchmark::DoNotOptimize(delta::minmax_product(g, g));
  state.SetComplexityN(n);
}
BENCHMARK(BM_MinmaxProduct)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNCubed);

void BM_BatchLoss(benchmark::State& state) {
  const int classes = static_cast<int>(state.range(0));
  const auto cfg = state.range(1) == 0 ? loss::LossConfig::hyperbolic() : loss::LossConfig::spherical();
  Labels labels;
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < classes; ++k) labels.push_back(static_cast<Label>(k));
  const loss::LossBatch batch(gaussian(2 * classes, 128, 3), labels, {classes, 2});
  for (auto _ : state) benchmark::DoNotOptimize(loss::batch_loss(batch, cfg));
}
BENCHMARK(BM_BatchLoss)->ArgsProduct({{8, 32, 128}, {0, 1}})->ArgNames({"classes", "spherical"});

void BM_RecallAtK(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix pts = gaussian(n, 64, 4);
  Labels labels;
  for (Index i = 0; i < n; ++i) labels.push_back(static_cast<Label>(i % 50));
  const std::vector<int> ks{1, 2, 4, 8};
  for (auto _ : state)
    benchmark::DoNotOptimize(eval::recall_at_k(pts, labels, ks, eval::RetrievalMetric::hyperbolic(0.1, 2.3)));
}
BENCHMARK(BM_RecallAtK)->Arg(500)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
