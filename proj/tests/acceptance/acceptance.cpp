// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "commands.hpp"
#include "run_config.hpp"

#include "hypml/checkpoint.hpp"
#include "hypml/dataset.hpp"
#include "hypml/delta.hpp"
#include "hypml/encoder.hpp"
#include "hypml/geometry.hpp"
#include "hypml/loss.hpp"
#include "hypml/parallel.hpp"
#include "hypml/random.hpp"

#include "../support/oracles.hpp"
#include "../support/test_utils.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hypml;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Outcome geometry_identities() {
  using namespace hypml::geometry;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(101);
  const Curvature c(1.0);
  double identity = 0.0, inverse = 0.0, symmetry = 0.0, triangle = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const Vector x = testutil::random_in_ball(5, c.radius(), gen);
    const Vector y = testutil::random_in_ball(5, c.radius(), gen);
    const Vector z = testutil::random_in_ball(5, c.radius(), gen);
    const BallPoint bx(x, c), by(y, c), bz(z, c);
    identity = std::max(identity, (mobius_add(BallPoint::origin(5, c), by).coords() - y).norm() / y.norm());
    inverse = std::max(inverse, mobius_add(bx, BallPoint(-x, c)).coords().norm());
    symmetry = std::max(symmetry, std::abs(dist_hyp(bx, by) - dist_hyp(by, bx)));
    triangle = std::max(triangle, dist_hyp(bx, bz) - dist_hyp(bx, by) - dist_hyp(by, bz));
  }
  const double elapsed = seconds_since(start);
  const bool ok = identity <= 1e-12 && inverse <= 1e-12 && symmetry <= 1e-10 && triangle <= 1e-9 && elapsed < 5.0;
  return {ok, fmt("identity %.2e inverse %.2e symmetry %.2e triangle slack %.2e", identity, inverse, symmetry,
                  triangle) +
                  fmt(" in %.2f s", elapsed)};
}

Outcome euclidean_limit() {
  using namespace hypml::geometry;
  std::mt19937_64 gen(102);
  const Curvature c(1e-8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector x = testutil::random_in_ball(4, 1.0, gen, 1.0);
    const Vector y = testutil::random_in_ball(4, 1.0, gen, 1.0);
    const double euclid = 2.0 * (x - y).norm();
    worst = std::max(worst, std::abs(dist_hyp(BallPoint(x, c), BallPoint(y, c)) - euclid) / euclid);
  }
  return {worst <= 1e-5, fmt("worst relative gap %.2e at c = 1e-8", worst)};
}

loss::LossBatch grouped(const Matrix& f, int classes, int per_class) {
  Labels labels;
  for (int t = 0; t < per_class; ++t)
    for (int k = 0; k < classes; ++k) labels.push_back(static_cast<Label>(k));
  return loss::LossBatch(f, labels, {classes, per_class});
}

Outcome loss_gradients() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(103);
  std::uniform_int_distribution<int> classes_dist(2, 8), dim_dist(2, 16), per_class_dist(2, 3);
  double worst = 0.0;
  int clipped_batches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = classes_dist(gen), per_class = per_class_dist(gen), dim = dim_dist(gen);
    const Matrix f = testutil::random_matrix(classes * per_class, dim, gen, trial % 2 == 0 ? 0.3 : 2.0);
    const loss::LossConfig cfg = trial % 4 < 2 ? loss::LossConfig::hyperbolic() : loss::LossConfig::spherical();
    if (f.rowwise().norm().maxCoeff() > cfg.clip_radius) ++clipped_batches;
    const auto lg = loss::batch_loss(grouped(f, classes, per_class), cfg);
    const Matrix numeric = testutil::finite_difference(
        [&](const Matrix& x) { return loss::batch_loss(grouped(x, classes, per_class), cfg).value; }, f, 1e-5);
    worst = std::max(worst, testutil::max_relative_error(lg.grad, numeric));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-5 && elapsed < 60.0 && clipped_batches > 0,
          fmt("worst relative error %.2e over 100 batches (%g with active clipping) in %.2f s", worst,
              clipped_batches, elapsed)};
}

double encoder_gradient_error(encoder::Encoder& enc, const Matrix& inputs, std::mt19937_64& gen) {
  const Matrix upstream = testutil::random_matrix(inputs.rows(), enc.output_dim(), gen);
  std::unique_ptr<encoder::Cache> cache;
  enc.forward(inputs, cache);
  Gradients grads = enc.params().zero_gradients();
  const Matrix input_grad = enc.backward(*cache, upstream, grads);
  auto objective = [&](const Matrix& x) { return enc.forward(x).cwiseProduct(upstream).sum(); };
  double worst = 0.0;
  for (std::size_t i = 0; i < enc.params().size(); ++i) {
    Parameter& p = enc.params()[i];
    if (!p.trainable) continue;
    const Matrix original = p.value;
    const Matrix numeric = testutil::finite_difference(
        [&](const Matrix& v) {
          p.value = v;
          return objective(inputs);
        },
        original, 1e-5);
    p.value = original;
    // Softmax-invariant parameters have an exactly zero gradient, so difference noise
    // is the whole numeric value; measure the analytic one against zero instead.
    const double err = numeric.cwiseAbs().maxCoeff() < 1e-8 ? grads[i].cwiseAbs().maxCoeff() / 1e-6
                                                             : testutil::max_relative_error(grads[i], numeric);
    worst = std::max(worst, err);
  }
  return std::max(worst, testutil::max_relative_error(input_grad, testutil::finite_difference(objective, inputs, 1e-5)));
}

Outcome encoder_gradients() {
  std::mt19937_64 gen(104);
  Rng rng(104);
  encoder::MlpEncoder mlp(encoder::MlpSpec{6, {8}, 5, encoder::Activation::GeluTanh}, rng);
  const double mlp_err = encoder_gradient_error(mlp, testutil::random_matrix(4, 6, gen), gen);

  encoder::VitSpec spec;
  spec.image_size = 4;
  spec.patch_size = 2;
  spec.channels = 2;
  spec.width = 8;
  spec.depth = 1;
  spec.heads = 2;
  spec.mlp_width = 12;
  spec.freeze_patch_projection = false;
  encoder::MicroVit vit(spec, rng);
  for (auto& p : vit.params()) p.value = testutil::random_matrix(p.value.rows(), p.value.cols(), gen, 0.5);
  const double vit_err = encoder_gradient_error(vit, testutil::random_matrix(2, 32, gen), gen);
  return {mlp_err <= 1e-5 && vit_err <= 1e-5, fmt("MLP %.2e, 1-block MicroViT %.2e", mlp_err, vit_err)};
}

Outcome delta_oracle() {
  using namespace hypml::delta;
  std::mt19937_64 gen(105);
  std::uniform_int_distribution<Index> size(3, 64);
  int matches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = size(gen);
    const auto d = DistanceMatrix::euclidean(testutil::random_matrix(n, 1 + trial % 5, gen));
    const std::size_t base = static_cast<std::size_t>(trial % n);
    const double expected = std::max(0.0, oracle::delta_naive(testutil::to_std(d.values()), base));
    if (delta_from_matrix(d, static_cast<Index>(base)).delta == expected) ++matches;
  }
  int zero_trees = 0;
  std::uniform_int_distribution<std::size_t> tree_size(3, 40);
  std::uniform_int_distribution<int> weight(1, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = tree_size(gen);
    std::vector<std::size_t> parent(n, 0);
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      parent[i] = std::uniform_int_distribution<std::size_t>(0, i - 1)(gen);
      w[i] = weight(gen);
    }
    const auto metric = oracle::tree_metric(n, parent, w);
    Matrix m(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = metric[i][j];
    if (delta_from_matrix(DistanceMatrix(m), 0).delta == 0.0) ++zero_trees;
  }
  return {matches == 50 && zero_trees == 20,
          fmt("%g/50 matrices equal the triple-loop oracle, %g/20 trees give delta 0", matches, zero_trees)};
}

Outcome curvature_arithmetic() {
  const auto c = delta::recommended_curvature(0.280);
  const bool ok = c.has_value() && std::abs(*c - 0.264489) <= 1e-6;
  return {ok, fmt("delta_rel 0.280 -> c %.9f", c.value_or(NAN))};
}

// ---------------------------------------------------------------------------
// Desk-scale experiments on the seed-7 tree suite.

data::VectorDataset tree_suite() {
  data::TreeSpec spec;
  spec.branching = 3;
  spec.depth = 4;
  spec.per_leaf = 10;
  spec.sigma = 0.05;
  spec.dim = 32;
  spec.seed = 7;
  return data::gen_tree_dataset(spec).data;
}

hypmetric::RunConfig suite_config(int head_dim, const std::string& metric = "hyperbolic") {
  hypmetric::Overrides ov;
  ov.metric = metric;
  ov.head_dim = head_dim;
  ov.steps = 500;
  ov.batch_classes = 8;
  ov.samples_per_class = 2;
  if (metric == "hyperbolic") {
    ov.curvature = 0.1;
    ov.tau = 0.2;
    ov.clip_radius = 2.3;
  }
  return hypmetric::parse_run_config(nlohmann::json::object(), ov);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::map<double, double> mean_by_value(const std::vector<hypmetric::SweepRow>& rows) {
  std::map<double, std::vector<double>> grouped_rows;
  for (const auto& r : rows) grouped_rows[r.value].push_back(r.recall_at_1);
  std::map<double, double> out;
  for (const auto& [value, recalls] : grouped_rows) out[value] = mean(recalls);
  return out;
}

Outcome desk_retrieval(const data::VectorDataset& suite) {
  set_max_threads(1);
  const auto start = std::chrono::steady_clock::now();
  const auto exp = hypmetric::run_experiment(suite_config(16), suite);
  const double elapsed = seconds_since(start);
  const double r1 = exp.evaluation.head.at(1);
  return {r1 >= 0.90 && elapsed < 180.0, fmt("head Recall@1 %.4f on unseen classes in %.2f s single-threaded", r1, elapsed)};
}

Outcome hyp_vs_sph(const data::VectorDataset& suite) {
  bool ok = true;
  std::string detail;
  for (int dim : {2, 4}) {
    const auto hyp = hypmetric::run_sweep(suite_config(dim), suite, "head_dim", {double(dim)}, 5, {true});
    const auto sph = hypmetric::run_sweep(suite_config(dim, "spherical"), suite, "head_dim", {double(dim)}, 5, {true});
    const double h = mean_by_value(hyp).begin()->second, s = mean_by_value(sph).begin()->second;
    ok = ok && h >= s - 0.02;
    detail += fmt("dim %g: hyperbolic %.4f vs spherical %.4f; ", dim, h, s);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail + " (5 seeds)"};
}

Outcome sweep_shape(const data::VectorDataset& suite) {
  const auto c_values = hypmetric::default_sweep_values("c");
  const auto c_means = mean_by_value(hypmetric::run_sweep(suite_config(16), suite, "c", c_values, 5, {true}));
  double best_other = -1.0;
  for (const auto& [c, m] : c_means)
    if (c != 1.0) best_other = std::max(best_other, m);
  const double at_one = c_means.at(1.0);
  const bool c_ok = at_one < best_other;

  const auto dim_means =
      mean_by_value(hypmetric::run_sweep(suite_config(16), suite, "head_dim", {16, 32, 64, 128}, 5, {true}));
  bool dim_ok = true;
  double prev = -1.0;
  std::string dims;
  for (const auto& [dim, m] : dim_means) {
    dim_ok = dim_ok && m >= prev - 0.02;
    prev = m;
    dims += fmt("%g:%.4f ", dim, m);
  }
  std::string cs;
  for (const auto& [c, m] : c_means) cs += fmt("%g:%.4f ", c, m);
  return {c_ok && dim_ok, std::string(c_ok ? "" : "c = 1.0 attains the maximum; ") + "c sweep " + cs +
                              "| head dim sweep " + dims + (dim_ok ? "non-decreasing within 0.02" : "decreasing")};
}

// ---------------------------------------------------------------------------

std::string checkpoint_bytes(const training::ModelState& state) {
  std::ostringstream out;
  training::write_checkpoint(out, state, {});
  return out.str();
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const data::VectorDataset& suite) {
  const auto cfg = suite_config(16);
  const auto train_set = hypmetric::split_classes(suite).train;
  const ModelSpec spec = hypmetric::resolve_model(cfg, suite.dim());

  auto straight = training::init_state(spec, cfg.train);
  training::train(train_set, straight, 300);
  auto first = training::init_state(spec, cfg.train);
  training::train(train_set, first, 120);
  std::istringstream saved(checkpoint_bytes(first));
  auto resumed = training::read_checkpoint(saved);
  training::train(train_set, resumed, 180);
  const bool resume_ok = checkpoint_bytes(resumed) == checkpoint_bytes(straight);

  const fs::path dir = fs::temp_directory_path() / "hypml_acceptance";
  fs::create_directories(dir);
  bool roundtrip_ok = true;
  for (const char* name : {"suite.hypd", "suite.csv"}) {
    data::save_dataset(dir / name, suite);
    const auto back = data::load_dataset(dir / name);
    data::save_dataset(dir / (std::string("again_") + name), back);
    roundtrip_ok = roundtrip_ok && back.features == suite.features && back.labels == suite.labels &&
                   file_bytes(dir / name) == file_bytes(dir / (std::string("again_") + name));
  }

  hypmetric::TrainOptions topts;
  topts.config = suite_config(16);
  topts.config.data = (dir / "suite.hypd").string();
  topts.config.out = (dir / "run").string();
  topts.config.train.steps = 100;
  topts.progress.quiet = true;
  const std::string report_a = hypmetric::cmd_train(topts).text();
  const std::string ckpt_a = file_bytes(dir / "run" / "checkpoint.hypc");
  const std::string report_b = hypmetric::cmd_train(topts).text();
  hypmetric::DeltaOptions dopts;
  dopts.data = topts.config.data;
  dopts.sample_size = 300;
  const bool reports_ok = report_a == report_b && ckpt_a == file_bytes(dir / "run" / "checkpoint.hypc") &&
                          hypmetric::cmd_delta(dopts).text() == hypmetric::cmd_delta(dopts).text();
  fs::remove_all(dir);

  return {resume_ok && roundtrip_ok && reports_ok,
          std::string("resume ") + (resume_ok ? "bit-exact" : "DIFFERS") + ", dataset round trip " +
              (roundtrip_ok ? "bit-exact" : "DIFFERS") + ", repeated reports " + (reports_ok ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    if (!out.pass) ++failures;
    std::cout << "AC" << id << ' ' << (out.pass ? "PASS" : "FAIL") << ' ' << name << ": " << out.detail << std::endl;
  };
  report(1, "geometry identities", geometry_identities);
  report(2, "Euclidean limit", euclidean_limit);
  report(3, "loss gradients", loss_gradients);
  report(4, "encoder gradients", encoder_gradients);
  report(5, "delta oracle equivalence", delta_oracle);
  report(6, "curvature recommendation", curvature_arithmetic);
  const data::VectorDataset suite = tree_suite();
  report(7, "desk-scale retrieval", [&] { return desk_retrieval(suite); });
  report(8, "hyperbolic vs spherical", [&] { return hyp_vs_sph(suite); });
  report(9, "sweep shape", [&] { return sweep_shape(suite); });
  report(10, "determinism and persistence", [&] { return determinism(suite); });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
