#pragma once

#include "report.hpp"
#include "run_config.hpp"

#include "hypml/dataset.hpp"
#include "hypml/delta.hpp"
#include "hypml/evaluation.hpp"
#include "hypml/training.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hypmetric {

// ---------------------------------------------------------------------------
// Shared pipeline pieces

struct DataSplits {
  hypml::data::VectorDataset train;
  hypml::data::VectorDataset test;
};

/// Alternate class split of a labeled dataset.
DataSplits split_classes(const hypml::data::VectorDataset& data);

/// "all", "train" or "test".
hypml::data::VectorDataset pick_split(const hypml::data::VectorDataset& data, const std::string& split);

/// The distance the head was trained with.
hypml::eval::RetrievalMetric head_metric(const hypml::loss::LossConfig& loss);

struct Evaluation {
  hypml::eval::RetrievalMetrics encoder;
  hypml::eval::RetrievalMetrics head;
};

Evaluation evaluate(const hypml::Model& model, const hypml::loss::LossConfig& loss,
                    const hypml::data::VectorDataset& data, const std::vector<int>& ks);

struct Experiment {
  hypml::training::ModelState state;
  std::vector<hypml::training::StepRecord> trace;
  Evaluation evaluation;
};

/// Trains from scratch on the training classes and evaluates on the test classes.
Experiment run_experiment(const RunConfig& cfg, const hypml::data::VectorDataset& data,
                          const hypml::training::StepCallback& on_step = {});

/// Quiet flag and progress sink for the long-running commands.
struct Progress {
  bool quiet = false;
  std::uint64_t every = 50;
};

// ---------------------------------------------------------------------------
// Commands

struct GenOptions {
  hypml::data::TreeSpec spec;
  std::string output;
};
Report cmd_gen(const GenOptions& opts);

struct DeltaOptions {
  std::string data;
  std::string checkpoint;  // when set, measure the encoder outputs
  std::string split = "all";
  bool class_means = false;
  hypml::delta::PointMetric metric = hypml::delta::PointMetric::Euclidean;
  std::size_t sample_size = hypml::delta::kDefaultSampleSize;
  std::uint64_t seed = 0;
  int seeds = 1;
  bool all_basepoints = false;
};
Report cmd_delta(const DeltaOptions& opts);

struct TrainOptions {
  RunConfig config;
  std::string resume;
  Progress progress;
};
Report cmd_train(const TrainOptions& opts);

struct EvalOptions {
  std::string checkpoint;
  std::string data;
  std::string gallery;  // optional separate gallery file; queries are then all of `data`
  std::string split = "test";
  std::vector<int> ks{1, 2, 4, 8};
  std::optional<std::string> head_metric;  // must match the trained metric when given
};
Report cmd_eval(const EvalOptions& opts);

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  double recall_at_1 = 0.0;
};

/// Applies one swept value ("c", "head_dim" or "batch_classes") to a config.
RunConfig with_sweep_value(RunConfig cfg, const std::string& param, double value);

/// Trains one model per (value, seed) with seeds base.seed, base.seed + 1, ...
std::vector<SweepRow> run_sweep(const RunConfig& base, const hypml::data::VectorDataset& data,
                                const std::string& param, const std::vector<double>& values, int seeds,
                                const Progress& progress = {});

struct SweepOptions {
  RunConfig base;
  std::string param;
  std::vector<double> values;  // empty: the default grid for param
  int seeds = 1;
  Progress progress;
};
Report cmd_sweep(const SweepOptions& opts);
std::vector<double> default_sweep_values(const std::string& param);

struct ExportOptions {
  std::string checkpoint;
  std::string data;
  std::string output;
  std::string space = "head";
  std::string split = "test";
};
Report cmd_export(const ExportOptions& opts);

}  // namespace hypmetric
