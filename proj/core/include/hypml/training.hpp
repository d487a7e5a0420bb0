#pragma once

// Class-balanced batch sampling, AdamW, gradient norm clipping and the
// training loop encoder -> head -> pairwise loss.

#include "hypml/dataset.hpp"
#include "hypml/loss.hpp"
#include "hypml/model.hpp"
#include "hypml/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace hypml::training {

// ---------------------------------------------------------------------------
// Sampling

/// Rows grouped by class; classes with fewer than samples_per_class rows are
/// not eligible for sampling.
class ClassIndex {
 public:
  ClassIndex(std::span<const Label> labels, int samples_per_class);

  std::size_t eligible_classes() const noexcept { return eligible_.size(); }
  std::size_t excluded_classes() const noexcept { return excluded_; }
  const std::vector<Label>& eligible_labels() const noexcept { return eligible_labels_; }

  /// N distinct classes, d distinct rows each, in subset-grouped order:
  /// result[t * N + k] is the t-th drawn row of the k-th drawn class.
  std::vector<std::size_t> sample(int classes, Rng& rng) const;

 private:
  int per_class_;
  std::vector<std::vector<std::size_t>> eligible_;
  std::vector<Label> eligible_labels_;
  std::size_t excluded_ = 0;
};

std::vector<std::size_t> sample_batch(std::span<const Label> labels, int classes, int samples_per_class,
                                      Rng& rng);

// ---------------------------------------------------------------------------
// Optimization

struct AdamWConfig {
  double lr = 3e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamWConfig hp;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(std::span<const Parameter* const> params, AdamWConfig hp);
};

/// Decoupled weight decay (only where Parameter::decay) followed by the bias-
/// corrected adaptive-moment update. Frozen parameters are left untouched.
void optimizer_step(std::span<Parameter* const> params, const Gradients& grads, OptimizerState& state);

double global_norm(const Gradients& grads);

/// Rescales grads by max_norm / norm when the global L2 norm exceeds max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(Gradients& grads, double max_norm);

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  double lr = 3e-4;
  double weight_decay = 0.01;
  std::uint64_t steps = 500;
  int batch_classes = 8;
  int samples_per_class = 2;
  double grad_clip_norm = 3.0;
  std::uint64_t seed = 0;
  loss::LossConfig loss;
  /// Shift/flip augmentation; only applied with an image (vit) encoder.
  bool augment = true;

  void validate() const;
  AdamWConfig adamw() const { return {lr, weight_decay, 0.9, 0.999, 1e-8}; }
};

struct ModelState {
  Model model;
  OptimizerState optimizer;
  TrainConfig config;
  Rng rng;
  std::uint64_t step = 0;
};

/// Fresh state: the RNG is seeded with config.seed and then initializes the model.
ModelState init_state(const ModelSpec& spec, const TrainConfig& config);

struct StepRecord {
  std::uint64_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Runs `steps` iterations of sample -> encode -> head -> batch_loss -> clip ->
/// optimizer step on `train_data`. Throws Numerical on a non-finite loss.
std::vector<StepRecord> train(const data::VectorDataset& train_data, ModelState& state, std::uint64_t steps,
                              const StepCallback& on_step = {});

/// One training step on explicit rows of train_data (no sampling).
StepRecord train_step(const data::VectorDataset& train_data, std::span<const std::size_t> rows,
                      ModelState& state);

/// Random +-1 pixel shift with zero fill and a horizontal flip with probability 1/2.
Vector augment_image(const Eigen::Ref<const Vector>& image, Index channels, Index side, Rng& rng);

}  // namespace hypml::training
