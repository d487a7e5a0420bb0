#include "hypml/error.hpp"
#include "hypml/training.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

namespace hypml::training {

void TrainConfig::validate() const {
  require(std::isfinite(lr) && lr > 0.0, ErrorKind::Config, "learning rate must be positive");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, ErrorKind::Config,
          "weight decay must be non-negative");
  require(batch_classes >= 2, ErrorKind::Config, "batch must contain at least 2 classes");
  require(samples_per_class >= 2, ErrorKind::Config, "samples per class must be at least 2");
  require(std::isfinite(grad_clip_norm) && grad_clip_norm > 0.0, ErrorKind::Config,
          "gradient clip norm must be positive");
  loss.validate();
}

ModelState init_state(const ModelSpec& spec, const TrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Model model(spec, rng);
  const auto params = std::as_const(model).parameters();
  OptimizerState optimizer = OptimizerState::for_parameters(params, config.adamw());
  return ModelState{std::move(model), std::move(optimizer), config, std::move(rng), 0};
}

Vector augment_image(const Eigen::Ref<const Vector>& image, Index channels, Index side, Rng& rng) {
  const Index dx = static_cast<Index>(rng.uniform_index(3)) - 1;
  const Index dy = static_cast<Index>(rng.uniform_index(3)) - 1;
  const bool flip = rng.coin();
  Vector out = Vector::Zero(image.size());
  for (Index c = 0; c < channels; ++c) {
    for (Index y = 0; y < side; ++y) {
      const Index sy = y - dy;
      if (sy < 0 || sy >= side) continue;
      for (Index x = 0; x < side; ++x) {
        Index sx = x - dx;
        if (sx < 0 || sx >= side) continue;
        if (flip) sx = side - 1 - sx;
        out(c * side * side + y * side + x) = image(c * side * side + sy * side + sx);
      }
    }
  }
  return out;
}

StepRecord train_step(const data::VectorDataset& train_data, std::span<const std::size_t> rows,
                      ModelState& state) {
  const TrainConfig& cfg = state.config;
  const Index batch = static_cast<Index>(rows.size());
  Matrix inputs(batch, train_data.dim());
  Labels labels(rows.size());
  const auto* vit = std::get_if<encoder::VitSpec>(&state.model.spec().encoder);
  for (Index i = 0; i < batch; ++i) {
    const std::size_t row = rows[static_cast<std::size_t>(i)];
    labels[static_cast<std::size_t>(i)] = train_data.labels[row];
    if (vit != nullptr && cfg.augment) {
      inputs.row(i) = augment_image(train_data.features.row(static_cast<Index>(row)).transpose(),
                                    vit->channels, vit->image_size, state.rng)
                          .transpose();
    } else {
      inputs.row(i) = train_data.features.row(static_cast<Index>(row));
    }
  }

  const Model::Pass pass = state.model.forward(inputs);
  StepRecord record;
  record.step = state.step + 1;

  loss::LossGrad result;
  try {
    const loss::LossBatch loss_batch(pass.head_out, std::move(labels),
                                     {static_cast<int>(rows.size()) / cfg.samples_per_class,
                                      cfg.samples_per_class});
    result = loss::batch_loss(loss_batch, cfg.loss);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Numerical) throw;
    std::ostringstream msg;
    msg << "step " << state.step + 1 << ": " << e.what()
        << " (largest head-output norm " << pass.head_out.rowwise().norm().maxCoeff() << ")";
    fail(ErrorKind::Numerical, msg.str());
  }
  record.loss = result.value;

  Gradients grads = state.model.backward(pass, result.grad);
  record.grad_norm = clip_grad_norm(grads, cfg.grad_clip_norm);
  if (!std::isfinite(record.grad_norm)) {
    std::ostringstream msg;
    msg << "step " << state.step + 1 << ": non-finite gradient norm " << record.grad_norm;
    fail(ErrorKind::Numerical, msg.str());
  }

  const auto params = state.model.parameters();
  optimizer_step(params, grads, state.optimizer);
  ++state.step;
  return record;
}

std::vector<StepRecord> train(const data::VectorDataset& train_data, ModelState& state, std::uint64_t steps,
                              const StepCallback& on_step) {
  state.config.validate();
  train_data.validate();
  require(train_data.dim() == state.model.encoder().input_dim(), ErrorKind::Data,
          "dataset dimension does not match the encoder input");
  std::vector<StepRecord> trace;
  if (steps == 0) return trace;

  const ClassIndex index(train_data.labels, state.config.samples_per_class);
  if (index.excluded_classes() > 0) {
    std::clog << "warning: " << index.excluded_classes() << " classes have fewer than "
              << state.config.samples_per_class << " samples and are excluded from sampling\n";
  }

  trace.reserve(steps);
  for (std::uint64_t s = 0; s < steps; ++s) {
    const std::vector<std::size_t> rows = index.sample(state.config.batch_classes, state.rng);
    trace.push_back(train_step(train_data, rows, state));
    if (on_step) on_step(trace.back());
  }
  return trace;
}

}  // namespace hypml::training
