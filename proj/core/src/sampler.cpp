#include "hypml/error.hpp"
#include "hypml/training.hpp"

#include <map>
#include <numeric>

namespace hypml::training {

ClassIndex::ClassIndex(std::span<const Label> labels, int samples_per_class) : per_class_(samples_per_class) {
  require(samples_per_class >= 2, ErrorKind::Config, "samples per class must be at least 2");
  std::map<Label, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) rows[labels[i]].push_back(i);
  for (auto& [label, members] : rows) {
    if (members.size() < static_cast<std::size_t>(samples_per_class)) {
      ++excluded_;
      continue;
    }
    eligible_labels_.push_back(label);
    eligible_.push_back(std::move(members));
  }
}

std::vector<std::size_t> ClassIndex::sample(int classes, Rng& rng) const {
  require(classes >= 1, ErrorKind::Config, "batch must contain at least one class");
  if (eligible_.size() < static_cast<std::size_t>(classes)) {
    fail(ErrorKind::Data, "insufficient classes: need " + std::to_string(classes) + " with at least " +
                              std::to_string(per_class_) + " samples, have " +
                              std::to_string(eligible_.size()));
  }

  std::vector<std::size_t> class_order(eligible_.size());
  std::iota(class_order.begin(), class_order.end(), std::size_t{0});
  const std::size_t n = static_cast<std::size_t>(classes);
  const std::size_t d = static_cast<std::size_t>(per_class_);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(class_order[i], class_order[i + rng.uniform_index(class_order.size() - i)]);
  }

  std::vector<std::size_t> batch(n * d);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> members = eligible_[class_order[k]];
    for (std::size_t t = 0; t < d; ++t) {
      std::swap(members[t], members[t + rng.uniform_index(members.size() - t)]);
      batch[t * n + k] = members[t];
    }
  }
  return batch;
}

std::vector<std::size_t> sample_batch(std::span<const Label> labels, int classes, int samples_per_class,
                                      Rng& rng) {
  return ClassIndex(labels, samples_per_class).sample(classes, rng);
}

}  // namespace hypml::training
