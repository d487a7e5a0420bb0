#pragma once

#include "hypml/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace hypml {

struct Parameter {
  std::string name;
  Matrix value;
  bool decay = true;      // subject to decoupled weight decay
  bool trainable = true;  // false for frozen tensors
};

/// Gradients, index-aligned with the owning parameter list.
using Gradients = std::vector<Matrix>;

class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value, bool decay, bool trainable = true);

  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const noexcept { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  Gradients zero_gradients() const;
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
};

}  // namespace hypml
