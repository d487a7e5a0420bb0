#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace hypml {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

using Label = std::uint32_t;
using Labels = std::vector<Label>;

}  // namespace hypml
