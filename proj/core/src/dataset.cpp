#include "hypml/dataset.hpp"

#include "hypml/error.hpp"
#include "hypml/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hypml::data {

void VectorDataset::validate() const {
  require(static_cast<Index>(labels.size()) == features.rows(), ErrorKind::Data,
          "dataset: label count does not match the number of rows");
  require(features.allFinite(), ErrorKind::Data, "dataset: non-finite feature values");
}

ClassSplit alternate_split(const Labels& labels) {
  const std::set<Label> distinct(labels.begin(), labels.end());
  ClassSplit split;
  std::size_t rank = 0;
  for (Label l : distinct) (rank++ % 2 == 0 ? split.train_classes : split.test_classes).push_back(l);
  return split;
}

VectorDataset select_classes(const VectorDataset& data, const Labels& classes) {
  const std::set<Label> wanted(classes.begin(), classes.end());
  std::vector<Index> rows;
  for (Index i = 0; i < data.size(); ++i) {
    if (wanted.contains(data.labels[static_cast<std::size_t>(i)])) rows.push_back(i);
  }
  VectorDataset out;
  out.features.resize(static_cast<Index>(rows.size()), data.dim());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = data.features.row(rows[r]);
    out.labels.push_back(data.labels[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

VectorDataset class_means(const VectorDataset& data) {
  std::map<Label, std::pair<Vector, std::size_t>> sums;
  for (Index i = 0; i < data.size(); ++i) {
    auto [it, inserted] = sums.try_emplace(data.labels[static_cast<std::size_t>(i)],
                                           Vector::Zero(data.dim()), 0);
    it->second.first += data.features.row(i).transpose();
    ++it->second.second;
  }
  VectorDataset out;
  out.features.resize(static_cast<Index>(sums.size()), data.dim());
  Index row = 0;
  for (const auto& [label, acc] : sums) {
    out.features.row(row++) = (acc.first / static_cast<double>(acc.second)).transpose();
    out.labels.push_back(label);
  }
  return out;
}

void require_class_sizes(const VectorDataset& data, std::size_t min_count) {
  std::map<Label, std::size_t> counts;
  for (Label l : data.labels) ++counts[l];
  for (const auto& [label, count] : counts) {
    if (count < min_count) {
      fail(ErrorKind::Data, "class " + std::to_string(label) + " has " + std::to_string(count) +
                                " samples; at least " + std::to_string(min_count) + " required");
    }
  }
}

void TreeSpec::validate() const {
  require(branching >= 2, ErrorKind::Config, "tree branching factor must be at least 2");
  require(depth >= 1, ErrorKind::Config, "tree depth must be at least 1");
  require(per_leaf >= 2, ErrorKind::Config, "samples per leaf must be at least 2");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::Config, "noise sigma must be positive");
  require(dim >= 1, ErrorKind::Config, "ambient dimension must be positive");
  require(std::isfinite(root_step) && root_step > 0.0, ErrorKind::Config, "root step must be positive");
  const double leaves = std::pow(static_cast<double>(branching), depth);
  require(leaves * per_leaf <= 1e8, ErrorKind::Config, "tree dataset would exceed 1e8 samples");
}

TreeDataset gen_tree_dataset(const TreeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  auto random_direction = [&] {
    Vector u(spec.dim);
    do {
      for (Index j = 0; j < u.size(); ++j) u(j) = rng.normal();
    } while (u.norm() == 0.0);
    return Vector(u / u.norm());
  };

  // Breadth-first expansion; level l children sit root_step / 2^l further out.
  std::vector<Vector> level{Vector::Zero(spec.dim)};
  double step = spec.root_step;
  for (int l = 0; l < spec.depth; ++l) {
    std::vector<Vector> next;
    next.reserve(level.size() * static_cast<std::size_t>(spec.branching));
    for (const Vector& parent : level) {
      for (int b = 0; b < spec.branching; ++b) next.push_back(parent + step * random_direction());
    }
    level = std::move(next);
    step *= 0.5;
  }

  TreeDataset out;
  const Index leaves = static_cast<Index>(level.size());
  out.prototypes.resize(leaves, spec.dim);
  for (Index i = 0; i < leaves; ++i) out.prototypes.row(i) = level[static_cast<std::size_t>(i)].transpose();

  out.data.features.resize(leaves * spec.per_leaf, spec.dim);
  out.data.labels.reserve(static_cast<std::size_t>(leaves * spec.per_leaf));
  Index row = 0;
  for (Index leaf = 0; leaf < leaves; ++leaf) {
    for (int s = 0; s < spec.per_leaf; ++s) {
      for (Index j = 0; j < spec.dim; ++j) {
        out.data.features(row, j) = out.prototypes(leaf, j) + spec.sigma * rng.normal();
      }
      out.data.labels.push_back(static_cast<Label>(leaf));
      ++row;
    }
  }
  out.split = alternate_split(out.data.labels);
  return out;
}

}  // namespace hypml::data
