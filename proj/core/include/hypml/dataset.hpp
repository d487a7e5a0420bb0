#pragma once

// Labeled vector datasets: synthetic tree-structured generation, class
// splits for unseen-class evaluation, and file I/O.
//
// Binary layout (little-endian): "HYPD", u16 version = 1, u32 m, u32 D,
// m x u32 labels, m x D x f64 features (row-major).
// CSV layout: header "label,f0,...,f{D-1}", one sample per row.

#include "hypml/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace hypml::data {

struct VectorDataset {
  Matrix features;
  Labels labels;

  Index size() const noexcept { return features.rows(); }
  Index dim() const noexcept { return features.cols(); }
  /// Shape agreement and finiteness; throws Data otherwise.
  void validate() const;
};

/// Disjoint class sets for training and (unseen-class) testing.
struct ClassSplit {
  Labels train_classes;
  Labels test_classes;
};

/// Sorted distinct class ids, alternately assigned: even rank -> train, odd -> test.
ClassSplit alternate_split(const Labels& labels);

/// Rows whose label is in classes, in original order.
VectorDataset select_classes(const VectorDataset& data, const Labels& classes);

/// Per-class mean feature vectors, one row per class in ascending label order.
VectorDataset class_means(const VectorDataset& data);

/// Throws Data unless every class has at least min_count samples.
void require_class_sizes(const VectorDataset& data, std::size_t min_count);

struct TreeSpec {
  int branching = 3;
  int depth = 4;
  int per_leaf = 10;
  double sigma = 0.05;
  int dim = 32;
  std::uint64_t seed = 0;
  /// Length of the first step below the root; halves at each level.
  double root_step = 4.0;

  void validate() const;
};

struct TreeDataset {
  VectorDataset data;   // labels are leaf indices 0 .. branching^depth - 1
  Matrix prototypes;    // one row per leaf
  ClassSplit split;
};

/// Full b-ary tree of depth h. A leaf prototype is the sum of random unit
/// directions along its root path, scaled by root_step / 2^level; samples are
/// prototype + N(0, sigma^2 I).
TreeDataset gen_tree_dataset(const TreeSpec& spec);

enum class Format { Binary, Csv };

/// ".csv" selects Csv; everything else is Binary.
Format format_for_path(const std::filesystem::path& path);

void write_binary(std::ostream& out, const VectorDataset& data);
VectorDataset read_binary(std::istream& in);
void write_csv(std::ostream& out, const VectorDataset& data);
VectorDataset read_csv(std::istream& in);

void save_dataset(const std::filesystem::path& path, const VectorDataset& data);
void save_dataset(const std::filesystem::path& path, const VectorDataset& data, Format format);
VectorDataset load_dataset(const std::filesystem::path& path);
VectorDataset load_dataset(const std::filesystem::path& path, Format format);

inline constexpr std::uint16_t kBinaryVersion = 1;

}  // namespace hypml::data
