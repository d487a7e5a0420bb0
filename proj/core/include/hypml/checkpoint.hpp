#pragma once

// Checkpoint files: "HYPC", u16 version, u32 manifest length, UTF-8 JSON
// manifest, u32 tensor count, then per tensor u16 name length, name,
// u32 rows, u32 cols, rows x cols f64 (all little-endian). Parameters are
// stored as "param/<name>", optimizer moments as "adam.m/<name>" and
// "adam.v/<name>".

#include "hypml/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace hypml::training {

struct CheckpointInfo {
  std::string config_hash;
  std::map<std::string, double> metrics;
};

void write_checkpoint(std::ostream& out, const ModelState& state, const CheckpointInfo& info);
ModelState read_checkpoint(std::istream& in, CheckpointInfo* info = nullptr);

void save_checkpoint(const std::filesystem::path& path, const ModelState& state, const CheckpointInfo& info);
ModelState load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

inline constexpr std::uint16_t kCheckpointVersion = 1;

}  // namespace hypml::training
