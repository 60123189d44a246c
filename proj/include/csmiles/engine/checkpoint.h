//
// Project csmiles-retro - Copyright 2026 The csmiles-retro Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Binary layout, little-endian:
//   "CSMK1", u32 config length, config text (key=value lines, vocab last),
//   u32 tensor count, then per tensor: u32 name length, name, u32 rank,
//   u32 dims[rank], f32 data in row-major order.

#ifndef CSMILES_ENGINE_CHECKPOINT_H_
#define CSMILES_ENGINE_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csmiles/engine/model.h"

namespace csmiles::engine {

inline constexpr char kCheckpointMagic[] = "CSMK1";

struct Checkpoint {
  ModelConfig config;
  std::vector<std::string> vocab;
  ParameterSet params;
};

std::string serialize_config(const ModelConfig &config, std::span<const std::string> vocab);

void save_checkpoint(const std::string &path, const Model &model,
                     std::span<const std::string> vocab);
// Checkpoint error on a malformed file, FileNotFound if missing.
Checkpoint load_checkpoint(const std::string &path);

// FNV-1a over the f32-rounded values in tensor order.
std::uint64_t parameter_checksum(const ParameterSet &params);
std::uint64_t file_checksum(const std::string &path);

}  // namespace csmiles::engine

#endif  // CSMILES_ENGINE_CHECKPOINT_H_
