// Copyright 2026 The RAMAVT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "blocks/network.hpp"

namespace ramavt::cli {

inline constexpr char kCheckpointMagic[8] = {'R', 'A', 'M', 'A', 'V', 'T', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMeta {
  blocks::Variant variant = blocks::Variant::kRamavt;
  InputFormat input_format = InputFormat::kDepth;
  int resolution = 64;
  int action_count = 7;
  int episode = 0;  // training episode reached
  std::uint64_t seed = 0;
};

// Layout (little-endian): magic[8], version u16, metadata block
// (variant and input format as length-prefixed strings, resolution,
// action_count and episode as u32, seed as u64), tensor count u32, then per
// tensor: name length u32, name bytes, rank u32, extents u32[rank], f32 data.
void save_checkpoint(const blocks::QNetwork& net, const CheckpointMeta& meta, const std::string& path);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<blocks::QNetwork> network;
};

// Errors: kIo (unreadable), kBadMagic, kVersion, kTruncated, kSpecMismatch
// (tensor table disagrees with the network the metadata describes).
LoadedCheckpoint load_checkpoint(const std::string& path);
// Also rejects a checkpoint whose metadata differs from `expected`.
LoadedCheckpoint load_checkpoint(const std::string& path, const blocks::QNetworkSpec& expected);

CheckpointMeta meta_for(const blocks::QNetwork& net, int episode, std::uint64_t seed);

}  // namespace ramavt::cli
