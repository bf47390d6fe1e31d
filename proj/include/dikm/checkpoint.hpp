// Copyright 2026 The DIKM Authors. All Rights Reserved.
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
#include <filesystem>
#include <optional>
#include <vector>

#include "dikm/image.hpp"
#include "dikm/similarity.hpp"
#include "dikm/tps.hpp"

namespace dikm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Training-set assignments and the landmarks each sample was fitted with
/// against its own centroid.
struct LandmarkCache {
  std::vector<int> assignments;
  /// N x 2l, row-major, interleaved (u, v).
  std::vector<double> targets;

  friend bool operator==(const LandmarkCache&, const LandmarkCache&) = default;
};

struct Checkpoint {
  MetricKind kind = MetricKind::kEuclidean;
  int height = 0;
  int width = 0;
  int landmarks = 16;
  TpsOptions tps;
  std::vector<Image> centroids;
  std::optional<LandmarkCache> cache;

  int k() const { return static_cast<int>(centroids.size()); }
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Byte layout, all integers and reals little-endian:
///   "DIKM" u32 version u32 K u32 H u32 W u32 landmarks u8 metric u8 kernel-norm
///   u8 has-cache u8 0  f64 regularization  f64[K*H*W] centroids
///   [u32 N  i32[N] assignments  f64[N*2*landmarks] targets]  u32 crc32
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);

/// Throws BadMagic, TruncatedFile, ChecksumMismatch or InvalidArgument.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace dikm
