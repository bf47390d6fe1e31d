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

#include "dikm/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "dikm/error.hpp"

namespace dikm {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T value;
    get_bytes(&value, sizeof(T));
    return value;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > size_ - pos_) throw Error(ErrorCode::kTruncatedFile, "checkpoint ends early");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& cp) {
  const std::size_t frame = static_cast<std::size_t>(cp.height) * cp.width;
  for (const Image& c : cp.centroids)
    if (c.height != cp.height || c.width != cp.width)
      throw Error(ErrorCode::kDimensionMismatch, "centroid shape differs from checkpoint header");
  Writer w;
  w.put_bytes("DIKM", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.k()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.width));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cp.landmarks));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cp.kind));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cp.tps.norm));
  w.put<std::uint8_t>(cp.cache ? 1 : 0);
  w.put<std::uint8_t>(0);
  w.put<double>(cp.tps.regularization);
  for (const Image& c : cp.centroids) w.put_bytes(c.pixels.data(), frame * sizeof(double));
  if (cp.cache) {
    const std::size_t n = cp.cache->assignments.size();
    if (cp.cache->targets.size() != n * 2 * static_cast<std::size_t>(cp.landmarks))
      throw Error(ErrorCode::kDimensionMismatch, "landmark cache size does not match its assignments");
    w.put<std::uint32_t>(static_cast<std::uint32_t>(n));
    for (int a : cp.cache->assignments) w.put<std::int32_t>(a);
    w.put_bytes(cp.cache->targets.data(), cp.cache->targets.size() * sizeof(double));
  }
  const std::uint32_t crc = crc32_of(w.bytes().data(), w.bytes().size());
  w.put<std::uint32_t>(crc);
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DIKM", 4) != 0)
    throw Error(ErrorCode::kBadMagic, "not a DIKM checkpoint");
  if (bytes.size() < 8) throw Error(ErrorCode::kTruncatedFile, "checkpoint ends early");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc32_of(bytes.data(), body) != stored) throw Error(ErrorCode::kChecksumMismatch, "checkpoint CRC32 mismatch");

  Reader r(bytes.data() + 4, body - 4);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::kInvalidArgument, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint cp;
  const auto k = r.get<std::uint32_t>();
  cp.height = static_cast<int>(r.get<std::uint32_t>());
  cp.width = static_cast<int>(r.get<std::uint32_t>());
  cp.landmarks = static_cast<int>(r.get<std::uint32_t>());
  const auto metric = r.get<std::uint8_t>();
  const auto kernel = r.get<std::uint8_t>();
  const auto has_cache = r.get<std::uint8_t>();
  r.get<std::uint8_t>();
  if (metric > static_cast<std::uint8_t>(MetricKind::kDeformationInvariant) ||
      kernel > static_cast<std::uint8_t>(KernelNorm::kL2) || has_cache > 1)
    throw Error(ErrorCode::kInvalidArgument, "corrupt checkpoint header");
  cp.kind = static_cast<MetricKind>(metric);
  cp.tps.norm = static_cast<KernelNorm>(kernel);
  cp.tps.regularization = r.get<double>();

  const std::size_t frame = static_cast<std::size_t>(cp.height) * cp.width;
  if (frame != 0 && k > r.remaining() / (frame * sizeof(double)))
    throw Error(ErrorCode::kTruncatedFile, "checkpoint ends early");
  cp.centroids.reserve(k);
  for (std::uint32_t c = 0; c < k; ++c) {
    Image im(cp.height, cp.width);
    r.get_bytes(im.pixels.data(), frame * sizeof(double));
    cp.centroids.push_back(std::move(im));
  }
  if (has_cache) {
    LandmarkCache cache;
    const auto n = r.get<std::uint32_t>();
    const std::size_t per = 2 * static_cast<std::size_t>(cp.landmarks);
    if (n > r.remaining() / (4 + per * sizeof(double))) throw Error(ErrorCode::kTruncatedFile, "checkpoint ends early");
    cache.assignments.resize(n);
    for (auto& a : cache.assignments) a = r.get<std::int32_t>();
    cache.targets.resize(n * per);
    r.get_bytes(cache.targets.data(), cache.targets.size() * sizeof(double));
    cp.cache = std::move(cache);
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kInvalidArgument, "trailing bytes in checkpoint");
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace dikm
