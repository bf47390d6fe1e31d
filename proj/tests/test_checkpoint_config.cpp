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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <cstring>
#include <random>

#include <zlib.h>

#include "dikm/checkpoint.hpp"
#include "dikm/config.hpp"
#include "dikm/error.hpp"
#include "oracles.hpp"

using namespace dikm;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint(bool with_cache) {
  std::mt19937_64 rng(3);
  Checkpoint cp;
  cp.kind = MetricKind::kDeformationInvariant;
  cp.height = 5;
  cp.width = 4;
  cp.landmarks = 9;
  cp.tps.regularization = 0.25;
  for (int c = 0; c < 3; ++c) cp.centroids.push_back(oracle::random_unit_image(rng, 5, 4));
  if (with_cache) {
    LandmarkCache cache;
    std::normal_distribution<double> n(0, 10);
    for (int i = 0; i < 7; ++i) {
      cache.assignments.push_back(i % 3);
      for (int j = 0; j < 18; ++j) cache.targets.push_back(n(rng));
    }
    cp.cache = cache;
  }
  return cp;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_CASE("checkpoint header layout") {
  const auto bytes = encode_checkpoint(sample_checkpoint(false));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "DIKM");
  CHECK(bytes[4] == kCheckpointVersion);
  CHECK(bytes[8] == 3);    // K
  CHECK(bytes[12] == 5);   // H
  CHECK(bytes[16] == 4);   // W
  CHECK(bytes[20] == 9);   // landmarks
  CHECK(bytes[24] == 2);   // metric
  CHECK(bytes.size() == 4 + 5 * 4 + 4 + 8 + 3 * 20 * 8 + 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  CHECK(stored == static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4))));
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (bool cache : {false, true}) {
    const Checkpoint cp = sample_checkpoint(cache);
    const auto bytes = encode_checkpoint(cp);
    const Checkpoint back = decode_checkpoint(bytes);
    CHECK(back == cp);
    CHECK(encode_checkpoint(back) == bytes);
  }
  const fs::path path = fs::temp_directory_path() / ("dikm_cp_" + std::to_string(::getpid()) + ".dikm");
  save_checkpoint(sample_checkpoint(true), path);
  const Checkpoint loaded = load_checkpoint(path);
  save_checkpoint(loaded, path.string() + ".2");
  std::ifstream a(path, std::ios::binary), b(path.string() + ".2", std::ios::binary);
  const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
  CHECK(sa == sb);
  fs::remove(path);
  fs::remove(path.string() + ".2");
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto good = encode_checkpoint(sample_checkpoint(true));
  auto flipped = good;
  flipped[40] ^= 0x10;
  CHECK(decode_error(flipped) == ErrorCode::kChecksumMismatch);
  auto magic = good;
  magic[0] = 'X';
  CHECK(decode_error(magic) == ErrorCode::kBadMagic);
  CHECK(decode_error(std::vector<std::uint8_t>(good.begin(), good.begin() + 6)) == ErrorCode::kTruncatedFile);
  // A shortened body with a valid checksum still fails on length.
  std::vector<std::uint8_t> cut(good.begin(), good.begin() + 60);
  const auto crc = static_cast<std::uint32_t>(crc32(0L, cut.data(), static_cast<uInt>(cut.size())));
  const auto* p = reinterpret_cast<const std::uint8_t*>(&crc);
  cut.insert(cut.end(), p, p + 4);
  CHECK(decode_error(cut) == ErrorCode::kTruncatedFile);
}

TEST_CASE("config text round trip") {
  RunConfig cfg;
  cfg.metric = MetricKind::kAffineInvariant;
  cfg.k = 7;
  cfg.landmarks = 25;
  cfg.learning_rate = 0.1 + 0.2;  // not representable as a short decimal
  cfg.blur_sigma = 1.0 / 3.0;
  cfg.refresh_affine = true;
  cfg.seed = 18446744073709551615ull;
  cfg.data = "/data/with spaces/train";
  cfg.out = "runs/x";
  RunConfig back;
  back.apply_text(cfg.serialize());
  CHECK(back == cfg);
  CHECK(back.serialize() == cfg.serialize());
}

TEST_CASE("config parsing") {
  RunConfig cfg;
  cfg.apply_text("# comment\n\n  k = 4 \nmetric=euclidean\r\nlearning_rate = 5e-2\n");
  CHECK(cfg.k == 4);
  CHECK(cfg.metric == MetricKind::kEuclidean);
  CHECK(cfg.learning_rate == 0.05);
  CHECK_THROWS_AS(cfg.apply_text("bogus = 1\n"), Error);
  CHECK_THROWS_AS(cfg.apply_text("k = four\n"), Error);
  CHECK_THROWS_AS(cfg.apply_text("k 4\n"), Error);
  CHECK_THROWS_AS(cfg.apply_text("landmarks = 2\n"), Error);
  CHECK_THROWS_AS(cfg.apply_text("blur_sigma = 0\n"), Error);
  CHECK_THROWS_AS(cfg.set("refresh_affine", "maybe"), Error);
  for (const auto& key : RunConfig::keys()) CHECK_NOTHROW(cfg.set(key, cfg.get(key)));
}

TEST_CASE("config maps onto the training budget") {
  RunConfig cfg;
  cfg.epochs = 12;
  cfg.stage1_steps = 3;
  cfg.test_stage2_steps = 44;
  cfg.learning_rate = 0.2;
  const TrainConfig t = cfg.train_config();
  CHECK(t.max_epochs == 12);
  CHECK(t.fit.stage1_steps == 3);
  CHECK(t.test_fit.stage2_steps == 44);
  CHECK(t.test_fit.learning_rate == 0.2);
  CHECK(t.batch_size == 64);
}

TEST_CASE("default sweep grids") {
  CHECK(kLandmarkGrid == std::vector<int>{9, 16, 25, 36, 49, 64});
  for (int l : kLandmarkGrid) CHECK_NOTHROW(grid_side(l));
  CHECK(kLearningRateGrid == std::vector<double>{1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2});
}
