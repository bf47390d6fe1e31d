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
#include <string>
#include <vector>

#include "dikm/clustering.hpp"
#include "dikm/similarity.hpp"

namespace dikm {

/// Everything that determines a run. Stored as `key = value` lines.
struct RunConfig {
  MetricKind metric = MetricKind::kDeformationInvariant;
  int k = 10;
  int landmarks = 16;
  double learning_rate = 1e-2;
  int epochs = 150;
  int batch_size = 64;
  double blur_sigma = 2.0;
  int stage1_steps = 25;
  int stage2_steps = 10;
  bool refresh_affine = false;
  double clamp_cells = 1.5;
  int test_stage1_steps = 150;
  int test_stage2_steps = 100;
  double change_tolerance = 0.001;
  double regularization = 0.0;
  std::uint64_t seed = 0;
  int restarts = 1;
  int threads = 1;
  /// Dataset source descriptor: an IDX directory or a directory-per-class PNG root.
  std::string data;
  std::string test_data;
  std::string out = "out";

  /// Sets one field from its textual form. Throws InvalidArgument on an
  /// unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Applies every `key = value` line; blank lines and lines starting with
  /// '#' are skipped.
  void apply_text(const std::string& text);
  void apply_file(const std::filesystem::path& path);

  /// One line per key, values printed so that apply_text restores them exactly.
  std::string serialize() const;

  TrainConfig train_config() const;

  static const std::vector<std::string>& keys();

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Hyperparameter grids for cross-validation sweeps.
inline const std::vector<int> kLandmarkGrid = {9, 16, 25, 36, 49, 64};
inline const std::vector<double> kLearningRateGrid = {1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2};

std::string format_double(double value);

}  // namespace dikm
