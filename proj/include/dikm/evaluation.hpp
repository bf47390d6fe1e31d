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

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dikm/clustering.hpp"

namespace dikm {

struct EvalReport {
  double accuracy = 0.0;
  /// mapping[cluster] = label; a bijection on {0..K-1}.
  std::vector<int> mapping;
  double distortion = 0.0;
  std::vector<int> per_cluster_sizes;
  int matched = 0;
};

/// Row -> column assignment maximizing the summed weight of a square matrix.
std::vector<int> max_weight_matching(const Eigen::MatrixXd& weights);

/// K x K counts: rows are clusters, columns are labels.
Eigen::MatrixXd contingency(std::span<const int> labels, std::span<const int> assignments, int k);

/// Fraction of samples whose label equals the best one-to-one relabeling of
/// their cluster.
EvalReport clustering_accuracy(std::span<const int> labels, std::span<const int> assignments, int k);

/// Sum of the cached distances of each sample to its assigned centroid.
double distortion(const ClusterState& state);

struct Hyperparams {
  int landmarks = 16;
  double learning_rate = 1e-2;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct SweepRun {
  Hyperparams params;
  double distortion = 0.0;
  std::optional<double> accuracy;
};

/// Index of the run with the smallest final distortion (first on ties).
std::size_t crossval_select(std::span<const SweepRun> runs);

/// Pearson correlation; NaN when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace dikm
