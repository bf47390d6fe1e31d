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
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dikm/similarity.hpp"

namespace dikm {

struct ClusterState;

struct TrainConfig {
  int max_epochs = 150;
  /// Training stops once fewer than this fraction of samples change cluster.
  double change_tolerance = 0.001;
  /// Fits are refreshed over shuffled mini-batches of this size; assignments
  /// and centroids are updated once per full epoch.
  int batch_size = 64;
  int threads = 1;
  /// Independent K-means++ seedings; train() keeps the run whose final
  /// distortion is lowest.
  int restarts = 1;
  /// Per-epoch budget of the warm-started fits.
  FitConfig fit;
  /// Budget of the fresh fits used to assign unseen samples.
  FitConfig test_fit{.stage1_steps = 150, .stage2_steps = 100};
  /// Called after the initial assignment and after every epoch.
  std::function<void(const ClusterState&)> on_epoch;
};

struct ClusterState {
  MetricKind kind = MetricKind::kEuclidean;
  int k = 0;
  std::vector<Image> centroids;
  std::vector<int> assignments;
  /// N x K fits, row-major by sample.
  std::vector<WarpFit> fits;
  /// Most recently evaluated d(x_i, mu_k).
  Eigen::MatrixXd distances;
  int epoch = 0;
  /// Which seeding of train() produced this state.
  int restart = 0;
  std::vector<double> distortion_history;
  /// Fraction of samples whose cluster changed, per epoch after the first.
  std::vector<double> change_history;

  std::size_t sample_count() const { return assignments.size(); }
  WarpFit& fit(std::size_t i, std::size_t c) { return fits[i * static_cast<std::size_t>(k) + c]; }
  const WarpFit& fit(std::size_t i, std::size_t c) const { return fits[i * static_cast<std::size_t>(k) + c]; }
};

/// D^2-weighted seeding under the Euclidean distance. Returns copies of K
/// dataset images; deterministic given the seed.
std::vector<Image> kmeanspp_init(std::span<const Image> images, int k, std::uint64_t seed);

/// Indices picked by kmeanspp_init, in selection order.
std::vector<std::size_t> kmeanspp_indices(std::span<const Image> images, int k, std::uint64_t seed);

/// Fresh state around the given centroids: identity fits, no assignments.
ClusterState make_state(std::span<const Image> images, std::vector<Image> centroids, MetricKind kind,
                        const WarpPlan& plan);

/// Evaluates every (sample, centroid) distance from the warm-started fits and
/// reassigns each sample to its nearest centroid (lowest index on ties).
/// Returns how many assignments changed.
std::size_t assign(ClusterState& state, std::span<const Image> images, const WarpPlan& plan,
                   const TrainConfig& config, std::uint64_t shuffle_seed = 0);

/// Replaces each centroid by the normalized mean of its members warped by
/// their current fits. Empty clusters are reseeded with the sample farthest
/// from its own centroid.
void update_centroids(ClusterState& state, std::span<const Image> images, const WarpPlan& plan);

/// K-means++ seeding followed by alternating assignment and centroid updates
/// until max_epochs or the assignment-change fraction drops below tolerance.
/// With several restarts the first uses `seed` unchanged and the lowest final
/// distortion wins (earliest restart on ties).
ClusterState train(std::span<const Image> images, int k, MetricKind kind, const TrainConfig& config,
                   std::uint64_t seed, const WarpPlan& plan);

/// Same as train() but starting from explicit centroids.
ClusterState train_from(std::span<const Image> images, std::vector<Image> centroids, MetricKind kind,
                        const TrainConfig& config, std::uint64_t seed, const WarpPlan& plan);

struct TestAssignment {
  std::vector<int> assignments;
  Eigen::MatrixXd distances;
  /// N x K fresh fits, row-major by sample.
  std::vector<WarpFit> fits;
};

/// Assigns unseen samples against fixed centroids with fresh fits.
TestAssignment assign_test(const ClusterState& state, std::span<const Image> images, const WarpPlan& plan,
                           const TrainConfig& config);
TestAssignment assign_test(std::span<const Image> centroids, MetricKind kind, std::span<const Image> images,
                           const WarpPlan& plan, const TrainConfig& config);

}  // namespace dikm
