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

#include "dikm/clustering.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "dikm/error.hpp"
#include "dikm/parallel.hpp"

namespace dikm {
namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

int argmin_row(const Eigen::MatrixXd& d, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index c = 1; c < d.cols(); ++c)
    if (d(row, c) < d(row, best)) best = static_cast<int>(c);
  return best;
}

std::vector<Image> smooth_all(std::span<const Image> images, double sigma, int threads) {
  std::vector<Image> out(images.size());
  parallel_for(0, images.size(), threads, [&](std::size_t i) { out[i] = low_pass(images[i], sigma); });
  return out;
}

void check_images(std::span<const Image> images, const WarpPlan& plan) {
  for (const Image& im : images)
    if (im.height != plan.height() || im.width != plan.width())
      throw Error(ErrorCode::kDimensionMismatch, "dataset image shape does not match warp plan");
}

}  // namespace

int default_thread_count() {
  if (const char* env = std::getenv("DIKM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::vector<std::size_t> kmeanspp_indices(std::span<const Image> images, int k, std::uint64_t seed) {
  if (k <= 0) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  if (images.size() < static_cast<std::size_t>(k))
    throw Error(ErrorCode::kInsufficientData,
                "need at least K=" + std::to_string(k) + " samples, got " + std::to_string(images.size()));
  auto rng = make_rng(seed, 0x5eed);
  const std::size_t n = images.size();
  std::vector<std::size_t> chosen;
  std::vector<char> taken(n, 0);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  chosen.push_back(first(rng));
  taken[chosen.back()] = 1;
  while (chosen.size() < static_cast<std::size_t>(k)) {
    const Image& last = images[chosen.back()];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(images[i], last));
      total += nearest[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        acc += nearest[i];
        pick = i;
        if (r < acc) break;
      }
    } else {
      // Every remaining sample duplicates a seed; fall back to a uniform pick.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!taken[i]) rest.push_back(i);
      pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
    chosen.push_back(pick);
    taken[pick] = 1;
  }
  return chosen;
}

std::vector<Image> kmeanspp_init(std::span<const Image> images, int k, std::uint64_t seed) {
  std::vector<Image> out;
  for (std::size_t i : kmeanspp_indices(images, k, seed)) out.push_back(images[i]);
  return out;
}

ClusterState make_state(std::span<const Image> images, std::vector<Image> centroids, MetricKind kind,
                        const WarpPlan& plan) {
  check_images(images, plan);
  check_images(centroids, plan);
  ClusterState state;
  state.kind = kind;
  state.k = static_cast<int>(centroids.size());
  state.centroids = std::move(centroids);
  state.assignments.assign(images.size(), -1);
  state.fits.assign(images.size() * state.centroids.size(), WarpFit::identity(plan));
  state.distances = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(images.size()), state.k);
  return state;
}

std::size_t assign(ClusterState& state, std::span<const Image> images, const WarpPlan& plan,
                   const TrainConfig& config, std::uint64_t shuffle_seed) {
  const std::size_t n = images.size();
  const auto k = static_cast<std::size_t>(state.k);
  if (state.assignments.size() != n) throw Error(ErrorCode::kDimensionMismatch, "state/dataset size mismatch");

  const bool smooth = state.kind != MetricKind::kEuclidean;
  const std::vector<Image> image_smooth =
      smooth ? smooth_all(images, config.fit.blur_sigma, config.threads) : std::vector<Image>{};
  const std::vector<Image> centroid_smooth =
      smooth ? smooth_all(state.centroids, config.fit.blur_sigma, config.threads) : std::vector<Image>{};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(shuffle_seed, 0xba7c);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t batch = config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size) : n;

  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t stop = std::min(n, start + batch);
    parallel_for(start, stop, config.threads, [&](std::size_t j) {
      const std::size_t i = order[j];
      for (std::size_t c = 0; c < k; ++c) {
        const PairImages pair{images[i], state.centroids[c], smooth ? image_smooth[i] : images[i],
                              smooth ? centroid_smooth[c] : state.centroids[c]};
        state.distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            distance(state.kind, pair, plan, state.fit(i, c), config.fit);
      }
    });
  }

  std::size_t changed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int best = argmin_row(state.distances, static_cast<Eigen::Index>(i));
    if (best != state.assignments[i]) ++changed;
    state.assignments[i] = best;
  }
  return changed;
}

void update_centroids(ClusterState& state, std::span<const Image> images, const WarpPlan& plan) {
  const auto k = static_cast<std::size_t>(state.k);
  const Image& shape = state.centroids.front();
  std::vector<Image> sums(k, Image(shape.height, shape.width));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto c = static_cast<std::size_t>(state.assignments[i]);
    const Image warped = warped_representation(state.kind, images[i], plan, state.fit(i, c));
    for (std::size_t p = 0; p < warped.size(); ++p) sums[c].pixels[p] += warped.pixels[p];
    ++counts[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    Image mean = std::move(sums[c]);
    for (double& p : mean.pixels) p /= static_cast<double>(counts[c]);
    // A zero mean leaves every unit vector optimal; keep the old centroid.
    if (norm(mean) > 0.0) state.centroids[c] = normalized(std::move(mean));
  }

  std::vector<std::size_t> by_distance(images.size());
  std::iota(by_distance.begin(), by_distance.end(), 0);
  std::stable_sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
    return state.distances(static_cast<Eigen::Index>(a), state.assignments[a]) >
           state.distances(static_cast<Eigen::Index>(b), state.assignments[b]);
  });
  std::size_t next = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    while (next < by_distance.size() && counts[static_cast<std::size_t>(state.assignments[by_distance[next]])] <= 1)
      ++next;
    if (next == by_distance.size()) break;
    const std::size_t donor = by_distance[next++];
    --counts[static_cast<std::size_t>(state.assignments[donor])];
    state.centroids[c] = images[donor];
    for (std::size_t i = 0; i < images.size(); ++i) state.fit(i, c) = WarpFit::identity(plan);
  }
}

namespace {

ClusterState run_lloyd(std::span<const Image> images, std::vector<Image> centroids, MetricKind kind,
                       const TrainConfig& config, std::uint64_t seed, const WarpPlan& plan, int restart) {
  ClusterState state = make_state(images, std::move(centroids), kind, plan);
  state.restart = restart;
  const double n = static_cast<double>(images.size());
  auto seeds = make_rng(seed, 0xe90c);

  assign(state, images, plan, config, seeds());
  auto distortion = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
      total += state.distances(static_cast<Eigen::Index>(i), state.assignments[i]);
    return total;
  };
  state.distortion_history.push_back(distortion());
  if (config.on_epoch) config.on_epoch(state);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    update_centroids(state, images, plan);
    const std::size_t changed = assign(state, images, plan, config, seeds());
    state.epoch = epoch;
    state.distortion_history.push_back(distortion());
    state.change_history.push_back(static_cast<double>(changed) / n);
    if (config.on_epoch) config.on_epoch(state);
    if (static_cast<double>(changed) / n < config.change_tolerance) break;
  }
  return state;
}

}  // namespace

ClusterState train_from(std::span<const Image> images, std::vector<Image> centroids, MetricKind kind,
                        const TrainConfig& config, std::uint64_t seed, const WarpPlan& plan) {
  return run_lloyd(images, std::move(centroids), kind, config, seed, plan, 0);
}

ClusterState train(std::span<const Image> images, int k, MetricKind kind, const TrainConfig& config,
                   std::uint64_t seed, const WarpPlan& plan) {
  if (config.restarts < 1) throw Error(ErrorCode::kInvalidArgument, "restarts must be at least 1");
  auto derived = make_rng(seed, 0x7e57);
  std::optional<ClusterState> best;
  for (int r = 0; r < config.restarts; ++r) {
    const std::uint64_t run_seed = r == 0 ? seed : derived();
    ClusterState state = run_lloyd(images, kmeanspp_init(images, k, run_seed), kind, config, run_seed, plan, r);
    if (!best || state.distortion_history.back() < best->distortion_history.back()) best = std::move(state);
  }
  return std::move(*best);
}

TestAssignment assign_test(std::span<const Image> centroids, MetricKind kind, std::span<const Image> images,
                           const WarpPlan& plan, const TrainConfig& config) {
  check_images(images, plan);
  const std::size_t n = images.size();
  const std::size_t k = centroids.size();
  TestAssignment out;
  out.assignments.assign(n, 0);
  out.distances = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  out.fits.assign(n * k, WarpFit::identity(plan));

  const bool smooth = kind != MetricKind::kEuclidean;
  const double sigma = config.test_fit.blur_sigma;
  const std::vector<Image> centroid_smooth = smooth ? smooth_all(centroids, sigma, 1) : std::vector<Image>{};
  parallel_for(0, n, config.threads, [&](std::size_t i) {
    const Image image_smooth = smooth ? low_pass(images[i], sigma) : Image{};
    for (std::size_t c = 0; c < k; ++c) {
      const PairImages pair{images[i], centroids[c], smooth ? image_smooth : images[i],
                            smooth ? centroid_smooth[c] : centroids[c]};
      out.distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          distance(kind, pair, plan, out.fits[i * k + c], config.test_fit);
    }
    out.assignments[i] = argmin_row(out.distances, static_cast<Eigen::Index>(i));
  });
  return out;
}

TestAssignment assign_test(const ClusterState& state, std::span<const Image> images, const WarpPlan& plan,
                           const TrainConfig& config) {
  return assign_test(state.centroids, state.kind, images, plan, config);
}

}  // namespace dikm
