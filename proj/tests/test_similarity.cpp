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

#include <cmath>
#include <random>

#include "dikm/error.hpp"
#include "dikm/similarity.hpp"
#include "oracles.hpp"

using namespace dikm;

namespace {
constexpr MetricKind kAll[] = {MetricKind::kEuclidean, MetricKind::kAffineInvariant, MetricKind::kDeformationInvariant};
}

TEST_CASE("metric names round-trip") {
  for (MetricKind k : kAll) CHECK(parse_metric(metric_name(k)) == k);
  CHECK_THROWS_AS(parse_metric("cosine"), Error);
}

TEST_CASE("metric budgets") {
  FitConfig cfg;
  cfg.stage1_steps = 7;
  cfg.stage2_steps = 9;
  CHECK(metric_config(MetricKind::kEuclidean, cfg).stage1_steps == 0);
  CHECK(metric_config(MetricKind::kEuclidean, cfg).stage2_steps == 0);
  CHECK(metric_config(MetricKind::kAffineInvariant, cfg).stage1_steps == 7);
  CHECK(metric_config(MetricKind::kAffineInvariant, cfg).stage2_steps == 0);
  CHECK(metric_config(MetricKind::kDeformationInvariant, cfg).stage2_steps == 9);
}

TEST_CASE("normalizing twice equals normalizing once") {
  std::mt19937_64 rng(12);
  const auto plan = WarpPlan::create(28, 28, 16);
  for (int trial = 0; trial < 50; ++trial) {
    Image raw = oracle::random_blob_image(rng, 28, 28);
    for (double& p : raw.pixels) p *= 0.37 + trial;
    const Image once = normalized(raw);
    CHECK(normalized(once) == once);
    for (MetricKind k : kAll) {
      WarpFit fit = WarpFit::identity(*plan);
      CHECK(distance(k, once, normalized(once), *plan, fit, FitConfig{}) == 0.0);
    }
  }
}

TEST_CASE("euclidean distance of unit vectors is 2 - 2 rho") {
  std::mt19937_64 rng(1);
  const auto plan = WarpPlan::create(28, 28, 16);
  for (int trial = 0; trial < 10; ++trial) {
    const Image a = oracle::random_unit_image(rng, 28, 28), b = oracle::random_unit_image(rng, 28, 28);
    WarpFit fit = WarpFit::identity(*plan);
    CHECK(distance(MetricKind::kEuclidean, a, b, *plan, fit, FitConfig{}) == doctest::Approx(2.0 - 2.0 * dot(a, b)));
  }
}

TEST_CASE("every metric vanishes on a normalized copy") {
  std::mt19937_64 rng(2);
  const auto plan = WarpPlan::create(28, 28, 16);
  Image x = oracle::random_blob_image(rng, 28, 28);
  for (double& p : x.pixels) p *= 3.7;
  const Image mu = normalized(x);
  const Image xn = normalized(x);
  for (MetricKind k : kAll) {
    WarpFit fit = WarpFit::identity(*plan);
    CHECK(distance(k, xn, mu, *plan, fit, FitConfig{}) == 0.0);
  }
}

TEST_CASE("nested metrics are ordered under a shared warm start") {
  std::mt19937_64 rng(3);
  const auto plan = WarpPlan::create(28, 28, 16);
  for (int trial = 0; trial < 20; ++trial) {
    const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
    double d[3];
    for (int k = 0; k < 3; ++k) {
      WarpFit fit = WarpFit::identity(*plan);
      d[k] = distance(kAll[k], a, b, *plan, fit, FitConfig{});
      CHECK(d[k] >= 0.0);
    }
    CHECK(d[2] <= d[1] + 1e-9);
    CHECK(d[1] <= d[0] + 1e-9);
  }
}

TEST_CASE("warped representation") {
  std::mt19937_64 rng(4);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image x = oracle::random_blob_image(rng, 28, 28);
  WarpFit fit = WarpFit::identity(*plan);
  fit.target.array() += 1.0;
  CHECK(warped_representation(MetricKind::kEuclidean, x, *plan, fit) == x);
  const Image id = warped_representation(MetricKind::kDeformationInvariant, x, *plan, WarpFit::identity(*plan));
  for (std::size_t p = 0; p < x.size(); ++p) CHECK(std::abs(id.pixels[p] - x.pixels[p]) < 1e-12);
}

TEST_CASE("warped representation of a fitted pair approaches the centroid") {
  std::mt19937_64 rng(5);
  const auto plan = WarpPlan::create(28, 28, 16);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  const Image x = oracle::random_blob_image(rng, 28, 28, 4, 5.0);
  Eigen::VectorXd truth = plan->source_vector();
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth[i] += d(rng);
  const Image mu = warp_image(x, *plan, truth);
  FitConfig cfg;
  cfg.stage1_steps = 0;
  cfg.stage2_steps = 300;
  WarpFit fit = WarpFit::identity(*plan);
  const double loss = distance(MetricKind::kDeformationInvariant, x, mu, *plan, fit, cfg);
  REQUIRE(loss < 1e-3);
  const Image rep = warped_representation(MetricKind::kDeformationInvariant, x, *plan, fit);
  CHECK(std::sqrt(squared_distance(rep, mu) / static_cast<double>(rep.size())) < 1e-3);
}

TEST_CASE("asymmetric by construction") {
  std::mt19937_64 rng(6);
  const auto plan = WarpPlan::create(28, 28, 16);
  bool differs = false;
  for (int trial = 0; trial < 10 && !differs; ++trial) {
    const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
    WarpFit f1 = WarpFit::identity(*plan), f2 = WarpFit::identity(*plan);
    const double ab = distance(MetricKind::kDeformationInvariant, a, b, *plan, f1, FitConfig{});
    const double ba = distance(MetricKind::kDeformationInvariant, b, a, *plan, f2, FitConfig{});
    CHECK(std::isfinite(ab));
    CHECK(std::isfinite(ba));
    differs = std::abs(ab - ba) > 1e-6;
  }
  CHECK(differs);
}

TEST_CASE("shape mismatch") {
  const auto plan = WarpPlan::create(28, 28, 16);
  WarpFit fit = WarpFit::identity(*plan);
  for (MetricKind k : kAll) CHECK_THROWS_AS(distance(k, Image(28, 28, 0.1), Image(20, 20, 0.1), *plan, fit, FitConfig{}), Error);
}
