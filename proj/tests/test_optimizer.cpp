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

#include "dikm/optimizer.hpp"
#include "oracles.hpp"

using namespace dikm;

TEST_CASE("Adam with zero gradient leaves parameters alone") {
  Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(4, -1, 1);
  const Eigen::VectorXd before = p;
  AdamMoments m;
  for (int i = 0; i < 5; ++i) adam_step(p, Eigen::VectorXd::Zero(4), m, FitConfig{});
  CHECK(p == before);
  CHECK(m.step == 5);
}

TEST_CASE("Adam first step by hand") {
  FitConfig cfg;
  cfg.learning_rate = 0.1;
  Eigen::VectorXd p(1);
  p << 0.0;
  AdamMoments m;
  adam_step(p, Eigen::VectorXd::Ones(1), m, cfg);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  CHECK(p[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(m.first[0] == doctest::Approx(0.1));
  CHECK(m.second[0] == doctest::Approx(0.001));
}

TEST_CASE("Adam step approaches the learning rate under a constant gradient") {
  FitConfig cfg;
  cfg.learning_rate = 0.01;
  Eigen::VectorXd p(2);
  p << 0.0, 0.0;
  Eigen::VectorXd g(2);
  g << 3.0, -0.2;
  AdamMoments m;
  Eigen::VectorXd prev = p;
  for (int i = 0; i < 2000; ++i) {
    prev = p;
    adam_step(p, g, m, cfg);
  }
  CHECK((prev - p)[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK((prev - p)[1] == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("affine stage on an identical pair stays at the identity") {
  std::mt19937_64 rng(1);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image im = oracle::random_blob_image(rng, 28, 28);
  WarpFit fit = WarpFit::identity(*plan);
  fit_affine_stage(im, im, *plan, fit, FitConfig{});
  for (double a : fit.affine) CHECK(a == 0.0);
  CHECK(fit.last_loss == 0.0);
  CHECK(fit.target == plan->source_vector());
}

TEST_CASE("zero-step stages") {
  std::mt19937_64 rng(2);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
  FitConfig cfg;
  cfg.stage1_steps = 0;
  cfg.stage2_steps = 0;
  WarpFit fit = WarpFit::identity(*plan);
  fit_affine_stage(a, b, *plan, fit, cfg);
  CHECK(fit.affine_runs == 0);
  CHECK(fit.target == plan->source_vector());
  fit_diffeo_stage(a, b, *plan, fit, cfg);
  CHECK(fit.last_loss == doctest::Approx(squared_distance(a, b)).epsilon(1e-12));
}

TEST_CASE("affine stage recovers a two-pixel translation") {
  std::mt19937_64 rng(3);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image im = oracle::random_blob_image(rng, 28, 28, 3, 7.0);
  const Image centroid = oracle::shift_image(im, 2, 0);

  // Oracle: the best integer translation of the sampling grid by brute force.
  FitConfig cfg;
  cfg.learning_rate = 5e-2;
  cfg.stage1_steps = 200;
  cfg.blur_sigma = 2.0;
  int best_du = 0, best_dv = 0;
  double best = 1e300;
  for (int du = -4; du <= 4; ++du)
    for (int dv = -4; dv <= 4; ++dv) {
      Eigen::VectorXd t = plan->source_vector();
      for (Eigen::Index i = 0; i < t.size(); i += 2) {
        t[i] += du;
        t[i + 1] += dv;
      }
      const double l = warp_loss(im, centroid, *plan, t);
      if (l < best) best = l, best_du = du, best_dv = dv;
    }
  REQUIRE(best_du == -2);
  REQUIRE(best_dv == 0);

  WarpFit fit = WarpFit::identity(*plan);
  fit_affine_stage(im, centroid, *plan, fit, cfg);
  CHECK(std::abs(fit.affine[4] - best_du) < 0.25);
  CHECK(std::abs(fit.affine[5] - best_dv) < 0.25);
  CHECK(fit.last_loss < squared_distance(im, centroid));
}

TEST_CASE("affine stage keeps its best iterate") {
  std::mt19937_64 rng(4);
  const auto plan = WarpPlan::create(28, 28, 16);
  FitConfig cfg;
  cfg.learning_rate = 0.5;  // deliberately unstable
  cfg.stage1_steps = 40;
  for (int trial = 0; trial < 5; ++trial) {
    const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
    WarpFit fit = WarpFit::identity(*plan);
    const Image as = low_pass(a, cfg.blur_sigma), bs = low_pass(b, cfg.blur_sigma);
    const double start = warp_loss(as, bs, *plan, fit.target);
    fit_affine_stage(a, b, *plan, fit, cfg);
    CHECK(warp_loss(as, bs, *plan, fit.target) <= start + 1e-9);
    CHECK(fit.affine_runs == 1);
  }
}

TEST_CASE("diffeo stage reaches a known warp") {
  std::mt19937_64 rng(5);
  const auto plan = WarpPlan::create(28, 28, 16);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int trial = 0; trial < 3; ++trial) {
    const Image im = oracle::random_blob_image(rng, 28, 28, 4, 5.0);
    Eigen::VectorXd truth = plan->source_vector();
    for (Eigen::Index i = 0; i < truth.size(); ++i) truth[i] += d(rng);
    const Image centroid = warp_image(im, *plan, truth);
    REQUIRE(warp_loss(im, centroid, *plan, truth) == 0.0);
    FitConfig cfg;
    cfg.stage2_steps = 300;
    WarpFit fit = WarpFit::identity(*plan);
    fit_diffeo_stage(im, centroid, *plan, fit, cfg);
    CHECK(fit.last_loss < 1e-3);
  }
}

TEST_CASE("diffeo stage with an identical pair stays put") {
  std::mt19937_64 rng(6);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image im = oracle::random_blob_image(rng, 28, 28);
  WarpFit fit = WarpFit::identity(*plan);
  fit_diffeo_stage(im, im, *plan, fit, FitConfig{});
  CHECK(fit.last_loss == 0.0);
  CHECK(fit.target == plan->source_vector());
}

TEST_CASE("evaluate_distance never exceeds its warm start") {
  std::mt19937_64 rng(7);
  const auto plan = WarpPlan::create(28, 28, 16);
  for (double lr : {1e-2, 1e-1, 1.0}) {
    FitConfig cfg;
    cfg.learning_rate = lr;
    cfg.refresh_affine = true;
    for (int trial = 0; trial < 5; ++trial) {
      const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
      WarpFit fit = WarpFit::identity(*plan);
      double previous = squared_distance(a, b);
      for (int round = 0; round < 4; ++round) {
        const double warm = warp_loss(a, b, *plan, fit.target);
        CHECK(warm == doctest::Approx(previous).epsilon(1e-12));
        const double d = evaluate_distance(a, b, *plan, fit, cfg);
        CHECK(d <= warm + 1e-12);
        CHECK(d >= 0.0);
        CHECK(d == doctest::Approx(warp_loss(a, b, *plan, fit.target)).epsilon(1e-12));
        previous = d;
      }
    }
  }
}

TEST_CASE("evaluate_distance of a pair with itself is zero") {
  std::mt19937_64 rng(8);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image im = oracle::random_blob_image(rng, 28, 28);
  WarpFit fit = WarpFit::identity(*plan);
  CHECK(evaluate_distance(im, im, *plan, fit, FitConfig{}) == 0.0);
}

TEST_CASE("the affine stage runs once unless refreshing") {
  std::mt19937_64 rng(9);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
  WarpFit fit = WarpFit::identity(*plan);
  FitConfig cfg;
  evaluate_distance(a, b, *plan, fit, cfg);
  evaluate_distance(a, b, *plan, fit, cfg);
  CHECK(fit.affine_runs == 1);
  cfg.refresh_affine = true;
  evaluate_distance(a, b, *plan, fit, cfg);
  CHECK(fit.affine_runs == 2);
}

TEST_CASE("landmarks stay within the clamp of their affine anchor") {
  std::mt19937_64 rng(10);
  const auto plan = WarpPlan::create(28, 28, 16);
  const Image a = oracle::random_blob_image(rng, 28, 28), b = oracle::random_blob_image(rng, 28, 28);
  FitConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.stage2_steps = 100;
  cfg.clamp_cells = 0.5;
  WarpFit fit = WarpFit::identity(*plan);
  fit_diffeo_stage(a, b, *plan, fit, cfg);
  const Eigen::VectorXd anchor = affine_landmarks(*plan, fit.affine);
  CHECK((fit.target - anchor).cwiseAbs().maxCoeff() <= 0.5 * plan->cell_height() + 1e-12);
}

TEST_CASE("affine landmarks of the zero parameter vector are the source grid") {
  const auto plan = WarpPlan::create(20, 30, 9);
  CHECK(affine_landmarks(*plan, Affine6{}) == plan->source_vector());
  const Eigen::VectorXd shifted = affine_landmarks(*plan, Affine6{0, 0, 0, 0, 1.5, -2.0});
  for (Eigen::Index i = 0; i < shifted.size(); i += 2) {
    CHECK(shifted[i] == doctest::Approx(plan->source_vector()[i] + 1.5));
    CHECK(shifted[i + 1] == doctest::Approx(plan->source_vector()[i + 1] - 2.0));
  }
}
