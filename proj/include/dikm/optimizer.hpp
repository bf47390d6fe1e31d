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

#include <array>

#include <Eigen/Dense>

#include "dikm/image.hpp"
#include "dikm/warp.hpp"

namespace dikm {

/// Budget and step rule for fitting one (sample, centroid) warp.
struct FitConfig {
  double learning_rate = 1e-2;
  int stage1_steps = 25;
  int stage2_steps = 10;
  double blur_sigma = 2.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Re-run the affine stage on every warm-started call instead of only on
  /// the first one.
  bool refresh_affine = false;
  /// Landmarks stay within this many grid cells of their affine position.
  double clamp_cells = 1.5;
};

struct AdamMoments {
  Eigen::VectorXd first;
  Eigen::VectorXd second;
  long step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamMoments& moments, const FitConfig& config);

/// Six affine parameters, zero meaning identity. Sampling positions move by
///   du = a0 (u - cu) / R + a1 (v - cv) / R + a4
///   dv = a2 (u - cu) / R + a3 (v - cv) / R + a5
/// with (cu, cv) the frame center and R half the larger side, so every
/// parameter is measured in pixels at the frame edge.
using Affine6 = std::array<double, 6>;

/// Target landmarks of the affine map: the source grid moved by `affine`.
Eigen::VectorXd affine_landmarks(const WarpPlan& plan, const Affine6& affine);

/// Optimization state for one (sample, centroid) pair, carried across epochs.
struct WarpFit {
  Eigen::VectorXd target;
  Affine6 affine{};
  AdamMoments affine_moments;
  AdamMoments landmark_moments;
  int affine_runs = 0;
  double last_loss = 0.0;

  static WarpFit identity(const WarpPlan& plan);
};

/// Sample and centroid together with their low-passed copies, which the
/// affine stage fits against.
struct PairImages {
  const Image& image;
  const Image& centroid;
  const Image& image_smooth;
  const Image& centroid_smooth;
};

/// Affine stage: Adam on the six affine parameters against the low-passed
/// pair. Keeps the best iterate; any non-rigid offset already present in
/// fit.target is carried over onto the new affine base. Sets last_loss to
/// the unfiltered loss at the resulting target.
void fit_affine_stage(const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config);
void fit_affine_stage(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                      const FitConfig& config);

/// Non-rigid stage: Adam on all 2l target coordinates against the unfiltered
/// loss, landmarks clamped around their affine position, best iterate kept.
void fit_diffeo_stage(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                      const FitConfig& config);

/// Both stages warm-started from `fit`; returns the fitted loss, never more
/// than the loss at the warm-start landmarks. Updates `fit` in place.
double evaluate_distance(const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config);
double evaluate_distance(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                         const FitConfig& config);

}  // namespace dikm
