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

#include "dikm/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "dikm/error.hpp"

namespace dikm {
namespace {

struct AffineFrame {
  double cu;
  double cv;
  double radius;
};

AffineFrame frame_of(const WarpPlan& plan) {
  return {0.5 * (plan.height() - 1), 0.5 * (plan.width() - 1), 0.5 * std::max(plan.height(), plan.width())};
}

void affine_coords(const WarpPlan& plan, const Affine6& a, Eigen::VectorXd& cu, Eigen::VectorXd& cv) {
  const AffineFrame f = frame_of(plan);
  const Eigen::ArrayXd ru = (plan.grid_u().array() - f.cu) / f.radius;
  const Eigen::ArrayXd rv = (plan.grid_v().array() - f.cv) / f.radius;
  cu = (plan.grid_u().array() + a[0] * ru + a[1] * rv + a[4]).matrix();
  cv = (plan.grid_v().array() + a[2] * ru + a[3] * rv + a[5]).matrix();
}

// Loss on the low-passed pair and its gradient with respect to the affine parameters.
double affine_loss_and_grad(const PairImages& pair, const WarpPlan& plan, const Affine6& a, Eigen::VectorXd& grad) {
  Eigen::VectorXd cu, cv, gu, gv;
  affine_coords(plan, a, cu, cv);
  const double loss = resampled_loss_and_coord_grad(pair.image_smooth, pair.centroid_smooth, cu, cv, gu, gv);
  const AffineFrame f = frame_of(plan);
  const Eigen::ArrayXd ru = (plan.grid_u().array() - f.cu) / f.radius;
  const Eigen::ArrayXd rv = (plan.grid_v().array() - f.cv) / f.radius;
  grad.resize(6);
  grad[0] = (gu.array() * ru).sum();
  grad[1] = (gu.array() * rv).sum();
  grad[2] = (gv.array() * ru).sum();
  grad[3] = (gv.array() * rv).sum();
  grad[4] = gu.sum();
  grad[5] = gv.sum();
  return loss;
}

void ensure_moments(AdamMoments& m, Eigen::Index size) {
  if (m.first.size() != size) {
    m.first = Eigen::VectorXd::Zero(size);
    m.second = Eigen::VectorXd::Zero(size);
    m.step = 0;
  }
}

void clamp_to_anchor(Eigen::VectorXd& target, const Eigen::VectorXd& anchor, const WarpPlan& plan,
                     const FitConfig& config) {
  const double lim_u = config.clamp_cells * plan.cell_height();
  const double lim_v = config.clamp_cells * plan.cell_width();
  for (Eigen::Index i = 0; i < target.size(); i += 2) {
    target[i] = std::clamp(target[i], anchor[i] - lim_u, anchor[i] + lim_u);
    target[i + 1] = std::clamp(target[i + 1], anchor[i + 1] - lim_v, anchor[i + 1] + lim_v);
  }
}

void check_pair(const Image& image, const Image& centroid, const WarpPlan& plan) {
  require_same_shape(image, centroid, "fit");
  if (image.height != plan.height() || image.width != plan.width())
    throw Error(ErrorCode::kDimensionMismatch, "image shape does not match warp plan");
}

// Runs the affine Adam loop without touching last_loss.
void run_affine_stage(const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config) {
  if (config.stage1_steps <= 0) return;
  const Eigen::VectorXd offset = fit.target - affine_landmarks(plan, fit.affine);
  ensure_moments(fit.affine_moments, 6);

  Eigen::VectorXd params = Eigen::Map<const Eigen::VectorXd>(fit.affine.data(), 6);
  Eigen::VectorXd grad;
  Affine6 current = fit.affine;
  Affine6 best = current;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= config.stage1_steps; ++step) {
    const double loss = affine_loss_and_grad(pair, plan, current, grad);
    if (loss < best_loss) {
      best_loss = loss;
      best = current;
    }
    if (step == config.stage1_steps) break;
    adam_step(params, grad, fit.affine_moments, config);
    std::copy(params.data(), params.data() + 6, current.begin());
  }
  fit.affine = best;
  fit.target = affine_landmarks(plan, fit.affine) + offset;
}

}  // namespace

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad,
               AdamMoments& moments, const FitConfig& config) {
  if (params.size() != grad.size()) throw Error(ErrorCode::kDimensionMismatch, "adam: params/grad size differ");
  ensure_moments(moments, params.size());
  ++moments.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  moments.first = b1 * moments.first + (1.0 - b1) * grad;
  moments.second = b2 * moments.second + (1.0 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(moments.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(moments.step));
  params.array() -= config.learning_rate * (moments.first.array() / c1) /
                    ((moments.second.array() / c2).sqrt() + config.adam_epsilon);
}

Eigen::VectorXd affine_landmarks(const WarpPlan& plan, const Affine6& a) {
  const AffineFrame f = frame_of(plan);
  Eigen::VectorXd out = plan.source_vector();
  for (Eigen::Index i = 0; i < out.size(); i += 2) {
    const double ru = (out[i] - f.cu) / f.radius;
    const double rv = (out[i + 1] - f.cv) / f.radius;
    out[i] += a[0] * ru + a[1] * rv + a[4];
    out[i + 1] += a[2] * ru + a[3] * rv + a[5];
  }
  return out;
}

WarpFit WarpFit::identity(const WarpPlan& plan) {
  WarpFit fit;
  fit.target = plan.source_vector();
  return fit;
}

void fit_affine_stage(const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config) {
  check_pair(pair.image, pair.centroid, plan);
  if (config.stage1_steps <= 0) return;
  run_affine_stage(pair, plan, fit, config);
  ++fit.affine_runs;
  fit.last_loss = warp_loss(pair.image, pair.centroid, plan, fit.target);
}

void fit_affine_stage(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                      const FitConfig& config) {
  const Image image_smooth = low_pass(image, config.blur_sigma);
  const Image centroid_smooth = low_pass(centroid, config.blur_sigma);
  fit_affine_stage(PairImages{image, centroid, image_smooth, centroid_smooth}, plan, fit, config);
}

void fit_diffeo_stage(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                      const FitConfig& config) {
  check_pair(image, centroid, plan);
  if (config.stage2_steps <= 0) {
    fit.last_loss = warp_loss(image, centroid, plan, fit.target);
    return;
  }
  const Eigen::VectorXd anchor = affine_landmarks(plan, fit.affine);
  ensure_moments(fit.landmark_moments, fit.target.size());
  Eigen::VectorXd current = fit.target;
  Eigen::VectorXd best = current;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= config.stage2_steps; ++step) {
    const WarpLoss eval = warp_loss_and_grad(image, centroid, plan, current);
    if (eval.loss < best_loss) {
      best_loss = eval.loss;
      best = current;
    }
    if (step == config.stage2_steps) break;
    adam_step(current, eval.grad.d_loss_d_landmarks, fit.landmark_moments, config);
    clamp_to_anchor(current, anchor, plan, config);
  }
  fit.target = best;
  fit.last_loss = best_loss;
}

double evaluate_distance(const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config) {
  check_pair(pair.image, pair.centroid, plan);
  const double warm_loss = warp_loss(pair.image, pair.centroid, plan, fit.target);
  const WarpFit warm = fit;

  if (config.stage1_steps > 0 && (fit.affine_runs == 0 || config.refresh_affine)) {
    run_affine_stage(pair, plan, fit, config);
    ++fit.affine_runs;
  }
  fit_diffeo_stage(pair.image, pair.centroid, plan, fit, config);

  if (!(fit.last_loss <= warm_loss)) {
    const int runs = fit.affine_runs;
    fit = warm;
    fit.affine_runs = runs;
    fit.last_loss = warm_loss;
  }
  return fit.last_loss;
}

double evaluate_distance(const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                         const FitConfig& config) {
  const Image image_smooth = low_pass(image, config.blur_sigma);
  const Image centroid_smooth = low_pass(centroid, config.blur_sigma);
  return evaluate_distance(PairImages{image, centroid, image_smooth, centroid_smooth}, plan, fit, config);
}

}  // namespace dikm
