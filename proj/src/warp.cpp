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

#include "dikm/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dikm/error.hpp"

namespace dikm {
namespace {

inline double pixel_or_zero(const Image& image, long row, long col) {
  if (row < 0 || col < 0 || row >= image.height || col >= image.width) return 0.0;
  return image.pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(image.width) +
                      static_cast<std::size_t>(col)];
}

inline bool far_outside(const Image& image, double u, double v) {
  // Also rejects NaN.
  return !(u > -1.0 && v > -1.0 && u < image.height && v < image.width);
}

using StridedConst = Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<2>>;
using Strided = Eigen::Map<Eigen::VectorXd, 0, Eigen::InnerStride<2>>;

}  // namespace

WarpPlan::WarpPlan(int height, int width, std::shared_ptr<const TpsSystem> system)
    : height_(height), width_(width), system_(std::move(system)) {
  if (height <= 0 || width <= 0) throw Error(ErrorCode::kInvalidArgument, "plan shape must be positive");
  const std::size_t n = pixel_count();
  std::vector<Point> coords;
  coords.reserve(n);
  grid_u_.resize(static_cast<Eigen::Index>(n));
  grid_v_.resize(static_cast<Eigen::Index>(n));
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      coords.push_back({static_cast<double>(r), static_cast<double>(c)});
      grid_u_[static_cast<Eigen::Index>(coords.size() - 1)] = r;
      grid_v_[static_cast<Eigen::Index>(coords.size() - 1)] = c;
    }
  weights_ = coord_weights(*system_, coords);
  source_vec_ = system_->source().to_vector();
  const double side = std::sqrt(static_cast<double>(system_->landmark_count()));
  cell_height_ = height / side;
  cell_width_ = width / side;
}

std::shared_ptr<const WarpPlan> WarpPlan::create(int height, int width, int landmarks, const TpsOptions& options) {
  auto system = std::make_shared<const TpsSystem>(build_system(grid_landmarks(height, width, landmarks), options));
  return std::make_shared<const WarpPlan>(height, width, std::move(system));
}

void WarpPlan::sample_coords(const Eigen::VectorXd& target, Eigen::VectorXd& cu, Eigen::VectorXd& cv) const {
  const auto l = static_cast<Eigen::Index>(landmark_count());
  if (target.size() != 2 * l)
    throw Error(ErrorCode::kDimensionMismatch,
                "target has " + std::to_string(target.size()) + " coordinates, expected " + std::to_string(2 * l));
  const Eigen::VectorXd delta = target - source_vec_;
  const StridedConst du(delta.data(), l);
  const StridedConst dv(delta.data() + 1, l);
  cu.noalias() = weights_ * du;
  cv.noalias() = weights_ * dv;
  cu += grid_u_;
  cv += grid_v_;
}

Eigen::VectorXd WarpPlan::pull_back(const Eigen::VectorXd& grad_u, const Eigen::VectorXd& grad_v) const {
  const auto l = static_cast<Eigen::Index>(landmark_count());
  Eigen::VectorXd out(2 * l);
  Strided(out.data(), l).noalias() = weights_.transpose() * grad_u;
  Strided(out.data() + 1, l).noalias() = weights_.transpose() * grad_v;
  return out;
}

std::shared_ptr<const WarpPlan> WarpPlanCache::get(int height, int width, int landmarks, const TpsOptions& options) {
  const Key key{height, width, landmarks, options.regularization, static_cast<int>(options.norm)};
  std::lock_guard lock(mutex_);
  auto it = plans_.find(key);
  if (it != plans_.end()) return it->second;
  auto plan = WarpPlan::create(height, width, landmarks, options);
  plans_.emplace(key, plan);
  return plan;
}

std::size_t WarpPlanCache::size() const {
  std::lock_guard lock(mutex_);
  return plans_.size();
}

double bilinear_sample(const Image& image, Point coord) {
  if (far_outside(image, coord.u, coord.v)) return 0.0;
  const double fu0 = std::floor(coord.u);
  const double fv0 = std::floor(coord.v);
  const auto u0 = static_cast<long>(fu0);
  const auto v0 = static_cast<long>(fv0);
  const double a = coord.u - fu0;
  const double b = coord.v - fv0;
  const double p00 = pixel_or_zero(image, u0, v0);
  const double p10 = pixel_or_zero(image, u0 + 1, v0);
  const double p01 = pixel_or_zero(image, u0, v0 + 1);
  const double p11 = pixel_or_zero(image, u0 + 1, v0 + 1);
  return (1 - a) * ((1 - b) * p00 + b * p01) + a * ((1 - b) * p10 + b * p11);
}

double bilinear_sample_grad(const Image& image, double u, double v, double& d_u, double& d_v) {
  if (far_outside(image, u, v)) {
    d_u = d_v = 0.0;
    return 0.0;
  }
  const double fu0 = std::floor(u);
  const double fv0 = std::floor(v);
  const auto u0 = static_cast<long>(fu0);
  const auto v0 = static_cast<long>(fv0);
  const double a = u - fu0;
  const double b = v - fv0;
  const double p00 = pixel_or_zero(image, u0, v0);
  const double p10 = pixel_or_zero(image, u0 + 1, v0);
  const double p01 = pixel_or_zero(image, u0, v0 + 1);
  const double p11 = pixel_or_zero(image, u0 + 1, v0 + 1);
  d_u = (1 - b) * (p10 - p00) + b * (p11 - p01);
  d_v = (1 - a) * (p01 - p00) + a * (p11 - p10);
  return (1 - a) * ((1 - b) * p00 + b * p01) + a * ((1 - b) * p10 + b * p11);
}

Image resample(const Image& image, const Eigen::VectorXd& cu, const Eigen::VectorXd& cv) {
  Image out(image.height, image.width);
  if (static_cast<std::size_t>(cu.size()) != out.size() || cv.size() != cu.size())
    throw Error(ErrorCode::kDimensionMismatch, "sampling grid does not match image");
  for (Eigen::Index p = 0; p < cu.size(); ++p) out.pixels[static_cast<std::size_t>(p)] = bilinear_sample(image, {cu[p], cv[p]});
  return out;
}

double resampled_loss_and_coord_grad(const Image& image, const Image& reference, const Eigen::VectorXd& cu,
                                     const Eigen::VectorXd& cv, Eigen::VectorXd& grad_u, Eigen::VectorXd& grad_v) {
  require_same_shape(image, reference, "resampled_loss_and_coord_grad");
  if (static_cast<std::size_t>(cu.size()) != image.size() || cv.size() != cu.size())
    throw Error(ErrorCode::kDimensionMismatch, "sampling grid does not match image");
  grad_u.resize(cu.size());
  grad_v.resize(cv.size());
  const double* px = image.pixels.data();
  const double* ref = reference.pixels.data();
  const long h = image.height;
  const long w = image.width;
  double loss = 0.0;
  for (Eigen::Index p = 0; p < cu.size(); ++p) {
    const double u = cu[p];
    const double v = cv[p];
    double value, du, dv;
    const double fu0 = std::floor(u);
    const double fv0 = std::floor(v);
    const auto u0 = static_cast<long>(fu0);
    const auto v0 = static_cast<long>(fv0);
    if (u0 >= 0 && v0 >= 0 && u0 + 1 < h && v0 + 1 < w) {
      // All four neighbours inside the frame: no padding checks needed.
      const double a = u - fu0;
      const double b = v - fv0;
      const double* row = px + u0 * w + v0;
      const double p00 = row[0], p01 = row[1], p10 = row[w], p11 = row[w + 1];
      du = (1 - b) * (p10 - p00) + b * (p11 - p01);
      dv = (1 - a) * (p01 - p00) + a * (p11 - p10);
      value = (1 - a) * ((1 - b) * p00 + b * p01) + a * ((1 - b) * p10 + b * p11);
    } else {
      value = bilinear_sample_grad(image, u, v, du, dv);
    }
    const double r = value - ref[p];
    loss += r * r;
    grad_u[p] = 2.0 * r * du;
    grad_v[p] = 2.0 * r * dv;
  }
  return loss;
}

Image warp_image(const Image& image, const WarpPlan& plan, const Eigen::VectorXd& target) {
  if (image.height != plan.height() || image.width != plan.width())
    throw Error(ErrorCode::kDimensionMismatch, "image shape does not match warp plan");
  Eigen::VectorXd cu, cv;
  plan.sample_coords(target, cu, cv);
  return resample(image, cu, cv);
}

Image warp_image(const Image& image, const WarpPlan& plan, const LandmarkSet& target) {
  return warp_image(image, plan, target.to_vector());
}

WarpLoss warp_loss_and_grad(const Image& image, const Image& centroid, const WarpPlan& plan,
                            const Eigen::VectorXd& target) {
  require_same_shape(image, centroid, "warp_loss_and_grad");
  if (image.height != plan.height() || image.width != plan.width())
    throw Error(ErrorCode::kDimensionMismatch, "image shape does not match warp plan");
  Eigen::VectorXd cu, cv, gu, gv;
  plan.sample_coords(target, cu, cv);
  WarpLoss out;
  out.loss = resampled_loss_and_coord_grad(image, centroid, cu, cv, gu, gv);
  out.grad.d_loss_d_landmarks = plan.pull_back(gu, gv);
  return out;
}

WarpLoss warp_loss_and_grad(const Image& image, const Image& centroid, const WarpPlan& plan,
                            const LandmarkSet& target) {
  return warp_loss_and_grad(image, centroid, plan, target.to_vector());
}

double warp_loss(const Image& image, const Image& centroid, const WarpPlan& plan, const Eigen::VectorXd& target) {
  require_same_shape(image, centroid, "warp_loss");
  return squared_distance(warp_image(image, plan, target), centroid);
}

Image low_pass(const Image& image, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "blur sigma must be positive");
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * k * k / (sigma * sigma));
    total += taps[static_cast<std::size_t>(k + radius)];
  }
  for (double& t : taps) t /= total;

  const int h = image.height;
  const int w = image.width;
  Image rows(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += taps[static_cast<std::size_t>(k + radius)] * image.at(r, std::clamp(c + k, 0, w - 1));
      rows.at(r, c) = s;
    }
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += taps[static_cast<std::size_t>(k + radius)] * rows.at(std::clamp(r + k, 0, h - 1), c);
      out.at(r, c) = s;
    }
  return normalized(std::move(out));
}

}  // namespace dikm
