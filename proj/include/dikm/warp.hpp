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

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <Eigen/Dense>

#include "dikm/image.hpp"
#include "dikm/tps.hpp"

namespace dikm {

/// A TPS system bound to one image shape, with the per-pixel coordinate
/// weights B (H*W x l) precomputed so that warping costs two matrix-vector
/// products. Immutable and shareable across threads.
class WarpPlan {
 public:
  WarpPlan(int height, int width, std::shared_ptr<const TpsSystem> system);

  /// Grid landmarks for the frame plus a freshly built system.
  static std::shared_ptr<const WarpPlan> create(int height, int width, int landmarks, const TpsOptions& options = {});

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_); }
  const TpsSystem& system() const { return *system_; }
  const LandmarkSet& source() const { return system_->source(); }
  std::size_t landmark_count() const { return system_->landmark_count(); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& source_vector() const { return source_vec_; }

  /// Spacing of the landmark grid along each axis, in pixels.
  double cell_height() const { return cell_height_; }
  double cell_width() const { return cell_width_; }

  /// Sampling position of every output pixel for the given target landmarks
  /// (interleaved layout). Computed as pixel grid + B (target - source), so
  /// the identity target yields the pixel grid exactly.
  void sample_coords(const Eigen::VectorXd& target, Eigen::VectorXd& cu, Eigen::VectorXd& cv) const;

  /// Chains d loss / d sampling position back to d loss / d target landmarks.
  Eigen::VectorXd pull_back(const Eigen::VectorXd& grad_u, const Eigen::VectorXd& grad_v) const;

  /// Row and column of each pixel, row-major.
  const Eigen::VectorXd& grid_u() const { return grid_u_; }
  const Eigen::VectorXd& grid_v() const { return grid_v_; }

 private:
  int height_;
  int width_;
  std::shared_ptr<const TpsSystem> system_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd source_vec_;
  Eigen::VectorXd grid_u_;
  Eigen::VectorXd grid_v_;
  double cell_height_;
  double cell_width_;
};

/// Builds each (shape, landmarks, options) plan once and hands out shared
/// copies afterwards.
class WarpPlanCache {
 public:
  std::shared_ptr<const WarpPlan> get(int height, int width, int landmarks, const TpsOptions& options = {});
  std::size_t size() const;

 private:
  using Key = std::tuple<int, int, int, double, int>;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const WarpPlan>> plans_;
};

/// Bilinear blend of the four neighbours of (u, v); out-of-frame neighbours
/// read as zero.
double bilinear_sample(const Image& image, Point coord);

/// Bilinear value plus its derivatives along u and v. On cell boundaries the
/// derivative of the cell selected by floor() is returned.
double bilinear_sample_grad(const Image& image, double u, double v, double& d_u, double& d_v);

Image warp_image(const Image& image, const WarpPlan& plan, const LandmarkSet& target);
Image warp_image(const Image& image, const WarpPlan& plan, const Eigen::VectorXd& target);

/// Renders `image` at explicit sampling positions (one per output pixel).
Image resample(const Image& image, const Eigen::VectorXd& cu, const Eigen::VectorXd& cv);

/// ||resample(image) - reference||^2 together with the derivative of that
/// loss with respect to every sampling position.
double resampled_loss_and_coord_grad(const Image& image, const Image& reference, const Eigen::VectorXd& cu,
                                     const Eigen::VectorXd& cv, Eigen::VectorXd& grad_u, Eigen::VectorXd& grad_v);

struct WarpGradient {
  Eigen::VectorXd d_loss_d_landmarks;
};

struct WarpLoss {
  double loss = 0.0;
  WarpGradient grad;
};

/// Loss ||warp_image(image, target) - centroid||^2 and its exact gradient
/// with respect to the 2l target coordinates.
WarpLoss warp_loss_and_grad(const Image& image, const Image& centroid, const WarpPlan& plan,
                            const Eigen::VectorXd& target);
WarpLoss warp_loss_and_grad(const Image& image, const Image& centroid, const WarpPlan& plan,
                            const LandmarkSet& target);

/// Loss only; same value as warp_loss_and_grad().loss.
double warp_loss(const Image& image, const Image& centroid, const WarpPlan& plan, const Eigen::VectorXd& target);

/// Separable truncated Gaussian (radius ceil(4 sigma), unit-sum taps, edge
/// replication), renormalized to unit norm.
Image low_pass(const Image& image, double sigma);

}  // namespace dikm
