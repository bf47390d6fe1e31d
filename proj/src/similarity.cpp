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

#include "dikm/similarity.hpp"

#include <string>

#include "dikm/error.hpp"

namespace dikm {

std::string_view metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::kEuclidean: return "euclidean";
    case MetricKind::kAffineInvariant: return "affine";
    case MetricKind::kDeformationInvariant: return "diffeo";
  }
  return "unknown";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "euclidean") return MetricKind::kEuclidean;
  if (name == "affine") return MetricKind::kAffineInvariant;
  if (name == "diffeo") return MetricKind::kDeformationInvariant;
  throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(name) + "'");
}

FitConfig metric_config(MetricKind kind, FitConfig config) {
  if (kind != MetricKind::kDeformationInvariant) config.stage2_steps = 0;
  if (kind == MetricKind::kEuclidean) config.stage1_steps = 0;
  return config;
}

double distance(MetricKind kind, const PairImages& pair, const WarpPlan& plan, WarpFit& fit,
                const FitConfig& config) {
  if (kind == MetricKind::kEuclidean) {
    fit.last_loss = squared_distance(pair.image, pair.centroid);
    return fit.last_loss;
  }
  return evaluate_distance(pair, plan, fit, metric_config(kind, config));
}

double distance(MetricKind kind, const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                const FitConfig& config) {
  if (kind == MetricKind::kEuclidean) return distance(kind, PairImages{image, centroid, image, centroid}, plan, fit, config);
  const Image image_smooth = low_pass(image, config.blur_sigma);
  const Image centroid_smooth = low_pass(centroid, config.blur_sigma);
  return distance(kind, PairImages{image, centroid, image_smooth, centroid_smooth}, plan, fit, config);
}

Image warped_representation(MetricKind kind, const Image& image, const WarpPlan& plan, const WarpFit& fit) {
  if (kind == MetricKind::kEuclidean) return image;
  return warp_image(image, plan, fit.target);
}

}  // namespace dikm
