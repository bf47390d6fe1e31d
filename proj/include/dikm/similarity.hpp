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

#include <string>
#include <string_view>

#include "dikm/optimizer.hpp"

namespace dikm {

enum class MetricKind { kEuclidean, kAffineInvariant, kDeformationInvariant };

/// "euclidean" | "affine" | "diffeo".
std::string_view metric_name(MetricKind kind);
MetricKind parse_metric(std::string_view name);

/// The fit budget a metric actually runs: affine-invariant disables the
/// non-rigid stage, euclidean disables both.
FitConfig metric_config(MetricKind kind, FitConfig config);

/// d(image, centroid) under `kind`, warm-started from `fit`.
double distance(MetricKind kind, const PairImages& pair, const WarpPlan& plan, WarpFit& fit, const FitConfig& config);
double distance(MetricKind kind, const Image& image, const Image& centroid, const WarpPlan& plan, WarpFit& fit,
                const FitConfig& config);

/// The image as warped by its fit (the input itself for euclidean).
Image warped_representation(MetricKind kind, const Image& image, const WarpPlan& plan, const WarpFit& fit);

}  // namespace dikm
