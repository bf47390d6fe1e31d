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
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dikm/image.hpp"
#include "dikm/warp.hpp"

namespace dikm {

struct LabeledDataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::string split = "train";
  std::string provenance;

  std::size_t size() const { return images.size(); }
  int height() const { return images.empty() ? 0 : images.front().height; }
  int width() const { return images.empty() ? 0 : images.front().width; }
  /// 1 + largest label.
  int class_count() const;
};

/// Decodes an IDX image tensor (magic 0x00000803) and label vector (magic
/// 0x00000801). Pixels are scaled to [0, 1] and each image normalized to unit
/// norm. Throws BadMagic, TruncatedFile, CountMismatch.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes images as 8-bit IDX, each rescaled so its largest pixel maps to 255.
void save_idx(const LabeledDataset& data, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

/// Reads `<dir>/images-idx3-ubyte` and `<dir>/labels-idx1-ubyte`.
LabeledDataset load_idx_dir(const std::filesystem::path& dir);
void save_idx_dir(const LabeledDataset& data, const std::filesystem::path& dir);

/// Directory-per-class PNG layout; class index follows sorted subdirectory
/// names. Images are converted to luma, bilinearly resized to
/// resize_height x resize_width and unit-normalized. Throws UnreadableImage,
/// EmptyClass.
LabeledDataset load_png_dir(const std::filesystem::path& root, int resize_height, int resize_width);

/// Bilinear resize mapping corner pixel centers onto corner pixel centers.
Image resize_bilinear(const Image& image, int height, int width);

/// First image of each class 0..K-1 in dataset order.
std::vector<Image> base_exemplars(const LabeledDataset& data, int k);

/// The first `count / K` samples of every class, in dataset order.
LabeledDataset stratified_subset(const LabeledDataset& data, int count, int k);

/// Generator ranges for random affine transformations, about the frame center.
struct AffineRanges {
  double rotation_deg = 25.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
  double shear = 0.15;
  double shift = 3.0;

  static AffineRanges identity() { return {0.0, 1.0, 1.0, 0.0, 0.0}; }
};

struct AffineSample {
  double rotation = 0.0;  // radians
  double scale_u = 1.0;
  double scale_v = 1.0;
  double shear = 0.0;
  double shift_u = 0.0;
  double shift_v = 0.0;

  /// Linear part R(rotation) * [[1, shear], [0, 1]] * diag(scale_u, scale_v), row-major.
  std::array<double, 4> matrix() const;
};

/// Landmarks of the map p -> c + M (p - c) + shift applied to plan's source grid.
Eigen::VectorXd affine_sample_landmarks(const WarpPlan& plan, const AffineSample& sample);

/// Smallest signed area of the warped pixel-grid cells for `target`; positive
/// means no cell folds.
double min_cell_orientation(const WarpPlan& plan, const Eigen::VectorXd& target);

/// Adds N(0, sigma^2) noise to every landmark coordinate, redrawing (and
/// eventually shrinking) draws whose warp folds a pixel cell.
Eigen::VectorXd jitter_landmarks(const WarpPlan& plan, const Eigen::VectorXd& base, double sigma,
                                 std::mt19937_64& rng);

struct SyntheticDataset {
  LabeledDataset train;
  LabeledDataset test;
};

/// per_class random affine copies of every exemplar; a third (floor) of the
/// shuffled samples form the test split.
SyntheticDataset gen_affine_mnist(const std::vector<Image>& exemplars, int per_class, const AffineRanges& ranges,
                                  std::uint64_t seed);

/// As gen_affine_mnist with an extra Gaussian jitter of standard deviation
/// diffeo_sigma px on a 4x4 landmark grid. Jitters that fold the frame are
/// redrawn. diffeo_sigma = 0 reproduces gen_affine_mnist exactly.
SyntheticDataset gen_diffeo_mnist(const std::vector<Image>& exemplars, int per_class, const AffineRanges& ranges,
                                  double diffeo_sigma, std::uint64_t seed);

}  // namespace dikm
