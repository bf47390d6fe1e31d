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

#include <cstddef>
#include <span>
#include <vector>

namespace dikm {

/// Grayscale image, row-major. Pixel (row, col) sits at plane coordinate
/// (u, v) = (row, col); the origin is the center of the top-left pixel.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, double fill = 0.0);
  Image(int h, int w, std::vector<double> data);

  std::size_t size() const { return pixels.size(); }
  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool same_shape(const Image& other) const { return height == other.height && width == other.width; }

  friend bool operator==(const Image&, const Image&) = default;
};

double dot(const Image& a, const Image& b);
double norm(const Image& image);
double squared_distance(const Image& a, const Image& b);

/// Scales to unit Euclidean norm. An all-zero image, or one whose norm is
/// already 1 to within 1e-12, is returned unchanged.
Image normalized(Image image);

/// Throws DimensionMismatch unless both images share a shape.
void require_same_shape(const Image& a, const Image& b, const char* context);

}  // namespace dikm
