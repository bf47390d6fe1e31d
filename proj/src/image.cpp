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

#include "dikm/image.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dikm/error.hpp"

namespace dikm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kUnreadableImage: return "UnreadableImage";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Image::Image(int h, int w, double fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {
  if (h <= 0 || w <= 0) throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
}

Image::Image(int h, int w, std::vector<double> data) : height(h), width(w), pixels(std::move(data)) {
  if (h <= 0 || w <= 0) throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  if (pixels.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w))
    throw Error(ErrorCode::kDimensionMismatch, "pixel buffer does not match " + std::to_string(h) + "x" +
                                                   std::to_string(w));
}

double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) s += a.pixels[i] * b.pixels[i];
  return s;
}

double norm(const Image& image) {
  double s = 0.0;
  for (double p : image.pixels) s += p * p;
  return std::sqrt(s);
}

double squared_distance(const Image& a, const Image& b) {
  require_same_shape(a, b, "squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    s += d * d;
  }
  return s;
}

Image normalized(Image image) {
  const double n = norm(image);
  // Rescaling an image that is already unit-norm would only perturb the
  // last bits, so normalizing twice gives the same image as normalizing once.
  if (n > 0.0 && std::abs(n - 1.0) > 1e-12)
    for (double& p : image.pixels) p /= n;
  return image;
}

void require_same_shape(const Image& a, const Image& b, const char* context) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(context) + ": " + std::to_string(a.height) + "x" + std::to_string(a.width) + " vs " +
                    std::to_string(b.height) + "x" + std::to_string(b.width));
}

}  // namespace dikm
