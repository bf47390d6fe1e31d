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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dikm/image.hpp"

namespace dikm {

/// Decodes an 8/16-bit grayscale, gray+alpha, RGB or RGBA PNG to luma in
/// [0, 1] (weights 0.299, 0.587, 0.114). Throws UnreadableImage.
Image read_png_gray(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG from row-major bytes.
void write_png_gray8(const std::filesystem::path& path, int height, int width, const std::vector<std::uint8_t>& bytes);

/// Writes an 8-bit RGB PNG from row-major interleaved bytes.
void write_png_rgb8(const std::filesystem::path& path, int height, int width, const std::vector<std::uint8_t>& bytes);

}  // namespace dikm
