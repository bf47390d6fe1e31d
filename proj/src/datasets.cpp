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

#include "dikm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "dikm/error.hpp"
#include "dikm/png_io.hpp"

namespace dikm {
namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;
constexpr int kDiffeoGrid = 16;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (buf.size() < offset + 4) throw Error(ErrorCode::kTruncatedFile, path.string() + ": header cut short");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

AffineSample draw_affine(std::mt19937_64& rng, const AffineRanges& r) {
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  AffineSample s;
  const double rot = r.rotation_deg * std::numbers::pi / 180.0;
  s.rotation = uniform(-rot, rot);
  s.scale_u = uniform(r.scale_min, r.scale_max);
  s.scale_v = uniform(r.scale_min, r.scale_max);
  s.shear = uniform(-r.shear, r.shear);
  s.shift_u = uniform(-r.shift, r.shift);
  s.shift_v = uniform(-r.shift, r.shift);
  return s;
}

SyntheticDataset generate(const std::vector<Image>& exemplars, int per_class, const AffineRanges& ranges,
                          double diffeo_sigma, std::uint64_t seed, const std::string& kind) {
  if (exemplars.empty()) throw Error(ErrorCode::kEmptyInput, "no exemplars");
  if (per_class <= 0) throw Error(ErrorCode::kInvalidArgument, "per_class must be positive");
  if (diffeo_sigma < 0.0) throw Error(ErrorCode::kInvalidArgument, "diffeo sigma must be >= 0");
  const int h = exemplars.front().height;
  const int w = exemplars.front().width;
  for (const Image& e : exemplars) require_same_shape(e, exemplars.front(), "exemplars");
  const auto plan = WarpPlan::create(h, w, kDiffeoGrid);

  auto affine_rng = make_rng(seed, 1);
  auto jitter_rng = make_rng(seed, 2);
  auto split_rng = make_rng(seed, 3);
  std::vector<Image> images;
  std::vector<int> labels;
  for (std::size_t c = 0; c < exemplars.size(); ++c) {
    const Image base = normalized(exemplars[c]);
    for (int j = 0; j < per_class; ++j) {
      const AffineSample sample = draw_affine(affine_rng, ranges);
      const Eigen::VectorXd affine = affine_sample_landmarks(*plan, sample);
      const Eigen::VectorXd target =
          diffeo_sigma > 0.0 ? jitter_landmarks(*plan, affine, diffeo_sigma, jitter_rng) : affine;
      images.push_back(normalized(warp_image(base, *plan, target)));
      labels.push_back(static_cast<int>(c));
    }
  }

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t test_count = images.size() / 3;
  SyntheticDataset out;
  std::ostringstream prov;
  prov << "synthetic " << kind << " seed=" << seed << " per_class=" << per_class << " rotation_deg=" << ranges.rotation_deg
       << " scale=[" << ranges.scale_min << "," << ranges.scale_max << "] shear=" << ranges.shear
       << " shift=" << ranges.shift << " diffeo_sigma=" << diffeo_sigma;
  out.train.split = "train";
  out.test.split = "test";
  out.train.provenance = out.test.provenance = prov.str();
  for (std::size_t j = 0; j < order.size(); ++j) {
    LabeledDataset& dst = j < order.size() - test_count ? out.train : out.test;
    dst.images.push_back(std::move(images[order[j]]));
    dst.labels.push_back(labels[order[j]]);
  }
  return out;
}

}  // namespace

int LabeledDataset::class_count() const {
  return labels.empty() ? 0 : 1 + *std::max_element(labels.begin(), labels.end());
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto ib = read_file(images_path);
  const auto lb = read_file(labels_path);
  if (read_be32(ib, 0, images_path) != kIdxImages)
    throw Error(ErrorCode::kBadMagic, images_path.string() + " is not an IDX image tensor");
  if (read_be32(lb, 0, labels_path) != kIdxLabels)
    throw Error(ErrorCode::kBadMagic, labels_path.string() + " is not an IDX label vector");
  const std::uint32_t count = read_be32(ib, 4, images_path);
  const std::uint32_t rows = read_be32(ib, 8, images_path);
  const std::uint32_t cols = read_be32(ib, 12, images_path);
  const std::uint32_t label_count = read_be32(lb, 4, labels_path);
  if (count != label_count)
    throw Error(ErrorCode::kCountMismatch,
                std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kInvalidArgument, "IDX images have zero size");
  if (ib.size() < 16 + pixels * count) throw Error(ErrorCode::kTruncatedFile, images_path.string() + ": pixel data cut short");
  if (lb.size() < 8 + static_cast<std::size_t>(count)) throw Error(ErrorCode::kTruncatedFile, labels_path.string() + ": labels cut short");

  LabeledDataset out;
  out.provenance = "idx " + images_path.string();
  out.images.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> px(pixels);
    for (std::size_t p = 0; p < pixels; ++p) px[p] = ib[16 + n * pixels + p] / 255.0;
    out.images.push_back(normalized(Image(static_cast<int>(rows), static_cast<int>(cols), std::move(px))));
    out.labels.push_back(lb[8 + n]);
  }
  return out;
}

void save_idx(const LabeledDataset& data, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path) {
  if (data.images.size() != data.labels.size()) throw Error(ErrorCode::kCountMismatch, "images/labels differ in count");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error(ErrorCode::kIoError, "cannot write IDX files");
  write_be32(img, kIdxImages);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(data.height()));
  write_be32(img, static_cast<std::uint32_t>(data.width()));
  for (const Image& im : data.images) {
    const double peak = im.pixels.empty() ? 0.0 : *std::max_element(im.pixels.begin(), im.pixels.end());
    for (double p : im.pixels) {
      const double scaled = peak > 0.0 ? std::clamp(p / peak, 0.0, 1.0) * 255.0 : 0.0;
      img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(scaled))));
    }
  }
  write_be32(lab, kIdxLabels);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int l : data.labels) lab.put(static_cast<char>(static_cast<std::uint8_t>(l)));
}

LabeledDataset load_idx_dir(const std::filesystem::path& dir) {
  LabeledDataset d = load_idx(dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
  d.split = dir.filename().string();
  return d;
}

void save_idx_dir(const LabeledDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_idx(data, dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
}

Image resize_bilinear(const Image& image, int height, int width) {
  if (height == image.height && width == image.width) return image;
  Image out(height, width);
  const double su = height > 1 ? static_cast<double>(image.height - 1) / (height - 1) : 0.0;
  const double sv = width > 1 ? static_cast<double>(image.width - 1) / (width - 1) : 0.0;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) out.at(r, c) = bilinear_sample(image, {r * su, c * sv});
  return out;
}

LabeledDataset load_png_dir(const std::filesystem::path& root, int resize_height, int resize_width) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIoError, root.string() + " is not a directory");
  std::vector<fs::path> classes;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) classes.push_back(entry.path());
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) throw Error(ErrorCode::kEmptyInput, root.string() + " has no class directories");

  LabeledDataset out;
  out.provenance = "png " + root.string();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(classes[c])) {
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (entry.is_regular_file() && ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::kEmptyClass, classes[c].string() + " contains no PNG images");
    for (const auto& f : files) {
      out.images.push_back(normalized(resize_bilinear(read_png_gray(f), resize_height, resize_width)));
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

std::vector<Image> base_exemplars(const LabeledDataset& data, int k) {
  std::vector<Image> out(static_cast<std::size_t>(k));
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  int found = 0;
  for (std::size_t i = 0; i < data.size() && found < k; ++i) {
    const int l = data.labels[i];
    if (l < 0 || l >= k || seen[static_cast<std::size_t>(l)]) continue;
    seen[static_cast<std::size_t>(l)] = 1;
    out[static_cast<std::size_t>(l)] = data.images[i];
    ++found;
  }
  if (found < k) throw Error(ErrorCode::kEmptyClass, "dataset lacks an exemplar for some class");
  return out;
}

LabeledDataset stratified_subset(const LabeledDataset& data, int count, int k) {
  const int per_class = count / k;
  LabeledDataset out;
  out.split = data.split;
  out.provenance = data.provenance + " stratified " + std::to_string(count);
  std::vector<int> taken(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int l = data.labels[i];
    if (l < 0 || l >= k || taken[static_cast<std::size_t>(l)] >= per_class) continue;
    ++taken[static_cast<std::size_t>(l)];
    out.images.push_back(data.images[i]);
    out.labels.push_back(l);
  }
  if (std::any_of(taken.begin(), taken.end(), [&](int t) { return t < per_class; }))
    throw Error(ErrorCode::kInsufficientData, "not enough samples for a stratified subset");
  return out;
}

std::array<double, 4> AffineSample::matrix() const {
  const double c = std::cos(rotation);
  const double s = std::sin(rotation);
  // R * Shear * Scale
  const double a00 = c, a01 = c * shear - s;
  const double a10 = s, a11 = s * shear + c;
  return {a00 * scale_u, a01 * scale_v, a10 * scale_u, a11 * scale_v};
}

Eigen::VectorXd affine_sample_landmarks(const WarpPlan& plan, const AffineSample& sample) {
  const auto m = sample.matrix();
  const double cu = 0.5 * (plan.height() - 1);
  const double cv = 0.5 * (plan.width() - 1);
  Eigen::VectorXd out = plan.source_vector();
  for (Eigen::Index i = 0; i < out.size(); i += 2) {
    const double du = out[i] - cu;
    const double dv = out[i + 1] - cv;
    out[i] = cu + m[0] * du + m[1] * dv + sample.shift_u;
    out[i + 1] = cv + m[2] * du + m[3] * dv + sample.shift_v;
  }
  return out;
}

double min_cell_orientation(const WarpPlan& plan, const Eigen::VectorXd& target) {
  Eigen::VectorXd cu, cv;
  plan.sample_coords(target, cu, cv);
  const int h = plan.height();
  const int w = plan.width();
  double worst = std::numeric_limits<double>::infinity();
  auto idx = [w](int r, int c) { return static_cast<Eigen::Index>(r) * w + c; };
  for (int r = 0; r + 1 < h; ++r)
    for (int c = 0; c + 1 < w; ++c) {
      // Corners in the order top-left, bottom-left, bottom-right, top-right;
      // every corner turns the same way unless the cell folds or caves in.
      const Eigen::Index q[4] = {idx(r, c), idx(r + 1, c), idx(r + 1, c + 1), idx(r, c + 1)};
      for (int k = 0; k < 4; ++k) {
        const Eigen::Index cur = q[k], next = q[(k + 1) % 4], prev = q[(k + 3) % 4];
        const double au = cu[next] - cu[cur], av = cv[next] - cv[cur];
        const double bu = cu[prev] - cu[cur], bv = cv[prev] - cv[cur];
        worst = std::min(worst, au * bv - av * bu);
      }
    }
  return worst;
}

Eigen::VectorXd jitter_landmarks(const WarpPlan& plan, const Eigen::VectorXd& base, double sigma,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd target = base;
  double scale = sigma;
  for (int attempt = 0;; ++attempt) {
    for (Eigen::Index i = 0; i < target.size(); ++i) target[i] = base[i] + scale * normal(rng);
    if (min_cell_orientation(plan, target) > 0.0) return target;
    // Shrink persistently folding draws; a non-folding base is reached in the limit.
    if (attempt % 20 == 19) scale *= 0.5;
  }
}

SyntheticDataset gen_affine_mnist(const std::vector<Image>& exemplars, int per_class, const AffineRanges& ranges,
                                  std::uint64_t seed) {
  return generate(exemplars, per_class, ranges, 0.0, seed, "affine");
}

SyntheticDataset gen_diffeo_mnist(const std::vector<Image>& exemplars, int per_class, const AffineRanges& ranges,
                                  double diffeo_sigma, std::uint64_t seed) {
  return generate(exemplars, per_class, ranges, diffeo_sigma, seed, diffeo_sigma > 0.0 ? "diffeo" : "affine");
}

}  // namespace dikm
