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
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dikm {

struct Point {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Ordered landmarks. Source and target sets with the same size correspond
/// index to index.
struct LandmarkSet {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }

  /// Interleaved (u0, v0, u1, v1, ...) layout used by the optimizers.
  Eigen::VectorXd to_vector() const;
  static LandmarkSet from_vector(const Eigen::VectorXd& vec);

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

/// Uniform side x side grid inset by half a cell from the border of an
/// height x width frame, row-major. `count` must be a perfect square >= 4.
LandmarkSet grid_landmarks(int height, int width, int count);

/// Side length of the landmark grid for `count` landmarks; throws unless
/// `count` is a perfect square >= 4.
int grid_side(int count);

enum class KernelNorm { kL1, kL2 };

struct TpsOptions {
  /// lambda_k added to the kernel-block diagonal; 0 interpolates exactly.
  double regularization = 0.0;
  KernelNorm norm = KernelNorm::kL1;

  friend auto operator<=>(const TpsOptions&, const TpsOptions&) = default;
};

/// U(r) = r^2 log(r^2), extended by U(0) = 0.
double tps_kernel(double r);

/// Radius fed to the kernel under the given norm.
double kernel_radius(Point a, Point b, KernelNorm norm);

/// Source landmarks with the inverse of the bordered system
///   L = [[K + lambda I, P], [P^T, 0]].
/// Immutable once built.
class TpsSystem {
 public:
  const LandmarkSet& source() const { return source_; }
  const Eigen::MatrixXd& l_inverse() const { return l_inverse_; }
  const TpsOptions& options() const { return options_; }
  double regularization() const { return options_.regularization; }
  std::size_t landmark_count() const { return source_.size(); }

  /// Rebuilds L from the source landmarks.
  Eigen::MatrixXd assemble() const;

  /// Row of kernel values and affine terms (U(|p - s_1|), ..., U(|p - s_l|), 1, u, v).
  Eigen::RowVectorXd basis(Point p) const;

 private:
  friend TpsSystem build_system(const LandmarkSet& source, const TpsOptions& options);
  TpsSystem() = default;

  LandmarkSet source_;
  Eigen::MatrixXd l_inverse_;
  TpsOptions options_;
};

/// Per output dimension: affine triple (a_1, a_u, a_v) and l kernel weights.
struct TpsParams {
  std::array<std::array<double, 3>, 2> affine{};
  std::array<Eigen::VectorXd, 2> weights;
};

/// Assembles and inverts L. Throws SingularSystem when the equilibrated
/// condition estimate exceeds 1e12.
TpsSystem build_system(const LandmarkSet& source, const TpsOptions& options = {});
inline TpsSystem build_system(const LandmarkSet& source, double regularization) {
  return build_system(source, TpsOptions{regularization, KernelNorm::kL1});
}

/// Number of L inversions performed by this process so far.
std::uint64_t factorization_count();

TpsParams solve(const TpsSystem& system, const LandmarkSet& target);

std::vector<Point> map_coords(const TpsParams& params, const TpsSystem& system, std::span<const Point> coords);

/// Linear map J with map_coords(solve(system, t), system, coords) = J * t.to_vector().
/// Rows are interleaved (u'0, v'0, u'1, ...), columns follow LandmarkSet::to_vector.
Eigen::MatrixXd coord_jacobian(const TpsSystem& system, std::span<const Point> coords);

/// Per-coordinate weights B (|coords| x l): the u-component of the mapped
/// coordinate is B * target_u and likewise for v. coord_jacobian is B
/// expanded block-diagonally over the two dimensions.
Eigen::MatrixXd coord_weights(const TpsSystem& system, std::span<const Point> coords);

}  // namespace dikm
