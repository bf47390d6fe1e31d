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

#include "dikm/tps.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "dikm/error.hpp"

namespace dikm {
namespace {

std::atomic<std::uint64_t> g_factorizations{0};

constexpr double kMaxCondition = 1e12;

bool all_collinear(const LandmarkSet& set) {
  const auto& p = set.points;
  double scale = 0.0;
  for (const auto& q : p) scale = std::max({scale, std::abs(q.u - p[0].u), std::abs(q.v - p[0].v)});
  if (scale == 0.0) return true;
  for (std::size_t i = 1; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const double cross = (p[i].u - p[0].u) * (p[j].v - p[0].v) - (p[i].v - p[0].v) * (p[j].u - p[0].u);
      if (std::abs(cross) > 1e-12 * scale * scale) return false;
    }
  return true;
}

}  // namespace

Eigen::VectorXd LandmarkSet::to_vector() const {
  Eigen::VectorXd out(2 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[2 * i] = points[i].u;
    out[2 * i + 1] = points[i].v;
  }
  return out;
}

LandmarkSet LandmarkSet::from_vector(const Eigen::VectorXd& vec) {
  if (vec.size() % 2 != 0) throw Error(ErrorCode::kDimensionMismatch, "landmark vector has odd length");
  LandmarkSet out;
  out.points.resize(static_cast<std::size_t>(vec.size() / 2));
  for (std::size_t i = 0; i < out.points.size(); ++i) out.points[i] = {vec[2 * i], vec[2 * i + 1]};
  return out;
}

int grid_side(int count) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (count < 4 || side * side != count)
    throw Error(ErrorCode::kInvalidArgument,
                "landmark count must be a perfect square >= 4, got " + std::to_string(count));
  return side;
}

LandmarkSet grid_landmarks(int height, int width, int count) {
  const int side = grid_side(count);
  LandmarkSet out;
  out.points.reserve(static_cast<std::size_t>(count));
  const double cell_u = static_cast<double>(height) / side;
  const double cell_v = static_cast<double>(width) / side;
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b) out.points.push_back({-0.5 + (a + 0.5) * cell_u, -0.5 + (b + 0.5) * cell_v});
  return out;
}

double tps_kernel(double r) {
  const double r2 = r * r;
  // r2 can underflow to zero for tiny r; the limit is still 0.
  if (r2 <= 0.0) return 0.0;
  return r2 * std::log(r2);
}

double kernel_radius(Point a, Point b, KernelNorm norm) {
  const double du = a.u - b.u;
  const double dv = a.v - b.v;
  return norm == KernelNorm::kL1 ? std::abs(du) + std::abs(dv) : std::hypot(du, dv);
}

Eigen::MatrixXd TpsSystem::assemble() const {
  const auto l = static_cast<Eigen::Index>(source_.size());
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(l + 3, l + 3);
  for (Eigen::Index i = 0; i < l; ++i) {
    const Point pi = source_.points[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < l; ++j)
      mat(i, j) = tps_kernel(kernel_radius(pi, source_.points[static_cast<std::size_t>(j)], options_.norm));
    mat(i, i) += options_.regularization;
    mat(i, l) = mat(l, i) = 1.0;
    mat(i, l + 1) = mat(l + 1, i) = pi.u;
    mat(i, l + 2) = mat(l + 2, i) = pi.v;
  }
  return mat;
}

Eigen::RowVectorXd TpsSystem::basis(Point p) const {
  const auto l = static_cast<Eigen::Index>(source_.size());
  Eigen::RowVectorXd row(l + 3);
  for (Eigen::Index i = 0; i < l; ++i)
    row[i] = tps_kernel(kernel_radius(p, source_.points[static_cast<std::size_t>(i)], options_.norm));
  row[l] = 1.0;
  row[l + 1] = p.u;
  row[l + 2] = p.v;
  return row;
}

TpsSystem build_system(const LandmarkSet& source, const TpsOptions& options) {
  if (source.size() < 3)
    throw Error(ErrorCode::kSingularSystem, "need at least 3 landmarks, got " + std::to_string(source.size()));
  if (options.regularization < 0.0) throw Error(ErrorCode::kInvalidArgument, "regularization must be >= 0");
  if (all_collinear(source)) throw Error(ErrorCode::kSingularSystem, "source landmarks are collinear");

  TpsSystem sys;
  sys.source_ = source;
  sys.options_ = options;
  const Eigen::MatrixXd mat = sys.assemble();

  // Symmetric equilibration D L D keeps the condition estimate meaningful
  // when kernel entries (~r^2 log r^2) dwarf the unit polynomial block.
  Eigen::VectorXd scale(mat.rows());
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    const double m = mat.row(i).cwiseAbs().maxCoeff();
    scale[i] = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
  }
  const Eigen::MatrixXd scaled = scale.asDiagonal() * mat * scale.asDiagonal();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(scaled);
  const double rcond = lu.rcond();
  if (!(rcond > 1.0 / kMaxCondition))
    throw Error(ErrorCode::kSingularSystem, "TPS system is numerically singular (rcond " + std::to_string(rcond) + ")");

  sys.l_inverse_ = scale.asDiagonal() * lu.inverse() * scale.asDiagonal();
  // L is symmetric; remove the rounding asymmetry of the LU inverse.
  sys.l_inverse_ = 0.5 * (sys.l_inverse_ + sys.l_inverse_.transpose()).eval();
  g_factorizations.fetch_add(1, std::memory_order_relaxed);
  return sys;
}

std::uint64_t factorization_count() { return g_factorizations.load(std::memory_order_relaxed); }

TpsParams solve(const TpsSystem& system, const LandmarkSet& target) {
  const std::size_t l = system.landmark_count();
  if (target.size() != l)
    throw Error(ErrorCode::kDimensionMismatch,
                "target has " + std::to_string(target.size()) + " landmarks, system has " + std::to_string(l));
  const auto li = static_cast<Eigen::Index>(l);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(li + 3, 2);
  for (std::size_t i = 0; i < l; ++i) {
    rhs(static_cast<Eigen::Index>(i), 0) = target.points[i].u;
    rhs(static_cast<Eigen::Index>(i), 1) = target.points[i].v;
  }
  const Eigen::MatrixXd sol = system.l_inverse() * rhs;
  TpsParams out;
  for (int d = 0; d < 2; ++d) {
    out.weights[d] = sol.col(d).head(li);
    out.affine[d] = {sol(li, d), sol(li + 1, d), sol(li + 2, d)};
  }
  return out;
}

std::vector<Point> map_coords(const TpsParams& params, const TpsSystem& system, std::span<const Point> coords) {
  const auto l = static_cast<Eigen::Index>(system.landmark_count());
  if (params.weights[0].size() != l || params.weights[1].size() != l)
    throw Error(ErrorCode::kDimensionMismatch, "params do not match system");
  std::vector<Point> out;
  out.reserve(coords.size());
  for (const Point& p : coords) {
    const Eigen::RowVectorXd row = system.basis(p);
    double mapped[2];
    for (int d = 0; d < 2; ++d) {
      const auto& a = params.affine[d];
      mapped[d] = a[0] + a[1] * p.u + a[2] * p.v + row.head(l).dot(params.weights[d]);
    }
    out.push_back({mapped[0], mapped[1]});
  }
  return out;
}

Eigen::MatrixXd coord_weights(const TpsSystem& system, std::span<const Point> coords) {
  const auto l = static_cast<Eigen::Index>(system.landmark_count());
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(coords.size()), l + 3);
  for (std::size_t i = 0; i < coords.size(); ++i) basis.row(static_cast<Eigen::Index>(i)) = system.basis(coords[i]);
  // Only the first l columns of the right-hand side are ever non-zero.
  return basis * system.l_inverse().leftCols(l);
}

Eigen::MatrixXd coord_jacobian(const TpsSystem& system, std::span<const Point> coords) {
  const Eigen::MatrixXd b = coord_weights(system, coords);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * b.rows(), 2 * b.cols());
  for (Eigen::Index p = 0; p < b.rows(); ++p)
    for (Eigen::Index i = 0; i < b.cols(); ++i) {
      jac(2 * p, 2 * i) = b(p, i);
      jac(2 * p + 1, 2 * i + 1) = b(p, i);
    }
  return jac;
}

}  // namespace dikm
