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

#include "dikm/evaluation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dikm/error.hpp"

namespace dikm {

// Shortest augmenting path Hungarian method on cost = -weights, O(K^3).
std::vector<int> max_weight_matching(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw Error(ErrorCode::kDimensionMismatch, "matching needs a square matrix");
  const int n = static_cast<int>(weights.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials and column owners; index 0 is the virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> owner(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    owner[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int r = owner[col0];
      double delta = inf;
      int col1 = 0;
      for (int c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = -weights(r - 1, c - 1) - u[r] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (int c = 0; c <= n; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const int col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int c = 1; c <= n; ++c) out[static_cast<std::size_t>(owner[c] - 1)] = c - 1;
  return out;
}

Eigen::MatrixXd contingency(std::span<const int> labels, std::span<const int> assignments, int k) {
  if (labels.size() != assignments.size())
    throw Error(ErrorCode::kDimensionMismatch, "labels and assignments differ in length");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k || assignments[i] < 0 || assignments[i] >= k)
      throw Error(ErrorCode::kLabelOutOfRange, "entry " + std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    counts(assignments[i], labels[i]) += 1.0;
  }
  return counts;
}

EvalReport clustering_accuracy(std::span<const int> labels, std::span<const int> assignments, int k) {
  if (k <= 0) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  const Eigen::MatrixXd counts = contingency(labels, assignments, k);
  EvalReport report;
  report.mapping = max_weight_matching(counts);
  report.per_cluster_sizes.assign(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++report.per_cluster_sizes[static_cast<std::size_t>(a)];
  double matched = 0.0;
  for (int c = 0; c < k; ++c) matched += counts(c, report.mapping[static_cast<std::size_t>(c)]);
  report.matched = static_cast<int>(matched);
  report.accuracy = labels.empty() ? 0.0 : matched / static_cast<double>(labels.size());
  return report;
}

double distortion(const ClusterState& state) {
  double total = 0.0;
  for (std::size_t i = 0; i < state.assignments.size(); ++i)
    total += state.distances(static_cast<Eigen::Index>(i), state.assignments[i]);
  return total;
}

std::size_t crossval_select(std::span<const SweepRun> runs) {
  if (runs.empty()) throw Error(ErrorCode::kEmptyInput, "no runs to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].distortion < runs[best].distortion) best = i;
  return best;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw Error(ErrorCode::kDimensionMismatch, "pearson: size mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dikm
