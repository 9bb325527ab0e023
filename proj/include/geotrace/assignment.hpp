//
// Copyright 2026 The Geotrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "geotrace/error.hpp"

namespace geotrace {

// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline constexpr int kUnassigned = -1;

namespace assignment_detail {

// Shortest augmenting path Hungarian method with potentials, O(n^2 m) for an
// n x m matrix with n <= m. Every row is assigned.
inline std::vector<int> HungarianWide(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> match_of_col(m + 1, 0), way(m + 1, 0);
  std::vector<double> minv(m + 1);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_of_col[j0] = match_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, kUnassigned);
  for (std::size_t j = 1; j <= m; ++j) {
    if (match_of_col[j] != 0) {
      row_to_col[match_of_col[j] - 1] = static_cast<int>(j - 1);
    }
  }
  return row_to_col;
}

}  // namespace assignment_detail

// Minimum-cost assignment on a rectangular matrix. Returns, for every row,
// its column or kUnassigned; min(rows, cols) pairs are always formed.
// Costs must be finite.
inline std::vector<int> SolveAssignment(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  if (n == 0 || m == 0) return std::vector<int>(n, kUnassigned);
  if (n <= m) return assignment_detail::HungarianWide(cost);
  CostMatrix t(m, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) t(c, r) = cost(r, c);
  }
  const std::vector<int> col_to_row = assignment_detail::HungarianWide(t);
  std::vector<int> row_to_col(n, kUnassigned);
  for (std::size_t c = 0; c < m; ++c) {
    if (col_to_row[c] != kUnassigned) {
      row_to_col[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
    }
  }
  return row_to_col;
}

// Greedy nearest pairs: repeatedly takes the cheapest remaining (row, col),
// ties broken by row then column. Deterministic but not optimal.
inline std::vector<int> SolveAssignmentGreedy(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(n * m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) pairs.emplace_back(cost(r, c), r, c);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> row_to_col(n, kUnassigned);
  std::vector<char> col_used(m, 0);
  std::size_t formed = 0;
  const std::size_t target = std::min(n, m);
  for (const auto& [c_val, r, c] : pairs) {
    if (formed == target) break;
    if (row_to_col[r] != kUnassigned || col_used[c]) continue;
    row_to_col[r] = static_cast<int>(c);
    col_used[c] = 1;
    ++formed;
  }
  return row_to_col;
}

inline double AssignmentCost(const CostMatrix& cost,
                             std::span<const int> row_to_col) {
  double total = 0.0;
  for (std::size_t r = 0; r < row_to_col.size(); ++r) {
    if (row_to_col[r] != kUnassigned) {
      total += cost(r, static_cast<std::size_t>(row_to_col[r]));
    }
  }
  return total;
}

}  // namespace geotrace
