// Copyright 2026 The dynspgemm Authors
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

#include <algorithm>
#include <string>
#include <utility>

#include "dynspgemm/types.hpp"

namespace dynspgemm {

struct GridCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(GridCoord, GridCoord) = default;
};

/// Square sqrt(p) x sqrt(p) process grid, ranks numbered row-major.
class ProcessGrid {
 public:
  ProcessGrid() = default;

  static ProcessGrid square(int p) {
    if (p <= 0) throw ContractViolation("process count must be positive");
    int q = 1;
    while ((q + 1) * (q + 1) <= p) ++q;
    if (q * q != p) throw ContractViolation("process count " + std::to_string(p) + " is not a perfect square");
    return ProcessGrid(q);
  }

  static ProcessGrid with_side(int q) {
    if (q <= 0) throw ContractViolation("grid side must be positive");
    return ProcessGrid(q);
  }

  int side() const noexcept { return q_; }
  int size() const noexcept { return q_ * q_; }

  int rank_of(GridCoord c) const {
    detail::require(c.row >= 0 && c.row < q_ && c.col >= 0 && c.col < q_, "grid coordinate out of range");
    return c.row * q_ + c.col;
  }
  GridCoord coord_of(int rank) const {
    detail::require(rank >= 0 && rank < size(), "rank out of range");
    return {rank / q_, rank % q_};
  }
  int transpose_rank(int rank) const {
    const GridCoord c = coord_of(rank);
    return rank_of({c.col, c.row});
  }

 private:
  explicit ProcessGrid(int q) : q_(q) {}
  int q_ = 1;
};

/**
 * Balanced contiguous split of [0, n) into q ranges: the first (n mod q)
 * ranges hold ceil(n/q) indices, the rest floor(n/q).
 */
class AxisSplit {
 public:
  AxisSplit() = default;
  AxisSplit(global_index n, int q) : n_(n), q_(q), base_(n / q), extra_(n % q) {
    detail::require(q > 0, "axis split needs q > 0");
  }

  global_index extent() const noexcept { return n_; }
  int parts() const noexcept { return q_; }

  global_index start(int b) const noexcept {
    const global_index bb = static_cast<global_index>(b);
    return bb * base_ + std::min<global_index>(bb, extra_);
  }
  global_index size(int b) const noexcept { return base_ + (static_cast<global_index>(b) < extra_ ? 1 : 0); }

  int owner(global_index i) const {
    if (i >= n_) throw ContractViolation("global index " + std::to_string(i) + " out of range " + std::to_string(n_));
    const global_index wide = extra_ * (base_ + 1);
    if (i < wide) return static_cast<int>(i / (base_ + 1));
    return static_cast<int>(extra_ + (i - wide) / base_);
  }

  /// (owning part, local offset)
  std::pair<int, local_index> to_local(global_index i) const {
    const int b = owner(i);
    return {b, static_cast<local_index>(i - start(b))};
  }

  global_index to_global(int b, local_index local) const {
    if (b < 0 || b >= q_ || local >= size(b)) throw ContractViolation("local index out of range");
    return start(b) + local;
  }

 private:
  global_index n_ = 0;
  int q_ = 1;
  global_index base_ = 0;
  global_index extra_ = 0;
};

struct LocalPosition {
  GridCoord owner;
  local_index row = 0;
  local_index col = 0;
};

/// Maps an n x m global index space onto the q x q grid.
class BlockPartition {
 public:
  BlockPartition() = default;
  BlockPartition(global_index n, global_index m, int q) : rows_(n, q), cols_(m, q) {}

  global_index global_rows() const noexcept { return rows_.extent(); }
  global_index global_cols() const noexcept { return cols_.extent(); }
  int side() const noexcept { return rows_.parts(); }
  const AxisSplit& rows() const noexcept { return rows_; }
  const AxisSplit& cols() const noexcept { return cols_; }

  GridCoord owner_of(global_index i, global_index j) const { return {rows_.owner(i), cols_.owner(j)}; }

  LocalPosition global_to_local(global_index i, global_index j) const {
    const auto [br, lr] = rows_.to_local(i);
    const auto [bc, lc] = cols_.to_local(j);
    return {{br, bc}, lr, lc};
  }

  std::pair<global_index, global_index> local_to_global(GridCoord block, local_index r, local_index c) const {
    return {rows_.to_global(block.row, r), cols_.to_global(block.col, c)};
  }

  std::size_t block_rows(int grid_row) const { return static_cast<std::size_t>(rows_.size(grid_row)); }
  std::size_t block_cols(int grid_col) const { return static_cast<std::size_t>(cols_.size(grid_col)); }

  friend bool operator==(const BlockPartition& a, const BlockPartition& b) {
    return a.global_rows() == b.global_rows() && a.global_cols() == b.global_cols() && a.side() == b.side();
  }

 private:
  AxisSplit rows_;
  AxisSplit cols_;
};

}  // namespace dynspgemm
