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

#include <span>
#include <string>
#include <type_traits>

#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dynamic_block.hpp"
#include "dynspgemm/grid.hpp"
#include "dynspgemm/redistribute.hpp"
#include "dynspgemm/transport.hpp"

namespace dynspgemm {

/// Primary matrices are stored dynamically, update matrices as DCSR, Bloom matrices as dynamic bitfields.
enum class MatrixRole { primary, update, bloom };

namespace detail {

template <class B>
struct is_dynamic_block : std::false_type {};
template <class V>
struct is_dynamic_block<DynamicBlock<V>> : std::true_type {};

template <class B>
struct is_dcsr_block : std::false_type {};
template <class V>
struct is_dcsr_block<DcsrBlock<V>> : std::true_type {};

template <class V>
std::size_t block_rows_of(const DynamicBlock<V>& b) {
  return b.n_rows();
}
template <class V>
std::size_t block_cols_of(const DynamicBlock<V>& b) {
  return b.n_cols();
}
template <class V>
std::size_t block_rows_of(const DcsrBlock<V>& b) {
  return b.n_rows;
}
template <class V>
std::size_t block_cols_of(const DcsrBlock<V>& b) {
  return b.n_cols;
}

}  // namespace detail

/// One rank's view of a block-distributed matrix: the partition plus the local block.
template <class Block>
class DistMatrix {
 public:
  using block_type = Block;
  using value_type = typename Block::value_type;

  DistMatrix(BlockPartition part, GridCoord coord, MatrixRole role, Block block)
      : part_(part), coord_(coord), role_(role), block_(std::move(block)) {
    if constexpr (detail::is_dcsr_block<Block>::value) {
      if (role != MatrixRole::update) throw ContractViolation("only update matrices are stored as DCSR");
    } else {
      static_assert(detail::is_dynamic_block<Block>::value, "unsupported block storage");
      if (role == MatrixRole::update) throw ContractViolation("update matrices must be stored as DCSR");
      if (role == MatrixRole::bloom && !std::is_same_v<value_type, std::uint64_t>) {
        throw ContractViolation("Bloom matrices hold 64-bit bitfields");
      }
    }
    if (detail::block_rows_of(block_) != part_.block_rows(coord_.row) ||
        detail::block_cols_of(block_) != part_.block_cols(coord_.col)) {
      throw DimensionMismatch("local block " + std::to_string(detail::block_rows_of(block_)) + "x" +
                              std::to_string(detail::block_cols_of(block_)) + " does not match partition range");
    }
  }

  /// Empty matrix of the given role on this rank.
  static DistMatrix empty(const BlockPartition& part, GridCoord coord, MatrixRole role) {
    return DistMatrix(part, coord, role, Block(part.block_rows(coord.row), part.block_cols(coord.col)));
  }

  const BlockPartition& partition() const noexcept { return part_; }
  GridCoord coord() const noexcept { return coord_; }
  MatrixRole role() const noexcept { return role_; }
  global_index global_rows() const noexcept { return part_.global_rows(); }
  global_index global_cols() const noexcept { return part_.global_cols(); }
  global_index row_offset() const { return part_.rows().start(coord_.row); }
  global_index col_offset() const { return part_.cols().start(coord_.col); }

  const Block& block() const noexcept { return block_; }
  Block& block() noexcept { return block_; }

 private:
  BlockPartition part_;
  GridCoord coord_;
  MatrixRole role_;
  Block block_;
};

template <class V>
using DynamicMatrix = DistMatrix<DynamicBlock<V>>;
template <class V>
using UpdateMatrix = DistMatrix<DcsrBlock<V>>;
using BloomMatrix = DistMatrix<DynamicBlock<std::uint64_t>>;

/// Collective: routes every rank's tuples to their owners and applies them to an empty primary matrix.
template <Semiring S>
DynamicMatrix<typename S::value_type> build_primary(Communicator& comm, const BlockPartition& part,
                                                    std::span<const UpdateTuple<typename S::value_type>> tuples,
                                                    ApplyMode mode = ApplyMode::overwrite, int workers = 1) {
  auto m = DynamicMatrix<typename S::value_type>::empty(part, comm.coord(), MatrixRole::primary);
  const auto owned = redistribute_updates(comm, part, tuples);
  apply_batch<S>(m.block(), part, comm.coord(), std::span(owned), mode, workers);
  return m;
}

/// Update matrix from already-owned upserts; duplicate positions fold with the semiring addition.
template <Semiring S>
UpdateMatrix<typename S::value_type> owned_update_matrix(const BlockPartition& part, GridCoord me,
                                                         std::span<const UpdateTuple<typename S::value_type>> owned) {
  return {part, me, MatrixRole::update, additive_update_block<S>(part, me, owned)};
}

/// Structure-only change mask from already-owned tuples of any kind.
template <class V>
UpdateMatrix<Pattern> owned_change_mask(const BlockPartition& part, GridCoord me, std::span<const UpdateTuple<V>> owned) {
  return {part, me, MatrixRole::update, change_mask_block(part, me, owned)};
}

/// Local nnz of any distributed matrix.
template <class Block>
std::size_t local_nnz(const DistMatrix<Block>& m) {
  return m.block().nnz();
}

}  // namespace dynspgemm
