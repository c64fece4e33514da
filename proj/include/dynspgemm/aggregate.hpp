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

#include <optional>
#include <vector>

#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dynamic_block.hpp"
#include "dynspgemm/grid.hpp"
#include "dynspgemm/transport.hpp"

namespace dynspgemm {

namespace detail {

/// Rows [begin, end) of b, keeping absolute row ids.
template <class V>
DcsrBlock<V> row_slice(const DcsrBlock<V>& b, std::size_t begin, std::size_t end) {
  DcsrBlock<V> out(b.n_rows, b.n_cols);
  for (std::size_t t = 0; t < b.n_nz_rows(); ++t) {
    if (b.nz_rows[t] < begin) continue;
    if (b.nz_rows[t] >= end) break;
    out.append_row(b.nz_rows[t], b.entry_cols(t), b.entry_values(t));
  }
  return out;
}

}  // namespace detail

/**
 * Sparse reduce onto group member `root`: every member contributes a block of
 * identical shape; the root receives the entry-wise combination (structure is
 * the union, colliding values are folded in ascending member order).
 *
 * Implemented as a reduce-scatter over q contiguous row ranges followed by a
 * gather of the reduced ranges at the root. Non-roots get std::nullopt.
 */
template <class V, class Combine>
std::optional<DcsrBlock<V>> aggregate_sparse(Communicator& comm, Axis axis, int root, const DcsrBlock<V>& local,
                                             Combine&& combine, std::size_t value_width = ValueCodec<V>::width) {
  const int q = comm.side();
  detail::require(root >= 0 && root < q, "aggregate root outside group");
  comm.note_collective(Traffic::aggregate);
  const int me = comm.group_index(axis);
  if (q == 1) return local;

  const AxisSplit ranges(local.n_rows, q);
  for (int x = 0; x < q; ++x) {
    const auto begin = ranges.start(x);
    comm.hop_send(comm.group_member(axis, x),
                  dcsr_serialize(detail::row_slice(local, begin, begin + ranges.size(x)), value_width), Traffic::aggregate);
  }

  const std::size_t my_begin = ranges.start(me);
  DynamicBlock<V> acc(ranges.size(me), local.n_cols);
  std::ptrdiff_t added = 0;
  for (int x = 0; x < q; ++x) {
    const Bytes buf = comm.hop_recv(comm.group_member(axis, x), Traffic::aggregate);
    const DcsrBlock<V> part = dcsr_deserialize<V>(buf, value_width);
    if (part.n_rows != local.n_rows || part.n_cols != local.n_cols) {
      throw DimensionMismatch("aggregate_sparse: contributions have different block shapes");
    }
    part.for_each([&](local_index r, local_index c, const V& v) {
      added += acc.row_accumulate(r - my_begin, c, v, combine);
    });
  }
  acc.adjust_nnz(added);

  DcsrBlock<V> reduced(local.n_rows, local.n_cols);
  for (std::size_t r = 0; r < acc.n_rows(); ++r) {
    reduced.append_row(static_cast<local_index>(my_begin + r), acc.row_cols(r), acc.row_values(r));
  }
  comm.hop_send(comm.group_member(axis, root), dcsr_serialize(reduced, value_width), Traffic::aggregate);

  if (me != root) return std::nullopt;
  DcsrBlock<V> out(local.n_rows, local.n_cols);
  for (int x = 0; x < q; ++x) {
    const DcsrBlock<V> part = dcsr_deserialize<V>(comm.hop_recv(comm.group_member(axis, x), Traffic::aggregate), value_width);
    for (std::size_t t = 0; t < part.n_nz_rows(); ++t) out.append_row(part.nz_rows[t], part.entry_cols(t), part.entry_values(t));
  }
  return out;
}

}  // namespace dynspgemm
