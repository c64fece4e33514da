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
#include <cstring>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dynamic_block.hpp"
#include "dynspgemm/grid.hpp"
#include "dynspgemm/parallel.hpp"
#include "dynspgemm/semiring.hpp"
#include "dynspgemm/transport.hpp"

namespace dynspgemm {

enum class UpdateKind : std::uint8_t { upsert = 0, erase = 1 };

/// One pending change to a global matrix entry.
template <class V>
struct UpdateTuple {
  global_index row = 0;
  global_index col = 0;
  UpdateKind kind = UpdateKind::upsert;
  V value{};

  static UpdateTuple upsert(global_index i, global_index j, V v) { return {i, j, UpdateKind::upsert, v}; }
  static UpdateTuple erase(global_index i, global_index j) { return {i, j, UpdateKind::erase, V{}}; }

  friend bool operator==(const UpdateTuple&, const UpdateTuple&) = default;
};

/// Tuples grouped into contiguous buckets; bucket b is items[offsets[b], offsets[b+1]).
template <class T>
struct Bucketed {
  std::vector<T> items;
  std::vector<std::size_t> offsets;

  std::span<const T> bucket(std::size_t b) const { return {items.data() + offsets[b], offsets[b + 1] - offsets[b]}; }
};

/// Stable counting sort into `buckets` buckets.
template <class T, class DestOf>
Bucketed<T> counting_sort_by_dest(std::span<const T> items, int buckets, DestOf&& dest_of) {
  Bucketed<T> out;
  out.offsets.assign(static_cast<std::size_t>(buckets) + 1, 0);
  std::vector<int> dest(items.size());
  for (std::size_t t = 0; t < items.size(); ++t) {
    dest[t] = dest_of(items[t]);
    detail::require(dest[t] >= 0 && dest[t] < buckets, "counting_sort_by_dest: bucket out of range");
    ++out.offsets[dest[t] + 1];
  }
  for (int b = 0; b < buckets; ++b) out.offsets[b + 1] += out.offsets[b];
  std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
  out.items.resize(items.size());
  for (std::size_t t = 0; t < items.size(); ++t) out.items[cursor[dest[t]]++] = items[t];
  return out;
}

// -- tuple wire encoding: row u64 | col u64 | kind u8 | value ---------------

template <class V>
constexpr std::size_t tuple_wire_bytes() {
  return 17 + ValueCodec<V>::width;
}

template <class V>
Bytes encode_tuples(std::span<const UpdateTuple<V>> tuples) {
  Bytes out(tuples.size() * tuple_wire_bytes<V>());
  std::byte* p = out.data();
  for (const auto& t : tuples) {
    std::memcpy(p, &t.row, 8);
    std::memcpy(p + 8, &t.col, 8);
    p[16] = std::byte{static_cast<std::uint8_t>(t.kind)};
    ValueCodec<V>::store(p + 17, t.value);
    p += tuple_wire_bytes<V>();
  }
  return out;
}

template <class V>
void decode_tuples_into(std::span<const std::byte> buf, std::vector<UpdateTuple<V>>& out) {
  constexpr std::size_t w = tuple_wire_bytes<V>();
  if (buf.size() % w != 0) throw DecodeError("tuple buffer length is not a multiple of the record size");
  for (const std::byte* p = buf.data(); p != buf.data() + buf.size(); p += w) {
    UpdateTuple<V> t;
    std::memcpy(&t.row, p, 8);
    std::memcpy(&t.col, p + 8, 8);
    const auto kind = std::to_integer<std::uint8_t>(p[16]);
    if (kind > 1) throw DecodeError("unknown update kind");
    t.kind = static_cast<UpdateKind>(kind);
    t.value = ValueCodec<V>::load(p + 17);
    out.push_back(t);
  }
}

/**
 * Routes arbitrary tuples to their owner ranks in two all-to-all steps, each
 * over q peers: first within the grid column to the owning grid row, then
 * within the grid row to the owning grid column. Collective.
 *
 * Received tuples are concatenated in ascending source order, so the result
 * is deterministic.
 */
template <class V>
std::vector<UpdateTuple<V>> redistribute_updates(Communicator& comm, const BlockPartition& part,
                                                 std::span<const UpdateTuple<V>> tuples) {
  for (const auto& t : tuples) {
    if (t.row >= part.global_rows() || t.col >= part.global_cols()) {
      throw ContractViolation("update (" + std::to_string(t.row) + "," + std::to_string(t.col) + ") outside " +
                              std::to_string(part.global_rows()) + "x" + std::to_string(part.global_cols()) + " matrix");
    }
  }
  const int q = comm.side();
  auto route = [&](std::span<const UpdateTuple<V>> in, Axis axis, auto&& dest_of) {
    const Bucketed<UpdateTuple<V>> sorted = counting_sort_by_dest(in, q, dest_of);
    std::vector<Bytes> outgoing(q);
    for (int b = 0; b < q; ++b) outgoing[b] = encode_tuples<V>(sorted.bucket(b));
    std::vector<Bytes> incoming = comm.all_to_all_v(axis, std::move(outgoing));
    std::vector<UpdateTuple<V>> out;
    for (const Bytes& buf : incoming) decode_tuples_into<V>(buf, out);
    return out;
  };
  // Column group members are indexed by grid row, row group members by grid column.
  const auto on_row = route(tuples, Axis::col, [&](const UpdateTuple<V>& t) { return part.rows().owner(t.row); });
  return route(on_row, Axis::row, [&](const UpdateTuple<V>& t) { return part.cols().owner(t.col); });
}

namespace detail {

/// Stable sort of tuples by row; rows lie in [row0, row0 + n_rows).
template <class V>
std::vector<UpdateTuple<V>> stable_sort_by_row(std::span<const UpdateTuple<V>> tuples, std::size_t n_rows, global_index row0) {
  if (n_rows <= 4 * tuples.size() && n_rows <= static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    return counting_sort_by_dest(tuples, static_cast<int>(n_rows),
                                 [&](const UpdateTuple<V>& t) { return static_cast<int>(t.row - row0); })
        .items;
  }
  std::vector<UpdateTuple<V>> out(tuples.begin(), tuples.end());
  std::stable_sort(out.begin(), out.end(), [](const UpdateTuple<V>& x, const UpdateTuple<V>& y) { return x.row < y.row; });
  return out;
}

}  // namespace detail

enum class ApplyMode { additive, overwrite };

/**
 * Applies locally owned tuples to this rank's block. Upserts fold with the
 * semiring addition (additive) or replace (overwrite); erasures delete.
 * Tuples are stably ordered by row, so rows are visited in sequence and
 * tuples on one position keep their input order. Each worker owns a
 * contiguous range of rows.
 */
template <Semiring S>
void apply_batch(DynamicBlock<typename S::value_type>& block, const BlockPartition& part, GridCoord me,
                 std::span<const UpdateTuple<typename S::value_type>> tuples, ApplyMode mode, int workers = 1) {
  using V = typename S::value_type;
  detail::require(block.n_rows() == part.block_rows(me.row) && block.n_cols() == part.block_cols(me.col),
                  "apply_batch: block shape does not match partition");
  const global_index row0 = part.rows().start(me.row);
  const global_index col0 = part.cols().start(me.col);
  for (const auto& t : tuples) {
    if (!(part.owner_of(t.row, t.col) == me)) throw ContractViolation("apply_batch: tuple not owned by this rank");
  }
  const std::vector<UpdateTuple<V>> sorted = detail::stable_sort_by_row(tuples, block.n_rows(), row0);
  auto row_less = [](const UpdateTuple<V>& t, global_index r) { return t.row < r; };
  std::vector<std::ptrdiff_t> delta(workers, 0);
  run_workers(workers, [&](int w) {
    const auto [rb, re] = chunk_range(block.n_rows(), workers, w);
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), row0 + rb, row_less);
    const auto last = std::lower_bound(first, sorted.end(), row0 + re, row_less);
    std::ptrdiff_t d = 0;
    for (const auto& t : std::span(first, last)) {
      const auto r = static_cast<std::size_t>(t.row - row0);
      const auto c = static_cast<local_index>(t.col - col0);
      if (t.kind == UpdateKind::erase) {
        d -= block.row_erase(r, c);
      } else if (mode == ApplyMode::additive) {
        d += block.row_accumulate(r, c, t.value, [](V a, V b) { return S::add(a, b); });
      } else {
        d += block.row_upsert(r, c, t.value);
      }
    }
    delta[w] = d;
  });
  for (std::ptrdiff_t d : delta) block.adjust_nnz(d);
}

/// Update matrix block from owned upserts, duplicates folded with the semiring addition.
template <Semiring S>
DcsrBlock<typename S::value_type> additive_update_block(const BlockPartition& part, GridCoord me,
                                                        std::span<const UpdateTuple<typename S::value_type>> tuples) {
  DynamicBlock<typename S::value_type> acc(part.block_rows(me.row), part.block_cols(me.col));
  for (const auto& t : tuples) {
    if (t.kind == UpdateKind::erase) throw ContractViolation("algebraic update blocks cannot carry deletions");
  }
  apply_batch<S>(acc, part, me, tuples, ApplyMode::additive);
  return to_dcsr(acc);
}

/// Structure-only change mask: every position touched by an owned tuple.
template <class V>
DcsrBlock<Pattern> change_mask_block(const BlockPartition& part, GridCoord me, std::span<const UpdateTuple<V>> tuples) {
  DynamicBlock<Pattern> acc(part.block_rows(me.row), part.block_cols(me.col));
  const global_index row0 = part.rows().start(me.row);
  const global_index col0 = part.cols().start(me.col);
  for (const auto& t : tuples) {
    if (!(part.owner_of(t.row, t.col) == me)) throw ContractViolation("change_mask_block: tuple not owned by this rank");
    acc.upsert(t.row - row0, t.col - col0, Pattern{});
  }
  return to_dcsr(acc);
}

// -- index permutation ------------------------------------------------------

namespace detail {

/// Unbiased integer in [0, bound) by rejection; portable across standard libraries.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

inline std::vector<global_index> fisher_yates(global_index n, std::mt19937_64& rng) {
  std::vector<global_index> p(n);
  for (global_index i = 0; i < n; ++i) p[i] = i;
  for (global_index i = n; i > 1; --i) std::swap(p[i - 1], p[uniform_below(rng, i)]);
  return p;
}

inline std::vector<global_index> invert(const std::vector<global_index>& p) {
  std::vector<global_index> inv(p.size());
  for (global_index i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return inv;
}

}  // namespace detail

/// Seeded random relabelling of row and column indices for load balance.
class IndexPermutation {
 public:
  IndexPermutation() = default;

  /// Independent permutations for rows ([0, n)) and columns ([0, m)).
  IndexPermutation(global_index n, global_index m, std::uint64_t seed) : seed_(seed) {
    std::mt19937_64 rng(seed);
    row_fwd_ = detail::fisher_yates(n, rng);
    col_fwd_ = detail::fisher_yates(m, rng);
    row_inv_ = detail::invert(row_fwd_);
    col_inv_ = detail::invert(col_fwd_);
  }

  /// One vertex relabelling used for both axes; keeps A*A meaningful for adjacency matrices.
  static IndexPermutation symmetric(global_index n, std::uint64_t seed) {
    IndexPermutation p;
    p.seed_ = seed;
    std::mt19937_64 rng(seed);
    p.row_fwd_ = detail::fisher_yates(n, rng);
    p.row_inv_ = detail::invert(p.row_fwd_);
    p.col_fwd_ = p.row_fwd_;
    p.col_inv_ = p.row_inv_;
    return p;
  }

  static IndexPermutation identity(global_index n, global_index m) {
    IndexPermutation p;
    p.row_fwd_.resize(n);
    p.col_fwd_.resize(m);
    for (global_index i = 0; i < n; ++i) p.row_fwd_[i] = i;
    for (global_index j = 0; j < m; ++j) p.col_fwd_[j] = j;
    p.row_inv_ = p.row_fwd_;
    p.col_inv_ = p.col_fwd_;
    return p;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  global_index rows() const noexcept { return row_fwd_.size(); }
  global_index cols() const noexcept { return col_fwd_.size(); }

  global_index row(global_index i) const { return at(row_fwd_, i); }
  global_index col(global_index j) const { return at(col_fwd_, j); }
  global_index row_inverse(global_index i) const { return at(row_inv_, i); }
  global_index col_inverse(global_index j) const { return at(col_inv_, j); }

 private:
  static global_index at(const std::vector<global_index>& v, global_index i) {
    if (i >= v.size()) throw ContractViolation("permutation index " + std::to_string(i) + " out of range");
    return v[i];
  }

  std::uint64_t seed_ = 0;
  std::vector<global_index> row_fwd_, row_inv_, col_fwd_, col_inv_;
};

template <class V>
UpdateTuple<V> permute(const IndexPermutation& perm, UpdateTuple<V> t) {
  t.row = perm.row(t.row);
  t.col = perm.col(t.col);
  return t;
}

template <class V>
UpdateTuple<V> unpermute(const IndexPermutation& perm, UpdateTuple<V> t) {
  t.row = perm.row_inverse(t.row);
  t.col = perm.col_inverse(t.col);
  return t;
}

}  // namespace dynspgemm
