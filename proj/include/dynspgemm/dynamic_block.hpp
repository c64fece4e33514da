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
#include <span>
#include <string>
#include <vector>

#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/flat_index.hpp"
#include "dynspgemm/semiring.hpp"

namespace dynspgemm {

/**
 * Mutable local block: one adjacency array of (col, value) per row plus a
 * per-row hash index col -> slot, giving O(1) expected point access.
 *
 * Rows are independent, so distinct rows may be mutated concurrently through
 * the `row_*` primitives as long as the caller fixes up the total with
 * `adjust_nnz` afterwards. Within-row order is insertion order until a
 * deletion swaps the last entry into the hole.
 */
template <class V>
class DynamicBlock {
 public:
  using value_type = V;

  DynamicBlock() = default;
  DynamicBlock(std::size_t n_rows, std::size_t n_cols) : n_cols_(n_cols), rows_(n_rows) {
    detail::require(n_rows <= SlotIndex::npos && n_cols <= SlotIndex::npos, "block dims exceed local index range");
  }

  std::size_t n_rows() const noexcept { return rows_.size(); }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t nnz() const noexcept { return nnz_; }

  std::span<const local_index> row_cols(std::size_t r) const { return rows_[r].cols; }
  std::span<const V> row_values(std::size_t r) const { return rows_[r].vals; }
  std::size_t row_size(std::size_t r) const { return rows_[r].cols.size(); }

  /// Inserts or overwrites (r, c).
  void upsert(std::size_t r, std::size_t c, const V& v) {
    check(r, c);
    if (row_upsert(r, static_cast<local_index>(c), v)) ++nnz_;
  }

  /// Removes (r, c); returns whether it was present.
  bool erase(std::size_t r, std::size_t c) {
    check(r, c);
    if (!row_erase(r, static_cast<local_index>(c))) return false;
    --nnz_;
    return true;
  }

  std::optional<V> get(std::size_t r, std::size_t c) const {
    check(r, c);
    const V* v = find(r, static_cast<local_index>(c));
    return v ? std::optional<V>(*v) : std::nullopt;
  }

  bool contains(std::size_t r, std::size_t c) const { return get(r, c).has_value(); }

  // Unchecked row-level primitives. They do not maintain nnz().

  V* find(std::size_t r, local_index c) {
    Row& row = rows_[r];
    const std::uint32_t s = row.index.find(c, key_of(row));
    return s == SlotIndex::npos ? nullptr : &row.vals[s];
  }
  const V* find(std::size_t r, local_index c) const {
    const Row& row = rows_[r];
    const std::uint32_t s = row.index.find(c, key_of(row));
    return s == SlotIndex::npos ? nullptr : &row.vals[s];
  }

  /// Returns true iff the entry was newly inserted.
  bool row_upsert(std::size_t r, local_index c, const V& v) {
    if (V* slot = find(r, c)) {
      *slot = v;
      return false;
    }
    row_append(r, c, v);
    return true;
  }

  /// Inserts v or folds it into the existing value with `combine(old, v)`.
  template <class Combine>
  bool row_accumulate(std::size_t r, local_index c, const V& v, Combine&& combine) {
    if (V* slot = find(r, c)) {
      *slot = combine(*slot, v);
      return false;
    }
    row_append(r, c, v);
    return true;
  }

  bool row_erase(std::size_t r, local_index c) {
    Row& row = rows_[r];
    const std::uint32_t s = row.index.find(c, key_of(row));
    if (s == SlotIndex::npos) return false;
    const std::uint32_t last = static_cast<std::uint32_t>(row.cols.size() - 1);
    row.index.erase(c, key_of(row));
    if (s != last) {
      row.cols[s] = row.cols[last];
      row.vals[s] = std::move(row.vals[last]);
      // Index still maps the moved column to `last`; the key lookup reads the old slot's key.
      row.index.reassign(row.cols[s], s, [&](std::uint32_t slot) { return slot == s ? ~local_index{0} : row.cols[slot]; });
    }
    row.cols.pop_back();
    row.vals.pop_back();
    return true;
  }

  void adjust_nnz(std::ptrdiff_t delta) noexcept { nnz_ = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(nnz_) + delta); }

  void clear() {
    for (Row& row : rows_) row = Row{};
    nnz_ = 0;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row& row = rows_[r];
      for (std::size_t e = 0; e < row.cols.size(); ++e) fn(static_cast<local_index>(r), row.cols[e], row.vals[e]);
    }
  }

  /// Verifies the slot/index bijection, column uniqueness, and the nnz count.
  bool check_invariants() const {
    std::size_t total = 0;
    for (const Row& row : rows_) {
      if (row.cols.size() != row.vals.size() || row.index.size() != row.cols.size()) return false;
      for (std::size_t s = 0; s < row.cols.size(); ++s) {
        if (row.cols[s] >= n_cols_) return false;
        if (row.index.find(row.cols[s], key_of(row)) != s) return false;
      }
      total += row.cols.size();
    }
    return total == nnz_;
  }

 private:
  struct Row {
    std::vector<local_index> cols;
    std::vector<V> vals;
    SlotIndex index;
  };

  static auto key_of(const Row& row) {
    return [&row](std::uint32_t slot) { return row.cols[slot]; };
  }

  void row_append(std::size_t r, local_index c, const V& v) {
    Row& row = rows_[r];
    const auto s = static_cast<std::uint32_t>(row.cols.size());
    row.cols.push_back(c);
    row.vals.push_back(v);
    row.index.insert(c, s, key_of(row));
  }

  void check(std::size_t r, std::size_t c) const {
    if (r >= rows_.size() || c >= n_cols_) {
      throw ContractViolation("index (" + std::to_string(r) + "," + std::to_string(c) + ") outside " +
                              std::to_string(rows_.size()) + "x" + std::to_string(n_cols_) + " block");
    }
  }

  std::size_t n_cols_ = 0;
  std::vector<Row> rows_;
  std::size_t nnz_ = 0;
};

template <class V>
DcsrBlock<V> to_dcsr(const DynamicBlock<V>& block) {
  DcsrBlock<V> out(block.n_rows(), block.n_cols());
  out.cols.reserve(block.nnz());
  out.values.reserve(block.nnz());
  for (std::size_t r = 0; r < block.n_rows(); ++r) {
    out.append_row(static_cast<local_index>(r), block.row_cols(r), block.row_values(r));
  }
  return out;
}

template <class V>
DynamicBlock<V> to_dynamic(const DcsrBlock<V>& b) {
  DynamicBlock<V> out(b.n_rows, b.n_cols);
  b.for_each([&](local_index r, local_index c, const V& v) { out.upsert(r, c, v); });
  return out;
}

/// Same shape and the same set of (row, col, value) entries, regardless of storage order.
template <class V>
bool same_entries(const DynamicBlock<V>& a, const DynamicBlock<V>& b) {
  if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols() || a.nnz() != b.nnz()) return false;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    if (a.row_size(r) != b.row_size(r)) return false;
    const auto cols = a.row_cols(r);
    const auto vals = a.row_values(r);
    for (std::size_t e = 0; e < cols.size(); ++e) {
      const V* other = b.find(r, cols[e]);
      if (other == nullptr || !(*other == vals[e])) return false;
    }
  }
  return true;
}

namespace detail {

template <class A, class B>
void require_same_shape(const A& target, const B& update, const char* op) {
  if (target.n_rows() != update.n_rows || target.n_cols() != update.n_cols) {
    throw DimensionMismatch(std::string(op) + ": block shape " + std::to_string(update.n_rows) + "x" +
                            std::to_string(update.n_cols) + " does not match " + std::to_string(target.n_rows()) + "x" +
                            std::to_string(target.n_cols()));
  }
}

}  // namespace detail

/// target(r,c) <- target(r,c) (+) v for every update entry; absent entries are inserted.
template <Semiring S>
void add_into(DynamicBlock<typename S::value_type>& target, const DcsrBlock<typename S::value_type>& update) {
  detail::require_same_shape(target, update, "add_into");
  std::ptrdiff_t added = 0;
  update.for_each([&](local_index r, local_index c, const typename S::value_type& v) {
    added += target.row_accumulate(r, c, v, [](auto a, auto b) { return S::add(a, b); });
  });
  target.adjust_nnz(added);
}

/// Every update entry overwrites or inserts; other entries are untouched.
template <class V>
void merge_into(DynamicBlock<V>& target, const DcsrBlock<V>& update) {
  detail::require_same_shape(target, update, "merge_into");
  std::ptrdiff_t added = 0;
  update.for_each([&](local_index r, local_index c, const V& v) { added += target.row_upsert(r, c, v); });
  target.adjust_nnz(added);
}

/// Removes every entry of target whose position is structurally present in mask.
template <class V, class M>
void mask_out(DynamicBlock<V>& target, const DcsrBlock<M>& mask) {
  detail::require_same_shape(target, mask, "mask_out");
  std::ptrdiff_t removed = 0;
  mask.for_each([&](local_index r, local_index c, const M&) { removed += target.row_erase(r, c); });
  target.adjust_nnz(-removed);
}

/**
 * Keeps entry (i, k) of `a` iff bit (global(k) mod bloom_bits) is set in
 * row_bits[i], where global(k) = col_offset + k. Rows with a zero bitfield
 * are skipped entirely.
 */
template <class V>
DcsrBlock<V> filter_rows_by_bloom(const DynamicBlock<V>& a, std::span<const std::uint64_t> row_bits,
                                  global_index col_offset, unsigned bloom_bits) {
  detail::require(row_bits.size() == a.n_rows(), "filter_rows_by_bloom: bitfield vector length != block rows");
  DcsrBlock<V> out(a.n_rows(), a.n_cols());
  std::vector<local_index> cols;
  std::vector<V> vals;
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    const std::uint64_t bits = row_bits[r];
    if (bits == 0) continue;
    cols.clear();
    vals.clear();
    auto rc = a.row_cols(r);
    auto rv = a.row_values(r);
    for (std::size_t e = 0; e < rc.size(); ++e) {
      if ((bits >> ((col_offset + rc[e]) % bloom_bits)) & 1u) {
        cols.push_back(rc[e]);
        vals.push_back(rv[e]);
      }
    }
    out.append_row(static_cast<local_index>(r), cols, vals);
  }
  return out;
}

}  // namespace dynspgemm
