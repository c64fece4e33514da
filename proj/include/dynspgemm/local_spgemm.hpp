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
#include <utility>
#include <vector>

#include "dynspgemm/bloom.hpp"
#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dynamic_block.hpp"
#include "dynspgemm/flat_index.hpp"
#include "dynspgemm/parallel.hpp"
#include "dynspgemm/semiring.hpp"

namespace dynspgemm {

/// Accumulator for one output row: (col, value) array plus a hash index on col.
template <class V>
class SparseAccumulator {
 public:
  template <class Combine>
  void accumulate(local_index c, const V& v, Combine&& combine) {
    const std::uint32_t s = index_.find(c, key_of());
    if (s != SlotIndex::npos) {
      vals_[s] = combine(vals_[s], v);
      return;
    }
    cols_.push_back(c);
    vals_.push_back(v);
    const std::size_t capacity = index_.capacity();
    positions_.push_back(index_.insert(c, static_cast<std::uint32_t>(cols_.size() - 1), key_of()));
    rehashed_ |= index_.capacity() != capacity;
  }

  std::span<const local_index> cols() const noexcept { return cols_; }
  std::span<const V> values() const noexcept { return vals_; }
  std::size_t size() const noexcept { return cols_.size(); }
  bool empty() const noexcept { return cols_.empty(); }

  /// Forgets all entries but keeps the allocated capacity.
  void clear() {
    if (rehashed_) {
      // A growth rehash moved entries away from the recorded positions.
      index_.clear();
      rehashed_ = false;
    } else {
      index_.clear_positions(positions_);
    }
    cols_.clear();
    vals_.clear();
    positions_.clear();
  }

 private:
  auto key_of() const {
    return [this](std::uint32_t slot) { return slot == SlotIndex::npos ? ~local_index{0} : cols_[slot]; };
  }

  std::vector<local_index> cols_;
  std::vector<V> vals_;
  std::vector<std::size_t> positions_;
  SlotIndex index_;
  bool rehashed_ = false;
};

/// O(1) row lookup over a DCSR block, for use as a right operand.
template <class V>
class DcsrRows {
 public:
  explicit DcsrRows(const DcsrBlock<V>& b) : b_(&b), slot_(b.n_rows, SlotIndex::npos) {
    for (std::size_t t = 0; t < b.n_nz_rows(); ++t) slot_[b.nz_rows[t]] = static_cast<std::uint32_t>(t);
  }

  std::size_t n_rows() const noexcept { return b_->n_rows; }
  std::size_t n_cols() const noexcept { return b_->n_cols; }

  std::span<const local_index> row_cols(std::size_t k) const {
    return slot_[k] == SlotIndex::npos ? std::span<const local_index>{} : b_->entry_cols(slot_[k]);
  }
  std::span<const V> row_values(std::size_t k) const {
    return slot_[k] == SlotIndex::npos ? std::span<const V>{} : b_->entry_values(slot_[k]);
  }

 private:
  const DcsrBlock<V>* b_;
  std::vector<std::uint32_t> slot_;
};

/// Set of (row, col) positions of a structure block, for masked multiplication.
class MaskSet {
 public:
  MaskSet() = default;

  template <class M>
  explicit MaskSet(const DcsrBlock<M>& mask) : rows_(mask.n_rows, 0), n_cols_(mask.n_cols), set_(mask.nnz()) {
    mask.for_each([&](local_index r, local_index c, const M&) {
      rows_[r] = 1;
      set_.insert(key(r, c));
    });
  }

  std::size_t n_rows() const noexcept { return rows_.size(); }
  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t size() const noexcept { return set_.size(); }
  bool row_active(std::size_t r) const noexcept { return rows_[r] != 0; }
  bool contains(std::size_t r, local_index c) const noexcept { return set_.contains(key(r, c)); }

 private:
  static std::uint64_t key(std::size_t r, local_index c) noexcept { return (std::uint64_t(r) << 32) | c; }

  std::vector<std::uint8_t> rows_;
  std::size_t n_cols_ = 0;
  FlatKeySet set_;
};

/// Where a block's summation coordinate starts globally and how Bloom bits are formed.
struct BloomContext {
  global_index k_offset = 0;
  unsigned bits = default_bloom_bits;
};

struct TransposeFlags {
  bool a = false;
  bool b = false;
};

namespace detail {

// Uniform row access for left operands: DCSR visits its non-empty rows,
// dynamic blocks visit every row.
template <class V>
std::size_t left_row_count(const DcsrBlock<V>& a) {
  return a.n_nz_rows();
}
template <class V>
std::size_t left_row_count(const DynamicBlock<V>& a) {
  return a.n_rows();
}
template <class V>
local_index left_row_id(const DcsrBlock<V>& a, std::size_t t) {
  return a.nz_rows[t];
}
template <class V>
local_index left_row_id(const DynamicBlock<V>&, std::size_t t) {
  return static_cast<local_index>(t);
}
template <class V>
std::span<const local_index> left_cols(const DcsrBlock<V>& a, std::size_t t) {
  return a.entry_cols(t);
}
template <class V>
std::span<const local_index> left_cols(const DynamicBlock<V>& a, std::size_t t) {
  return a.row_cols(t);
}
template <class V>
std::span<const V> left_values(const DcsrBlock<V>& a, std::size_t t) {
  return a.entry_values(t);
}
template <class V>
std::span<const V> left_values(const DynamicBlock<V>& a, std::size_t t) {
  return a.row_values(t);
}

template <class V>
std::size_t n_rows_of(const DcsrBlock<V>& a) {
  return a.n_rows;
}
template <class V>
std::size_t n_cols_of(const DcsrBlock<V>& a) {
  return a.n_cols;
}
template <class B>
std::size_t n_rows_of(const B& a) {
  return a.n_rows();
}
template <class B>
std::size_t n_cols_of(const B& a) {
  return a.n_cols();
}

template <class A, class B>
void require_inner(const A& a, const B& b, const char* op) {
  if (n_cols_of(a) != n_rows_of(b)) {
    throw DimensionMismatch(std::string(op) + ": inner dimensions " + std::to_string(n_cols_of(a)) + " and " +
                            std::to_string(n_rows_of(b)) + " differ");
  }
}

/**
 * Runs `row_fn(begin, end, fragment)` over the left operand's
 * rows split into contiguous chunks per worker and concatenates the fragments
 * in row order.
 */
template <class Out, class Left, class RowFn>
DcsrBlock<Out> row_parallel(const Left& a, std::size_t out_cols, int workers, RowFn&& row_fn) {
  const std::size_t n = left_row_count(a);
  std::vector<DcsrBlock<Out>> fragments(workers, DcsrBlock<Out>(n_rows_of(a), out_cols));
  run_workers(workers, [&](int w) {
    const auto [begin, end] = chunk_range(n, workers, w);
    row_fn(begin, end, fragments[w]);
  });
  if (workers == 1) return std::move(fragments[0]);
  DcsrBlock<Out> out(n_rows_of(a), out_cols);
  for (const auto& f : fragments) {
    for (std::size_t t = 0; t < f.n_nz_rows(); ++t) out.append_row(f.nz_rows[t], f.entry_cols(t), f.entry_values(t));
  }
  return out;
}

template <class V>
DcsrBlock<V> as_dcsr(const DcsrBlock<V>& b) {
  return b;
}
template <class V>
DcsrBlock<V> as_dcsr(const DynamicBlock<V>& b) {
  return to_dcsr(b);
}

template <class B>
const B& right_rows(const B& b) {
  return b;
}
template <class V>
DcsrRows<V> right_rows(const DcsrBlock<V>& b) {
  return DcsrRows<V>(b);
}

}  // namespace detail

/**
 * Gustavson row-wise product over semiring S. `a` may be a DCSR or dynamic
 * block; `b` a dynamic block, a DCSR block or a DcsrRows view. Within an
 * output row, a's entries and b's rows are visited in stored order.
 */
template <Semiring S, class Left, class Right>
DcsrBlock<typename S::value_type> gustavson_multiply(const Left& a, const Right& b, int workers = 1) {
  using V = typename S::value_type;
  detail::require_inner(a, b, "gustavson_multiply");
  const auto& rb = detail::right_rows(b);
  return detail::row_parallel<V>(a, detail::n_cols_of(b), workers, [&](std::size_t begin, std::size_t end, DcsrBlock<V>& out) {
    SparseAccumulator<V> acc;
    const auto add = [](V x, V y) { return S::add(x, y); };
    for (std::size_t t = begin; t < end; ++t) {
      const auto ac = detail::left_cols(a, t);
      const auto av = detail::left_values(a, t);
      for (std::size_t e = 0; e < ac.size(); ++e) {
        const auto bc = rb.row_cols(ac[e]);
        const auto bv = rb.row_values(ac[e]);
        for (std::size_t f = 0; f < bc.size(); ++f) acc.accumulate(bc[f], S::mul(av[e], bv[f]), add);
      }
      out.append_row(detail::left_row_id(a, t), acc.cols(), acc.values());
      acc.clear();
    }
  });
}

/// Product of op(a) and op(b), where op transposes when the flag is set.
template <Semiring S, class Left, class Right>
DcsrBlock<typename S::value_type> gustavson_multiply(const Left& a, const Right& b, TransposeFlags flags, int workers = 1) {
  if (!flags.a && !flags.b) return gustavson_multiply<S>(a, b, workers);
  if (flags.a && flags.b) return gustavson_multiply<S>(transpose(detail::as_dcsr(a)), transpose(detail::as_dcsr(b)), workers);
  if (flags.a) return gustavson_multiply<S>(transpose(detail::as_dcsr(a)), b, workers);
  return gustavson_multiply<S>(a, transpose(detail::as_dcsr(b)), workers);
}

struct PatternProduct {
  DcsrBlock<Pattern> structure;
  BloomBlock bloom;
};

/**
 * Structural product with Bloom bits: entry (i, j) exists iff some k has both
 * a(i,k) and b(k,j) stored, and carries bit (k_offset + k) mod bits for each
 * such k. Values of the operands are ignored.
 */
template <class Left, class Right>
BloomBlock bloom_multiply(const Left& a, const Right& b, BloomContext ctx, int workers = 1) {
  detail::require_inner(a, b, "pattern_multiply");
  validate_bloom_bits(ctx.bits);
  const auto& rb = detail::right_rows(b);
  return detail::row_parallel<std::uint64_t>(
      a, detail::n_cols_of(b), workers, [&](std::size_t begin, std::size_t end, BloomBlock& out) {
        SparseAccumulator<std::uint64_t> acc;
        for (std::size_t t = begin; t < end; ++t) {
          for (local_index k : detail::left_cols(a, t)) {
            const std::uint64_t bit = bloom_bit(ctx.k_offset + k, ctx.bits);
            for (local_index c : rb.row_cols(k)) acc.accumulate(c, bit, bit_or);
          }
          out.append_row(detail::left_row_id(a, t), acc.cols(), acc.values());
          acc.clear();
        }
      });
}

/// Structure and Bloom filter of a*b; the two blocks share one sparsity structure.
template <class Left, class Right>
PatternProduct pattern_multiply(const Left& a, const Right& b, BloomContext ctx, int workers = 1) {
  BloomBlock bloom = bloom_multiply(a, b, ctx, workers);
  DcsrBlock<Pattern> structure = structure_of(bloom);
  return {std::move(structure), std::move(bloom)};
}

template <class V>
struct MaskedProduct {
  DcsrBlock<V> z;
  BloomBlock h;
};

/**
 * Product restricted to the positions in `mask`: terms landing outside the
 * mask are discarded before accumulation. Returns the values and the Bloom
 * bits of the contributions to each kept entry.
 */
template <Semiring S, class Left, class Right>
MaskedProduct<typename S::value_type> masked_multiply(const Left& a, const Right& b, const MaskSet& mask, BloomContext ctx,
                                                      int workers = 1) {
  using V = typename S::value_type;
  using Cell = std::pair<V, std::uint64_t>;
  detail::require_inner(a, b, "masked_multiply");
  validate_bloom_bits(ctx.bits);
  if (mask.n_rows() != detail::n_rows_of(a) || mask.n_cols() != detail::n_cols_of(b)) {
    throw DimensionMismatch("masked_multiply: mask shape does not match the product");
  }
  const auto& rb = detail::right_rows(b);
  DcsrBlock<Cell> cells = detail::row_parallel<Cell>(
      a, detail::n_cols_of(b), workers, [&](std::size_t begin, std::size_t end, DcsrBlock<Cell>& out) {
        SparseAccumulator<Cell> acc;
        const auto fold = [](const Cell& x, const Cell& y) { return Cell{S::add(x.first, y.first), x.second | y.second}; };
        for (std::size_t t = begin; t < end; ++t) {
          const local_index i = detail::left_row_id(a, t);
          if (!mask.row_active(i)) continue;
          const auto ac = detail::left_cols(a, t);
          const auto av = detail::left_values(a, t);
          for (std::size_t e = 0; e < ac.size(); ++e) {
            const std::uint64_t bit = bloom_bit(ctx.k_offset + ac[e], ctx.bits);
            const auto bc = rb.row_cols(ac[e]);
            const auto bv = rb.row_values(ac[e]);
            for (std::size_t f = 0; f < bc.size(); ++f) {
              if (mask.contains(i, bc[f])) acc.accumulate(bc[f], Cell{S::mul(av[e], bv[f]), bit}, fold);
            }
          }
          out.append_row(i, acc.cols(), acc.values());
          acc.clear();
        }
      });

  MaskedProduct<V> out{DcsrBlock<V>(cells.n_rows, cells.n_cols), BloomBlock(cells.n_rows, cells.n_cols)};
  out.z.nz_rows = cells.nz_rows;
  out.z.row_ptr = cells.row_ptr;
  out.z.cols = cells.cols;
  out.h.nz_rows = std::move(cells.nz_rows);
  out.h.row_ptr = std::move(cells.row_ptr);
  out.h.cols = std::move(cells.cols);
  out.z.values.reserve(cells.values.size());
  out.h.values.reserve(cells.values.size());
  for (const Cell& cell : cells.values) {
    out.z.values.push_back(cell.first);
    out.h.values.push_back(cell.second);
  }
  return out;
}

}  // namespace dynspgemm
