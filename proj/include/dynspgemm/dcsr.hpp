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

#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dynspgemm/semiring.hpp"
#include "dynspgemm/types.hpp"

namespace dynspgemm {

/// Immutable compressed sparse row block. Columns within a row are unsorted.
template <class V>
struct CsrBlock {
  using value_type = V;

  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<local_index> cols;
  std::vector<V> values;

  std::size_t nnz() const noexcept { return cols.size(); }

  std::span<const local_index> row_cols(std::size_t r) const {
    return {cols.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
  std::span<const V> row_values(std::size_t r) const {
    return {values.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
};

/**
 * Doubly compressed sparse row block: row pointers exist only for non-empty
 * rows. This is the storage of update matrices and the payload of every
 * broadcast and aggregation.
 */
template <class V>
struct DcsrBlock {
  using value_type = V;

  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<local_index> nz_rows;
  std::vector<std::size_t> row_ptr{0};
  std::vector<local_index> cols;
  std::vector<V> values;

  DcsrBlock() = default;
  DcsrBlock(std::size_t rows, std::size_t columns) : n_rows(rows), n_cols(columns) {}

  std::size_t nnz() const noexcept { return cols.size(); }
  bool empty() const noexcept { return cols.empty(); }
  std::size_t n_nz_rows() const noexcept { return nz_rows.size(); }

  std::span<const local_index> entry_cols(std::size_t t) const {
    return {cols.data() + row_ptr[t], row_ptr[t + 1] - row_ptr[t]};
  }
  std::span<const V> entry_values(std::size_t t) const {
    return {values.data() + row_ptr[t], row_ptr[t + 1] - row_ptr[t]};
  }

  /// Appends a non-empty row; rows must arrive in strictly increasing order.
  void append_row(local_index r, std::span<const local_index> row_cols, std::span<const V> row_vals) {
    if (row_cols.empty()) return;
    nz_rows.push_back(r);
    cols.insert(cols.end(), row_cols.begin(), row_cols.end());
    values.insert(values.end(), row_vals.begin(), row_vals.end());
    row_ptr.push_back(cols.size());
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t t = 0; t < nz_rows.size(); ++t)
      for (std::size_t e = row_ptr[t]; e < row_ptr[t + 1]; ++e) fn(nz_rows[t], cols[e], values[e]);
  }

  friend bool operator==(const DcsrBlock&, const DcsrBlock&) = default;
};

using BloomBlock = DcsrBlock<std::uint64_t>;

/// Same layout with values dropped.
template <class V>
DcsrBlock<Pattern> structure_of(const DcsrBlock<V>& b) {
  DcsrBlock<Pattern> out(b.n_rows, b.n_cols);
  out.nz_rows = b.nz_rows;
  out.row_ptr = b.row_ptr;
  out.cols = b.cols;
  out.values.assign(b.nnz(), Pattern{});
  return out;
}

template <class V>
CsrBlock<V> to_csr(const DcsrBlock<V>& b) {
  CsrBlock<V> out;
  out.n_rows = b.n_rows;
  out.n_cols = b.n_cols;
  out.row_ptr.assign(b.n_rows + 1, 0);
  for (std::size_t t = 0; t < b.nz_rows.size(); ++t) out.row_ptr[b.nz_rows[t] + 1] = b.row_ptr[t + 1] - b.row_ptr[t];
  for (std::size_t r = 0; r < b.n_rows; ++r) out.row_ptr[r + 1] += out.row_ptr[r];
  out.cols = b.cols;
  out.values = b.values;
  return out;
}

/// Local transpose by counting sort on columns; within an output row entries follow source row order.
template <class V>
DcsrBlock<V> transpose(const DcsrBlock<V>& b) {
  DcsrBlock<V> out(b.n_cols, b.n_rows);
  std::vector<std::size_t> count(b.n_cols + 1, 0);
  for (local_index c : b.cols) ++count[c + 1];
  for (std::size_t c = 0; c < b.n_cols; ++c) count[c + 1] += count[c];
  std::vector<local_index> cols(b.nnz());
  std::vector<V> vals(b.nnz());
  std::vector<std::size_t> cursor(count.begin(), count.end() - 1);
  b.for_each([&](local_index r, local_index c, const V& v) {
    const std::size_t at = cursor[c]++;
    cols[at] = r;
    vals[at] = v;
  });
  out.cols = std::move(cols);
  out.values = std::move(vals);
  out.row_ptr.clear();
  out.row_ptr.push_back(0);
  for (std::size_t c = 0; c < b.n_cols; ++c) {
    if (count[c + 1] == count[c]) continue;
    out.nz_rows.push_back(static_cast<local_index>(c));
    out.row_ptr.push_back(count[c + 1]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wire format (little-endian)
//
//   magic "DCSR" | version u16 = 1 | value_width u16 |
//   n_rows u64 | n_cols u64 | n_nz_rows u64 | nnz u64 |
//   nz_rows u64[n_nz_rows] | row_ptr u64[n_nz_rows + 1] | cols u64[nnz] |
//   values (value_width * nnz bytes)
// ---------------------------------------------------------------------------

inline constexpr std::size_t dcsr_header_bytes = 40;
inline constexpr std::uint16_t dcsr_version = 1;

namespace detail {

inline void put_u64(std::byte*& p, std::uint64_t v) {
  std::memcpy(p, &v, 8);
  p += 8;
}
inline void put_u16(std::byte*& p, std::uint16_t v) {
  std::memcpy(p, &v, 2);
  p += 2;
}
inline std::uint64_t get_u64(const std::byte*& p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  p += 8;
  return v;
}
inline std::uint16_t get_u16(const std::byte*& p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  p += 2;
  return v;
}

}  // namespace detail

template <class V>
Bytes dcsr_serialize(const DcsrBlock<V>& b, std::size_t value_width = ValueCodec<V>::width) {
  const std::size_t k = b.n_nz_rows();
  const std::size_t nnz = b.nnz();
  Bytes out(dcsr_header_bytes + 8 * (k + (k + 1) + nnz) + value_width * nnz);
  std::byte* p = out.data();
  std::memcpy(p, "DCSR", 4);
  p += 4;
  detail::put_u16(p, dcsr_version);
  detail::put_u16(p, static_cast<std::uint16_t>(value_width));
  detail::put_u64(p, b.n_rows);
  detail::put_u64(p, b.n_cols);
  detail::put_u64(p, k);
  detail::put_u64(p, nnz);
  for (local_index r : b.nz_rows) detail::put_u64(p, r);
  for (std::size_t rp : b.row_ptr) detail::put_u64(p, rp);
  for (local_index c : b.cols) detail::put_u64(p, c);
  if (value_width > 0) {
    for (const V& v : b.values) {
      ValueCodec<V>::store(p, v, value_width);
      p += value_width;
    }
  }
  return out;
}

/// Reads the value width recorded in a wire block header.
inline std::size_t dcsr_value_width(std::span<const std::byte> buf) {
  if (buf.size() < dcsr_header_bytes) throw DecodeError("DCSR buffer shorter than header");
  const std::byte* p = buf.data() + 6;
  return detail::get_u16(p);
}

/// Decodes a wire block; `value_width` must match the header.
template <class V>
DcsrBlock<V> dcsr_deserialize(std::span<const std::byte> buf, std::size_t value_width = ValueCodec<V>::width) {
  if (buf.size() < dcsr_header_bytes) throw DecodeError("DCSR buffer shorter than header");
  const std::byte* p = buf.data();
  if (std::memcmp(p, "DCSR", 4) != 0) throw DecodeError("DCSR magic mismatch");
  p += 4;
  if (detail::get_u16(p) != dcsr_version) throw DecodeError("unsupported DCSR version");
  const std::size_t width = detail::get_u16(p);
  if (width != value_width) {
    throw DecodeError("DCSR value width " + std::to_string(width) + " != expected " + std::to_string(value_width));
  }
  const std::uint64_t n_rows = detail::get_u64(p);
  const std::uint64_t n_cols = detail::get_u64(p);
  const std::uint64_t k = detail::get_u64(p);
  const std::uint64_t nnz = detail::get_u64(p);
  constexpr std::uint64_t index_limit = std::numeric_limits<local_index>::max();
  if (n_rows > index_limit || n_cols > index_limit) throw DecodeError("DCSR block dims exceed local index range");
  if (k > n_rows || (n_cols == 0 && nnz != 0)) throw DecodeError("DCSR counts inconsistent with dims");

  // Each term is bounded before multiplying, so the size check cannot overflow.
  const std::uint64_t body = buf.size() - dcsr_header_bytes;
  if (k > body / 16 || nnz > body / 8) throw DecodeError("DCSR buffer truncated");
  const std::uint64_t need = 8 * (2 * k + 1) + nnz * (8 + width);
  if (need != body) throw DecodeError(need > body ? "DCSR buffer truncated" : "DCSR buffer has trailing bytes");

  DcsrBlock<V> b(n_rows, n_cols);
  b.nz_rows.resize(k);
  b.row_ptr.resize(k + 1);
  b.cols.resize(nnz);
  b.values.resize(nnz);
  for (std::uint64_t t = 0; t < k; ++t) {
    const std::uint64_t r = detail::get_u64(p);
    if (r >= n_rows || (t > 0 && r <= b.nz_rows[t - 1])) throw DecodeError("DCSR nz_rows not strictly increasing");
    b.nz_rows[t] = static_cast<local_index>(r);
  }
  for (std::uint64_t t = 0; t <= k; ++t) {
    const std::uint64_t rp = detail::get_u64(p);
    if ((t == 0 && rp != 0) || (t > 0 && rp <= b.row_ptr[t - 1]) || rp > nnz) throw DecodeError("DCSR row_ptr malformed");
    b.row_ptr[t] = rp;
  }
  if (b.row_ptr[k] != nnz) throw DecodeError("DCSR row_ptr does not end at nnz");
  for (std::uint64_t e = 0; e < nnz; ++e) {
    const std::uint64_t c = detail::get_u64(p);
    if (c >= n_cols) throw DecodeError("DCSR column out of range");
    b.cols[e] = static_cast<local_index>(c);
  }
  for (std::uint64_t e = 0; e < nnz; ++e) {
    b.values[e] = ValueCodec<V>::load(p, width);
    p += width;
  }
  return b;
}

}  // namespace dynspgemm
