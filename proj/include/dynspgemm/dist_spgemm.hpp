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
#include <string>
#include <utility>
#include <vector>

#include "dynspgemm/aggregate.hpp"
#include "dynspgemm/bloom.hpp"
#include "dynspgemm/dist_matrix.hpp"
#include "dynspgemm/local_spgemm.hpp"
#include "dynspgemm/phases.hpp"
#include "dynspgemm/transport.hpp"

namespace dynspgemm {

struct SpgemmOptions {
  int workers = 1;
  PhaseRecorder* phases = nullptr;
};

/**
 * Distributed product C = op(A) op(B) kept up to date across batches, with
 * the Bloom matrix F of contributing summation indices.
 *
 * Algebraic updates do not maintain F; they clear `bloom_current`, and a
 * general update refuses to run on a stale F.
 */
template <Semiring S>
struct SpgemmState {
  using value_type = typename S::value_type;

  DynamicMatrix<value_type> c;
  BloomMatrix f;
  unsigned bloom_bits = default_bloom_bits;
  TransposeFlags transpose;
  bool bloom_current = true;
};

namespace detail {

inline Axis other_axis(Axis a) { return a == Axis::row ? Axis::col : Axis::row; }

template <class V>
Bytes encode_block(const DynamicBlock<V>& b, std::size_t width) {
  return dcsr_serialize(to_dcsr(b), width);
}
template <class V>
Bytes encode_block(const DcsrBlock<V>& b, std::size_t width) {
  return dcsr_serialize(b, width);
}

inline void require_grid(const Communicator& comm, const BlockPartition& part, const char* what) {
  if (part.side() != comm.side()) {
    throw ContractViolation(std::string(what) + " is partitioned for a " + std::to_string(part.side()) +
                            "-wide grid, communicator grid is " + std::to_string(comm.side()));
  }
}

inline void require_same_partition(const BlockPartition& a, const BlockPartition& b, const char* what) {
  if (!(a == b)) throw DimensionMismatch(std::string(what) + ": operand partitions differ");
}

inline void require_role(MatrixRole actual, MatrixRole expected, const char* what) {
  if (actual != expected) throw ContractViolation(std::string(what) + " has the wrong matrix role");
}

/// Rows x cols of op(M) for a matrix partitioned as `part`.
inline std::pair<global_index, global_index> op_dims(const BlockPartition& part, bool transposed) {
  return transposed ? std::pair{part.global_cols(), part.global_rows()} : std::pair{part.global_rows(), part.global_cols()};
}

/// Checks op(A) op(B) shapes and returns the partition of the product.
inline BlockPartition product_partition(const BlockPartition& a, const BlockPartition& b, TransposeFlags flags) {
  const auto [n, ka] = op_dims(a, flags.a);
  const auto [kb, m] = op_dims(b, flags.b);
  if (ka != kb) {
    throw DimensionMismatch("inner dimensions " + std::to_string(ka) + " and " + std::to_string(kb) + " differ");
  }
  return BlockPartition(n, m, a.side());
}

/// Sends my block to the transpose rank and returns the block it sent me.
template <class V>
DcsrBlock<V> transpose_exchange(Communicator& comm, const DcsrBlock<V>& mine, std::size_t width) {
  return dcsr_deserialize<V>(comm.exchange(comm.transpose_rank(), dcsr_serialize(mine, width)), width);
}

inline BloomBlock bloom_union(const BloomBlock& x, const BloomBlock& y) {
  DynamicBlock<std::uint64_t> acc = to_dynamic(x);
  bloom_or_into(acc, y);
  return to_dcsr(acc);
}

/**
 * q rounds of: broadcast `held` along `bcast` from group member t, apply
 * `kernel` to the received block, aggregate the partial results along the
 * other axis onto member t. Returns the block aggregated onto this rank.
 */
template <class Out, class In, class Kernel, class Combine>
DcsrBlock<Out> broadcast_aggregate_rounds(Communicator& comm, Axis bcast, const DcsrBlock<In>& held, std::size_t in_width,
                                          Kernel&& kernel, Combine&& combine, std::size_t out_width, PhaseRecorder* rec) {
  const Axis agg = other_axis(bcast);
  std::optional<DcsrBlock<Out>> mine;
  for (int t = 0; t < comm.side(); ++t) {
    const DcsrBlock<In> received = timed(rec, Phase::broadcast, [&] {
      Bytes payload = comm.group_index(bcast) == t ? dcsr_serialize(held, in_width) : Bytes{};
      return dcsr_deserialize<In>(comm.broadcast(bcast, t, std::move(payload)), in_width);
    });
    const DcsrBlock<Out> partial = timed(rec, Phase::local_multiply, [&] { return kernel(received); });
    auto reduced = timed(rec, Phase::aggregate, [&] { return aggregate_sparse<Out>(comm, agg, t, partial, combine, out_width); });
    if (reduced) mine = std::move(*reduced);
  }
  return std::move(*mine);
}

template <Semiring S, class BlockA, class BlockB>
std::pair<DynamicMatrix<typename S::value_type>, BloomMatrix> summa_rounds(Communicator& comm, const DistMatrix<BlockA>& a,
                                                                           const DistMatrix<BlockB>& b,
                                                                           std::optional<unsigned> bloom_bits,
                                                                           const SpgemmOptions& opt) {
  using V = typename S::value_type;
  static_assert(std::is_same_v<typename BlockA::value_type, V> && std::is_same_v<typename BlockB::value_type, V>,
                "operand value types must match the semiring");
  require_grid(comm, a.partition(), "left operand");
  require_grid(comm, b.partition(), "right operand");
  const BlockPartition cpart = product_partition(a.partition(), b.partition(), {});
  const GridCoord me = comm.coord();
  auto c = DynamicMatrix<V>::empty(cpart, me, MatrixRole::primary);
  auto f = BloomMatrix::empty(cpart, me, MatrixRole::bloom);
  constexpr std::size_t width = ValueCodec<V>::width;
  const AxisSplit& inner = a.partition().cols();

  for (int t = 0; t < comm.side(); ++t) {
    auto [at, bt] = timed(opt.phases, Phase::broadcast, [&] {
      Bytes pa = me.col == t ? encode_block(a.block(), width) : Bytes{};
      Bytes pb = me.row == t ? encode_block(b.block(), width) : Bytes{};
      DcsrBlock<V> ra = dcsr_deserialize<V>(comm.row_broadcast(t, std::move(pa)), width);
      DcsrBlock<V> rb = dcsr_deserialize<V>(comm.col_broadcast(t, std::move(pb)), width);
      return std::pair{std::move(ra), std::move(rb)};
    });
    const DcsrRows<V> brows(bt);
    auto [prod, bloom] = timed(opt.phases, Phase::local_multiply, [&] {
      DcsrBlock<V> p = gustavson_multiply<S>(at, brows, opt.workers);
      BloomBlock fb = bloom_bits ? bloom_multiply(at, brows, {inner.start(t), *bloom_bits}, opt.workers) : BloomBlock{};
      return std::pair{std::move(p), std::move(fb)};
    });
    timed(opt.phases, Phase::merge, [&] {
      add_into<S>(c.block(), prod);
      if (bloom_bits) bloom_or_into(f.block(), bloom);
    });
  }
  return {std::move(c), std::move(f)};
}

}  // namespace detail

/**
 * Static SUMMA: q rounds, each broadcasting block column t of A along grid
 * rows and block row t of B along grid columns, multiplying locally and
 * accumulating into the local C block. Collective.
 */
template <Semiring S, class BlockA, class BlockB>
DynamicMatrix<typename S::value_type> summa_static(Communicator& comm, const DistMatrix<BlockA>& a,
                                                   const DistMatrix<BlockB>& b, const SpgemmOptions& opt = {}) {
  return detail::summa_rounds<S>(comm, a, b, std::nullopt, opt).first;
}

/// Distributed transpose: block (i, j) is transposed locally and moved to rank (j, i).
template <class V>
DynamicMatrix<V> transpose_matrix(Communicator& comm, const DynamicMatrix<V>& m) {
  detail::require_grid(comm, m.partition(), "transposed matrix");
  const BlockPartition tpart(m.global_cols(), m.global_rows(), m.partition().side());
  constexpr std::size_t width = ValueCodec<V>::width;
  DcsrBlock<V> mine = detail::transpose_exchange(comm, transpose(to_dcsr(m.block())), width);
  return DynamicMatrix<V>(tpart, comm.coord(), m.role(), to_dynamic(mine));
}

/**
 * Establishes C = op(A) op(B) and its Bloom matrix F by SUMMA rounds that run
 * the numeric and the pattern multiplication on the same broadcast blocks.
 */
template <Semiring S>
SpgemmState<S> spgemm_algebraic_init(Communicator& comm, const DynamicMatrix<typename S::value_type>& a,
                                     const DynamicMatrix<typename S::value_type>& b, unsigned bloom_bits = default_bloom_bits,
                                     TransposeFlags flags = {}, const SpgemmOptions& opt = {}) {
  using V = typename S::value_type;
  validate_bloom_bits(bloom_bits);
  detail::require_grid(comm, a.partition(), "left operand");
  detail::require_grid(comm, b.partition(), "right operand");
  detail::product_partition(a.partition(), b.partition(), flags);
  std::optional<DynamicMatrix<V>> at, bt;
  if (flags.a) at = transpose_matrix(comm, a);
  if (flags.b) bt = transpose_matrix(comm, b);
  auto [c, f] = detail::summa_rounds<S>(comm, at ? *at : a, bt ? *bt : b, bloom_bits, opt);
  return SpgemmState<S>{std::move(c), std::move(f), bloom_bits, flags, true};
}

/**
 * Algebraic dynamic update C' = C + A* op(B') + op(A) B*, with A the
 * pre-update left operand and B' the post-update right operand (shown here
 * for the untransposed case).
 *
 * Update blocks are first exchanged with the transpose rank; then in round t
 * A*'s block is broadcast along grid rows and B*'s along grid columns, the
 * local products with the resident A and B' blocks are formed, and the
 * partial products are aggregated onto the owners of X and Y. A and B' are
 * never sent. Collective.
 */
template <Semiring S>
void spgemm_algebraic_update(Communicator& comm, SpgemmState<S>& state, const DynamicMatrix<typename S::value_type>& a,
                             const UpdateMatrix<typename S::value_type>& a_star,
                             const DynamicMatrix<typename S::value_type>& b_prime,
                             const UpdateMatrix<typename S::value_type>& b_star, const SpgemmOptions& opt = {}) {
  using V = typename S::value_type;
  constexpr std::size_t width = ValueCodec<V>::width;
  const bool ta = state.transpose.a;
  const bool tb = state.transpose.b;
  detail::require_role(a_star.role(), MatrixRole::update, "A*");
  detail::require_role(b_star.role(), MatrixRole::update, "B*");
  detail::require_grid(comm, a.partition(), "A");
  detail::require_grid(comm, b_prime.partition(), "B'");
  detail::require_same_partition(a.partition(), a_star.partition(), "A and A*");
  detail::require_same_partition(b_prime.partition(), b_star.partition(), "B' and B*");
  if (!(detail::product_partition(a.partition(), b_prime.partition(), state.transpose) == state.c.partition())) {
    throw DimensionMismatch("spgemm_algebraic_update: operands do not match the maintained product");
  }
  PhaseRecorder* rec = opt.phases;

  // Without a transpose exchange the received update blocks need a local transpose.
  const bool exchange = ta == tb;
  const bool flip_received = !exchange;
  auto [held_a, held_b] = detail::timed(rec, Phase::transpose_exchange, [&] {
    DcsrBlock<V> ha = exchange ? detail::transpose_exchange(comm, a_star.block(), width) : a_star.block();
    DcsrBlock<V> hb = exchange ? detail::transpose_exchange(comm, b_star.block(), width) : b_star.block();
    return std::pair{std::move(ha), std::move(hb)};
  });
  auto op = [&](const DcsrBlock<V>& blk) { return flip_received ? transpose(blk) : blk; };
  const auto add = [](V x, V y) { return S::add(x, y); };
  const int w = opt.workers;

  // X = op(A*) op(B'); computed transposed when B is transposed.
  DcsrBlock<V> x = tb ? detail::broadcast_aggregate_rounds<V>(
                            comm, Axis::col, held_a, width,
                            [&](const DcsrBlock<V>& r) { return gustavson_multiply<S>(b_prime.block(), op(r), w); }, add,
                            width, rec)
                      : detail::broadcast_aggregate_rounds<V>(
                            comm, Axis::row, held_a, width,
                            [&](const DcsrBlock<V>& r) { return gustavson_multiply<S>(op(r), b_prime.block(), w); }, add,
                            width, rec);
  // Y = op(A) op(B*); computed transposed when A is transposed.
  DcsrBlock<V> y = ta ? detail::broadcast_aggregate_rounds<V>(
                            comm, Axis::row, held_b, width,
                            [&](const DcsrBlock<V>& r) { return gustavson_multiply<S>(op(r), a.block(), w); }, add,
                            width, rec)
                      : detail::broadcast_aggregate_rounds<V>(
                            comm, Axis::col, held_b, width,
                            [&](const DcsrBlock<V>& r) { return gustavson_multiply<S>(a.block(), op(r), w); }, add,
                            width, rec);
  if (tb || ta) {
    detail::timed(rec, Phase::transpose_exchange, [&] {
      if (tb) x = detail::transpose_exchange(comm, transpose(x), width);
      if (ta) y = detail::transpose_exchange(comm, transpose(y), width);
    });
  }
  detail::timed(rec, Phase::merge, [&] {
    add_into<S>(state.c.block(), x);
    add_into<S>(state.c.block(), y);
  });
  state.bloom_current = false;
}

/// Local blocks of C* (structure) and F* (Bloom bits) on this rank.
struct PatternUpdate {
  DcsrBlock<Pattern> c_star;
  BloomBlock f_star;
};

/**
 * Structure and Bloom bits of the correction term: C* covers A*B' and
 * (A and A') B*, and F* marks every summation index k for which a*(i,k)b'(k,j)
 * or a(i,k)b*(k,j) or a'(i,k)b*(k,j) are both stored. A* and B* are change
 * masks. Same communication as the algebraic update, with bitwise-or
 * aggregation. Collective.
 */
template <class V>
PatternUpdate compute_pattern(Communicator& comm, const DynamicMatrix<V>& a, const UpdateMatrix<Pattern>& a_star,
                              const DynamicMatrix<V>& b_prime, const UpdateMatrix<Pattern>& b_star,
                              const DynamicMatrix<V>& a_prime, unsigned bloom_bits, const SpgemmOptions& opt = {}) {
  validate_bloom_bits(bloom_bits);
  detail::require_role(a_star.role(), MatrixRole::update, "A*");
  detail::require_role(b_star.role(), MatrixRole::update, "B*");
  detail::require_grid(comm, a.partition(), "A");
  detail::require_grid(comm, b_prime.partition(), "B'");
  detail::require_same_partition(a.partition(), a_star.partition(), "A and A*");
  detail::require_same_partition(a.partition(), a_prime.partition(), "A and A'");
  detail::require_same_partition(b_prime.partition(), b_star.partition(), "B' and B*");
  detail::product_partition(a.partition(), b_prime.partition(), {});
  PhaseRecorder* rec = opt.phases;
  const GridCoord me = comm.coord();
  const AxisSplit& inner = a.partition().cols();
  const std::size_t bloom_width = bloom_wire_width(bloom_bits);
  const int w = opt.workers;

  auto [held_a, held_b] = detail::timed(rec, Phase::transpose_exchange, [&] {
    return std::pair{detail::transpose_exchange(comm, a_star.block(), 0), detail::transpose_exchange(comm, b_star.block(), 0)};
  });
  const BloomContext x_ctx{inner.start(me.row), bloom_bits};
  const BloomContext y_ctx{inner.start(me.col), bloom_bits};

  const BloomBlock fx = detail::broadcast_aggregate_rounds<std::uint64_t>(
      comm, Axis::row, held_a, 0, [&](const DcsrBlock<Pattern>& r) { return bloom_multiply(r, b_prime.block(), x_ctx, w); },
      bit_or, bloom_width, rec);
  const BloomBlock fy = detail::broadcast_aggregate_rounds<std::uint64_t>(
      comm, Axis::col, held_b, 0,
      [&](const DcsrBlock<Pattern>& r) {
        const DcsrRows<Pattern> rows(r);
        return detail::bloom_union(bloom_multiply(a.block(), rows, y_ctx, w), bloom_multiply(a_prime.block(), rows, y_ctx, w));
      },
      bit_or, bloom_width, rec);

  PatternUpdate out;
  detail::timed(rec, Phase::merge, [&] {
    out.f_star = detail::bloom_union(fx, fy);
    out.c_star = structure_of(out.f_star);
  });
  return out;
}

struct GeneralUpdateReport {
  std::size_t nnz_c_star = 0;   ///< local entries of C*
  std::size_t nnz_a_prime = 0;  ///< local entries of A'
  std::size_t nnz_a_r = 0;      ///< local entries of the Bloom-filtered A'
  DcsrBlock<Pattern> c_star;    ///< local block of C*
};

/**
 * General dynamic update: recomputes C and F at the positions of C* from
 * scratch. A* and B* are change masks that mark every position where A'
 * and B' differ from A and B, deletions included.
 *
 * Steps per rank (i, j): C* and F* by compute_pattern; the OR of F and F*
 * over C* positions is reduced per local row across the grid row into R;
 * A' is filtered to the entries whose column bit is set in R (A^R); A^R is
 * transpose-exchanged; then q rounds broadcast A^R along grid rows and C*
 * along grid columns, run the masked multiplication against the resident
 * B' block and aggregate Z (semiring addition) and H (bitwise or). Finally
 * every C* position of C and F is replaced by Z and H, or deleted when the
 * recomputation produced nothing. Collective.
 */
template <Semiring S>
GeneralUpdateReport spgemm_general_update(Communicator& comm, SpgemmState<S>& state,
                                          const DynamicMatrix<typename S::value_type>& a_prime,
                                          const UpdateMatrix<Pattern>& a_star,
                                          const DynamicMatrix<typename S::value_type>& b_prime,
                                          const UpdateMatrix<Pattern>& b_star, const DynamicMatrix<typename S::value_type>& a,
                                          const DynamicMatrix<typename S::value_type>& b, const SpgemmOptions& opt = {}) {
  using V = typename S::value_type;
  constexpr std::size_t width = ValueCodec<V>::width;
  if (state.transpose.a || state.transpose.b) {
    throw Unsupported("general dynamic updates do not support transposed operands");
  }
  if (!state.bloom_current) {
    throw ContractViolation("general update needs a current Bloom matrix; an algebraic update invalidated it");
  }
  detail::require_same_partition(b.partition(), b_prime.partition(), "B and B'");
  if (!(detail::product_partition(a_prime.partition(), b_prime.partition(), {}) == state.c.partition())) {
    throw DimensionMismatch("spgemm_general_update: operands do not match the maintained product");
  }
  PhaseRecorder* rec = opt.phases;
  const GridCoord me = comm.coord();
  const unsigned bits = state.bloom_bits;
  const std::size_t bloom_width = bloom_wire_width(bits);
  const int q = comm.side();

  PatternUpdate pattern = compute_pattern(comm, a, a_star, b_prime, b_star, a_prime, bits, opt);

  // R: per local row, the OR of (F | F*) over that row's C* positions, reduced across the grid row.
  std::vector<std::uint64_t> row_bits = detail::timed(rec, Phase::aggregate, [&] {
    std::vector<std::uint64_t> r(state.c.block().n_rows(), 0);
    pattern.f_star.for_each([&](local_index i, local_index j, std::uint64_t fs) {
      const std::uint64_t* f = state.f.block().find(i, j);
      r[i] |= fs | (f ? *f : 0);
    });
    std::vector<UpdateTuple<std::uint64_t>> nonzero;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] != 0) nonzero.push_back(UpdateTuple<std::uint64_t>::upsert(i, 0, r[i]));
    }
    const Bytes encoded = encode_tuples<std::uint64_t>(nonzero);
    std::vector<UpdateTuple<std::uint64_t>> all;
    for (const Bytes& buf : comm.all_to_all_v(Axis::row, std::vector<Bytes>(q, encoded))) decode_tuples_into(buf, all);
    std::fill(r.begin(), r.end(), 0);
    for (const auto& t : all) {
      if (t.row >= r.size()) throw DecodeError("row bitfield outside the local row range");
      r[t.row] |= t.value;
    }
    return r;
  });

  const DcsrBlock<V> a_r = detail::timed(rec, Phase::local_multiply, [&] {
    return filter_rows_by_bloom(a_prime.block(), row_bits, a_prime.col_offset(), bits);
  });
  const DcsrBlock<V> held_ar =
      detail::timed(rec, Phase::transpose_exchange, [&] { return detail::transpose_exchange(comm, a_r, width); });

  const BloomContext ctx{a_prime.partition().cols().start(me.row), bits};
  std::optional<DcsrBlock<V>> z_mine;
  std::optional<BloomBlock> h_mine;
  for (int t = 0; t < q; ++t) {
    auto [ar_t, cs_t] = detail::timed(rec, Phase::broadcast, [&] {
      Bytes pa = me.col == t ? dcsr_serialize(held_ar, width) : Bytes{};
      Bytes pc = me.row == t ? dcsr_serialize(pattern.c_star, 0) : Bytes{};
      DcsrBlock<V> ra = dcsr_deserialize<V>(comm.row_broadcast(t, std::move(pa)), width);
      DcsrBlock<Pattern> rc = dcsr_deserialize<Pattern>(comm.col_broadcast(t, std::move(pc)), 0);
      return std::pair{std::move(ra), std::move(rc)};
    });
    MaskedProduct<V> zh = detail::timed(rec, Phase::local_multiply, [&] {
      const MaskSet mask(cs_t);
      return masked_multiply<S>(ar_t, b_prime.block(), mask, ctx, opt.workers);
    });
    detail::timed(rec, Phase::aggregate, [&] {
      auto z = aggregate_sparse<V>(comm, Axis::col, t, zh.z, [](V x, V y) { return S::add(x, y); }, width);
      auto h = aggregate_sparse<std::uint64_t>(comm, Axis::col, t, zh.h, bit_or, bloom_width);
      if (z) z_mine = std::move(*z);
      if (h) h_mine = std::move(*h);
    });
  }

  detail::timed(rec, Phase::merge, [&] {
    mask_out(state.c.block(), pattern.c_star);
    merge_into(state.c.block(), *z_mine);
    mask_out(state.f.block(), pattern.c_star);
    merge_into(state.f.block(), *h_mine);
  });

  GeneralUpdateReport report;
  report.nnz_c_star = pattern.c_star.nnz();
  report.nnz_a_prime = a_prime.block().nnz();
  report.nnz_a_r = a_r.nnz();
  report.c_star = std::move(pattern.c_star);
  return report;
}

}  // namespace dynspgemm
