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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Run with criterion numbers as arguments to select a subset.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dynspgemm.hpp"
#include "dynspgemm/bench/experiment.hpp"
#include "dynspgemm/bench/rmat.hpp"
#include "support/oracles.hpp"

namespace {

using namespace dynspgemm;
namespace t = dynspgemm::testing;
using t::Pos;
using t::Triples;
using Clock = std::chrono::steady_clock;

// Pinned thresholds.
constexpr int algebraic_instances = 200;
constexpr int algebraic_batches = 5;
constexpr double algebraic_time_limit = 60.0;
constexpr int general_instances = 200;
constexpr int general_batches = 3;
constexpr double general_time_limit = 120.0;
constexpr int bloom_runs = 100;
constexpr std::size_t redistribute_tuples = 100000;
constexpr int redistribute_q = 8;
constexpr double redistribute_time_limit = 10.0;
constexpr double volume_ratio_limit = 0.5;
constexpr int volume_scale = 14;
constexpr int volume_q = 4;
constexpr std::size_t volume_batches[] = {1024, 4096, 16384, 65536};
constexpr int microbench_scale = 16;
constexpr std::size_t microbench_batch = 131072;
constexpr double microbench_speedup = 5.0;
constexpr int microbench_repeats = 5;
constexpr global_index max_dim = 64;
constexpr double max_density = 0.25;
constexpr global_index bloom_max_dim = 32;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

template <Semiring S>
Triples<typename S::value_type> fold_into(Triples<typename S::value_type> base, const Triples<typename S::value_type>& upd) {
  for (const auto& [p, v] : upd) {
    auto it = base.find(p);
    if (it == base.end()) base[p] = v;
    else it->second = S::add(it->second, v);
  }
  return base;
}

Triples<std::int64_t> ones(const std::set<Pos>& s) {
  Triples<std::int64_t> out;
  for (const auto& p : s) out[p] = 1;
  return out;
}

/// Number of output positions where `got` lacks a bit that brute force requires.
std::size_t bloom_false_negatives(const Triples<std::uint64_t>& got, const Triples<std::uint64_t>& required) {
  std::size_t misses = 0;
  for (const auto& [p, bits] : required) {
    const auto it = got.find(p);
    const std::uint64_t have = it == got.end() ? 0 : it->second;
    if ((bits & ~have) != 0) ++misses;
  }
  return misses;
}

global_index random_dim(std::mt19937_64& rng, global_index lo, global_index hi) {
  return std::uniform_int_distribution<global_index>(lo, hi)(rng);
}

double random_density(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.01, max_density)(rng); }

/// Grid side for an instance whose rank count cycles through 1, 4 and 16.
int grid_side_for(int instance) {
  constexpr int sides[] = {1, 2, 4};
  return sides[instance % 3];
}

// ---------------------------------------------------------------------------

Outcome algebraic_equivalence() {
  std::mt19937_64 rng(1001);
  std::atomic<std::size_t> mismatches{0};
  std::size_t oracle_mismatches = 0;
  std::size_t checks = 0;
  const auto t0 = Clock::now();
  for (int inst = 0; inst < algebraic_instances; ++inst) {
    const int q = grid_side_for(inst);
    const global_index n = random_dim(rng, 8, max_dim), k = random_dim(rng, 8, max_dim), m = random_dim(rng, 8, max_dim);
    const Triples<std::int64_t> a0 = t::random_triples<std::int64_t>(rng, n, k, random_density(rng), t::small_int);
    const Triples<std::int64_t> b0 = t::random_triples<std::int64_t>(rng, k, m, random_density(rng), t::small_int);
    std::vector<std::pair<Triples<std::int64_t>, Triples<std::int64_t>>> batches;
    for (int x = 0; x < algebraic_batches; ++x) {
      batches.emplace_back(t::random_sparse_count<std::int64_t>(rng, n, k, 1 + rng() % 8, t::small_int),
                           t::random_sparse_count<std::int64_t>(rng, k, m, rng() % 9, t::small_int));
    }
    const BlockPartition pa(n, k, q), pb(k, m, q);
    t::Gatherer<std::int64_t> final_c;
    Simulator sim(q * q);
    sim.run([&](Communicator& comm) {
      const GridCoord me = comm.coord();
      Triples<std::int64_t> a = a0, b = b0;
      auto state = spgemm_algebraic_init<PlusTimesI64>(comm, t::local_primary(a, pa, me), t::local_primary(b, pb, me));
      for (const auto& [as, bs] : batches) {
        const Triples<std::int64_t> b_prime = fold_into<PlusTimesI64>(b, bs);
        const auto b_local = t::local_primary(b_prime, pb, me);
        spgemm_algebraic_update(comm, state, t::local_primary(a, pa, me), t::local_update(as, pa, me), b_local,
                                t::local_update(bs, pb, me));
        a = fold_into<PlusTimesI64>(a, as);
        b = b_prime;
        const auto recomputed = summa_static<PlusTimesI64>(comm, t::local_primary(a, pa, me), b_local);
        if (!same_entries(state.c.block(), recomputed.block())) ++mismatches;
      }
      final_c.add(state.c);
    });
    checks += algebraic_batches;
    Triples<std::int64_t> a = a0, b = b0;
    for (const auto& [as, bs] : batches) {
      a = fold_into<PlusTimesI64>(a, as);
      b = fold_into<PlusTimesI64>(b, bs);
    }
    if (final_c.result() != t::dense_multiply<PlusTimesI64>(a, b, n, k, m)) ++oracle_mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && oracle_mismatches == 0 && elapsed < algebraic_time_limit,
          fmt("%zu batch checks, %zu rank blocks differ from summa_static, %zu final products differ from dense oracle, "
              "%.1f s (limit %.0f s)",
              checks, mismatches.load(), oracle_mismatches, elapsed, algebraic_time_limit)};
}

// ---------------------------------------------------------------------------

Outcome general_equivalence() {
  std::mt19937_64 rng(2002);
  std::atomic<std::size_t> mismatches{0}, escapes{0}, changed{0};
  std::size_t oracle_mismatches = 0;
  std::size_t checks = 0;
  const unsigned widths[] = {64, 16, 4};
  const auto t0 = Clock::now();
  for (int inst = 0; inst < general_instances; ++inst) {
    const int q = grid_side_for(inst);
    const unsigned bits = widths[inst % 3];
    const global_index n = random_dim(rng, 8, max_dim), k = random_dim(rng, 8, max_dim), m = random_dim(rng, 8, max_dim);
    Triples<double> a = t::random_triples<double>(rng, n, k, random_density(rng), t::small_positive);
    Triples<double> b = t::random_triples<double>(rng, k, m, random_density(rng), t::small_positive);
    const Triples<double> a0 = a, b0 = b;
    std::vector<std::pair<t::Change<double>, t::Change<double>>> batches;
    for (int x = 0; x < general_batches; ++x) {
      auto ca = t::random_change(rng, a, n, k, 1 + int(rng() % 8), t::small_positive);
      auto cb = t::random_change(rng, b, k, m, int(rng() % 9), t::small_positive);
      a = ca.next;
      b = cb.next;
      batches.emplace_back(std::move(ca), std::move(cb));
    }
    const BlockPartition pa(n, k, q), pb(k, m, q);
    t::Gatherer<double> final_c;
    Simulator sim(q * q);
    sim.run([&](Communicator& comm) {
      const GridCoord me = comm.coord();
      auto a_cur = t::local_primary(a0, pa, me);
      auto b_cur = t::local_primary(b0, pb, me);
      auto state = spgemm_algebraic_init<MinPlus>(comm, a_cur, b_cur, bits);
      for (const auto& [ca, cb] : batches) {
        const DynamicBlock<double> before = state.c.block();
        auto a_next = t::local_primary(ca.next, pa, me);
        auto b_next = t::local_primary(cb.next, pb, me);
        const auto rep = spgemm_general_update(comm, state, a_next, t::local_mask(ca.mask, pa, me), b_next,
                                               t::local_mask(cb.mask, pb, me), a_cur, b_cur);
        const auto recomputed = summa_static<MinPlus>(comm, a_next, b_next);
        if (!same_entries(state.c.block(), recomputed.block())) ++mismatches;
        // Every entry that appeared, vanished or changed value lies in C*.
        std::set<std::pair<local_index, local_index>> star;
        rep.c_star.for_each([&](local_index r, local_index c, const Pattern&) { star.emplace(r, c); });
        std::size_t local_escapes = 0, local_changed = 0;
        state.c.block().for_each([&](local_index r, local_index c, double v) {
          const double* old = before.find(r, c);
          if (old != nullptr && *old == v) return;
          ++local_changed;
          if (!star.count({r, c})) ++local_escapes;
        });
        before.for_each([&](local_index r, local_index c, double) {
          if (state.c.block().find(r, c) != nullptr) return;
          ++local_changed;
          if (!star.count({r, c})) ++local_escapes;
        });
        escapes += local_escapes;
        changed += local_changed;
        a_cur = std::move(a_next);
        b_cur = std::move(b_next);
      }
      final_c.add(state.c);
    });
    checks += general_batches;
    if (final_c.result() != t::dense_multiply<MinPlus>(a, b, n, k, m)) ++oracle_mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && escapes == 0 && oracle_mismatches == 0 && elapsed < general_time_limit,
          fmt("%zu batch checks, %zu rank blocks differ from summa_static, %zu of %zu changed entries outside C*, "
              "%zu final products differ from dense oracle, %.1f s (limit %.0f s)",
              checks, mismatches.load(), escapes.load(), changed.load(), oracle_mismatches, elapsed, general_time_limit)};
}

// ---------------------------------------------------------------------------

Outcome bloom_soundness() {
  std::mt19937_64 rng(3003);
  const unsigned widths[] = {1, 4, 8, 16, 64};
  std::size_t f_checks = 0, f_misses = 0, fstar_checks = 0, fstar_misses = 0;
  for (int run = 0; run < bloom_runs; ++run) {
    const int q = 1 + run % 2;
    const unsigned bits = widths[run % 5];
    const global_index n = random_dim(rng, 4, bloom_max_dim), k = random_dim(rng, 4, bloom_max_dim),
                       m = random_dim(rng, 4, bloom_max_dim);
    const Triples<double> a0 = t::random_triples<double>(rng, n, k, random_density(rng), t::small_positive);
    const Triples<double> b0 = t::random_triples<double>(rng, k, m, random_density(rng), t::small_positive);
    std::vector<Triples<double>> as{a0}, bs{b0};
    std::vector<std::pair<t::Change<double>, t::Change<double>>> batches;
    for (int x = 0; x < 3; ++x) {
      batches.emplace_back(t::random_change(rng, as.back(), n, k, 1 + int(rng() % 6), t::small_positive),
                           t::random_change(rng, bs.back(), k, m, int(rng() % 6), t::small_positive));
      as.push_back(batches.back().first.next);
      bs.push_back(batches.back().second.next);
    }
    // One further change whose correction pattern F* is inspected directly.
    const auto star_a = t::random_change(rng, as.back(), n, k, 1 + int(rng() % 6), t::small_positive);
    const auto star_b = t::random_change(rng, bs.back(), k, m, 1 + int(rng() % 6), t::small_positive);

    const BlockPartition pa(n, k, q), pb(k, m, q), pc(n, m, q);
    std::array<t::Gatherer<std::uint64_t>, 4> f_after;
    t::Gatherer<std::uint64_t> f_star;
    Simulator sim(q * q);
    sim.run([&](Communicator& comm) {
      const GridCoord me = comm.coord();
      auto state = spgemm_algebraic_init<MinPlus>(comm, t::local_primary(as[0], pa, me), t::local_primary(bs[0], pb, me), bits);
      f_after[0].add(state.f);
      for (std::size_t x = 0; x < batches.size(); ++x) {
        const auto& [ca, cb] = batches[x];
        spgemm_general_update(comm, state, t::local_primary(ca.next, pa, me), t::local_mask(ca.mask, pa, me),
                              t::local_primary(cb.next, pb, me), t::local_mask(cb.mask, pb, me),
                              t::local_primary(as[x], pa, me), t::local_primary(bs[x], pb, me));
        f_after[x + 1].add(state.f);
      }
      const auto pat = compute_pattern(comm, t::local_primary(as.back(), pa, me), t::local_mask(star_a.mask, pa, me),
                                       t::local_primary(star_b.next, pb, me), t::local_mask(star_b.mask, pb, me),
                                       t::local_primary(star_a.next, pa, me), bits);
      f_star.add(UpdateMatrix<std::uint64_t>(pc, me, MatrixRole::update, pat.f_star));
    });
    for (std::size_t x = 0; x < f_after.size(); ++x) {
      const auto required = t::brute_force_bloom(as[x], bs[x], bits);
      f_checks += required.size();
      f_misses += bloom_false_negatives(f_after[x].result(), required);
    }
    Triples<std::uint64_t> required = t::brute_force_bloom(ones(star_a.mask), star_b.next, bits);
    for (const auto& [p, v] : t::brute_force_bloom(as.back(), ones(star_b.mask), bits)) required[p] |= v;
    for (const auto& [p, v] : t::brute_force_bloom(star_a.next, ones(star_b.mask), bits)) required[p] |= v;
    fstar_checks += required.size();
    fstar_misses += bloom_false_negatives(f_star.result(), required);
  }
  return {f_misses == 0 && fstar_misses == 0,
          fmt("%d runs, F: %zu false negatives in %zu required entries, F*: %zu false negatives in %zu required entries",
              bloom_runs, f_misses, f_checks, fstar_misses, fstar_checks)};
}

// ---------------------------------------------------------------------------

Outcome redistribution_conservation() {
  using Tuple = UpdateTuple<std::int64_t>;
  const int q = redistribute_q;
  const int p = q * q;
  const global_index n = 1'000'000, m = 1'000'000;
  const BlockPartition part(n, m, q);
  std::vector<std::vector<Tuple>> sent(p), got(p);
  std::mt19937_64 rng(4004);
  for (std::size_t x = 0; x < redistribute_tuples; ++x) {
    const global_index r = rng() % n, c = rng() % m;
    sent[x % p].push_back(rng() % 4 == 0 ? Tuple::erase(r, c) : Tuple::upsert(r, c, static_cast<std::int64_t>(x)));
  }
  Simulator sim(p);
  const auto t0 = Clock::now();
  sim.run([&](Communicator& comm) {
    got[comm.rank()] = redistribute_updates(comm, part, std::span<const Tuple>(sent[comm.rank()]));
  });
  const double elapsed = seconds_since(t0);

  std::vector<std::vector<Tuple>> expected(p);
  for (const auto& batch : sent) {
    for (const Tuple& tp : batch) expected[sim.grid().rank_of(part.owner_of(tp.row, tp.col))].push_back(tp);
  }
  auto key = [](const Tuple& x) { return std::tuple(x.row, x.col, x.kind, x.value); };
  std::size_t misplaced = 0, received = 0;
  std::uint64_t peers = 0, steps = 0;
  for (int r = 0; r < p; ++r) {
    auto g = got[r], e = expected[r];
    received += g.size();
    std::sort(g.begin(), g.end(), [&](const Tuple& x, const Tuple& y) { return key(x) < key(y); });
    std::sort(e.begin(), e.end(), [&](const Tuple& x, const Tuple& y) { return key(x) < key(y); });
    if (g.size() != e.size() || !std::equal(g.begin(), g.end(), e.begin(), [&](auto& x, auto& y) { return key(x) == key(y); })) {
      ++misplaced;
    }
    peers = std::max(peers, sim.counters()[r].alltoall_peers_max);
    steps = std::max(steps, sim.counters()[r].alltoall_calls);
  }
  return {misplaced == 0 && received == redistribute_tuples && peers <= static_cast<std::uint64_t>(q) &&
              elapsed < redistribute_time_limit,
          fmt("%zu tuples on a %dx%d grid, %zu received, %zu ranks with wrong ownership, max distinct peers per step %llu "
              "(limit %d) over %llu steps, %.2f s (limit %.0f s)",
              redistribute_tuples, q, q, received, misplaced, static_cast<unsigned long long>(peers), q,
              static_cast<unsigned long long>(steps), elapsed, redistribute_time_limit)};
}

// ---------------------------------------------------------------------------

Outcome round_counts() {
  std::mt19937_64 rng(5005);
  bool ok = true;
  std::string detail;
  for (int q : {2, 4}) {
    const global_index n = 24;
    const auto a = t::random_triples<std::int64_t>(rng, n, n, 0.2, t::small_int);
    const auto b = t::random_triples<std::int64_t>(rng, n, n, 0.2, t::small_int);
    const auto as = t::random_sparse_count<std::int64_t>(rng, n, n, 5, t::small_int);
    const auto bs = t::random_sparse_count<std::int64_t>(rng, n, n, 5, t::small_int);
    const BlockPartition part(n, n, q);
    std::vector<TransportCounters> summa(q * q), update(q * q);
    Simulator sim(q * q);
    sim.run([&](Communicator& comm) {
      const GridCoord me = comm.coord();
      const auto la = t::local_primary(a, part, me);
      const auto lb = t::local_primary(b, part, me);
      auto c0 = comm.counters();
      summa_static<PlusTimesI64>(comm, la, lb);
      summa[comm.rank()] = comm.counters() - c0;
      auto state = spgemm_algebraic_init<PlusTimesI64>(comm, la, lb);
      const auto b_prime = t::local_primary(fold_into<PlusTimesI64>(b, bs), part, me);
      c0 = comm.counters();
      spgemm_algebraic_update(comm, state, la, t::local_update(as, part, me), b_prime, t::local_update(bs, part, me));
      update[comm.rank()] = comm.counters() - c0;
    });
    const std::uint64_t two_q = 2u * static_cast<std::uint64_t>(q);
    int bad = 0;
    for (int r = 0; r < q * q; ++r) {
      if (summa[r].broadcast_calls != two_q || summa[r].aggregate_calls != 0 || summa[r].p2p_calls != 0) ++bad;
      if (update[r].broadcast_calls != two_q || update[r].aggregate_calls != two_q || update[r].p2p_calls != 2) ++bad;
    }
    ok = ok && bad == 0;
    detail += fmt("q=%d: summa %llu bcast, update %llu bcast + %llu aggr + %llu p2p, %d ranks off; ", q,
                  static_cast<unsigned long long>(summa[0].broadcast_calls),
                  static_cast<unsigned long long>(update[0].broadcast_calls),
                  static_cast<unsigned long long>(update[0].aggregate_calls),
                  static_cast<unsigned long long>(update[0].p2p_calls), bad);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// ---------------------------------------------------------------------------

std::uint64_t first_batch_broadcast_bytes(bench::ExperimentKind kind, std::size_t batch_size) {
  bench::ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.rmat = bench::RmatParams{volume_scale, 16};
  cfg.q = volume_q;
  cfg.batch_size = batch_size;
  cfg.batches = 1;
  cfg.seed = 1;
  cfg.verify_cap = 0;
  return bench::run_experiment(cfg).records.at(0).phases.volume(Phase::broadcast);
}

Outcome volume_dominance() {
  std::vector<double> ratios;
  std::string detail;
  for (std::size_t bs : volume_batches) {
    const double dynamic = static_cast<double>(first_batch_broadcast_bytes(bench::ExperimentKind::spgemm_algebraic, bs));
    const double recompute = static_cast<double>(first_batch_broadcast_bytes(bench::ExperimentKind::spgemm_static, bs));
    ratios.push_back(dynamic / recompute);
    detail += fmt("bs=%zu ratio %.4f; ", bs, ratios.back());
  }
  const bool monotone = std::is_sorted(ratios.begin(), ratios.end(), std::less_equal<>());
  detail += fmt("first ratio limit %.2f, %s", volume_ratio_limit, monotone ? "monotone" : "not monotone");
  return {ratios.front() < volume_ratio_limit && monotone, detail};
}

// ---------------------------------------------------------------------------

using Tuple64 = UpdateTuple<std::int64_t>;

/// Compressed matrix built from scratch: counting sort by row, then by column within each row.
DcsrBlock<std::int64_t> rebuild_compressed(std::span<const Tuple64> triples, std::size_t n) {
  std::vector<std::size_t> start(n + 1, 0);
  for (const auto& tp : triples) ++start[tp.row + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::pair<local_index, std::int64_t>> entries(triples.size());
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (const auto& tp : triples) entries[fill[tp.row]++] = {static_cast<local_index>(tp.col), tp.value};
  DcsrBlock<std::int64_t> out(n, n);
  out.cols.reserve(triples.size());
  out.values.reserve(triples.size());
  std::vector<local_index> cols;
  std::vector<std::int64_t> vals;
  for (std::size_t r = 0; r < n; ++r) {
    auto first = entries.begin() + static_cast<std::ptrdiff_t>(start[r]);
    auto last = entries.begin() + static_cast<std::ptrdiff_t>(start[r + 1]);
    if (first == last) continue;
    std::sort(first, last, [](const auto& x, const auto& y) { return x.first < y.first; });
    cols.clear();
    vals.clear();
    for (auto it = first; it != last; ++it) {
      cols.push_back(it->first);
      vals.push_back(it->second);
    }
    out.append_row(static_cast<local_index>(r), cols, vals);
  }
  return out;
}

Outcome dynamic_update_speed() {
  const std::size_t n = std::size_t{1} << microbench_scale;
  std::set<std::pair<global_index, global_index>> seen;
  std::vector<Tuple64> all;
  for (const auto& tp : bench::rmat_generate<std::int64_t>({microbench_scale, 16}, 6006, 1)) {
    for (const auto& [r, c] : {std::pair{tp.row, tp.col}, std::pair{tp.col, tp.row}}) {
      if (seen.emplace(r, c).second) all.push_back(Tuple64::upsert(r, c, 1));
    }
  }
  std::mt19937_64 rng(6006);
  std::shuffle(all.begin(), all.end(), rng);
  const std::span<const Tuple64> old_part(all.data(), all.size() - microbench_batch);
  const std::span<const Tuple64> batch(all.data() + old_part.size(), microbench_batch);

  const BlockPartition part(n, n, 1);
  const GridCoord me{0, 0};
  double best_apply = 1e300, best_rebuild = 1e300;
  std::size_t apply_nnz = 0, rebuild_nnz = 0;
  for (int rep = 0; rep < microbench_repeats; ++rep) {
    // Built by insertion rather than copied, so row capacities are those of a live matrix.
    DynamicBlock<std::int64_t> block(n, n);
    apply_batch<PlusTimesI64>(block, part, me, old_part, ApplyMode::overwrite);
    auto t0 = Clock::now();
    apply_batch<PlusTimesI64>(block, part, me, batch, ApplyMode::overwrite);
    best_apply = std::min(best_apply, seconds_since(t0));
    apply_nnz = block.nnz();

    t0 = Clock::now();
    const auto fresh = rebuild_compressed(all, n);
    best_rebuild = std::min(best_rebuild, seconds_since(t0));
    rebuild_nnz = fresh.nnz();
  }
  const double speedup = best_rebuild / best_apply;
  return {speedup >= microbench_speedup && apply_nnz == all.size() && rebuild_nnz == all.size(),
          fmt("%zu existing + %zu batch entries, apply %.2f ms, rebuild %.2f ms, speedup %.1fx (limit %.1fx)", old_part.size(),
              batch.size(), best_apply * 1e3, best_rebuild * 1e3, speedup, microbench_speedup)};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  using bench::ExperimentKind;
  int differing = 0, runs = 0;
  for (ExperimentKind kind : {ExperimentKind::construct, ExperimentKind::insert, ExperimentKind::update, ExperimentKind::erase,
                              ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general,
                              ExperimentKind::spgemm_static}) {
    bench::ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.rmat = bench::RmatParams{9, 8};
    cfg.q = 2;
    cfg.workers = 3;
    cfg.batch_size = 200;
    cfg.batches = 3;
    cfg.seed = 7007;
    cfg.random_values = true;
    if (kind == ExperimentKind::spgemm_general) cfg.semiring = "min-plus";
    const auto first = bench::run_experiment(cfg);
    const auto second = bench::run_experiment(cfg);
    ++runs;
    if (!(first.checksum == second.checksum) || first.counters != second.counters) ++differing;
  }
  return {differing == 0, fmt("%d experiment kinds rerun with the same seed, %d differ in checksum or counters", runs, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "algebraic update equals static recomputation", algebraic_equivalence},
      {2, "general update equals static recomputation", general_equivalence},
      {3, "Bloom filters have no false negatives", bloom_soundness},
      {4, "redistribution conserves tuples with bounded peers", redistribution_conservation},
      {5, "collective round counts", round_counts},
      {6, "dynamic broadcast volume below static", volume_dominance},
      {7, "dynamic batch apply beats rebuild", dynamic_update_speed},
      {8, "seeded reruns are identical", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s (%.1f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0), out.detail.c_str());
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
