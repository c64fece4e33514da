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
#include <chrono>
#include <cstring>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynspgemm/bench/graph_io.hpp"
#include "dynspgemm/bench/rmat.hpp"
#include "dynspgemm/dist_spgemm.hpp"

namespace dynspgemm::bench {

enum class ExperimentKind { construct, insert, update, erase, spgemm_algebraic, spgemm_general, spgemm_static };

inline constexpr std::string_view experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::construct: return "construct";
    case ExperimentKind::insert: return "insert";
    case ExperimentKind::update: return "update";
    case ExperimentKind::erase: return "delete";
    case ExperimentKind::spgemm_algebraic: return "spgemm-algebraic";
    case ExperimentKind::spgemm_general: return "spgemm-general";
    case ExperimentKind::spgemm_static: return "spgemm-static";
  }
  return "?";
}

inline std::optional<ExperimentKind> parse_experiment(std::string_view name) {
  for (auto k : {ExperimentKind::construct, ExperimentKind::insert, ExperimentKind::update, ExperimentKind::erase,
                 ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general, ExperimentKind::spgemm_static}) {
    if (experiment_name(k) == name) return k;
  }
  return std::nullopt;
}

inline bool is_spgemm(ExperimentKind k) {
  return k == ExperimentKind::spgemm_algebraic || k == ExperimentKind::spgemm_general || k == ExperimentKind::spgemm_static;
}

/// Invalid configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// The dynamic result disagreed with the static recomputation (exit code 3).
class VerificationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// The estimated output exceeds the configured size cap (exit code 4).
class ResourceCapError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::insert;
  std::string input;               ///< graph file; empty when generating R-MAT
  std::optional<RmatParams> rmat;  ///< generator parameters when no input file
  std::string semiring = "plus-times-i64";
  int q = 1;
  int workers = 1;
  std::uint64_t batch_size = 1024;  ///< updates per rank and batch
  int batches = 10;
  std::uint64_t seed = 1;
  unsigned bloom_bits = default_bloom_bits;
  std::uint64_t verify_cap = 1'000'000;      ///< verify against static SUMMA when the output estimate is at most this
  std::uint64_t output_cap = 200'000'000;    ///< refuse runs whose output estimate exceeds this
  bool random_values = false;
};

struct MetricsRecord {
  std::string experiment;
  std::uint64_t seed = 0;
  int q = 1;
  int workers = 1;
  std::uint64_t batch_size = 0;
  int batch_idx = 0;
  PhaseTotals phases;
  double batch_seconds = 0;
  std::uint64_t nnz_a = 0;
  std::uint64_t nnz_b = 0;
  std::uint64_t nnz_update = 0;
  std::uint64_t nnz_c = 0;
  std::uint64_t nnz_ar = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// Order-independent digest of a matrix: entry count plus the wrapping sum of per-entry hashes.
struct Checksum {
  std::uint64_t count = 0;
  std::uint64_t hash = 0;

  friend bool operator==(const Checksum&, const Checksum&) = default;

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
  }
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;
  Checksum checksum;
  int batches_verified = 0;
  std::uint64_t output_estimate = 0;
  std::vector<TransportCounters> counters;  ///< per rank, whole run
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return dynspgemm::detail::mix64(seed ^ dynspgemm::detail::mix64(stream + 0x9E3779B97F4A7C15ull));
}

template <class V>
std::uint64_t value_bits(const V& v) {
  if constexpr (std::is_same_v<V, double>) {
    std::uint64_t b;
    std::memcpy(&b, &v, 8);
    return b;
  } else {
    return static_cast<std::uint64_t>(v);
  }
}

inline std::uint64_t entry_hash(global_index i, global_index j, std::uint64_t value) {
  using dynspgemm::detail::mix64;
  return mix64(mix64(i * 0x9E3779B97F4A7C15ull + j) ^ (value + 0x632BE59BD9B4E019ull));
}

/// Small integer-valued entries, so sums are exact for every value type.
template <class V>
V random_value(std::uint64_t seed, std::uint64_t draw, std::uint64_t salt) {
  const std::uint64_t h = dynspgemm::detail::mix64(derive_seed(seed, salt) ^ draw);
  if constexpr (std::is_same_v<V, std::uint8_t>) {
    return 1;
  } else {
    return static_cast<V>(1 + h % 9);
  }
}

/// Per-rank observations of one batch, combined on the host.
struct RankBatch {
  PhaseTotals phases;
  double seconds = 0;
  std::uint64_t nnz_a = 0, nnz_b = 0, nnz_update = 0, nnz_c = 0, nnz_ar = 0;
  bool mismatch = false;
  bool verified = false;
};

struct Instance {
  global_index n = 0;
  std::vector<std::pair<global_index, global_index>> positions;  ///< deduplicated, permuted, in draw order
  IndexPermutation perm;
  std::uint64_t output_estimate = 0;
};

template <class V>
Instance prepare_instance(const ExperimentConfig& cfg) {
  std::vector<UpdateTuple<V>> tuples;
  global_index n = 0;
  if (cfg.rmat) {
    for (const auto& t : rmat_generate<V>(*cfg.rmat, derive_seed(cfg.seed, 1), V{})) {
      tuples.push_back(t);
      if (t.row != t.col) tuples.push_back(UpdateTuple<V>::upsert(t.col, t.row, V{}));
    }
    n = global_index{1} << cfg.rmat->scale;
  } else {
    EdgeData<V> g = load_edges<V>(cfg.input, detect_format(cfg.input), V{});
    tuples = std::move(g.tuples);
    n = g.n_rows;
  }
  Instance inst;
  inst.n = n;
  inst.positions.reserve(tuples.size());
  for (const auto& t : tuples) inst.positions.emplace_back(t.row, t.col);
  std::sort(inst.positions.begin(), inst.positions.end());
  inst.positions.erase(std::unique(inst.positions.begin(), inst.positions.end()), inst.positions.end());

  // Output size bound: sum over k of (column degree of A) * (row degree of B), with A = B = adjacency.
  std::vector<std::uint64_t> deg(n, 0);
  for (const auto& [i, j] : inst.positions) ++deg[i];
  for (std::uint64_t d : deg) inst.output_estimate += d * d;

  inst.perm = IndexPermutation::symmetric(n, derive_seed(cfg.seed, 2));
  for (auto& [i, j] : inst.positions) {
    i = inst.perm.row(i);
    j = inst.perm.col(j);
  }
  std::mt19937_64 rng(derive_seed(cfg.seed, 3));
  for (std::size_t k = inst.positions.size(); k > 1; --k) {
    std::swap(inst.positions[k - 1], inst.positions[dynspgemm::detail::uniform_below(rng, k)]);
  }
  return inst;
}

template <class V>
void checksum_into(const DynamicMatrix<V>& m, const IndexPermutation& perm, Checksum& sum) {
  const global_index r0 = m.row_offset();
  const global_index c0 = m.col_offset();
  m.block().for_each([&](std::size_t r, local_index c, const V& v) {
    sum.hash += entry_hash(perm.row_inverse(r0 + r), perm.col_inverse(c0 + c), value_bits(v));
    ++sum.count;
  });
}

template <Semiring S>
ExperimentResult run_typed(const ExperimentConfig& cfg) {
  using V = typename S::value_type;
  const Instance inst = prepare_instance<V>(cfg);
  const bool spgemm = is_spgemm(cfg.experiment);
  if (spgemm && inst.output_estimate > cfg.output_cap) {
    throw ResourceCapError("estimated output size " + std::to_string(inst.output_estimate) + " exceeds cap " +
                           std::to_string(cfg.output_cap));
  }
  const bool verify = spgemm && inst.output_estimate <= cfg.verify_cap;
  const int p = cfg.q * cfg.q;
  const std::uint64_t bs = cfg.batch_size;
  const std::uint64_t total = inst.positions.size();
  const BlockPartition part(inst.n, inst.n, cfg.q);
  const ApplyMode mode = ApplyMode::overwrite;

  std::vector<std::vector<RankBatch>> obs(cfg.batches, std::vector<RankBatch>(p));
  std::vector<Checksum> partial(p);

  // Draw d of the global order: its tuple for a given batch.
  auto draw_tuple = [&](std::uint64_t d, int batch) {
    const auto [i, j] = inst.positions[d];
    switch (cfg.experiment) {
      case ExperimentKind::erase: return UpdateTuple<V>::erase(i, j);
      case ExperimentKind::update: return UpdateTuple<V>::upsert(i, j, random_value<V>(cfg.seed, d, 100 + batch));
      default: return UpdateTuple<V>::upsert(i, j, cfg.random_values ? random_value<V>(cfg.seed, d, 0) : S::one());
    }
  };
  // Batch b takes the next p * bs draws; rank r takes its contiguous share.
  auto batch_tuples = [&](int rank, int batch) {
    std::vector<UpdateTuple<V>> out;
    const std::uint64_t begin = std::min(total, (static_cast<std::uint64_t>(batch) * p + rank) * bs);
    const std::uint64_t end = std::min(total, begin + bs);
    for (std::uint64_t d = begin; d < end; ++d) out.push_back(draw_tuple(d, batch));
    return out;
  };
  // Every draw, split round-robin over ranks; used for matrices that start full.
  auto all_tuples = [&](int rank, bool with_random_values) {
    std::vector<UpdateTuple<V>> out;
    for (std::uint64_t d = static_cast<std::uint64_t>(rank); d < total; d += p) {
      const auto [i, j] = inst.positions[d];
      out.push_back(UpdateTuple<V>::upsert(i, j, with_random_values ? random_value<V>(cfg.seed, d, 0) : S::one()));
    }
    return out;
  };

  Simulator sim(p);
  sim.run([&](Communicator& comm) {
    const int rank = comm.rank();
    const GridCoord me = comm.coord();
    PhaseRecorder rec(comm, true);
    const SpgemmOptions opt{cfg.workers, &rec};

    const bool starts_full = cfg.experiment == ExperimentKind::update || cfg.experiment == ExperimentKind::erase;
    auto a = starts_full ? build_primary<S>(comm, part, std::span<const UpdateTuple<V>>(all_tuples(rank, cfg.random_values)),
                                            mode, cfg.workers)
                         : DynamicMatrix<V>::empty(part, me, MatrixRole::primary);
    std::optional<DynamicMatrix<V>> b;
    std::optional<SpgemmState<S>> state;
    std::optional<DynamicMatrix<V>> c_static;
    if (spgemm) {
      b = build_primary<S>(comm, part, std::span<const UpdateTuple<V>>(all_tuples(rank, cfg.random_values)), mode,
                           cfg.workers);
      state = spgemm_algebraic_init<S>(comm, a, *b, cfg.bloom_bits, {}, {cfg.workers, nullptr});
      if (cfg.experiment == ExperimentKind::spgemm_static) c_static = state->c;
    }
    const auto empty_update = UpdateMatrix<V>::empty(part, me, MatrixRole::update);
    const auto empty_mask = UpdateMatrix<Pattern>::empty(part, me, MatrixRole::update);

    for (int batch = 0; batch < cfg.batches; ++batch) {
      RankBatch& ob = obs[batch][rank];
      rec.reset();
      const std::vector<UpdateTuple<V>> mine = batch_tuples(rank, batch);
      comm.barrier();
      const auto t0 = std::chrono::steady_clock::now();

      const std::vector<UpdateTuple<V>> owned =
          rec.measure(Phase::redistribute, [&] { return redistribute_updates(comm, part, std::span(mine)); });
      const std::span<const UpdateTuple<V>> owned_span(owned);
      switch (cfg.experiment) {
        case ExperimentKind::construct:
          rec.measure(Phase::merge, [&] {
            a = DynamicMatrix<V>::empty(part, me, MatrixRole::primary);
            apply_batch<S>(a.block(), part, me, owned_span, mode, cfg.workers);
          });
          ob.nnz_update = owned.size();
          break;
        case ExperimentKind::insert:
        case ExperimentKind::update:
        case ExperimentKind::erase:
          rec.measure(Phase::merge, [&] { apply_batch<S>(a.block(), part, me, owned_span, mode, cfg.workers); });
          ob.nnz_update = owned.size();
          break;
        case ExperimentKind::spgemm_algebraic: {
          const auto a_star = rec.measure(Phase::redistribute, [&] { return owned_update_matrix<S>(part, me, owned_span); });
          spgemm_algebraic_update(comm, *state, a, a_star, *b, empty_update, opt);
          rec.measure(Phase::merge,
                      [&] { apply_batch<S>(a.block(), part, me, owned_span, ApplyMode::additive, cfg.workers); });
          ob.nnz_update = a_star.block().nnz();
          break;
        }
        case ExperimentKind::spgemm_general: {
          const auto mask = rec.measure(Phase::redistribute, [&] { return owned_change_mask(part, me, owned_span); });
          rec.measure(Phase::merge, [&] { apply_batch<S>(a.block(), part, me, owned_span, mode, cfg.workers); });
          // B* is empty, so the pre-update A never meets a non-zero of B*; A' stands in for it.
          const GeneralUpdateReport rep = spgemm_general_update(comm, *state, a, mask, *b, empty_mask, a, *b, opt);
          ob.nnz_update = mask.block().nnz();
          ob.nnz_ar = rep.nnz_a_r;
          break;
        }
        case ExperimentKind::spgemm_static:
          rec.measure(Phase::merge, [&] { apply_batch<S>(a.block(), part, me, owned_span, mode, cfg.workers); });
          c_static = summa_static<S>(comm, a, *b, opt);
          ob.nnz_update = owned.size();
          break;
      }
      comm.barrier();
      ob.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ob.phases = rec.totals();
      ob.nnz_a = a.block().nnz();
      if (spgemm) {
        const DynamicMatrix<V>& c = c_static ? *c_static : state->c;
        ob.nnz_b = b->block().nnz();
        ob.nnz_c = c.block().nnz();
        if (verify) {
          const auto oracle = summa_static<S>(comm, a, *b);
          ob.mismatch = !same_entries(c.block(), oracle.block());
          ob.verified = true;
        }
      }
    }
    const DynamicMatrix<V>& result = spgemm ? (c_static ? *c_static : state->c) : a;
    checksum_into(result, inst.perm, partial[rank]);
  });

  ExperimentResult res;
  res.output_estimate = inst.output_estimate;
  res.counters = sim.counters();
  for (const Checksum& c : partial) {
    res.checksum.count += c.count;
    res.checksum.hash += c.hash;
  }
  for (int batch = 0; batch < cfg.batches; ++batch) {
    MetricsRecord rec;
    rec.experiment = std::string(experiment_name(cfg.experiment));
    rec.seed = cfg.seed;
    rec.q = cfg.q;
    rec.workers = cfg.workers;
    rec.batch_size = cfg.batch_size;
    rec.batch_idx = batch;
    // Phases are barrier-delimited, so rank 0's clock sees the slowest rank.
    const RankBatch& lead = obs[batch][0];
    rec.phases.seconds = lead.phases.seconds;
    rec.batch_seconds = lead.seconds;
    bool mismatch = false;
    bool verified = false;
    for (const RankBatch& ob : obs[batch]) {
      for (std::size_t ph = 0; ph < all_phases.size(); ++ph) rec.phases.bytes[ph] += ob.phases.bytes[ph];
      rec.nnz_a += ob.nnz_a;
      rec.nnz_b += ob.nnz_b;
      rec.nnz_update += ob.nnz_update;
      rec.nnz_c += ob.nnz_c;
      rec.nnz_ar += ob.nnz_ar;
      mismatch |= ob.mismatch;
      verified |= ob.verified;
    }
    if (mismatch) {
      throw VerificationError("batch " + std::to_string(batch) + ": dynamic result differs from static recomputation");
    }
    res.batches_verified += verified ? 1 : 0;
    res.records.push_back(std::move(rec));
  }
  return res;
}

}  // namespace detail

inline const std::vector<std::string_view>& semiring_names() {
  static const std::vector<std::string_view> names = {PlusTimesI64::name, PlusTimesF64::name, MinPlus::name,
                                                      BoolOrAnd::name};
  return names;
}

inline void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (cfg.q < 1 || cfg.q > 16) fail("grid side must be in [1, 16]");
  if (cfg.workers < 1 || cfg.workers > 256) fail("worker count must be in [1, 256]");
  if (cfg.batches < 0) fail("batch count must be >= 0");
  if (cfg.bloom_bits == 0 || cfg.bloom_bits > 64 || !std::has_single_bit(cfg.bloom_bits)) {
    fail("bloom bits must be a power of two in [1, 64]");
  }
  if (cfg.input.empty() == !cfg.rmat.has_value()) fail("exactly one of an input file or R-MAT parameters is required");
  if (!cfg.input.empty() && !std::filesystem::is_regular_file(cfg.input)) fail("input file '" + cfg.input + "' not found");
  if (cfg.rmat && (cfg.rmat->scale < 1 || cfg.rmat->scale > 24)) fail("R-MAT scale must be in [1, 24]");
  if (cfg.rmat && cfg.rmat->edge_factor < 1) fail("R-MAT edge factor must be >= 1");
  if (std::find(semiring_names().begin(), semiring_names().end(), cfg.semiring) == semiring_names().end()) {
    fail("unknown semiring '" + cfg.semiring + "'");
  }
}

/**
 * Runs one experiment on q*q simulated ranks.
 *
 * The adjacency matrix is read or generated, symmetrized, deduplicated and
 * relabelled by a seeded vertex permutation. Its non-zeros are shuffled once
 * by the seed; batch b consists of the next q*q*batch_size draws, each rank
 * inserting its contiguous share. The same total draw volume therefore gives
 * the same final matrices on every grid size.
 *
 * Experiments on products keep B as the full adjacency matrix and grow A'
 * from empty. When the output estimate is within the verification cap, every
 * batch is checked against a static SUMMA recomputation.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.semiring == PlusTimesI64::name) return detail::run_typed<PlusTimesI64>(cfg);
  if (cfg.semiring == PlusTimesF64::name) return detail::run_typed<PlusTimesF64>(cfg);
  if (cfg.semiring == MinPlus::name) return detail::run_typed<MinPlus>(cfg);
  return detail::run_typed<BoolOrAnd>(cfg);
}

}  // namespace dynspgemm::bench
