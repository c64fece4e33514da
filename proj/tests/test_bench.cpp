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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dynspgemm/bench/csv.hpp"
#include "dynspgemm/bench/experiment.hpp"
#include "dynspgemm/bench/graph_io.hpp"
#include "dynspgemm/bench/rmat.hpp"

namespace {

using namespace dynspgemm;
using namespace dynspgemm::bench;
namespace fs = std::filesystem;

/// File under the system temp directory, removed on destruction.
class TempFile {
 public:
  TempFile(const std::string& name, const std::string& contents)
      : path_(fs::temp_directory_path() / ("dynspgemm_test_" + std::to_string(::getpid()) + "_" + name)) {
    std::ofstream(path_) << contents;
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

using Edge = std::pair<global_index, global_index>;

std::multiset<Edge> edges_of(const EdgeData<std::int64_t>& g) {
  std::multiset<Edge> s;
  for (const auto& t : g.tuples) {
    EXPECT_EQ(t.kind, UpdateKind::upsert);
    EXPECT_EQ(t.value, 1);
    s.emplace(t.row, t.col);
  }
  return s;
}

// An 8-vertex graph with 12 undirected edges, including one self-loop.
constexpr const char* toy_graph =
    "# toy graph\n0 1\n0 2\n1 2\n1 3\n2 4\n3 4\n3 5\n4 6\n5 6\n5 7\n6 7\n7 7\n";

TEST(Rmat, ScaleOneStaysInRange) {
  const auto t = rmat_generate<std::int64_t>({1, 1}, 3, 1);
  ASSERT_EQ(t.size(), 2u);
  for (const auto& e : t) {
    EXPECT_LE(e.row, 1u);
    EXPECT_LE(e.col, 1u);
  }
}

TEST(Rmat, DeterministicPerSeed) {
  EXPECT_EQ(rmat_generate<std::int64_t>({8, 4}, 42, 1), rmat_generate<std::int64_t>({8, 4}, 42, 1));
  EXPECT_NE(rmat_generate<std::int64_t>({8, 4}, 42, 1), rmat_generate<std::int64_t>({8, 4}, 43, 1));
}

TEST(Rmat, QuadrantFrequenciesFollowGraph500) {
  const auto t = rmat_generate<std::int64_t>({10, 16}, 7, 1);
  ASSERT_EQ(t.size(), 16384u);
  const global_index half = 512;
  double counts[4] = {0, 0, 0, 0};
  for (const auto& e : t) counts[(e.row >= half ? 2 : 0) + (e.col >= half ? 1 : 0)] += 1;
  for (int k = 0; k < 4; ++k) {
    const double freq = counts[k] / t.size();
    EXPECT_NEAR(freq, graph500_probabilities[k], 0.05 * graph500_probabilities[k]) << "quadrant " << k;
  }
}

TEST(LoadEdges, SingleEdgeIsSymmetrized) {
  TempFile f("one.el", "0 1\n");
  const auto g = load_edges<std::int64_t>(f.path(), GraphFormat::edge_list, 1);
  EXPECT_EQ(edges_of(g), (std::multiset<Edge>{{0, 1}, {1, 0}}));
  EXPECT_EQ(g.n_rows, 2u);
}

TEST(LoadEdges, SelfLoopEmittedOnce) {
  TempFile f("loop.el", "2 2\n");
  const auto g = load_edges<std::int64_t>(f.path(), GraphFormat::edge_list, 1);
  EXPECT_EQ(edges_of(g), (std::multiset<Edge>{{2, 2}}));
  EXPECT_EQ(g.n_rows, 3u);
}

TEST(LoadEdges, TriangleGivesSixTuples) {
  TempFile f("tri.el", "% comment\n0 1\n1 2\n\n2 0\n");
  const auto g = load_edges<std::int64_t>(f.path(), GraphFormat::edge_list, 1);
  EXPECT_EQ(g.tuples.size(), 6u);
  EXPECT_GE(g.n_rows, 3u);
  EXPECT_EQ(g.n_rows, g.n_cols);
}

TEST(LoadEdges, MatrixMarketGeneralAndSymmetric) {
  TempFile general("g.mtx", "%%MatrixMarket matrix coordinate real general\n% c\n3 4 2\n1 2 0.5\n3 4 -1\n");
  const auto g = load_edges<std::int64_t>(general.path(), detect_format(general.path()), 1);
  EXPECT_EQ(edges_of(g), (std::multiset<Edge>{{0, 1}, {1, 0}, {2, 3}, {3, 2}}));
  EXPECT_EQ(g.n_rows, 4u);
  EXPECT_EQ(g.n_cols, 4u);

  TempFile sym("s.mtx", "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 3\n");
  const auto s = load_edges<std::int64_t>(sym.path(), GraphFormat::matrix_market, 1);
  EXPECT_EQ(edges_of(s), (std::multiset<Edge>{{1, 0}, {0, 1}, {2, 2}}));
}

TEST(LoadEdges, ParseErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& name, const std::string& text) -> std::size_t {
    TempFile f(name, text);
    try {
      load_edges<std::int64_t>(f.path(), detect_format(f.path()), 1);
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(f.path()), std::string::npos);
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("bad.el", "0 1\n1 x\n"), 2u);
  EXPECT_EQ(line_of("short.el", "# h\n0 1\n\n7\n"), 4u);
  EXPECT_EQ(line_of("banner.mtx", "hello\n1 1 0\n"), 1u);
  EXPECT_EQ(line_of("array.mtx", "%%MatrixMarket matrix array real general\n1 1\n"), 1u);
  EXPECT_EQ(line_of("range.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"), 3u);
  EXPECT_EQ(line_of("count.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n"), 3u);
  EXPECT_EQ(line_of("extra.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n"), 4u);
}

TEST(LoadEdges, FormatDetection) {
  EXPECT_EQ(detect_format("graph.mtx"), GraphFormat::matrix_market);
  EXPECT_EQ(detect_format("graph.txt"), GraphFormat::edge_list);
  EXPECT_EQ(detect_format("mtx"), GraphFormat::edge_list);
}

ExperimentConfig toy_config(const std::string& path, ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.input = path;
  cfg.batch_size = 3;
  cfg.batches = 4;
  cfg.seed = 11;
  return cfg;
}

TEST(RunExperiment, ZeroBatchSizeKeepsInitialProduct) {
  TempFile f("toy0.el", toy_graph);
  for (ExperimentKind kind : {ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general, ExperimentKind::insert}) {
    auto cfg = toy_config(f.path(), kind);
    cfg.batch_size = 0;
    const auto res = run_experiment(cfg);
    // A' starts empty, so the initial product and the inserted matrix are both empty.
    EXPECT_EQ(res.checksum.count, 0u);
    EXPECT_EQ(res.records.size(), 4u);
    for (const auto& r : res.records) EXPECT_EQ(r.nnz_update, 0u);
  }
  auto cfg = toy_config(f.path(), ExperimentKind::update);
  cfg.batch_size = 0;
  const auto full = run_experiment(cfg);
  cfg.batches = 0;
  EXPECT_EQ(run_experiment(cfg).checksum, full.checksum);
  EXPECT_EQ(full.checksum.count, 23u);
}

TEST(RunExperiment, ToyGraphIsGridIndependent) {
  TempFile f("toy1.el", toy_graph);
  for (ExperimentKind kind : {ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general, ExperimentKind::spgemm_static,
                              ExperimentKind::insert, ExperimentKind::erase}) {
    // Enough volume to consume the whole graph on either grid.
    auto cfg = toy_config(f.path(), kind);
    cfg.batch_size = 32;
    cfg.batches = 2;
    cfg.q = 1;
    const auto one = run_experiment(cfg);
    cfg.q = 2;
    const auto four = run_experiment(cfg);
    EXPECT_EQ(one.checksum, four.checksum) << experiment_name(kind);
  }
}

TEST(RunExperiment, EqualVolumeGivesEqualChecksumsAcrossGrids) {
  for (ExperimentKind kind : {ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general, ExperimentKind::update}) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.rmat = RmatParams{7, 4};
    cfg.batches = 3;
    cfg.seed = 5;
    cfg.random_values = true;
    if (kind == ExperimentKind::spgemm_general) cfg.semiring = "min-plus";
    std::set<std::pair<std::uint64_t, std::uint64_t>> sums;
    for (int q : {1, 2, 4}) {
      cfg.q = q;
      cfg.batch_size = 64 / (q * q);
      const auto res = run_experiment(cfg);
      sums.emplace(res.checksum.count, res.checksum.hash);
      if (is_spgemm(kind)) {
        EXPECT_EQ(res.batches_verified, 3);
      }
    }
    EXPECT_EQ(sums.size(), 1u) << experiment_name(kind);
  }
}

TEST(RunExperiment, AlgebraicAndStaticAgreeAndVerifyEveryBatch) {
  ExperimentConfig cfg;
  cfg.rmat = RmatParams{8, 2};  // 512 directed edges, about 1000 symmetric non-zeros
  cfg.q = 2;
  cfg.batch_size = 40;
  cfg.batches = 5;
  cfg.seed = 9;
  for (const char* semiring : {"plus-times-i64", "plus-times-f64", "min-plus", "bool"}) {
    cfg.semiring = semiring;
    cfg.experiment = ExperimentKind::spgemm_algebraic;
    const auto alg = run_experiment(cfg);
    EXPECT_EQ(alg.batches_verified, 5) << semiring;
    cfg.experiment = ExperimentKind::spgemm_static;
    EXPECT_EQ(run_experiment(cfg).checksum, alg.checksum) << semiring;
    cfg.experiment = ExperimentKind::spgemm_general;
    const auto gen = run_experiment(cfg);
    EXPECT_EQ(gen.batches_verified, 5) << semiring;
    EXPECT_EQ(gen.checksum, alg.checksum) << semiring;
  }
}

TEST(RunExperiment, RecordsDescribeEachBatch) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::spgemm_general;
  cfg.semiring = "min-plus";
  cfg.rmat = RmatParams{7, 4};
  cfg.q = 2;
  cfg.workers = 2;
  cfg.batch_size = 10;
  cfg.batches = 3;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.records.size(), 3u);
  std::uint64_t inserted = 0;
  for (int b = 0; b < 3; ++b) {
    const auto& r = res.records[b];
    EXPECT_EQ(r.batch_idx, b);
    EXPECT_EQ(r.experiment, "spgemm-general");
    EXPECT_EQ(r.q, 2);
    EXPECT_EQ(r.workers, 2);
    EXPECT_EQ(r.nnz_update, 40u);
    inserted += r.nnz_update;
    EXPECT_EQ(r.nnz_a, inserted);
    EXPECT_GT(r.nnz_b, 0u);
    EXPECT_LE(r.nnz_ar, r.nnz_a);
    double phase_sum = 0;
    for (double s : r.phases.seconds) phase_sum += s;
    EXPECT_LE(phase_sum, r.batch_seconds + 1e-9);
    EXPECT_GT(r.phases.volume(Phase::broadcast), 0u);
    EXPECT_GT(r.phases.volume(Phase::redistribute), 0u);
  }
}

TEST(RunExperiment, DeleteEmptiesMatrixAfterEnoughBatches) {
  TempFile f("toy2.el", toy_graph);
  auto cfg = toy_config(f.path(), ExperimentKind::erase);
  cfg.batch_size = 6;
  cfg.batches = 4;
  EXPECT_EQ(run_experiment(cfg).checksum.count, 0u);
  cfg.experiment = ExperimentKind::construct;
  cfg.batches = 1;
  EXPECT_EQ(run_experiment(cfg).checksum.count, 6u);
}

TEST(RunExperiment, ResourceCapRefusesLargeOutputs) {
  TempFile f("toy3.el", toy_graph);
  auto cfg = toy_config(f.path(), ExperimentKind::spgemm_algebraic);
  cfg.output_cap = 10;
  EXPECT_THROW(run_experiment(cfg), ResourceCapError);
  cfg.experiment = ExperimentKind::insert;
  EXPECT_NO_THROW(run_experiment(cfg));
}

TEST(RunExperiment, VerificationCapDisablesChecks) {
  TempFile f("toy4.el", toy_graph);
  auto cfg = toy_config(f.path(), ExperimentKind::spgemm_algebraic);
  EXPECT_EQ(run_experiment(cfg).batches_verified, 4);
  cfg.verify_cap = 0;
  EXPECT_EQ(run_experiment(cfg).batches_verified, 0);
}

TEST(RunExperiment, ConfigValidation) {
  TempFile f("toy5.el", toy_graph);
  const auto ok = toy_config(f.path(), ExperimentKind::insert);
  EXPECT_NO_THROW(validate_config(ok));
  auto bad = ok;
  bad.q = 0;
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad = ok;
  bad.semiring = "max-times";
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad = ok;
  bad.bloom_bits = 12;
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad = ok;
  bad.rmat = RmatParams{};
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad = ok;
  bad.input = f.path() + ".missing";
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad = ok;
  bad.input.clear();
  bad.rmat = RmatParams{30, 16};
  EXPECT_THROW(run_experiment(bad), ConfigError);
  bad.rmat = RmatParams{};
  EXPECT_NO_THROW(validate_config(bad));
}

TEST(RunExperiment, ExperimentNamesRoundTrip) {
  for (ExperimentKind k : {ExperimentKind::construct, ExperimentKind::insert, ExperimentKind::update, ExperimentKind::erase,
                           ExperimentKind::spgemm_algebraic, ExperimentKind::spgemm_general, ExperimentKind::spgemm_static}) {
    EXPECT_EQ(parse_experiment(experiment_name(k)), k);
  }
  EXPECT_EQ(experiment_name(ExperimentKind::erase), "delete");
  EXPECT_FALSE(parse_experiment("erase").has_value());
}

MetricsRecord sample_record(int idx) {
  MetricsRecord r;
  r.experiment = "spgemm-general";
  r.seed = 77;
  r.q = 4;
  r.workers = 2;
  r.batch_size = 1024;
  r.batch_idx = idx;
  for (Phase p : all_phases) {
    r.phases.time(p) = 0.1 * static_cast<int>(p) + 1.0 / 3.0 + idx;
    r.phases.volume(p) = 1000u * static_cast<unsigned>(p) + idx;
  }
  r.batch_seconds = 2.0 / 7.0;
  r.nnz_a = 10;
  r.nnz_b = 20;
  r.nnz_update = 30;
  r.nnz_c = 40;
  r.nnz_ar = 5;
  return r;
}

TEST(Csv, EmptyRecordsGiveHeaderOnly) {
  std::ostringstream out;
  write_csv({}, out);
  EXPECT_EQ(out.str(), std::string(csv_header) + "\n");
}

TEST(Csv, OneRecordGivesSixPhaseRows) {
  std::ostringstream out;
  write_csv({sample_record(0)}, out);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 7u);
  for (std::size_t k = 0; k < all_phases.size(); ++k) {
    EXPECT_NE(lines[k + 1].find("," + std::string(phase_name(all_phases[k])) + ","), std::string::npos);
  }
}

TEST(Csv, RoundTripRecoversRecords) {
  const std::vector<MetricsRecord> recs{sample_record(0), sample_record(1), sample_record(2)};
  std::stringstream buf;
  write_csv(recs, buf);
  EXPECT_EQ(read_csv(buf), recs);

  TempFile f("metrics.csv", "");
  emit_csv(recs, f.path());
  EXPECT_EQ(read_csv(f.path()), recs);
}

TEST(Csv, ReportsPathOnFailure) {
  const std::string bad = "/nonexistent-dir/for/sure/metrics.csv";
  try {
    emit_csv({sample_record(0)}, bad);
    FAIL() << "expected an exception";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
}

std::string without_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    cells.at(7).clear();
    cells.at(9).clear();
    for (const auto& c : cells) out += c + ",";
    out += "\n";
  }
  return out;
}

TEST(Replay, SameSeedGivesIdenticalCsvApartFromTimes) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::spgemm_algebraic;
  cfg.rmat = RmatParams{8, 4};
  cfg.q = 2;
  cfg.batch_size = 25;
  cfg.batches = 3;
  cfg.seed = 21;
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  std::ostringstream ca, cb;
  write_csv(a.records, ca);
  write_csv(b.records, cb);
  EXPECT_EQ(without_seconds(ca.str()), without_seconds(cb.str()));
  EXPECT_EQ(a.checksum, b.checksum);
  EXPECT_EQ(a.counters, b.counters);
  cfg.seed = 22;
  EXPECT_NE(run_experiment(cfg).checksum, a.checksum);
}

}  // namespace
