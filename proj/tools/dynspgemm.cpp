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

// Command-line driver for the dynamic SpGEMM experiments.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "dynspgemm/bench/csv.hpp"
#include "dynspgemm/bench/experiment.hpp"

namespace {

using namespace dynspgemm::bench;

constexpr int exit_config = 2;
constexpr int exit_mismatch = 3;
constexpr int exit_resource = 4;

/// Parses "scale=S,ef=E" (either key may be omitted).
RmatParams parse_rmat(const std::string& text) {
  RmatParams p;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--rmat expects key=value pairs, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    unsigned value = 0;
    try {
      std::size_t used = 0;
      value = static_cast<unsigned>(std::stoul(item.substr(eq + 1), &used));
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--rmat value for '" + key + "' is not a number");
    }
    if (key == "scale") {
      p.scale = value;
    } else if (key == "ef") {
      p.edge_factor = value;
    } else {
      throw ConfigError("--rmat accepts scale= and ef=, got '" + key + "'");
    }
    pos = comma + 1;
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch-dynamic distributed SpGEMM experiments on a simulated process grid"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string rmat_spec;
  std::string out_path;
  std::string semiring;

  const std::map<std::string, std::string> descriptions = {
      {"construct", "build a fresh dynamic matrix from each batch"},
      {"insert", "insert batches into an initially empty matrix"},
      {"update", "overwrite values of existing non-zeros"},
      {"delete", "delete existing non-zeros"},
      {"spgemm-algebraic", "maintain C = A'B under algebraic insertions into A'"},
      {"spgemm-general", "maintain C = A'B under general updates (min-plus by default)"},
      {"spgemm-static", "recompute C = A'B with static SUMMA after every batch"},
  };
  for (const auto& [name, help] : descriptions) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* input = sub->add_option("--input", cfg.input, "graph file (edge list, or Matrix Market *.mtx)");
    auto* rmat = sub->add_option("--rmat", rmat_spec, "generate an R-MAT graph, e.g. scale=14,ef=16");
    input->excludes(rmat);
    sub->add_option("--semiring", semiring, "plus-times-i64 | plus-times-f64 | min-plus | bool");
    sub->add_option("--grid", cfg.q, "grid side q; q*q ranks are simulated")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "shared-memory workers per rank")->capture_default_str();
    sub->add_option("--batch-size", cfg.batch_size, "updates per rank and batch")->capture_default_str();
    sub->add_option("--batches", cfg.batches, "number of batches")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "seed for generation, permutation and sampling")->capture_default_str();
    sub->add_option("--bloom-bits", cfg.bloom_bits, "Bloom filter width per output entry")->capture_default_str();
    sub->add_option("--verify-cap", cfg.verify_cap, "verify every batch when the output estimate is at most this")
        ->capture_default_str();
    sub->add_option("--max-output", cfg.output_cap, "refuse runs whose output estimate exceeds this")->capture_default_str();
    sub->add_option("--out", out_path, "metrics CSV path (stdout when omitted)");
    sub->add_flag("--random-values", cfg.random_values, "insert random small integers instead of the semiring one");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    cfg.experiment = *parse_experiment(name);
    cfg.semiring = !semiring.empty()                                        ? semiring
                   : cfg.experiment == ExperimentKind::spgemm_general ? std::string(dynspgemm::MinPlus::name)
                                                                           : std::string(dynspgemm::PlusTimesI64::name);
    if (!rmat_spec.empty()) cfg.rmat = parse_rmat(rmat_spec);

    const ExperimentResult res = run_experiment(cfg);
    if (out_path.empty()) {
      write_csv(res.records, std::cout);
    } else {
      emit_csv(res.records, out_path);
    }
    std::fprintf(stderr, "experiment=%s q=%d seed=%llu checksum=%llu:%s verified_batches=%d output_estimate=%llu\n",
                 name.c_str(), cfg.q, static_cast<unsigned long long>(cfg.seed),
                 static_cast<unsigned long long>(res.checksum.count), res.checksum.hex().c_str(), res.batches_verified,
                 static_cast<unsigned long long>(res.output_estimate));
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return exit_config;
  } catch (const VerificationError& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return exit_mismatch;
  } catch (const ResourceCapError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return exit_resource;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
