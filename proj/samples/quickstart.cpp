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

// Two-hop shortest paths on a small weighted graph, kept current under edge
// changes. Runs on a simulated 2x2 process grid.

#include <array>
#include <cstdio>
#include <map>
#include <mutex>
#include <vector>

#include "dynspgemm.hpp"

using namespace dynspgemm;

namespace {

using Edge = UpdateTuple<double>;
using Snapshot = std::map<std::pair<global_index, global_index>, double>;

/// Copies this rank's block of C into a global snapshot.
void collect(const DynamicMatrix<double>& c, Snapshot& out, std::mutex& m) {
  std::lock_guard lock(m);
  c.block().for_each([&](local_index r, local_index col, double v) { out[{c.row_offset() + r, c.col_offset() + col}] = v; });
}

}  // namespace

int main() {
  constexpr global_index n = 6;
  const BlockPartition part(n, n, 2);
  const std::vector<Edge> graph = {Edge::upsert(0, 1, 4), Edge::upsert(1, 2, 1), Edge::upsert(0, 3, 1),
                                   Edge::upsert(3, 2, 7), Edge::upsert(2, 4, 2), Edge::upsert(4, 5, 3)};
  // Lowering a weight is an algebraic change under min.
  const std::vector<Edge> cheaper = {Edge::upsert(3, 2, 1)};
  // Raising a weight and deleting an edge need the general update.
  const std::vector<Edge> general = {Edge::upsert(3, 2, 9), Edge::erase(2, 4)};

  std::array<Snapshot, 3> snapshots;
  std::mutex m;
  Simulator sim(4);
  sim.run([&](Communicator& comm) {
    const GridCoord me = comm.coord();
    // Rank 0 holds the input; redistribution moves every edge to its owner.
    auto from_root = [&](const std::vector<Edge>& e) {
      const std::vector<Edge> mine = comm.rank() == 0 ? e : std::vector<Edge>{};
      return redistribute_updates(comm, part, std::span<const Edge>(mine));
    };

    auto g = DynamicMatrix<double>::empty(part, me, MatrixRole::primary);
    apply_batch<MinPlus>(g.block(), part, me, std::span<const Edge>(from_root(graph)), ApplyMode::overwrite);
    auto state = spgemm_algebraic_init<MinPlus>(comm, g, g);
    collect(state.c, snapshots[0], m);

    // C' = C + G* G' + G G*, with G* carrying the lowered weights.
    const auto lowered = from_root(cheaper);
    const auto g_star = owned_update_matrix<MinPlus>(part, me, std::span<const Edge>(lowered));
    auto g_next = g;
    apply_batch<MinPlus>(g_next.block(), part, me, std::span<const Edge>(lowered), ApplyMode::additive);
    spgemm_algebraic_update(comm, state, g, g_star, g_next, g_star);
    g = g_next;
    collect(state.c, snapshots[1], m);

    // The general update needs a current Bloom matrix, so start from a fresh one.
    state = spgemm_algebraic_init<MinPlus>(comm, g, g);
    const auto changed = from_root(general);
    const auto mask = owned_change_mask(part, me, std::span<const Edge>(changed));
    g_next = g;
    apply_batch<MinPlus>(g_next.block(), part, me, std::span<const Edge>(changed), ApplyMode::overwrite);
    spgemm_general_update(comm, state, g_next, mask, g_next, mask, g, g);
    collect(state.c, snapshots[2], m);
  });

  const char* titles[] = {"initial", "after lowering 3->2 to 1", "after raising 3->2 to 9 and deleting 2->4"};
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    std::printf("two-hop distances, %s:\n", titles[s]);
    for (const auto& [pos, v] : snapshots[s]) {
      std::printf("  %llu -> %llu: %g\n", static_cast<unsigned long long>(pos.first),
                  static_cast<unsigned long long>(pos.second), v);
    }
  }
  return 0;
}
