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

// Counts two-hop paths of an R-MAT graph under MPI while edges arrive in
// batches, and checks the maintained product against a static recompute.
//
//   mpirun -n 4 ./mpi_rmat_updates [scale] [batches]
//
// The rank count must be a perfect square.

#include <mpi.h>

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "dynspgemm.hpp"
#include "dynspgemm/bench/rmat.hpp"
#include "dynspgemm/mpi_backend.hpp"

using namespace dynspgemm;

int main(int argc, char** argv) {
  MPI_Init(&argc, &argv);
  int status = 0;
  try {
    const unsigned scale = argc > 1 ? static_cast<unsigned>(std::atoi(argv[1])) : 12;
    const int batches = argc > 2 ? std::atoi(argv[2]) : 4;

    MpiPointToPoint backend;
    Communicator comm(backend, ProcessGrid::square(backend.size()));
    const int p = comm.size();
    const global_index n = global_index{1} << scale;
    const BlockPartition part(n, n, comm.grid().side());
    const GridCoord me = comm.coord();

    // Every rank generates the same edge stream and keeps a strided share of it.
    const auto edges = bench::rmat_generate<std::int64_t>({scale, 8}, 42, 1);
    std::vector<std::vector<UpdateTuple<std::int64_t>>> stream(batches + 1);
    for (std::size_t e = static_cast<std::size_t>(comm.rank()); e < edges.size(); e += static_cast<std::size_t>(p)) {
      // Half the edges form the initial graph; the rest arrive in batches.
      const std::size_t slot = e % 2 == 0 ? 0 : 1 + (e / 2) % static_cast<std::size_t>(batches);
      stream[slot].push_back(edges[e]);
    }

    auto g = build_primary<PlusTimesI64>(comm, part, std::span<const UpdateTuple<std::int64_t>>(stream[0]),
                                         ApplyMode::additive);
    auto state = spgemm_algebraic_init<PlusTimesI64>(comm, g, g);
    for (int b = 1; b <= batches; ++b) {
      const auto owned = redistribute_updates(comm, part, std::span<const UpdateTuple<std::int64_t>>(stream[b]));
      const std::span<const UpdateTuple<std::int64_t>> owned_span(owned);
      const auto g_star = owned_update_matrix<PlusTimesI64>(part, me, owned_span);
      auto g_next = g;
      apply_batch<PlusTimesI64>(g_next.block(), part, me, owned_span, ApplyMode::additive);
      spgemm_algebraic_update(comm, state, g, g_star, g_next, g_star);
      g = std::move(g_next);
    }

    const auto recomputed = summa_static<PlusTimesI64>(comm, g, g);
    unsigned long long local[2] = {state.c.block().nnz(), same_entries(state.c.block(), recomputed.block()) ? 0ull : 1ull};
    unsigned long long total[2] = {0, 0};
    MPI_Reduce(local, total, 2, MPI_UNSIGNED_LONG_LONG, MPI_SUM, 0, MPI_COMM_WORLD);
    const auto& c = comm.counters();
    if (comm.rank() == 0) {
      std::printf("ranks=%d scale=%u batches=%d nnz(C)=%llu mismatched_blocks=%llu rank0_broadcast_bytes=%llu\n", p, scale,
                  batches, total[0], total[1], static_cast<unsigned long long>(c.bytes_broadcast));
    }
    status = total[1] == 0 ? 0 : 3;
    MPI_Bcast(&status, 1, MPI_INT, 0, MPI_COMM_WORLD);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    MPI_Abort(MPI_COMM_WORLD, 1);
  }
  MPI_Finalize();
  return status;
}
