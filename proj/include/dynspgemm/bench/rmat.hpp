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

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "dynspgemm/redistribute.hpp"

namespace dynspgemm::bench {

struct RmatParams {
  unsigned scale = 10;
  unsigned edge_factor = 16;
};

/// Graph500 quadrant probabilities (a, b, c, d).
inline constexpr std::array<double, 4> graph500_probabilities = {0.57, 0.19, 0.19, 0.05};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/**
 * R-MAT generator: edge_factor * 2^scale directed edges over 2^scale
 * vertices. Each edge descends `scale` levels, picking a quadrant with the
 * Graph500 probabilities at every level. Duplicates and self-loops are kept.
 */
template <class V>
std::vector<UpdateTuple<V>> rmat_generate(RmatParams params, std::uint64_t seed, V value) {
  dynspgemm::detail::require(params.scale >= 1 && params.scale <= 31, "R-MAT scale must be in [1, 31]");
  const double a = graph500_probabilities[0];
  const double ab = a + graph500_probabilities[1];
  const double abc = ab + graph500_probabilities[2];
  std::mt19937_64 rng(seed);
  const std::uint64_t edges = std::uint64_t{params.edge_factor} << params.scale;
  std::vector<UpdateTuple<V>> out;
  out.reserve(edges);
  for (std::uint64_t e = 0; e < edges; ++e) {
    global_index row = 0;
    global_index col = 0;
    for (unsigned level = 0; level < params.scale; ++level) {
      const double u = unit_double(rng);
      row <<= 1;
      col <<= 1;
      if (u >= abc) {
        row |= 1;
        col |= 1;
      } else if (u >= ab) {
        row |= 1;
      } else if (u >= a) {
        col |= 1;
      }
    }
    out.push_back(UpdateTuple<V>::upsert(row, col, value));
  }
  return out;
}

}  // namespace dynspgemm::bench
