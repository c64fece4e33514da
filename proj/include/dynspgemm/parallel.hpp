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
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "dynspgemm/types.hpp"

namespace dynspgemm {

/// Runs fn(worker) for worker in [0, workers); worker 0 runs on the calling thread.
template <class Fn>
void run_workers(int workers, Fn&& fn) {
  detail::require(workers >= 1, "worker count must be >= 1");
  if (workers == 1) {
    fn(0);
    return;
  }
  std::exception_ptr error;
  std::mutex m;
  auto guarded = [&](int w) {
    try {
      fn(w);
    } catch (...) {
      std::lock_guard lock(m);
      if (!error) error = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(guarded, w);
    guarded(0);
  }
  if (error) std::rethrow_exception(error);
}

/// [begin, end) of chunk w when n items are split into `workers` contiguous chunks.
inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t n, int workers, int w) {
  const std::size_t base = n / workers;
  const std::size_t extra = n % workers;
  const std::size_t uw = static_cast<std::size_t>(w);
  const std::size_t begin = uw * base + std::min(uw, extra);
  return {begin, begin + base + (uw < extra ? 1 : 0)};
}

}  // namespace dynspgemm
