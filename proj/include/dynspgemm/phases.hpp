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
#include <chrono>
#include <string_view>

#include "dynspgemm/transport.hpp"

namespace dynspgemm {

enum class Phase { redistribute, transpose_exchange, broadcast, local_multiply, aggregate, merge };

inline constexpr std::array<Phase, 6> all_phases = {Phase::redistribute, Phase::transpose_exchange, Phase::broadcast,
                                                    Phase::local_multiply, Phase::aggregate, Phase::merge};

constexpr std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::redistribute: return "redistribute";
    case Phase::transpose_exchange: return "transpose-exchange";
    case Phase::broadcast: return "broadcast";
    case Phase::local_multiply: return "local-multiply";
    case Phase::aggregate: return "aggregate";
    case Phase::merge: return "merge";
  }
  return "?";
}

struct PhaseTotals {
  std::array<double, 6> seconds{};
  std::array<std::uint64_t, 6> bytes{};

  double& time(Phase p) { return seconds[static_cast<std::size_t>(p)]; }
  double time(Phase p) const { return seconds[static_cast<std::size_t>(p)]; }
  std::uint64_t& volume(Phase p) { return bytes[static_cast<std::size_t>(p)]; }
  std::uint64_t volume(Phase p) const { return bytes[static_cast<std::size_t>(p)]; }

  friend bool operator==(const PhaseTotals&, const PhaseTotals&) = default;
};

/**
 * Per-rank accumulator of wall time and transport bytes per phase. With
 * `synchronize` set, every measured phase is bracketed by barriers so that
 * the time of the slowest rank is attributed to the phase that caused it.
 */
class PhaseRecorder {
 public:
  PhaseRecorder(Communicator& comm, bool synchronize) : comm_(&comm), sync_(synchronize) {}

  template <class Fn>
  decltype(auto) measure(Phase p, Fn&& fn) {
    if (sync_) comm_->barrier();
    const std::uint64_t bytes0 = comm_->counters().bytes_total();
    const auto t0 = std::chrono::steady_clock::now();
    struct Finish {
      PhaseRecorder* self;
      Phase p;
      std::uint64_t bytes0;
      std::chrono::steady_clock::time_point t0;
      ~Finish() {
        if (self->sync_ && std::uncaught_exceptions() == 0) self->comm_->barrier();
        self->totals_.time(p) += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        self->totals_.volume(p) += self->comm_->counters().bytes_total() - bytes0;
      }
    } finish{this, p, bytes0, t0};
    return fn();
  }

  const PhaseTotals& totals() const noexcept { return totals_; }
  void reset() { totals_ = {}; }

 private:
  Communicator* comm_;
  bool sync_;
  PhaseTotals totals_;
};

namespace detail {

/// Runs fn, attributing it to phase p when a recorder is attached.
template <class Fn>
decltype(auto) timed(PhaseRecorder* rec, Phase p, Fn&& fn) {
  if (rec == nullptr) return fn();
  return rec->measure(p, std::forward<Fn>(fn));
}

}  // namespace detail

}  // namespace dynspgemm
