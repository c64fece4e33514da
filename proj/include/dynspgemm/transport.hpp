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
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dynspgemm/grid.hpp"
#include "dynspgemm/types.hpp"

namespace dynspgemm {

/**
 * Reliable, ordered point-to-point channel between ranks. This is the only
 * thing a message-passing runtime has to provide; every collective of
 * Communicator is built on top of it.
 */
class PointToPoint {
 public:
  virtual ~PointToPoint() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  virtual void send(int dest, Bytes payload) = 0;
  virtual Bytes recv(int src) = 0;
};

/// Raised on every rank of a simulation in which all live ranks block in recv.
class DeadlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-rank traffic counters. All fields are monotone.
struct TransportCounters {
  std::uint64_t bytes_p2p = 0;
  std::uint64_t bytes_broadcast = 0;
  std::uint64_t bytes_alltoall = 0;
  std::uint64_t bytes_aggregate = 0;
  /// Data collectives (broadcast, all-to-all, aggregation) entered.
  std::uint64_t collective_rounds = 0;
  std::uint64_t p2p_calls = 0;
  std::uint64_t broadcast_calls = 0;
  std::uint64_t alltoall_calls = 0;
  std::uint64_t aggregate_calls = 0;
  std::uint64_t barrier_calls = 0;
  /// Largest number of distinct peers addressed by a single all-to-all.
  std::uint64_t alltoall_peers_max = 0;

  std::uint64_t bytes_total() const noexcept { return bytes_p2p + bytes_broadcast + bytes_alltoall + bytes_aggregate; }

  friend bool operator==(const TransportCounters&, const TransportCounters&) = default;
};

inline TransportCounters operator-(const TransportCounters& a, const TransportCounters& b) {
  TransportCounters d;
  d.bytes_p2p = a.bytes_p2p - b.bytes_p2p;
  d.bytes_broadcast = a.bytes_broadcast - b.bytes_broadcast;
  d.bytes_alltoall = a.bytes_alltoall - b.bytes_alltoall;
  d.bytes_aggregate = a.bytes_aggregate - b.bytes_aggregate;
  d.collective_rounds = a.collective_rounds - b.collective_rounds;
  d.p2p_calls = a.p2p_calls - b.p2p_calls;
  d.broadcast_calls = a.broadcast_calls - b.broadcast_calls;
  d.alltoall_calls = a.alltoall_calls - b.alltoall_calls;
  d.aggregate_calls = a.aggregate_calls - b.aggregate_calls;
  d.barrier_calls = a.barrier_calls - b.barrier_calls;
  d.alltoall_peers_max = a.alltoall_peers_max;
  return d;
}

/// Which subgroup a collective runs over: the ranks of my grid row or my grid column.
enum class Axis { row, col };

/// Traffic class a hop is charged to.
enum class Traffic { p2p, broadcast, alltoall, aggregate, control };

/**
 * Per-rank endpoint of the 2D grid. Confined to its rank's execution context.
 *
 * Byte accounting: a broadcast charges its payload once to the root and once
 * to every receiver, regardless of the tree shape used to forward it. Every
 * other hop charges its payload to both sender and receiver. Self-messages are
 * local copies and are never charged.
 */
class Communicator {
 public:
  Communicator(PointToPoint& backend, ProcessGrid grid) : backend_(&backend), grid_(grid) {
    detail::require(grid.size() == backend.size(), "grid size does not match backend rank count");
    coord_ = grid_.coord_of(backend.rank());
  }

  int rank() const { return backend_->rank(); }
  int size() const { return backend_->size(); }
  const ProcessGrid& grid() const noexcept { return grid_; }
  int side() const noexcept { return grid_.side(); }
  GridCoord coord() const noexcept { return coord_; }
  int transpose_rank() const { return grid_.transpose_rank(rank()); }

  /// My position inside the row or column group.
  int group_index(Axis axis) const noexcept { return axis == Axis::row ? coord_.col : coord_.row; }
  /// Global rank of member `idx` of my row or column group.
  int group_member(Axis axis, int idx) const {
    return axis == Axis::row ? grid_.rank_of({coord_.row, idx}) : grid_.rank_of({idx, coord_.col});
  }

  const TransportCounters& counters() const noexcept { return counters_; }

  // -- point-to-point ------------------------------------------------------

  void send_block(int dest, Bytes payload) {
    ++counters_.p2p_calls;
    hop_send(dest, std::move(payload), Traffic::p2p);
  }

  Bytes recv_block(int src) { return hop_recv(src, Traffic::p2p); }

  /// Sends to `peer` and receives from it; a self-exchange is a local copy.
  Bytes exchange(int peer, Bytes payload) {
    send_block(peer, std::move(payload));
    return recv_block(peer);
  }

  // -- collectives ---------------------------------------------------------

  /// Binomial-tree broadcast from group member `root` over my row or column.
  Bytes broadcast(Axis axis, int root, Bytes payload) {
    const int q = side();
    detail::require(root >= 0 && root < q, "broadcast root outside group");
    note_collective(Traffic::broadcast);
    ++counters_.broadcast_calls;
    const int me = group_index(axis);
    const int rel = (me - root + q) % q;
    auto member = [&](int r) { return group_member(axis, (r + root) % q); };

    if (rel == 0) {
      counters_.bytes_broadcast += payload.size();
    } else {
      int mask = 1;
      while (!(rel & mask)) mask <<= 1;
      payload = backend_recv(member(rel - mask));
      const std::uint64_t sender_root = pop_trailer(payload);
      if (sender_root != static_cast<std::uint64_t>(root)) {
        throw ContractViolation("broadcast root mismatch: expected " + std::to_string(root) + ", sender used " +
                                std::to_string(sender_root));
      }
      counters_.bytes_broadcast += payload.size();
    }
    int mask = 1;
    while (mask < q && !(rel & mask)) mask <<= 1;
    for (mask >>= 1; mask > 0; mask >>= 1) {
      if (rel + mask < q) {
        Bytes copy = payload;
        push_trailer(copy, static_cast<std::uint64_t>(root));
        backend_->send(member(rel + mask), std::move(copy));
      }
    }
    return payload;
  }

  Bytes row_broadcast(int root_col, Bytes payload) { return broadcast(Axis::row, root_col, std::move(payload)); }
  Bytes col_broadcast(int root_row, Bytes payload) { return broadcast(Axis::col, root_row, std::move(payload)); }

  /// Personalized exchange within my row or column; buffers are indexed by group member.
  std::vector<Bytes> all_to_all_v(Axis axis, std::vector<Bytes> outgoing) {
    const int q = side();
    detail::require(static_cast<int>(outgoing.size()) == q, "all_to_all_v needs one buffer per group member");
    note_collective(Traffic::alltoall);
    ++counters_.alltoall_calls;
    const int me = group_index(axis);
    std::uint64_t peers = 0;
    for (int x = 0; x < q; ++x) {
      if (x != me) ++peers;
      hop_send(group_member(axis, x), std::move(outgoing[x]), Traffic::alltoall);
    }
    counters_.alltoall_peers_max = std::max(counters_.alltoall_peers_max, peers);
    std::vector<Bytes> incoming(q);
    for (int x = 0; x < q; ++x) incoming[x] = hop_recv(group_member(axis, x), Traffic::alltoall);
    return incoming;
  }

  /// Global barrier over all ranks (gather at rank 0, then release).
  void barrier() {
    ++counters_.barrier_calls;
    if (rank() == 0) {
      for (int r = 1; r < size(); ++r) backend_->recv(r);
      for (int r = 1; r < size(); ++r) backend_->send(r, {});
    } else {
      backend_->send(0, {});
      backend_->recv(0);
    }
  }

  // -- building blocks for collectives defined outside this class ---------

  /// Counts one data collective of the given class (rounds and call counter).
  void note_collective(Traffic t) {
    ++counters_.collective_rounds;
    if (t == Traffic::aggregate) ++counters_.aggregate_calls;
  }

  void hop_send(int dest, Bytes payload, Traffic t) {
    if (dest == rank()) {
      self_queue_.push_back(std::move(payload));
      return;
    }
    charge(t, payload.size());
    backend_->send(dest, std::move(payload));
  }

  Bytes hop_recv(int src, Traffic t) {
    if (src == rank()) {
      detail::require(!self_queue_.empty(), "receive from self without a matching send");
      Bytes b = std::move(self_queue_.front());
      self_queue_.pop_front();
      return b;
    }
    Bytes b = backend_->recv(src);
    charge(t, b.size());
    return b;
  }

 private:
  Bytes backend_recv(int src) { return backend_->recv(src); }

  void charge(Traffic t, std::size_t n) {
    switch (t) {
      case Traffic::p2p: counters_.bytes_p2p += n; break;
      case Traffic::broadcast: counters_.bytes_broadcast += n; break;
      case Traffic::alltoall: counters_.bytes_alltoall += n; break;
      case Traffic::aggregate: counters_.bytes_aggregate += n; break;
      case Traffic::control: break;
    }
  }

  static void push_trailer(Bytes& b, std::uint64_t v) {
    const std::size_t at = b.size();
    b.resize(at + 8);
    std::memcpy(b.data() + at, &v, 8);
  }
  static std::uint64_t pop_trailer(Bytes& b) {
    if (b.size() < 8) throw ContractViolation("collective message without trailer");
    std::uint64_t v;
    std::memcpy(&v, b.data() + b.size() - 8, 8);
    b.resize(b.size() - 8);
    return v;
  }

  PointToPoint* backend_;
  ProcessGrid grid_;
  GridCoord coord_;
  TransportCounters counters_;
  std::deque<Bytes> self_queue_;
};

// ---------------------------------------------------------------------------
// In-process simulator: p ranks as threads over unbounded FIFO channels.
// ---------------------------------------------------------------------------

namespace detail {

struct PeerAborted {};

class SimWorld {
 public:
  explicit SimWorld(int p) : p_(p), mbox_(static_cast<std::size_t>(p) * p), waiting_on_(p, -1), cv_(p) {}

  void send(int src, int dst, Bytes payload) {
    std::lock_guard lock(m_);
    if (aborted_) throw PeerAborted{};
    mbox_[index(dst, src)].push_back(std::move(payload));
    if (waiting_on_[dst] == src) {
      waiting_on_[dst] = -1;
      --blocked_;
      cv_[dst].notify_one();
    }
  }

  Bytes recv(int me, int src) {
    std::unique_lock lock(m_);
    auto& q = mbox_[index(me, src)];
    for (;;) {
      if (aborted_) {
        if (deadlock_) throw DeadlockError("simulator deadlock: rank " + std::to_string(me) + " blocked on " + std::to_string(src));
        throw PeerAborted{};
      }
      if (!q.empty()) {
        Bytes b = std::move(q.front());
        q.pop_front();
        return b;
      }
      waiting_on_[me] = src;
      ++blocked_;
      if (blocked_ + finished_ == p_) {
        deadlock_ = true;
        abort_locked();
        throw DeadlockError("simulator deadlock: every live rank is blocked in recv (rank " + std::to_string(me) +
                            " waits on " + std::to_string(src) + ")");
      }
      cv_[me].wait(lock, [&] { return waiting_on_[me] == -1 || aborted_; });
    }
  }

  void finish() {
    std::lock_guard lock(m_);
    ++finished_;
    if (blocked_ > 0 && blocked_ + finished_ == p_) {
      deadlock_ = true;
      abort_locked();
    }
  }

  void abort() {
    std::lock_guard lock(m_);
    abort_locked();
  }

  bool aborted() {
    std::lock_guard lock(m_);
    return aborted_;
  }

  /// Messages sent but never received.
  std::size_t undelivered() {
    std::lock_guard lock(m_);
    std::size_t n = 0;
    for (const auto& q : mbox_) n += q.size();
    return n;
  }

 private:
  std::size_t index(int dst, int src) const { return static_cast<std::size_t>(dst) * p_ + src; }
  void abort_locked() {
    aborted_ = true;
    for (auto& c : cv_) c.notify_all();
  }

  int p_;
  std::mutex m_;
  std::vector<std::deque<Bytes>> mbox_;
  std::vector<int> waiting_on_;
  std::vector<std::condition_variable> cv_;
  int blocked_ = 0;
  int finished_ = 0;
  bool aborted_ = false;
  bool deadlock_ = false;
};

class SimEndpoint final : public PointToPoint {
 public:
  SimEndpoint(SimWorld& world, int rank, int size) : world_(&world), rank_(rank), size_(size) {}
  int rank() const override { return rank_; }
  int size() const override { return size_; }
  void send(int dest, Bytes payload) override { world_->send(rank_, dest, std::move(payload)); }
  Bytes recv(int src) override { return world_->recv(rank_, src); }

 private:
  SimWorld* world_;
  int rank_;
  int size_;
};

}  // namespace detail

/**
 * Runs one SPMD program on p = q^2 simulated ranks, each on its own thread.
 *
 * The first exception raised by any rank aborts the others and is rethrown
 * from run(). If every live rank blocks in recv, the simulation fails with
 * DeadlockError; a run that leaves messages unreceived fails with
 * ContractViolation.
 */
class Simulator {
 public:
  explicit Simulator(int p) : grid_(ProcessGrid::square(p)) {}
  static Simulator with_side(int q) { return Simulator(q * q); }

  const ProcessGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return grid_.size(); }

  template <class Fn>
  void run(Fn&& fn) {
    const int p = grid_.size();
    detail::SimWorld world(p);
    std::vector<std::unique_ptr<detail::SimEndpoint>> endpoints;
    std::vector<std::unique_ptr<Communicator>> comms;
    for (int r = 0; r < p; ++r) {
      endpoints.push_back(std::make_unique<detail::SimEndpoint>(world, r, p));
      comms.push_back(std::make_unique<Communicator>(*endpoints.back(), grid_));
    }
    std::mutex err_m;
    std::exception_ptr first_error;
    auto body = [&](int r) {
      try {
        fn(*comms[r]);
      } catch (const detail::PeerAborted&) {
      } catch (...) {
        {
          std::lock_guard lock(err_m);
          if (!first_error) first_error = std::current_exception();
        }
        world.abort();
      }
      world.finish();
    };
    if (p == 1) {
      body(0);
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(p);
      for (int r = 0; r < p; ++r) threads.emplace_back(body, r);
    }
    counters_.clear();
    for (auto& c : comms) counters_.push_back(c->counters());
    if (first_error) std::rethrow_exception(first_error);
    if (const std::size_t left = world.undelivered(); left > 0) {
      throw ContractViolation("simulation ended with " + std::to_string(left) + " unmatched send(s)");
    }
  }

  /// Counters of every rank after the last run().
  const std::vector<TransportCounters>& counters() const noexcept { return counters_; }

 private:
  ProcessGrid grid_;
  std::vector<TransportCounters> counters_;
};

}  // namespace dynspgemm
