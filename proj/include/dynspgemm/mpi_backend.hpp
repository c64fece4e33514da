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

#include <mpi.h>

#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "dynspgemm/transport.hpp"

namespace dynspgemm {

/**
 * PointToPoint over an MPI communicator, so the algorithms run unchanged
 * under mpirun. Messages between a pair of ranks stay ordered because MPI
 * preserves the order of matching sends with one tag on one communicator.
 *
 * Sends never block: each payload is posted with MPI_Isend and kept alive
 * until the request completes. Completed sends are reaped on every call, and
 * the destructor waits for the rest, so the object must be destroyed before
 * MPI_Finalize. MPI must be initialized by the caller.
 */
class MpiPointToPoint final : public PointToPoint {
 public:
  explicit MpiPointToPoint(MPI_Comm comm = MPI_COMM_WORLD, int tag = 7311) : comm_(comm), tag_(tag) {
    check(MPI_Comm_rank(comm_, &rank_), "MPI_Comm_rank");
    check(MPI_Comm_size(comm_, &size_), "MPI_Comm_size");
  }

  int rank() const override { return rank_; }
  int size() const override { return size_; }

  void send(int dest, Bytes payload) override {
    if (payload.size() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
      throw std::length_error("message exceeds the MPI count range");
    }
    pending_.push_back({std::move(payload), MPI_REQUEST_NULL});
    Pending& p = pending_.back();
    check(MPI_Isend(p.payload.data(), static_cast<int>(p.payload.size()), MPI_BYTE, dest, tag_, comm_, &p.request),
          "MPI_Isend");
    reap();
  }

  Bytes recv(int src) override {
    MPI_Status status;
    check(MPI_Probe(src, tag_, comm_, &status), "MPI_Probe");
    int count = 0;
    check(MPI_Get_count(&status, MPI_BYTE, &count), "MPI_Get_count");
    Bytes payload(static_cast<std::size_t>(count));
    check(MPI_Recv(payload.data(), count, MPI_BYTE, src, tag_, comm_, MPI_STATUS_IGNORE), "MPI_Recv");
    reap();
    return payload;
  }

  /// Blocks until every posted send has completed.
  void flush() {
    for (Pending& p : pending_) check(MPI_Wait(&p.request, MPI_STATUS_IGNORE), "MPI_Wait");
    pending_.clear();
  }

  ~MpiPointToPoint() override {
    for (Pending& p : pending_) MPI_Wait(&p.request, MPI_STATUS_IGNORE);
  }

  MpiPointToPoint(const MpiPointToPoint&) = delete;
  MpiPointToPoint& operator=(const MpiPointToPoint&) = delete;

 private:
  struct Pending {
    Bytes payload;
    MPI_Request request;
  };

  void reap() {
    std::erase_if(pending_, [](Pending& p) {
      int done = 0;
      check(MPI_Test(&p.request, &done, MPI_STATUS_IGNORE), "MPI_Test");
      return done != 0;
    });
  }

  static void check(int rc, const char* what) {
    if (rc != MPI_SUCCESS) throw std::runtime_error(std::string(what) + " failed with code " + std::to_string(rc));
  }

  MPI_Comm comm_;
  int tag_;
  int rank_ = 0;
  int size_ = 1;
  std::deque<Pending> pending_;
};

}  // namespace dynspgemm
