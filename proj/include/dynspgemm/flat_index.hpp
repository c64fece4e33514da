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
#include <bit>
#include <cstdint>
#include <vector>

#include "dynspgemm/types.hpp"

namespace dynspgemm {

namespace detail {

constexpr std::uint64_t fib_mult = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ull;
  x ^= x >> 33;
  return x;
}

}  // namespace detail

/**
 * Open-addressing index from a column key to a slot in an external array.
 *
 * The table stores slots only; the key of a slot is recovered through the
 * `key_of` callable, so the keys live once in the owner's adjacency array.
 * Linear probing, backward-shift deletion, growth by doubling past a load
 * factor of 0.75.
 */
class SlotIndex {
 public:
  static constexpr std::uint32_t npos = ~std::uint32_t{0};

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return table_.size(); }

  template <class KeyOf>
  std::uint32_t find(local_index key, KeyOf&& key_of) const {
    if (table_.empty()) return npos;
    const std::size_t mask = table_.size() - 1;
    for (std::size_t pos = home(key);; pos = (pos + 1) & mask) {
      const std::uint32_t slot = table_[pos];
      if (slot == npos) return npos;
      if (key_of(slot) == key) return slot;
    }
  }

  /// Inserts `key -> slot`; `key` must be absent. Returns the table position.
  template <class KeyOf>
  std::size_t insert(local_index key, std::uint32_t slot, KeyOf&& key_of) {
    if (4 * (size_ + 1) > 3 * table_.size()) grow(key_of);
    const std::size_t mask = table_.size() - 1;
    std::size_t pos = home(key);
    while (table_[pos] != npos) pos = (pos + 1) & mask;
    table_[pos] = slot;
    ++size_;
    return pos;
  }

  /// Repoints an existing key at a new slot.
  template <class KeyOf>
  void reassign(local_index key, std::uint32_t slot, KeyOf&& key_of) {
    table_[position_of(key, key_of)] = slot;
  }

  template <class KeyOf>
  void erase(local_index key, KeyOf&& key_of) {
    const std::size_t mask = table_.size() - 1;
    std::size_t hole = position_of(key, key_of);
    std::size_t next = (hole + 1) & mask;
    while (table_[next] != npos) {
      const std::size_t want = home(key_of(table_[next]));
      // Move `next` back into the hole unless its home lies cyclically in (hole, next].
      const bool stays = hole <= next ? (hole < want && want <= next) : (hole < want || want <= next);
      if (!stays) {
        table_[hole] = table_[next];
        hole = next;
      }
      next = (next + 1) & mask;
    }
    table_[hole] = npos;
    --size_;
  }

  template <class KeyOf>
  std::size_t position_of(local_index key, KeyOf&& key_of) const {
    const std::size_t mask = table_.size() - 1;
    for (std::size_t pos = home(key);; pos = (pos + 1) & mask) {
      if (key_of(table_[pos]) == key) return pos;
    }
  }

  /// Blanks the given table positions; they must be every occupied position.
  void clear_positions(const std::vector<std::size_t>& positions) {
    for (std::size_t pos : positions) table_[pos] = npos;
    size_ = 0;
  }

  void clear() {
    std::fill(table_.begin(), table_.end(), npos);
    size_ = 0;
  }

 private:
  std::size_t home(local_index key) const noexcept {
    return static_cast<std::size_t>((std::uint64_t(key) * detail::fib_mult) >> shift_);
  }

  template <class KeyOf>
  void grow(KeyOf&& key_of) {
    std::vector<std::uint32_t> old = std::move(table_);
    const std::size_t cap = old.empty() ? 4 : old.size() * 2;
    table_.assign(cap, npos);
    shift_ = 64 - static_cast<unsigned>(std::countr_zero(cap));
    size_ = 0;
    const std::size_t mask = cap - 1;
    for (std::uint32_t slot : old) {
      if (slot == npos) continue;
      std::size_t pos = home(key_of(slot));
      while (table_[pos] != npos) pos = (pos + 1) & mask;
      table_[pos] = slot;
      ++size_;
    }
  }

  std::vector<std::uint32_t> table_;
  std::size_t size_ = 0;
  unsigned shift_ = 62;
};

/// Insert-only open-addressing set of 64-bit keys.
class FlatKeySet {
 public:
  static constexpr std::uint64_t empty_key = ~std::uint64_t{0};

  FlatKeySet() = default;
  explicit FlatKeySet(std::size_t expected) { reserve(expected); }

  void reserve(std::size_t expected) {
    std::size_t cap = 8;
    while (cap * 3 < expected * 4 + 4) cap *= 2;
    if (cap > table_.size()) rehash(cap);
  }

  bool insert(std::uint64_t key) {
    if (4 * (size_ + 1) > 3 * table_.size()) rehash(table_.empty() ? 8 : table_.size() * 2);
    const std::size_t mask = table_.size() - 1;
    for (std::size_t pos = detail::mix64(key) & mask;; pos = (pos + 1) & mask) {
      if (table_[pos] == key) return false;
      if (table_[pos] == empty_key) {
        table_[pos] = key;
        ++size_;
        return true;
      }
    }
  }

  bool contains(std::uint64_t key) const noexcept {
    if (table_.empty()) return false;
    const std::size_t mask = table_.size() - 1;
    for (std::size_t pos = detail::mix64(key) & mask;; pos = (pos + 1) & mask) {
      if (table_[pos] == key) return true;
      if (table_[pos] == empty_key) return false;
    }
  }

  std::size_t size() const noexcept { return size_; }

 private:
  void rehash(std::size_t cap) {
    std::vector<std::uint64_t> old = std::move(table_);
    table_.assign(cap, empty_key);
    size_ = 0;
    for (std::uint64_t k : old)
      if (k != empty_key) insert(k);
  }

  std::vector<std::uint64_t> table_;
  std::size_t size_ = 0;
};

}  // namespace dynspgemm
