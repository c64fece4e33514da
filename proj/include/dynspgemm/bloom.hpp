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

#include <bit>
#include <cstdint>

#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dynamic_block.hpp"

namespace dynspgemm {

// A Bloom matrix stores one bitfield per output entry; bit (k mod bits) marks
// that summation index k contributed. An all-zero bitfield is never stored.

inline constexpr unsigned default_bloom_bits = 64;

inline void validate_bloom_bits(unsigned bits) {
  if (bits == 0 || bits > 64 || !std::has_single_bit(bits)) {
    throw ContractViolation("bloom bits must be a power of two in [1, 64]");
  }
}

constexpr std::uint64_t bloom_bit(global_index k, unsigned bits) noexcept {
  return std::uint64_t{1} << (k % bits);
}

/// Bytes per bitfield on the wire; narrow filters still take one byte.
constexpr std::size_t bloom_wire_width(unsigned bits) noexcept {
  return bits < 8 ? 1 : bits / 8;
}

inline Bytes bloom_serialize(const BloomBlock& b, unsigned bits) { return dcsr_serialize(b, bloom_wire_width(bits)); }

inline BloomBlock bloom_deserialize(std::span<const std::byte> buf, unsigned bits) {
  return dcsr_deserialize<std::uint64_t>(buf, bloom_wire_width(bits));
}

inline constexpr auto bit_or = [](std::uint64_t a, std::uint64_t b) { return a | b; };

/// Entry-wise bitwise-or of a Bloom update into a dynamic Bloom block.
inline void bloom_or_into(DynamicBlock<std::uint64_t>& target, const BloomBlock& update) {
  detail::require_same_shape(target, update, "bloom_or_into");
  std::ptrdiff_t added = 0;
  update.for_each([&](local_index r, local_index c, std::uint64_t v) { added += target.row_accumulate(r, c, v, bit_or); });
  target.adjust_nnz(added);
}

}  // namespace dynspgemm
