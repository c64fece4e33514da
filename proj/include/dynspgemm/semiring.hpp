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
#include <concepts>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string_view>
#include <type_traits>

#include "dynspgemm/types.hpp"

namespace dynspgemm {

/// Value carried by structure-only matrices. Occupies zero bytes on the wire.
struct Pattern {
  friend constexpr bool operator==(Pattern, Pattern) noexcept { return true; }
};

/**
 * Little-endian wire encoding of a value type.
 *
 * `width` is the default number of bytes per value. std::uint64_t is the
 * Bloom bitfield type and may be written truncated to fewer bytes.
 */
template <class V>
struct ValueCodec;

template <>
struct ValueCodec<std::int64_t> {
  static constexpr std::size_t width = 8;
  static void store(std::byte* dst, std::int64_t v, std::size_t = width) { std::memcpy(dst, &v, 8); }
  static std::int64_t load(const std::byte* src, std::size_t = width) {
    std::int64_t v;
    std::memcpy(&v, src, 8);
    return v;
  }
};

template <>
struct ValueCodec<double> {
  static constexpr std::size_t width = 8;
  static void store(std::byte* dst, double v, std::size_t = width) { std::memcpy(dst, &v, 8); }
  static double load(const std::byte* src, std::size_t = width) {
    double v;
    std::memcpy(&v, src, 8);
    return v;
  }
};

template <>
struct ValueCodec<std::uint8_t> {
  static constexpr std::size_t width = 1;
  static void store(std::byte* dst, std::uint8_t v, std::size_t = width) { dst[0] = std::byte{v}; }
  static std::uint8_t load(const std::byte* src, std::size_t = width) {
    return std::to_integer<std::uint8_t>(src[0]);
  }
};

template <>
struct ValueCodec<std::uint64_t> {
  static constexpr std::size_t width = 8;
  static void store(std::byte* dst, std::uint64_t v, std::size_t w = width) {
    for (std::size_t b = 0; b < w; ++b) dst[b] = std::byte(static_cast<std::uint8_t>(v >> (8 * b)));
  }
  static std::uint64_t load(const std::byte* src, std::size_t w = width) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < w; ++b) v |= std::uint64_t(std::to_integer<std::uint8_t>(src[b])) << (8 * b);
    return v;
  }
};

template <>
struct ValueCodec<Pattern> {
  static constexpr std::size_t width = 0;
  static void store(std::byte*, Pattern, std::size_t = width) {}
  static Pattern load(const std::byte*, std::size_t = width) { return {}; }
};

static_assert(std::endian::native == std::endian::little, "wire codecs assume a little-endian host");

// clang-format off
template <class S>
concept Semiring = requires(typename S::value_type a, typename S::value_type b) {
  { S::add(a, b) } -> std::same_as<typename S::value_type>;
  { S::mul(a, b) } -> std::same_as<typename S::value_type>;
  { S::zero() } -> std::same_as<typename S::value_type>;
  { S::one() } -> std::same_as<typename S::value_type>;
  { S::is_ring } -> std::convertible_to<bool>;
  { S::name } -> std::convertible_to<std::string_view>;
  ValueCodec<typename S::value_type>::width;
};

template <class S>
concept Ring = Semiring<S> && S::is_ring && requires(typename S::value_type a) {
  { S::negate(a) } -> std::same_as<typename S::value_type>;
};
// clang-format on

/// (+, *) over a signed integer or floating point type.
template <class T>
struct PlusTimes {
  using value_type = T;
  static constexpr bool is_ring = true;
  static constexpr std::string_view name = std::is_integral_v<T> ? "plus-times-i64" : "plus-times-f64";
  static constexpr T add(T a, T b) noexcept { return a + b; }
  static constexpr T mul(T a, T b) noexcept { return a * b; }
  static constexpr T zero() noexcept { return T(0); }
  static constexpr T one() noexcept { return T(1); }
  static constexpr T negate(T a) noexcept { return -a; }
};

/// Tropical (min, +) over doubles. Zero is +infinity.
struct MinPlus {
  using value_type = double;
  static constexpr bool is_ring = false;
  static constexpr std::string_view name = "min-plus";
  static constexpr double add(double a, double b) noexcept { return b < a ? b : a; }
  static constexpr double mul(double a, double b) noexcept { return a + b; }
  static constexpr double zero() noexcept { return std::numeric_limits<double>::infinity(); }
  static constexpr double one() noexcept { return 0.0; }
};

/// (or, and) over {0, 1}.
struct BoolOrAnd {
  using value_type = std::uint8_t;
  static constexpr bool is_ring = false;
  static constexpr std::string_view name = "bool";
  static constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept { return a | b; }
  static constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept { return a & b; }
  static constexpr std::uint8_t zero() noexcept { return 0; }
  static constexpr std::uint8_t one() noexcept { return 1; }
};

using PlusTimesI64 = PlusTimes<std::int64_t>;
using PlusTimesF64 = PlusTimes<double>;

static_assert(Ring<PlusTimesI64>);
static_assert(Ring<PlusTimesF64>);
static_assert(Semiring<MinPlus>);
static_assert(Semiring<BoolOrAnd>);

template <Semiring S>
constexpr typename S::value_type semiring_add(typename S::value_type a, typename S::value_type b) {
  return S::add(a, b);
}

template <Semiring S>
constexpr typename S::value_type semiring_mul(typename S::value_type a, typename S::value_type b) {
  return S::mul(a, b);
}

template <Semiring S>
constexpr std::size_t value_width() {
  return ValueCodec<typename S::value_type>::width;
}

}  // namespace dynspgemm
