#pragma once

// Arithmetic helpers named after the pseudo-code builtins. Shared by the
// interpreter, the constant folder and the generated simulators.
//
// The flag helpers are templated over the unsigned word type so they can be
// checked exhaustively at 8 bits.

#include <bit>
#include <cstdint>
#include <limits>
#include <type_traits>

namespace issforge::rt {

template <class T>
inline constexpr unsigned kBits = std::numeric_limits<T>::digits;

template <class T>
using SignedOf = std::make_signed_t<T>;

// x[i]; indices past the word read as zero.
constexpr uint32_t bit(uint32_t x, uint32_t i) { return i > 31 ? 0u : (x >> i) & 1u; }

// x[hi:lo]; the part above bit 31 reads as zero.
constexpr uint32_t bits(uint32_t x, uint32_t hi, uint32_t lo) {
  if (lo > 31 || hi < lo) return 0;
  if (hi > 31) hi = 31;
  const uint32_t w = hi - lo + 1;
  const uint32_t m = w == 32 ? 0xFFFFFFFFu : ((1u << w) - 1u);
  return (x >> lo) & m;
}

// base with bits hi..lo replaced by the low bits of v.
constexpr uint32_t insert_bits(uint32_t base, uint32_t hi, uint32_t lo, uint32_t v) {
  if (lo > 31 || hi < lo) return base;
  if (hi > 31) hi = 31;
  const uint32_t w = hi - lo + 1;
  const uint32_t m = (w == 32 ? 0xFFFFFFFFu : ((1u << w) - 1u)) << lo;
  return (base & ~m) | ((v << lo) & m);
}

// Comparisons as 0/1 words. Generated code calls these so constant operands
// do not trip tautology warnings.
constexpr uint32_t eq(uint32_t a, uint32_t b) { return a == b; }
constexpr uint32_t ne(uint32_t a, uint32_t b) { return a != b; }
constexpr uint32_t lt(uint32_t a, uint32_t b) { return a < b; }
constexpr uint32_t le(uint32_t a, uint32_t b) { return a <= b; }
constexpr uint32_t gt(uint32_t a, uint32_t b) { return a > b; }
constexpr uint32_t ge(uint32_t a, uint32_t b) { return a >= b; }

constexpr uint32_t NbOfSetBitsIn(uint32_t x) { return static_cast<uint32_t>(std::popcount(x)); }

constexpr uint32_t SignExtend(uint32_t x, uint32_t n) {
  if (n == 0 || n >= 32) return x;
  const uint32_t m = 1u << (n - 1);
  x &= (m << 1) - 1u;
  return (x ^ m) - m;
}

constexpr uint32_t Logical_Shift_Left(uint32_t x, uint32_t s) { return s >= 32 ? 0u : x << s; }
constexpr uint32_t Logical_Shift_Right(uint32_t x, uint32_t s) { return s >= 32 ? 0u : x >> s; }

constexpr uint32_t Arithmetic_Shift_Right(uint32_t x, uint32_t s) {
  if (s >= 32) return (x >> 31) ? 0xFFFFFFFFu : 0u;
  return static_cast<uint32_t>(static_cast<int32_t>(x) >> s);
}

constexpr uint32_t Rotate_Right(uint32_t x, uint32_t s) { return std::rotr(x, static_cast<int>(s & 31u)); }

template <class T = uint32_t>
constexpr uint32_t CarryFromAdd2(T a, T b) {
  return static_cast<T>(a + b) < a ? 1u : 0u;
}

template <class T = uint32_t>
constexpr uint32_t CarryFromAdd3(T a, T b, T c) {
  const T ab = static_cast<T>(a + b);
  return (ab < a || static_cast<T>(ab + c) < ab) ? 1u : 0u;
}

template <class T = uint32_t>
constexpr uint32_t BorrowFromSub2(T a, T b) {
  return a < b ? 1u : 0u;
}

template <class T = uint32_t>
constexpr uint32_t BorrowFromSub3(T a, T b, T c) {
  const T ab = static_cast<T>(a - b);
  return (a < b || ab < c) ? 1u : 0u;
}

template <class T = uint32_t>
constexpr uint32_t OverflowFromAdd2(T a, T b) {
  const T r = static_cast<T>(a + b);
  return static_cast<uint32_t>(((a ^ r) & (b ^ r)) >> (kBits<T> - 1)) & 1u;
}

template <class T = uint32_t>
constexpr uint32_t OverflowFromSub2(T a, T b) {
  const T r = static_cast<T>(a - b);
  return static_cast<uint32_t>(((a ^ b) & (a ^ r)) >> (kBits<T> - 1)) & 1u;
}

template <class T = uint32_t>
constexpr uint32_t OverflowFromAdd3(T a, T b, T c) {
  const int64_t s = int64_t{static_cast<SignedOf<T>>(a)} + static_cast<SignedOf<T>>(b) +
                    static_cast<SignedOf<T>>(c);
  return s != static_cast<SignedOf<T>>(static_cast<T>(a + b + c)) ? 1u : 0u;
}

template <class T = uint32_t>
constexpr uint32_t OverflowFromSub3(T a, T b, T c) {
  const int64_t s = int64_t{static_cast<SignedOf<T>>(a)} - static_cast<SignedOf<T>>(b) -
                    static_cast<SignedOf<T>>(c);
  return s != static_cast<SignedOf<T>>(static_cast<T>(a - b - c)) ? 1u : 0u;
}

constexpr uint32_t saturate_signed(int64_t v, uint32_t n) {
  if (n == 0) return 0;
  if (n > 32) n = 32;
  const int64_t hi = (int64_t{1} << (n - 1)) - 1;
  const int64_t lo = -(int64_t{1} << (n - 1));
  if (v > hi) v = hi;
  if (v < lo) v = lo;
  return static_cast<uint32_t>(v);
}

constexpr uint32_t SignedSatAdd2(uint32_t a, uint32_t b, uint32_t n) {
  return saturate_signed(int64_t{static_cast<int32_t>(a)} + static_cast<int32_t>(b), n);
}

constexpr uint32_t SignedSatSub2(uint32_t a, uint32_t b, uint32_t n) {
  return saturate_signed(int64_t{static_cast<int32_t>(a)} - static_cast<int32_t>(b), n);
}

}  // namespace issforge::rt
