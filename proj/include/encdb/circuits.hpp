// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Word-level combinational circuits over encrypted unsigned integers.
// Words are MSB-first: bit(0) is the most significant bit. Every circuit
// has a shape that depends only on the operand widths.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "encdb/crypto.hpp"

namespace encdb {

class CipherWord {
 public:
  CipherWord() = default;
  explicit CipherWord(std::vector<CipherBit> bits) : bits_(std::move(bits)) {}

  std::size_t width() const { return bits_.size(); }
  const CipherBit& bit(std::size_t i) const { return bits_[i]; }
  const CipherBit& lsb() const { return bits_.back(); }
  std::span<const CipherBit> bits() const { return bits_; }

  std::uint32_t epoch() const {
    std::uint32_t e = 1;
    for (const auto& b : bits_) e = std::max(e, b.epoch());
    return e;
  }

  void write(ByteWriter& w) const {
    w.header(RecordKind::kCipherWord);
    w.u32(static_cast<std::uint32_t>(bits_.size()));
    for (const auto& b : bits_) b.write(w);
  }
  static CipherWord read(ByteReader& r) {
    r.header(RecordKind::kCipherWord);
    auto n = r.u32();
    std::vector<CipherBit> bits;
    bits.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) bits.push_back(CipherBit::read(r));
    return CipherWord(std::move(bits));
  }

 private:
  std::vector<CipherBit> bits_;
};

inline std::uint64_t max_value(std::size_t width) {
  return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

inline bool fits(std::uint64_t value, std::size_t width) { return value <= max_value(width); }

/// Smallest width that can hold `value` (at least 1).
inline std::size_t bit_length(std::uint64_t value) {
  std::size_t n = 1;
  while (n < 64 && !fits(value, n)) ++n;
  return n;
}

namespace detail {

inline void check_widths(const CipherWord& a, const CipherWord& b, const char* op) {
  if (a.width() != b.width())
    throw Error(Errc::kWidthMismatch, std::string(op) + ": widths " + std::to_string(a.width()) +
                                          " and " + std::to_string(b.width()));
}

inline std::uint32_t common_epoch(const CipherWord& a, const CipherWord& b) {
  return std::max(a.epoch(), b.epoch());
}

// Ripple-carry adder, LSB to MSB; the carry out of the MSB is dropped.
inline CipherWord ripple_add(Evaluator& ev, const CipherWord& a, const CipherWord& b,
                             std::optional<CipherBit> carry) {
  const auto w = a.width();
  std::vector<CipherBit> out;
  out.reserve(w);
  for (std::size_t k = 0; k < w; ++k) {
    const auto i = w - 1 - k;
    const auto& x = a.bit(i);
    const auto& y = b.bit(i);
    auto half = ev.gate_xor(x, y);
    if (!carry) {
      out.push_back(half);
      if (k + 1 < w) carry = ev.gate_and(x, y);
      continue;
    }
    out.push_back(ev.gate_xor(half, *carry));
    if (k + 1 < w) carry = ev.gate_xor(ev.gate_and(x, y), ev.gate_and(*carry, half));
  }
  std::reverse(out.begin(), out.end());
  return CipherWord(std::move(out));
}

}  // namespace detail

inline CipherWord encrypt_word(Evaluator& ev, std::uint64_t value, std::size_t width,
                               std::uint32_t epoch = 1) {
  if (width == 0 || width > 64)
    throw Error(Errc::kInvalidArgument, "word width must be in [1, 64]");
  if (!fits(value, width))
    throw Error(Errc::kValueOverflow,
                std::to_string(value) + " does not fit in " + std::to_string(width) + " bits");
  std::vector<CipherBit> bits;
  bits.reserve(width);
  for (std::size_t i = 0; i < width; ++i)
    bits.push_back(ev.encrypt(((value >> (width - 1 - i)) & 1U) != 0, epoch));
  return CipherWord(std::move(bits));
}

/// Client-side counterpart of encrypt_word: needs only a public key.
inline CipherWord encrypt_word(const PublicKey& pk, std::uint64_t value, std::size_t width) {
  if (width == 0 || width > 64)
    throw Error(Errc::kInvalidArgument, "word width must be in [1, 64]");
  if (!fits(value, width))
    throw Error(Errc::kValueOverflow,
                std::to_string(value) + " does not fit in " + std::to_string(width) + " bits");
  std::vector<CipherBit> bits;
  bits.reserve(width);
  for (std::size_t i = 0; i < width; ++i)
    bits.push_back(encrypt_bit(pk, ((value >> (width - 1 - i)) & 1U) != 0));
  return CipherWord(std::move(bits));
}

inline std::uint64_t decrypt_word(const ClientKeys& keys, const CipherWord& word) {
  std::uint64_t v = 0;
  for (const auto& b : word.bits()) v = (v << 1) | (keys.decrypt(b) ? 1U : 0U);
  return v;
}

inline CipherWord zero_word(Evaluator& ev, std::size_t width, std::uint32_t epoch = 1) {
  return encrypt_word(ev, 0, width, epoch);
}

/// Prepends encrypted zeros so the word has `width` bits.
inline CipherWord zero_extend(Evaluator& ev, const CipherWord& x, std::size_t width) {
  if (width < x.width()) throw Error(Errc::kWidthMismatch, "zero_extend cannot narrow a word");
  std::vector<CipherBit> bits;
  bits.reserve(width);
  for (std::size_t i = x.width(); i < width; ++i) bits.push_back(ev.encrypt(false, x.epoch()));
  bits.insert(bits.end(), x.bits().begin(), x.bits().end());
  return CipherWord(std::move(bits));
}

/// (a + b) mod 2^w.
inline CipherWord word_add(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  detail::check_widths(a, b, "word_add");
  if (a.width() == 0) return a;
  return detail::ripple_add(ev, a, b, std::nullopt);
}

/// (a - b) mod 2^w, as a + NOT(b) + 1.
inline CipherWord word_sub(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  detail::check_widths(a, b, "word_sub");
  if (a.width() == 0) return a;
  std::vector<CipherBit> inv;
  inv.reserve(b.width());
  for (const auto& bit : b.bits()) inv.push_back(ev.gate_not(bit));
  return detail::ripple_add(ev, a, CipherWord(std::move(inv)),
                            ev.encrypt(true, detail::common_epoch(a, b)));
}

/// 1 iff a == b. XNOR each bit pair and AND-accumulate, starting from E(1).
inline CipherBit word_eq(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  detail::check_widths(a, b, "word_eq");
  const auto epoch = detail::common_epoch(a, b);
  auto result = ev.encrypt(true, epoch);
  for (std::size_t i = 0; i < a.width(); ++i) {
    auto temp = ev.gate_xor(ev.gate_xor(a.bit(i), b.bit(i)), ev.encrypt(true, epoch));
    result = ev.gate_and(result, temp);
  }
  return result;
}

/// 1 iff a > b (unsigned). Scans MSB first; `done` latches at the first
/// differing bit and `result` keeps the verdict taken there.
inline CipherBit word_gt(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  detail::check_widths(a, b, "word_gt");
  const auto epoch = detail::common_epoch(a, b);
  auto result = ev.encrypt(false, epoch);
  auto done = ev.encrypt(false, epoch);
  for (std::size_t i = 0; i < a.width(); ++i) {
    auto t1 = ev.gate_and(a.bit(i), ev.gate_not(b.bit(i)));
    auto t2 = ev.gate_and(b.bit(i), ev.gate_not(a.bit(i)));
    auto not_done = ev.gate_not(done);
    result = ev.gate_xor(ev.gate_and(done, result), ev.gate_and(not_done, t1));
    done = ev.gate_xor(done, ev.gate_and(not_done, ev.gate_or(t1, t2)));
  }
  return result;
}

inline CipherBit word_ne(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  return ev.gate_not(word_eq(ev, a, b));
}
inline CipherBit word_lt(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  return word_gt(ev, b, a);
}
inline CipherBit word_ge(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  return ev.gate_not(word_gt(ev, b, a));
}
inline CipherBit word_le(Evaluator& ev, const CipherWord& a, const CipherWord& b) {
  return ev.gate_not(word_gt(ev, a, b));
}

/// flag ? a : b, per bit as (flag AND a_i) XOR (NOT flag AND b_i).
inline CipherWord word_mux(Evaluator& ev, const CipherBit& flag, const CipherWord& a,
                           const CipherWord& b) {
  detail::check_widths(a, b, "word_mux");
  auto not_flag = ev.gate_not(flag);
  std::vector<CipherBit> out;
  out.reserve(a.width());
  for (std::size_t i = 0; i < a.width(); ++i)
    out.push_back(ev.gate_xor(ev.gate_and(flag, a.bit(i)), ev.gate_and(not_flag, b.bit(i))));
  return CipherWord(std::move(out));
}

/// x if b == 1, else 0.
inline CipherWord word_and_bit(Evaluator& ev, const CipherWord& x, const CipherBit& b) {
  std::vector<CipherBit> out;
  out.reserve(x.width());
  for (const auto& xi : x.bits()) out.push_back(ev.gate_and(xi, b));
  return CipherWord(std::move(out));
}

/// (x + b) mod 2^w, adding b as the word 0...0b.
inline CipherWord word_add_bit(Evaluator& ev, const CipherWord& x, const CipherBit& b) {
  if (x.width() == 0) return x;
  const auto epoch = std::max(x.epoch(), b.epoch());
  std::vector<CipherBit> bnum;
  bnum.reserve(x.width());
  for (std::size_t i = 0; i + 1 < x.width(); ++i) bnum.push_back(ev.encrypt(false, epoch));
  bnum.push_back(b);
  return word_add(ev, x, CipherWord(std::move(bnum)));
}

/// floor(num / den); 0 when den == 0. Restoring long division with a
/// (w+1)-bit partial remainder, one conditional subtract per quotient bit.
inline CipherWord word_div(Evaluator& ev, const CipherWord& num, const CipherWord& den) {
  detail::check_widths(num, den, "word_div");
  const auto w = num.width();
  if (w == 0) return num;
  const auto epoch = detail::common_epoch(num, den);
  const auto divisor = zero_extend(ev, den, w + 1);
  auto rem = zero_word(ev, w + 1, epoch);
  std::vector<CipherBit> quotient;
  quotient.reserve(w);
  for (std::size_t i = 0; i < w; ++i) {
    // The remainder is below the divisor, so its top bit is zero and the
    // shift cannot lose information.
    std::vector<CipherBit> shifted(rem.bits().begin() + 1, rem.bits().end());
    shifted.push_back(num.bit(i));
    CipherWord candidate(std::move(shifted));
    auto ge = ev.gate_not(word_gt(ev, divisor, candidate));
    rem = word_mux(ev, ge, word_sub(ev, candidate, divisor), candidate);
    quotient.push_back(ge);
  }
  auto den_nonzero = ev.gate_not(word_eq(ev, den, zero_word(ev, w, epoch)));
  return word_and_bit(ev, CipherWord(std::move(quotient)), den_nonzero);
}

/// Lexicographic a > b over equal-length key tuples.
inline CipherBit lex_gt(Evaluator& ev, std::span<const CipherWord> a,
                        std::span<const CipherWord> b) {
  if (a.size() != b.size()) throw Error(Errc::kWidthMismatch, "lex_gt: key arity differs");
  if (a.empty()) return ev.encrypt(false);
  auto result = word_gt(ev, a.back(), b.back());
  for (std::size_t k = a.size() - 1; k-- > 0;) {
    auto gt = word_gt(ev, a[k], b[k]);
    auto eq = word_eq(ev, a[k], b[k]);
    result = ev.gate_or(gt, ev.gate_and(eq, result));
  }
  return result;
}

/// 1 iff every pair of words is equal; E(1) for empty tuples.
inline CipherBit tuple_eq(Evaluator& ev, std::span<const CipherWord> a,
                          std::span<const CipherWord> b) {
  if (a.size() != b.size()) throw Error(Errc::kWidthMismatch, "tuple_eq: arity differs");
  auto result = ev.encrypt(true);
  for (std::size_t k = 0; k < a.size(); ++k) result = ev.gate_and(result, word_eq(ev, a[k], b[k]));
  return result;
}

}  // namespace encdb
