// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "encdb/error.hpp"

namespace encdb {

using Bytes = std::vector<std::uint8_t>;

// Little-endian, fixed-width integer encoding. Every record written by the
// library starts with a one-byte kind tag followed by a one-byte version.
inline constexpr std::uint8_t kFormatVersion = 1;

enum class RecordKind : std::uint8_t {
  kCipherBit = 0x01,
  kPublicKey = 0x02,
  kWrappedKey = 0x03,
  kKeyLadder = 0x04,
  kCipherWord = 0x05,
  kEncRow = 0x06,
  kEncTable = 0x07,
  kEnvelope = 0x08,
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void blob(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void header(RecordKind kind) {
    u8(static_cast<std::uint8_t>(kind));
    u8(kFormatVersion);
  }

  const Bytes& bytes() const& { return out_; }
  Bytes bytes() && { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::string str() {
    auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Bytes blob() {
    auto n = u32();
    need(n);
    Bytes b(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
            in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return b;
  }
  void header(RecordKind kind) {
    auto k = u8();
    if (k != static_cast<std::uint8_t>(kind))
      throw Error(Errc::kDecodeError, "unexpected record kind " + std::to_string(k));
    auto v = u8();
    if (v != kFormatVersion)
      throw Error(Errc::kDecodeError, "unsupported format version " + std::to_string(v));
  }

  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw Error(Errc::kDecodeError, "trailing bytes after record");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(Errc::kDecodeError, "truncated record");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace encdb
