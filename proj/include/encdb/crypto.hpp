// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Simulated leveled homomorphic encryption over single bits.
//
// No lattice arithmetic happens here. A CipherBit is an opaque record that
// hides its payload behind the class boundary and carries the metadata a
// real scheme exposes publicly: the key epoch it is encrypted under and the
// multiplicative depth it has consumed. Noise is modeled as depth: AND costs
// one level, XOR and NOT cost nothing, and a ciphertext whose depth exceeds
// the budget no longer decrypts. Refreshing (bootstrapping) resets the depth
// and, in leveled mode, moves the ciphertext to the next key of the ladder.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "encdb/error.hpp"
#include "encdb/serialize.hpp"

namespace encdb {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t random_u64() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  return rng();
}

// Distinct across calls and threads; unpredictable across processes.
inline std::uint64_t fresh_nonce() {
  static const std::uint64_t salt = std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);
  static std::atomic<std::uint64_t> counter{0};
  return splitmix64(salt ^ splitmix64(counter.fetch_add(1, std::memory_order_relaxed)));
}

}  // namespace detail

enum class KeyMode : std::uint8_t { kLeveled = 0, kCircular = 1 };

struct SecurityContext {
  KeyMode mode = KeyMode::kCircular;
  /// Number of key epochs in leveled mode; ignored (treated as 1) when circular.
  std::uint32_t depth_count = 1;
  /// Maximum multiplicative depth a ciphertext may reach within one epoch.
  std::uint32_t depth_budget = 8;

  static SecurityContext circular(std::uint32_t depth_budget = 8) {
    return {KeyMode::kCircular, 1, depth_budget};
  }
  static SecurityContext leveled(std::uint32_t epochs, std::uint32_t depth_budget = 8) {
    return {KeyMode::kLeveled, epochs, depth_budget};
  }

  std::uint32_t epochs() const { return mode == KeyMode::kCircular ? 1 : depth_count; }

  void validate() const {
    if (depth_budget < 1) throw Error(Errc::kInvalidArgument, "depth_budget must be >= 1");
    if (mode == KeyMode::kLeveled && depth_count < 1)
      throw Error(Errc::kInvalidArgument, "leveled mode needs at least one key epoch");
  }
};

struct PublicKey {
  std::uint64_t ladder_id = 0;
  std::uint32_t epoch = 1;

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct KeyPair;
inline KeyPair keygen(const SecurityContext& ctx, std::optional<std::uint64_t> seed = std::nullopt);

class SecretKey {
 public:
  std::uint64_t ladder_id() const { return ladder_id_; }
  std::uint32_t epoch() const { return epoch_; }
  std::uint32_t depth_budget() const { return depth_budget_; }

 private:
  SecretKey(std::uint64_t ladder, std::uint32_t epoch, std::uint32_t budget, std::uint64_t seed)
      : ladder_id_(ladder), epoch_(epoch), depth_budget_(budget), seed_(seed) {}

  friend struct KeyPair;
  friend KeyPair keygen(const SecurityContext&, std::optional<std::uint64_t>);

  std::uint64_t ladder_id_;
  std::uint32_t epoch_;
  std::uint32_t depth_budget_;
  std::uint64_t seed_;
};

class Evaluator;
class CipherBit;
inline bool decrypt_bit(const SecretKey& sk, const CipherBit& c);
inline CipherBit encrypt_bit(const PublicKey& pk, bool bit);

/// An encrypted bit. Immutable; the payload is reachable only through
/// decrypt_bit with the matching secret key. Deliberately not comparable.
class CipherBit {
 public:
  std::uint64_t ladder_id() const { return ladder_id_; }
  std::uint32_t epoch() const { return epoch_; }
  std::uint32_t depth() const { return depth_; }

  bool operator==(const CipherBit&) const = delete;
  auto operator<=>(const CipherBit&) const = delete;

  void write(ByteWriter& w) const {
    w.header(RecordKind::kCipherBit);
    w.u64(ladder_id_);
    w.u32(epoch_);
    w.u32(depth_);
    std::uint8_t blob[9];
    for (int i = 0; i < 8; ++i) blob[i] = static_cast<std::uint8_t>(nonce_ >> (8 * i));
    blob[8] = static_cast<std::uint8_t>(mask(nonce_) ^ (payload_ ? 1 : 0));
    w.blob(blob);
  }

  static CipherBit read(ByteReader& r) {
    r.header(RecordKind::kCipherBit);
    auto ladder = r.u64();
    auto epoch = r.u32();
    auto depth = r.u32();
    auto blob = r.blob();
    if (blob.size() != 9) throw Error(Errc::kDecodeError, "cipher bit blob must be 9 bytes");
    std::uint64_t nonce = 0;
    for (int i = 0; i < 8; ++i) nonce |= std::uint64_t{blob[i]} << (8 * i);
    auto bit = static_cast<std::uint8_t>(blob[8] ^ mask(nonce));
    if (bit > 1) throw Error(Errc::kDecodeError, "corrupt cipher bit payload");
    return CipherBit(ladder, epoch, depth, bit == 1, nonce);
  }

  Bytes serialize() const {
    ByteWriter w;
    write(w);
    return std::move(w).bytes();
  }
  static CipherBit deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto c = read(r);
    r.expect_done();
    return c;
  }

 private:
  CipherBit(std::uint64_t ladder, std::uint32_t epoch, std::uint32_t depth, bool payload,
            std::uint64_t nonce)
      : ladder_id_(ladder), epoch_(epoch), depth_(depth), payload_(payload), nonce_(nonce) {}

  static std::uint8_t mask(std::uint64_t nonce) {
    return static_cast<std::uint8_t>(detail::splitmix64(nonce ^ 0x5eedULL));
  }

  friend class Evaluator;
  friend bool decrypt_bit(const SecretKey&, const CipherBit&);
  friend CipherBit encrypt_bit(const PublicKey&, bool);

  std::uint64_t ladder_id_;
  std::uint32_t epoch_;
  std::uint32_t depth_;
  bool payload_;
  std::uint64_t nonce_;
};

/// Fresh encryption: depth 0, epoch of the key, random nonce.
inline CipherBit encrypt_bit(const PublicKey& pk, bool bit) {
  return CipherBit(pk.ladder_id, pk.epoch, 0, bit, detail::fresh_nonce());
}

inline bool decrypt_bit(const SecretKey& sk, const CipherBit& c) {
  if (sk.ladder_id() != c.ladder_id_)
    throw Error(Errc::kForeignKey, "ciphertext belongs to a different key ladder");
  if (sk.epoch() != c.epoch_)
    throw Error(Errc::kEpochMismatch, "secret key epoch " + std::to_string(sk.epoch()) +
                                          " cannot decrypt epoch " + std::to_string(c.epoch_));
  if (c.depth_ > sk.depth_budget())
    throw Error(Errc::kNoiseOverflow, "depth " + std::to_string(c.depth_) + " exceeds budget " +
                                          std::to_string(sk.depth_budget()));
  return c.payload_;
}

/// Secret key of `wrapped_epoch`, bit by bit, encrypted under `under`.
struct WrappedKey {
  std::uint32_t wrapped_epoch = 1;
  PublicKey under;
  std::vector<CipherBit> bits;

  void write(ByteWriter& w) const {
    w.header(RecordKind::kWrappedKey);
    w.u32(wrapped_epoch);
    w.u64(under.ladder_id);
    w.u32(under.epoch);
    w.u32(static_cast<std::uint32_t>(bits.size()));
    for (const auto& b : bits) b.write(w);
  }
  static WrappedKey read(ByteReader& r) {
    r.header(RecordKind::kWrappedKey);
    WrappedKey k;
    k.wrapped_epoch = r.u32();
    k.under.ladder_id = r.u64();
    k.under.epoch = r.u32();
    auto n = r.u32();
    k.bits.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) k.bits.push_back(CipherBit::read(r));
    return k;
  }
};

/// Everything the server may hold: public keys and wrapped secret keys.
struct KeyLadder {
  std::uint64_t ladder_id = 0;
  KeyMode mode = KeyMode::kCircular;
  std::uint32_t depth_budget = 8;
  std::vector<PublicKey> public_keys;   // index e-1 holds epoch e
  std::vector<WrappedKey> wrapped_keys; // index e-1 wraps epoch e

  std::uint32_t epochs() const { return static_cast<std::uint32_t>(public_keys.size()); }

  const PublicKey& public_key(std::uint32_t epoch) const {
    if (epoch < 1 || epoch > epochs())
      throw Error(Errc::kLadderExhausted, "no public key for epoch " + std::to_string(epoch));
    return public_keys[epoch - 1];
  }

  bool can_refresh(std::uint32_t epoch) const {
    return epoch >= 1 && epoch <= wrapped_keys.size();
  }

  void write(ByteWriter& w) const {
    w.header(RecordKind::kKeyLadder);
    w.u64(ladder_id);
    w.u8(static_cast<std::uint8_t>(mode));
    w.u32(depth_budget);
    w.u32(static_cast<std::uint32_t>(public_keys.size()));
    for (const auto& pk : public_keys) {
      w.header(RecordKind::kPublicKey);
      w.u64(pk.ladder_id);
      w.u32(pk.epoch);
    }
    w.u32(static_cast<std::uint32_t>(wrapped_keys.size()));
    for (const auto& wk : wrapped_keys) wk.write(w);
  }
  static KeyLadder read(ByteReader& r) {
    r.header(RecordKind::kKeyLadder);
    KeyLadder l;
    l.ladder_id = r.u64();
    auto mode = r.u8();
    if (mode > 1) throw Error(Errc::kDecodeError, "bad key mode");
    l.mode = static_cast<KeyMode>(mode);
    l.depth_budget = r.u32();
    auto npk = r.u32();
    for (std::uint32_t i = 0; i < npk; ++i) {
      r.header(RecordKind::kPublicKey);
      PublicKey pk;
      pk.ladder_id = r.u64();
      pk.epoch = r.u32();
      l.public_keys.push_back(pk);
    }
    auto nwk = r.u32();
    for (std::uint32_t i = 0; i < nwk; ++i) l.wrapped_keys.push_back(WrappedKey::read(r));
    return l;
  }
};

/// Client-only secret keys, one per epoch.
class ClientKeys {
 public:
  ClientKeys() = default;
  explicit ClientKeys(std::vector<SecretKey> keys) : keys_(std::move(keys)) {}

  const SecretKey& for_epoch(std::uint32_t epoch) const {
    if (epoch < 1 || epoch > keys_.size())
      throw Error(Errc::kEpochMismatch, "no secret key for epoch " + std::to_string(epoch));
    return keys_[epoch - 1];
  }
  bool decrypt(const CipherBit& c) const { return decrypt_bit(for_epoch(c.epoch()), c); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::vector<SecretKey> keys_;
};

struct KeyPair {
  KeyLadder ladder;
  ClientKeys client;
};

/// Builds a ladder of ctx.epochs() keys. Leveled: secret key e is wrapped
/// under public key e+1. Circular: the single secret key is wrapped under
/// its own public key. `seed` makes key material reproducible.
inline KeyPair keygen(const SecurityContext& ctx, std::optional<std::uint64_t> seed) {
  ctx.validate();
  std::mt19937_64 rng(seed ? *seed : detail::random_u64());
  KeyPair kp;
  kp.ladder.ladder_id = rng();
  kp.ladder.mode = ctx.mode;
  kp.ladder.depth_budget = ctx.depth_budget;
  const auto epochs = ctx.epochs();
  std::vector<SecretKey> secrets;
  for (std::uint32_t e = 1; e <= epochs; ++e) {
    kp.ladder.public_keys.push_back(PublicKey{kp.ladder.ladder_id, e});
    secrets.push_back(SecretKey(kp.ladder.ladder_id, e, ctx.depth_budget, rng()));
  }
  auto wrap = [&](const SecretKey& sk, const PublicKey& under) {
    WrappedKey wk{sk.epoch(), under, {}};
    wk.bits.reserve(64);
    for (int i = 63; i >= 0; --i) wk.bits.push_back(encrypt_bit(under, ((sk.seed_ >> i) & 1U) != 0));
    return wk;
  };
  if (ctx.mode == KeyMode::kCircular) {
    kp.ladder.wrapped_keys.push_back(wrap(secrets[0], kp.ladder.public_keys[0]));
  } else {
    for (std::uint32_t e = 1; e < epochs; ++e)
      kp.ladder.wrapped_keys.push_back(wrap(secrets[e - 1], kp.ladder.public_keys[e]));
  }
  kp.client = ClientKeys(std::move(secrets));
  return kp;
}

struct GateStats {
  std::uint64_t xor_gates = 0;
  std::uint64_t and_gates = 0;
  std::uint64_t refreshes = 0;
  std::uint64_t encryptions = 0;

  std::uint64_t gates() const { return xor_gates + and_gates; }
  friend bool operator==(const GateStats&, const GateStats&) = default;
};

/// Server-side homomorphic evaluator. Holds only the public ladder, so it
/// cannot decrypt. Gates are pure apart from the statistics counters.
class Evaluator {
 public:
  explicit Evaluator(KeyLadder ladder) : ladder_(std::move(ladder)) {}

  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  const KeyLadder& ladder() const { return ladder_; }
  std::uint32_t depth_budget() const { return ladder_.depth_budget; }

  /// When disabled, AND gates let depth run past the budget instead of
  /// bootstrapping; the result then fails to decrypt with NoiseOverflow.
  void set_auto_refresh(bool on) { auto_refresh_ = on; }
  bool auto_refresh() const { return auto_refresh_; }

  /// Flip the output of the n-th AND gate evaluated from now on (0-based).
  void inject_fault_at_and(std::optional<std::uint64_t> n) {
    fault_at_ = n ? std::optional<std::uint64_t>(and_count_.load() + *n) : std::nullopt;
  }

  CipherBit encrypt(bool bit, std::uint32_t epoch = 1) {
    encryptions_.fetch_add(1, std::memory_order_relaxed);
    return encrypt_bit(ladder_.public_key(epoch), bit);
  }

  CipherBit refresh(const CipherBit& c) {
    check_ladder(c);
    if (c.depth_ > ladder_.depth_budget)
      throw Error(Errc::kNoiseOverflow, "cannot bootstrap a ciphertext past its depth budget");
    if (!ladder_.can_refresh(c.epoch_))
      throw Error(Errc::kLadderExhausted,
                  "no wrapped key to bootstrap out of epoch " + std::to_string(c.epoch_));
    refreshes_.fetch_add(1, std::memory_order_relaxed);
    const auto next = ladder_.mode == KeyMode::kCircular ? c.epoch_ : c.epoch_ + 1;
    return CipherBit(c.ladder_id_, next, 0, c.payload_, detail::fresh_nonce());
  }

  CipherBit gate_xor(const CipherBit& a, const CipherBit& b) {
    auto [x, y] = align(a, b);
    xor_count_.fetch_add(1, std::memory_order_relaxed);
    return CipherBit(x.ladder_id_, x.epoch_, std::max(x.depth_, y.depth_),
                     x.payload_ != y.payload_, detail::fresh_nonce());
  }

  CipherBit gate_and(const CipherBit& a, const CipherBit& b) {
    auto [x, y] = align(a, b);
    if (auto_refresh_ && std::max(x.depth_, y.depth_) + 1 > ladder_.depth_budget) {
      if (x.depth_ + 1 > ladder_.depth_budget) x = refresh(x);
      if (y.depth_ + 1 > ladder_.depth_budget) y = refresh(y);
      std::tie(x, y) = align(x, y);
    }
    const auto index = and_count_.fetch_add(1, std::memory_order_relaxed);
    bool out = x.payload_ && y.payload_;
    if (fault_at_ && *fault_at_ == index) out = !out;
    return CipherBit(x.ladder_id_, x.epoch_, std::max(x.depth_, y.depth_) + 1, out,
                     detail::fresh_nonce());
  }

  /// XOR with a fresh encryption of 1.
  CipherBit gate_not(const CipherBit& a) { return gate_xor(a, encrypt(true, a.epoch_)); }

  /// (a AND b) XOR (NOT a AND b) XOR (a AND NOT b).
  CipherBit gate_or(const CipherBit& a, const CipherBit& b) {
    auto both = gate_and(a, b);
    auto only_b = gate_and(gate_not(a), b);
    auto only_a = gate_and(a, gate_not(b));
    return gate_xor(gate_xor(both, only_b), only_a);
  }

  GateStats stats() const {
    return {xor_count_.load(), and_count_.load(), refreshes_.load(), encryptions_.load()};
  }
  void reset_stats() {
    xor_count_ = 0;
    and_count_ = 0;
    refreshes_ = 0;
    encryptions_ = 0;
    fault_at_.reset();
  }

 private:
  void check_ladder(const CipherBit& c) const {
    if (c.ladder_id_ != ladder_.ladder_id)
      throw Error(Errc::kForeignKey, "ciphertext belongs to a different key ladder");
  }

  // Cross-key operands: bootstrap the older one forward until epochs agree.
  std::pair<CipherBit, CipherBit> align(CipherBit a, CipherBit b) {
    check_ladder(a);
    check_ladder(b);
    while (a.epoch_ < b.epoch_) a = refresh(a);
    while (b.epoch_ < a.epoch_) b = refresh(b);
    return {std::move(a), std::move(b)};
  }

  KeyLadder ladder_;
  bool auto_refresh_ = true;
  std::optional<std::uint64_t> fault_at_;
  std::atomic<std::uint64_t> xor_count_{0};
  std::atomic<std::uint64_t> and_count_{0};
  std::atomic<std::uint64_t> refreshes_{0};
  std::atomic<std::uint64_t> encryptions_{0};
};

}  // namespace encdb
