// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Client/server roles and their message flow.
//
//   setup   client -> server  kSetupKeys    public keys + wrapped secret keys
//           client -> server  kUploadTable  encrypted table, presence all E(1)
//   query   client -> server  kQuery        plan text with $k slots + literals
//           server -> client  kCountReply   E(number of present result rows)
//           client -> server  kFetchRequest n' (public, n' >= n)
//           server -> client  kFetchReply   top n' rows after sorting on p desc
//
// Both roles live in one process; everything crossing the boundary is a
// serialized Envelope, so the server side never holds a SecretKey.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "encdb/plan.hpp"

namespace encdb {

enum class MessageType : std::uint8_t {
  kSetupKeys = 1,
  kUploadTable = 2,
  kQuery = 3,
  kCountReply = 4,
  kFetchRequest = 5,
  kFetchReply = 6,
};

constexpr std::string_view to_string(MessageType t) {
  switch (t) {
    case MessageType::kSetupKeys: return "setup_keys";
    case MessageType::kUploadTable: return "upload_table";
    case MessageType::kQuery: return "query";
    case MessageType::kCountReply: return "count_reply";
    case MessageType::kFetchRequest: return "fetch_request";
    case MessageType::kFetchReply: return "fetch_reply";
  }
  return "?";
}

/// {message_type, query_id, payload}, fields in that order.
struct Envelope {
  MessageType type = MessageType::kQuery;
  std::uint64_t query_id = 0;
  Bytes payload;

  Bytes serialize() const {
    ByteWriter w;
    w.header(RecordKind::kEnvelope);
    w.u8(static_cast<std::uint8_t>(type));
    w.u64(query_id);
    w.blob(payload);
    return std::move(w).bytes();
  }
  static Envelope deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.header(RecordKind::kEnvelope);
    Envelope e;
    auto t = r.u8();
    if (t < 1 || t > 6) throw Error(Errc::kDecodeError, "unknown message type " + std::to_string(t));
    e.type = static_cast<MessageType>(t);
    e.query_id = r.u64();
    e.payload = r.blob();
    r.expect_done();
    return e;
  }
};

namespace detail {

inline void write_schema(ByteWriter& w, const Schema& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  for (const auto& c : s.columns()) {
    w.str(c.name);
    w.u32(static_cast<std::uint32_t>(c.width));
  }
}

inline Schema read_schema(ByteReader& r) {
  std::vector<Column> cols;
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = r.str();
    cols.push_back(Column{std::move(name), r.u32()});
  }
  return Schema(std::move(cols));
}

}  // namespace detail

/// Plan whose literals have been replaced by encrypted slots.
struct EncryptedQuery {
  Plan plan;
  std::vector<CipherWord> literals;
};

// ---------------------------------------------------------------------------
// Server-side protocol steps.

/// E(number of present rows); a single word, nothing about which rows.
inline CipherWord result_count(Evaluator& ev, const EncTable& result, std::size_t width) {
  return op_count(ev, result, width);
}

/// Sorts on the presence bit, descending and stable, then returns the first
/// n_prime physical rows.
inline std::vector<EncRow> result_fetch(Evaluator& ev, const EncTable& result, std::size_t n_prime) {
  if (n_prime > result.capacity())
    throw Error(Errc::kFetchTooLarge, "requested " + std::to_string(n_prime) + " rows of " +
                                          std::to_string(result.capacity()));
  SortKey by_presence = [](const EncRow& r) { return std::vector<CipherWord>{CipherWord({r.presence})}; };
  auto sorted = sort_rows(ev, result.rows, by_presence, SortDirection::kDescending);
  sorted.erase(sorted.begin() + static_cast<std::ptrdiff_t>(n_prime), sorted.end());
  return sorted;
}

/// Holds only public key material and encrypted tables. Queries and
/// fetches may arrive from several threads once setup and uploads are done.
class ServerStore {
 public:
  explicit ServerStore(ExecOptions opts = {}) : opts_(opts) {}

  /// Handles one inbound message; returns the reply, if the message has one.
  std::optional<Envelope> receive(const Envelope& msg) {
    {
      std::lock_guard lock(mu_);
      inbound_.push_back(msg);
    }
    switch (msg.type) {
      case MessageType::kSetupKeys: {
        ByteReader r(msg.payload);
        auto ladder = KeyLadder::read(r);
        r.expect_done();
        std::lock_guard lock(mu_);
        evaluator_ = std::make_unique<Evaluator>(std::move(ladder));
        return std::nullopt;
      }
      case MessageType::kUploadTable: {
        ByteReader r(msg.payload);
        auto t = EncTable::read(r);
        r.expect_done();
        auto name = t.name;
        std::lock_guard lock(mu_);
        tables_.insert_or_assign(std::move(name), std::move(t));
        return std::nullopt;
      }
      case MessageType::kQuery: return handle_query(msg);
      case MessageType::kFetchRequest: return handle_fetch(msg);
      default:
        throw Error(Errc::kInvalidArgument,
                    "server cannot handle " + std::string(to_string(msg.type)));
    }
  }

  Evaluator& evaluator() {
    if (!evaluator_) throw Error(Errc::kInvalidArgument, "server has not received keys");
    return *evaluator_;
  }
  const TableMap& tables() const { return tables_; }
  const std::vector<Envelope>& inbound() const { return inbound_; }
  ExecOptions& options() { return opts_; }

  Catalog catalog() const {
    Catalog c;
    for (const auto& [name, t] : tables_) c.emplace(name, t.schema);
    return c;
  }

 private:
  Envelope handle_query(const Envelope& msg) {
    ByteReader r(msg.payload);
    auto text = r.str();
    auto n = r.u32();
    std::vector<CipherWord> literals;
    for (std::uint32_t i = 0; i < n; ++i) literals.push_back(CipherWord::read(r));
    r.expect_done();
    auto plan = parse_plan(text, catalog(), PlanOptions{opts_.default_width});
    auto& ev = evaluator();
    auto result = execute(ev, plan, tables_, literals, opts_);
    auto count = result_count(ev, result, count_width(result.capacity()));

    ByteWriter w;
    count.write(w);
    w.u32(static_cast<std::uint32_t>(result.capacity()));
    detail::write_schema(w, result.schema);
    std::lock_guard lock(mu_);
    results_.insert_or_assign(msg.query_id, std::move(result));
    return Envelope{MessageType::kCountReply, msg.query_id, std::move(w).bytes()};
  }

  Envelope handle_fetch(const Envelope& msg) {
    ByteReader r(msg.payload);
    auto n_prime = r.u64();
    r.expect_done();
    EncTable result;
    {
      std::lock_guard lock(mu_);
      auto it = results_.find(msg.query_id);
      if (it == results_.end())
        throw Error(Errc::kInvalidArgument, "no pending result for query " + std::to_string(msg.query_id));
      result = std::move(it->second);
      results_.erase(it);
    }
    auto rows = result_fetch(evaluator(), result, static_cast<std::size_t>(n_prime));
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(rows.size()));
    for (const auto& row : rows) row.write(w);
    return Envelope{MessageType::kFetchReply, msg.query_id, std::move(w).bytes()};
  }

  // Wide enough that the count cannot wrap; depends on capacity only.
  static std::size_t count_width(std::size_t capacity) { return bit_length(capacity); }

  ExecOptions opts_;
  std::unique_ptr<Evaluator> evaluator_;
  TableMap tables_;
  std::map<std::uint64_t, EncTable> results_;
  std::vector<Envelope> inbound_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Client side.

struct ClientOptions {
  /// Extra rows requested beyond n, to blur n from traffic analysis.
  std::size_t slack = 0;
  /// Literals narrower than this are encrypted at this width.
  std::size_t literal_width = 8;
};

/// Decrypts fetched rows and checks them against the count n: exactly n
/// rows present, all ahead of the absent ones. Returns the present rows.
inline PlainTable client_verify(const ClientKeys& keys, const Schema& schema,
                                std::span<const EncRow> rows, std::size_t n) {
  PlainTable out{"result", schema, {}};
  std::size_t present = 0;
  bool seen_absent = false;
  for (const auto& row : rows) {
    const bool p = keys.decrypt(row.presence);
    if (p && seen_absent)
      throw Error(Errc::kVerificationFailure, "present row after an absent row");
    seen_absent = seen_absent || !p;
    if (!p) continue;
    ++present;
    out.rows.push_back(decrypt_row(keys, row));
  }
  if (present != n)
    throw Error(Errc::kVerificationFailure, "reply holds " + std::to_string(present) +
                                                " present rows, count said " + std::to_string(n));
  return out;
}

/// The only holder of secret keys.
class ClientSession {
 public:
  explicit ClientSession(const SecurityContext& ctx, ClientOptions opts = {},
                         std::optional<std::uint64_t> key_seed = std::nullopt)
      : keys_(keygen(ctx, key_seed)), opts_(opts) {}

  const KeyLadder& ladder() const { return keys_.ladder; }
  const ClientKeys& keys() const { return keys_.client; }
  const PublicKey& public_key() const { return keys_.ladder.public_key(1); }

  Envelope setup_keys() const {
    ByteWriter w;
    keys_.ladder.write(w);
    return Envelope{MessageType::kSetupKeys, 0, std::move(w).bytes()};
  }

  /// Encrypts every cell and sets every presence bit to E(1).
  Envelope upload(const PlainTable& table) const {
    ByteWriter w;
    encrypt_table(public_key(), table).write(w);
    return Envelope{MessageType::kUploadTable, 0, std::move(w).bytes()};
  }

  /// Replaces each plaintext literal with an encrypted slot. Operators and
  /// column names stay public.
  EncryptedQuery encrypt_literals(const Plan& plan) const {
    EncryptedQuery q{plan, {}};
    rewrite(q.plan, q.literals);
    return q;
  }

  Envelope submit_query(const Plan& plan) {
    auto q = encrypt_literals(plan);
    ByteWriter w;
    w.str(to_text(q.plan));
    w.u32(static_cast<std::uint32_t>(q.literals.size()));
    for (const auto& l : q.literals) l.write(w);
    const auto id = next_query_id_++;
    pending_[id] = Pending{};
    return Envelope{MessageType::kQuery, id, std::move(w).bytes()};
  }

  /// Decrypts the count and answers with n' = min(capacity, n + slack).
  Envelope receive_count(const Envelope& msg) {
    auto& p = pending(msg, MessageType::kCountReply);
    ByteReader r(msg.payload);
    auto count = CipherWord::read(r);
    p.capacity = r.u32();
    p.schema = detail::read_schema(r);
    r.expect_done();
    p.n = static_cast<std::size_t>(decrypt_word(keys_.client, count));
    p.n_prime = std::min(p.capacity, p.n + opts_.slack);
    ByteWriter w;
    w.u64(p.n_prime);
    return Envelope{MessageType::kFetchRequest, msg.query_id, std::move(w).bytes()};
  }

  PlainTable receive_rows(const Envelope& msg) {
    auto& p = pending(msg, MessageType::kFetchReply);
    ByteReader r(msg.payload);
    auto n = r.u32();
    std::vector<EncRow> rows;
    for (std::uint32_t i = 0; i < n; ++i) rows.push_back(EncRow::read(r));
    r.expect_done();
    auto schema = p.schema;
    auto expected = p.n;
    pending_.erase(msg.query_id);
    return client_verify(keys_.client, schema, rows, expected);
  }

  /// n as decrypted from the count reply of a pending query.
  std::optional<std::size_t> decrypted_count(std::uint64_t query_id) const {
    auto it = pending_.find(query_id);
    if (it == pending_.end()) return std::nullopt;
    return it->second.n;
  }

 private:
  struct Pending {
    std::size_t n = 0;
    std::size_t n_prime = 0;
    std::size_t capacity = 0;
    Schema schema;
  };

  Pending& pending(const Envelope& msg, MessageType expected) {
    if (msg.type != expected)
      throw Error(Errc::kInvalidArgument, "expected " + std::string(to_string(expected)) + ", got " +
                                              std::string(to_string(msg.type)));
    auto it = pending_.find(msg.query_id);
    if (it == pending_.end())
      throw Error(Errc::kInvalidArgument, "unknown query id " + std::to_string(msg.query_id));
    return it->second;
  }

  void rewrite(Plan& plan, std::vector<CipherWord>& literals) const {
    if (plan.op == PlanOp::kSelect) rewrite(plan.pred, literals);
    for (auto& c : plan.children) rewrite(c, literals);
  }
  void rewrite(PredExpr& pred, std::vector<CipherWord>& literals) const {
    for (auto* o : {&pred.lhs, &pred.rhs}) {
      if (pred.kind != PredExpr::Kind::kCompare || o->kind != Operand::Kind::kLiteral) continue;
      const auto width = std::max(opts_.literal_width, bit_length(o->value));
      literals.push_back(encrypt_word(public_key(), o->value, width));
      *o = Operand::enc(literals.size() - 1);
    }
    for (auto& c : pred.children) rewrite(c, literals);
  }

  KeyPair keys_;
  ClientOptions opts_;
  std::uint64_t next_query_id_ = 1;
  std::map<std::uint64_t, Pending> pending_;
};

}  // namespace encdb
