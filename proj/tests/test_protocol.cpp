// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "encdb/protocol.hpp"
#include "support.hpp"

namespace encdb {
namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception thrown";
  return Errc::kInvalidArgument;
}

class Protocol : public ::testing::Test {
 protected:
  Protocol() : client_(SecurityContext::circular(8), ClientOptions{}, 77) {
    server_.receive(client_.setup_keys());
    server_.receive(client_.upload(testing::pc_table()));
  }

  Plan plan(const char* text) { return parse_plan(text, server_.catalog()); }

  ClientSession client_;
  ServerStore server_;
};

TEST_F(Protocol, UploadRoundTrip) {
  const auto& stored = server_.tables().at("pc");
  auto back = decrypt_table(client_.keys(), stored);
  EXPECT_EQ(back.table.rows, testing::pc_table().rows);
  EXPECT_EQ(back.presence, (std::vector<bool>{true, true, true}));
}

TEST_F(Protocol, UploadOverflowAndEmpty) {
  PlainTable narrow{"n", Schema({{"price", 8}}), {{2114}}};
  EXPECT_EQ(code_of([&] { client_.upload(narrow); }), Errc::kValueOverflow);
  server_.receive(client_.upload(PlainTable{"e", Schema({{"x", 4}}), {}}));
  EXPECT_EQ(server_.tables().at("e").capacity(), 0u);
}

TEST_F(Protocol, LiteralsAreEncrypted) {
  auto q = client_.encrypt_literals(plan("select(speed > 1, table(pc))"));
  ASSERT_EQ(q.literals.size(), 1u);
  EXPECT_EQ(q.plan.pred.rhs.kind, Operand::Kind::kSlot);
  EXPECT_EQ(to_text(q.plan), "select(speed>$0, table(pc))");
  EXPECT_EQ(decrypt_word(client_.keys(), q.literals[0]), 1u);

  auto again = client_.encrypt_literals(plan("select(speed > 1, table(pc))"));
  ByteWriter a;
  ByteWriter b;
  q.literals[0].write(a);
  again.literals[0].write(b);
  EXPECT_NE(a.bytes(), b.bytes());

  auto free = client_.encrypt_literals(plan("count(table(pc))"));
  EXPECT_TRUE(free.literals.empty());
  EXPECT_TRUE(free.plan == plan("count(table(pc))"));
}

TEST_F(Protocol, WideLiteralsKeepTheirBits) {
  auto q = client_.encrypt_literals(plan("select(price = 2114, table(pc))"));
  EXPECT_EQ(q.literals[0].width(), 12u);
  EXPECT_EQ(decrypt_word(client_.keys(), q.literals[0]), 2114u);
}

TEST_F(Protocol, ServerRejectsPlaintextLiterals) {
  ByteWriter w;
  w.str("select(speed > 1, table(pc))");
  w.u32(0);
  Envelope msg{MessageType::kQuery, 9, std::move(w).bytes()};
  EXPECT_EQ(code_of([&] { server_.receive(msg); }), Errc::kTypeError);
}

TEST_F(Protocol, ResultCountIsOneWord) {
  auto& ev = server_.evaluator();
  const auto& t = server_.tables().at("pc");
  auto c = result_count(ev, t, bit_length(t.capacity()));
  EXPECT_EQ(c.width(), 2u);
  EXPECT_EQ(decrypt_word(client_.keys(), c), 3u);
  EncTable empty{"e", t.schema, {}};
  EXPECT_EQ(decrypt_word(client_.keys(), result_count(ev, empty, 1)), 0u);
}

TEST_F(Protocol, FetchOrdersPresentFirst) {
  auto& ev = server_.evaluator();
  auto sel = op_select(ev, Predicate::compare(CmpOp::kLt, ColumnRef{"speed"}, encrypt_word(ev, 3, 4)),
                       server_.tables().at("pc"));
  // Present rows are 1002 and 1003, behind the absent 1001.
  auto rows = result_fetch(ev, sel, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(client_.keys().decrypt(rows[0].presence));
  EXPECT_TRUE(client_.keys().decrypt(rows[1].presence));
  EXPECT_FALSE(client_.keys().decrypt(rows[2].presence));
  EXPECT_EQ(decrypt_row(client_.keys(), rows[0])[0], 1002u);
  EXPECT_EQ(decrypt_row(client_.keys(), rows[1])[0], 1003u);
  EXPECT_EQ(decrypt_row(client_.keys(), rows[2])[0], 1001u);

  EXPECT_TRUE(result_fetch(ev, sel, 0).empty());
  EXPECT_EQ(code_of([&] { result_fetch(ev, sel, 4); }), Errc::kFetchTooLarge);
}

TEST_F(Protocol, EndToEndSelect) {
  auto count = server_.receive(client_.submit_query(plan("select(speed > 1, table(pc))")));
  ASSERT_TRUE(count);
  EXPECT_EQ(count->type, MessageType::kCountReply);
  auto fetch = client_.receive_count(*count);
  EXPECT_EQ(client_.decrypted_count(count->query_id), 2u);
  auto reply = server_.receive(fetch);
  ASSERT_TRUE(reply);
  auto rows = client_.receive_rows(*reply);
  EXPECT_EQ(as_multiset(rows.rows),
            (std::vector<Row>{{1001, 3, 1024, 250, 2114}, {1002, 2, 512, 80, 478}}));
}

TEST_F(Protocol, SlackAndEmptyResult) {
  ClientSession client(SecurityContext::circular(8), ClientOptions{5, 8});
  ServerStore server;
  server.receive(client.setup_keys());
  server.receive(client.upload(testing::pc_table()));
  auto p = parse_plan("select(speed > 7, table(pc))", server.catalog());
  auto count = server.receive(client.submit_query(p));
  auto fetch = client.receive_count(*count);
  ByteReader r(fetch.payload);
  EXPECT_EQ(r.u64(), 3u);
  auto rows = client.receive_rows(*server.receive(fetch));
  EXPECT_TRUE(rows.rows.empty());
}

TEST_F(Protocol, ShortReplyFailsVerification) {
  auto count = server_.receive(client_.submit_query(plan("select(speed > 1, table(pc))")));
  auto reply = *server_.receive(client_.receive_count(*count));
  ByteReader r(reply.payload);
  const auto n = r.u32();
  std::vector<EncRow> rows;
  for (std::uint32_t i = 0; i < n; ++i) rows.push_back(EncRow::read(r));
  ByteWriter w;
  w.u32(n - 1);
  for (std::uint32_t i = 1; i < n; ++i) rows[i].write(w);
  Envelope tampered{MessageType::kFetchReply, reply.query_id, std::move(w).bytes()};
  EXPECT_EQ(code_of([&] { client_.receive_rows(tampered); }), Errc::kVerificationFailure);
}

TEST_F(Protocol, VerifyRejectsMisorderedRows) {
  auto& ev = server_.evaluator();
  const auto& t = server_.tables().at("pc");
  std::vector<EncRow> rows = {t.rows[0], t.rows[1]};
  rows[0].presence = ev.encrypt(false);
  EXPECT_EQ(code_of([&] { client_verify(client_.keys(), t.schema, rows, 1); }),
            Errc::kVerificationFailure);
  EXPECT_EQ(client_verify(client_.keys(), t.schema, {}, 0).rows.size(), 0u);
}

TEST_F(Protocol, CompactFetchPayload) {
  auto count = server_.receive(client_.submit_query(plan("select(speed > 1, table(pc))")));
  auto reply = *server_.receive(client_.receive_count(*count));
  ByteWriter full;
  server_.tables().at("pc").write(full);
  EXPECT_LT(reply.payload.size(), full.bytes().size());
}

TEST_F(Protocol, EnvelopeRoundTrip) {
  auto e = client_.submit_query(plan("select(speed > 1, table(pc))"));
  auto bytes = e.serialize();
  auto back = Envelope::deserialize(bytes);
  EXPECT_EQ(back.type, e.type);
  EXPECT_EQ(back.query_id, e.query_id);
  EXPECT_EQ(back.payload, e.payload);
  EXPECT_EQ(back.serialize(), bytes);
  bytes.resize(bytes.size() - 1);
  EXPECT_EQ(code_of([&] { Envelope::deserialize(bytes); }), Errc::kDecodeError);
}

TEST_F(Protocol, ConcurrentQueries) {
  const char* texts[] = {"select(speed > 1, table(pc))", "select(speed > 2, table(pc))",
                         "select(price < 1000, table(pc))", "count(table(pc))"};
  std::vector<Envelope> queries;
  for (const char* t : texts) queries.push_back(client_.submit_query(plan(t)));
  std::vector<Envelope> counts(queries.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < queries.size(); ++i)
    workers.emplace_back([&, i] { counts[i] = *server_.receive(queries[i]); });
  for (auto& w : workers) w.join();

  std::vector<Envelope> fetches;
  for (const auto& c : counts) fetches.push_back(client_.receive_count(c));
  std::vector<Envelope> replies(fetches.size());
  workers.clear();
  for (std::size_t i = 0; i < fetches.size(); ++i)
    workers.emplace_back([&, i] { replies[i] = *server_.receive(fetches[i]); });
  for (auto& w : workers) w.join();

  const std::size_t expected[] = {2, 1, 2, 1};
  for (std::size_t i = 0; i < replies.size(); ++i)
    EXPECT_EQ(client_.receive_rows(replies[i]).rows.size(), expected[i]) << texts[i];
}

TEST_F(Protocol, ServerHoldsNoSecrets) {
  for (const auto& msg : server_.inbound())
    EXPECT_TRUE(msg.type == MessageType::kSetupKeys || msg.type == MessageType::kUploadTable);
  static_assert(!std::is_constructible_v<ServerStore, ClientKeys>);
  EXPECT_EQ(code_of([] { ServerStore().evaluator(); }), Errc::kInvalidArgument);
}

}  // namespace
}  // namespace encdb
