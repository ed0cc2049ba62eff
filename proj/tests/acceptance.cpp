// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails or runs past its time limit.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "encdb/csv.hpp"
#include "encdb/engine.hpp"

namespace {

using namespace encdb;
using Clock = std::chrono::steady_clock;

struct Outcome {
  std::uint64_t checks = 0;
  std::uint64_t failures = 0;
  std::string first_failure;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (ok) return;
    if (failures++ == 0) first_failure = what;
  }
  template <typename A, typename B>
  void expect_eq(const A& a, const B& b, const std::string& what) {
    expect(a == b, what);
  }
};

// ---------------------------------------------------------------------------
// 1. Gate layer.

Outcome gate_layer() {
  Outcome out;
  auto kp = keygen(SecurityContext::leveled(3, 8), 1);
  Evaluator ev(kp.ladder);
  const auto& keys = kp.client;
  for (std::uint32_t ea = 1; ea <= 3; ++ea)
    for (std::uint32_t eb = 1; eb <= 3; ++eb)
      for (bool a : {false, true})
        for (bool b : {false, true}) {
          const auto tag = "epochs " + std::to_string(ea) + "," + std::to_string(eb) + " inputs " +
                           std::to_string(a) + "," + std::to_string(b);
          auto ca = ev.encrypt(a, ea);
          auto cb = ev.encrypt(b, eb);
          out.expect_eq(keys.decrypt(ev.gate_xor(ca, cb)), a != b, "xor " + tag);
          out.expect_eq(keys.decrypt(ev.gate_and(ca, cb)), a && b, "and " + tag);
          out.expect_eq(keys.decrypt(ev.gate_or(ca, cb)), a || b, "or " + tag);
          out.expect_eq(keys.decrypt(ev.gate_not(ca)), !a, "not " + tag);
          // All 16 two-input functions in algebraic normal form.
          for (unsigned f = 0; f < 16; ++f) {
            const bool c0 = f & 1U, c1 = f & 2U, c2 = f & 4U, c3 = f & 8U;
            auto r = ev.encrypt(c0, 1);
            r = ev.gate_xor(r, ev.gate_and(ev.encrypt(c1, 1), ca));
            r = ev.gate_xor(r, ev.gate_and(ev.encrypt(c2, 1), cb));
            r = ev.gate_xor(r, ev.gate_and(ev.encrypt(c3, 1), ev.gate_and(ca, cb)));
            const bool want = c0 ^ (c1 && a) ^ (c2 && b) ^ (c3 && a && b);
            out.expect_eq(keys.decrypt(r), want, "anf " + std::to_string(f) + " " + tag);
          }
        }

  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const bool b = rng() & 1U;
    auto c = ev.encrypt(b, 1 + static_cast<std::uint32_t>(rng() % 2));
    for (auto d = rng() % 8; d > 0; --d) c = ev.gate_and(c, ev.encrypt(true, c.epoch()));
    if (c.epoch() == 3) c = ev.encrypt(b, 2);
    auto r = ev.refresh(c);
    out.expect_eq(keys.decrypt(r), b, "refresh " + std::to_string(i));
    out.expect_eq(r.epoch(), c.epoch() + 1, "refresh epoch " + std::to_string(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 2. Circuits at w = 4.

Outcome circuits() {
  Outcome out;
  auto kp = keygen(SecurityContext::circular(8), 2);
  Evaluator ev(kp.ladder);
  auto dec = [&](const CipherWord& w) { return decrypt_word(kp.client, w); };
  auto bit = [&](const CipherBit& b) { return kp.client.decrypt(b); };
  constexpr std::size_t w = 4;
  for (std::uint64_t a = 0; a < 16; ++a)
    for (std::uint64_t b = 0; b < 16; ++b) {
      const auto tag = std::to_string(a) + "," + std::to_string(b);
      auto x = encrypt_word(ev, a, w);
      auto y = encrypt_word(ev, b, w);
      out.expect_eq(dec(word_add(ev, x, y)), (a + b) % 16, "add " + tag);
      const bool eq = bit(word_eq(ev, x, y));
      const bool gt = bit(word_gt(ev, x, y));
      const bool lt = bit(word_gt(ev, y, x));
      out.expect_eq(eq, a == b, "eq " + tag);
      out.expect_eq(gt, a > b, "gt " + tag);
      out.expect(int(eq) + int(gt) + int(lt) == 1, "trichotomy " + tag);
      out.expect_eq(dec(word_div(ev, x, y)), b == 0 ? 0 : a / b, "div " + tag);
      for (bool f : {false, true}) {
        auto cf = ev.encrypt(f);
        out.expect_eq(dec(word_mux(ev, cf, x, y)), f ? a : b, "mux " + tag);
        out.expect_eq(dec(word_and_bit(ev, x, cf)), f ? a : 0, "and_bit " + tag);
        out.expect_eq(dec(word_add_bit(ev, x, cf)), (a + f) % 16, "add_bit " + tag);
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// 3 and 4. Operators against the oracle, and shape obliviousness.

struct Sample {
  PlainTable plain;
  std::vector<bool> presence;

  PlainTable present() const {
    PlainTable t{plain.name, plain.schema, {}};
    for (std::size_t i = 0; i < plain.rows.size(); ++i)
      if (presence[i]) t.rows.push_back(plain.rows[i]);
    return t;
  }
};

EncTable encrypt_sample(const PublicKey& pk, const Sample& s) {
  auto flags = std::make_unique<bool[]>(s.presence.size());
  std::copy(s.presence.begin(), s.presence.end(), flags.get());
  return encrypt_table(pk, s.plain, std::span<const bool>(flags.get(), s.presence.size()));
}

class SampleGen {
 public:
  explicit SampleGen(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  /// Up to 8 rows at width 8; half the samples draw from a small value range
  /// so that duplicates and group collisions occur.
  Sample table(const std::vector<std::string>& cols, std::size_t rows) {
    Sample s;
    std::vector<Column> schema;
    for (const auto& c : cols) schema.push_back(Column{c, 8});
    s.plain = PlainTable{"t", Schema(schema), {}};
    const std::uint64_t hi = below(2) ? 255 : 3;
    for (std::size_t r = 0; r < rows; ++r) {
      Row row;
      for (std::size_t c = 0; c < cols.size(); ++c) row.push_back(rng_() % (hi + 1));
      s.plain.rows.push_back(std::move(row));
      s.presence.push_back(below(4) != 0);
    }
    return s;
  }
  Sample table(const std::vector<std::string>& cols) { return table(cols, below(9)); }

  /// Same shape as `s`, fresh values and presence bits.
  Sample reshuffle(const Sample& s) {
    std::vector<std::string> cols;
    for (const auto& c : s.plain.schema.columns()) cols.push_back(c.name);
    return table(cols, s.plain.rows.size());
  }

  /// Right operand for intersect/diff: a mix of rows copied from `left` and fresh rows.
  Sample overlapping(const Sample& left) {
    auto s = table({"a", "b"});
    for (auto& row : s.plain.rows)
      if (!left.plain.rows.empty() && below(2)) row = left.plain.rows[below(left.plain.rows.size())];
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

enum class Op {
  kSelect, kProject, kCross, kCount, kSum, kMin, kMax, kAvg,
  kDistinct, kSort, kGroupBy, kUnion, kIntersect, kDiff,
};

constexpr Op kAllOps[] = {Op::kSelect, Op::kProject,  Op::kCross,   Op::kCount, Op::kSum,
                          Op::kMin,    Op::kMax,      Op::kAvg,     Op::kDistinct, Op::kSort,
                          Op::kGroupBy, Op::kUnion,   Op::kIntersect, Op::kDiff};

const char* op_name(Op op) {
  switch (op) {
    case Op::kSelect: return "select";
    case Op::kProject: return "project";
    case Op::kCross: return "cross";
    case Op::kCount: return "count";
    case Op::kSum: return "sum";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kAvg: return "avg";
    case Op::kDistinct: return "distinct";
    case Op::kSort: return "sort";
    case Op::kGroupBy: return "groupby";
    case Op::kUnion: return "union";
    case Op::kIntersect: return "intersect";
    case Op::kDiff: return "diff";
  }
  return "?";
}

/// Public parameters of one operator invocation, drawn once per trial so
/// that the obliviousness check can replay them on different data.
struct Params {
  CmpOp cmp = CmpOp::kEq;
  std::string cmp_col = "a";
  std::uint64_t literal = 0;
  std::vector<std::string> columns;
  SortDirection dir = SortDirection::kAscending;
};

Params draw_params(SampleGen& g) {
  static constexpr CmpOp kCmps[] = {CmpOp::kEq, CmpOp::kNe, CmpOp::kGt, CmpOp::kLt, CmpOp::kGe, CmpOp::kLe};
  Params p;
  p.cmp = kCmps[g.below(6)];
  p.cmp_col = g.below(2) ? "a" : "b";
  p.literal = g.below(2) ? g.below(4) : g.below(256);
  for (const char* c : {"a", "b"})
    if (g.below(2)) p.columns.push_back(c);
  if (g.below(2)) std::reverse(p.columns.begin(), p.columns.end());
  p.dir = g.below(2) ? SortDirection::kAscending : SortDirection::kDescending;
  return p;
}

struct Inputs {
  Sample left;
  Sample right;
};

Inputs draw_inputs(SampleGen& g, Op op) {
  Inputs in{g.table({"a", "b"}), {}};
  switch (op) {
    case Op::kCross: in.right = g.table({"c", "d"}); break;
    case Op::kUnion: in.right = g.table({"a", "b"}); break;
    case Op::kIntersect:
    case Op::kDiff: in.right = g.overlapping(in.left); break;
    default: break;
  }
  return in;
}

/// Result of running one operator: the output table (aggregates as one row).
EncTable run_op(Evaluator& ev, Op op, const Params& p, const EncTable& l, const EncTable& r) {
  auto scalar = [&](CipherWord w) {
    EncTable t{"s", Schema({Column{"v", w.width()}}), {}};
    t.rows.push_back(EncRow{{std::move(w)}, ev.encrypt(true)});
    return t;
  };
  switch (op) {
    case Op::kSelect:
      return op_select(ev, Predicate::compare(p.cmp, ColumnRef{p.cmp_col}, encrypt_word(ev, p.literal, 8)), l);
    case Op::kProject: return op_project(p.columns, l);
    case Op::kCross: return op_cross(ev, l, r);
    case Op::kCount: return scalar(op_count(ev, l, 8));
    case Op::kSum: return scalar(op_sum(ev, "b", l));
    case Op::kMin: return scalar(op_min(ev, "b", l));
    case Op::kMax: return scalar(op_max(ev, "b", l));
    case Op::kAvg: return scalar(op_avg(ev, "b", l));
    case Op::kDistinct: return op_distinct(ev, l);
    case Op::kSort: return op_sort(ev, p.columns, p.dir, l);
    case Op::kGroupBy: return op_groupby_sum(ev, p.columns, "b", l);
    case Op::kUnion: return op_bag_union(l, r);
    case Op::kIntersect: return op_bag_intersect(ev, l, r);
    case Op::kDiff: return op_bag_diff(ev, l, r);
  }
  throw Error(Errc::kInvalidArgument, "unknown operator");
}

PlainTable oracle_op(Op op, const Params& p, const PlainTable& l, const PlainTable& r) {
  auto scalar = [](std::uint64_t v) { return PlainTable{"s", Schema({Column{"v", 8}}), {{v}}}; };
  switch (op) {
    case Op::kSelect: {
      PredExpr pred;
      pred.kind = PredExpr::Kind::kCompare;
      pred.op = p.cmp;
      pred.lhs = Operand::col(p.cmp_col);
      pred.rhs = Operand::lit(p.literal);
      return oracle::select(pred, l);
    }
    case Op::kProject: return oracle::project(p.columns, l);
    case Op::kCross: return oracle::cross(l, r);
    case Op::kCount: return scalar(oracle::count(l, 8));
    case Op::kSum: return scalar(oracle::sum("b", l));
    case Op::kMin: return scalar(oracle::min("b", l));
    case Op::kMax: return scalar(oracle::max("b", l));
    case Op::kAvg: return scalar(oracle::avg("b", l));
    case Op::kDistinct: return oracle::distinct(l);
    case Op::kSort: return oracle::sort(p.columns, p.dir, l);
    case Op::kGroupBy: return oracle::groupby_sum(p.columns, "b", l);
    case Op::kUnion: return oracle::bag_union(l, r);
    case Op::kIntersect: return oracle::bag_intersect(l, r);
    case Op::kDiff: return oracle::bag_diff(l, r);
  }
  throw Error(Errc::kInvalidArgument, "unknown operator");
}

std::string describe(const Sample& s) {
  std::ostringstream os;
  for (std::size_t i = 0; i < s.plain.rows.size(); ++i)
    os << format_row(s.plain.rows[i]) << (s.presence[i] ? "" : "*");
  return os.str();
}

Outcome operators() {
  Outcome out;
  auto kp = keygen(SecurityContext::circular(8), 3);
  Evaluator ev(kp.ladder);
  const auto& pk = kp.ladder.public_key(1);
  SampleGen g(3);
  for (Op op : kAllOps) {
    for (int trial = 0; trial < 200; ++trial) {
      const auto params = draw_params(g);
      const auto in = draw_inputs(g, op);
      const auto l = encrypt_sample(pk, in.left);
      const auto r = encrypt_sample(pk, in.right);
      const auto dec = decrypt_table(kp.client, run_op(ev, op, params, l, r)).present_rows();
      const auto want = oracle_op(op, params, in.left.present(), in.right.present());
      const auto tag = std::string(op_name(op)) + " trial " + std::to_string(trial) + " on " +
                       describe(in.left) + " / " + describe(in.right);
      const auto mismatch = multiset_mismatch(want.rows, dec.rows);
      out.expect(mismatch.empty(), tag + ": " + mismatch);
      // Sort must also order the present rows.
      if (op == Op::kSort) out.expect(dec.rows == want.rows, tag + ": present rows out of order");
    }
  }
  return out;
}

Outcome obliviousness() {
  Outcome out;
  auto kp = keygen(SecurityContext::circular(8), 4);
  Evaluator ev(kp.ladder);
  const auto& pk = kp.ladder.public_key(1);
  SampleGen g(4);
  for (Op op : kAllOps) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto params = draw_params(g);
      const auto a = draw_inputs(g, op);
      const Inputs b{g.reshuffle(a.left), g.reshuffle(a.right)};
      auto measure = [&](const Inputs& in) {
        const auto l = encrypt_sample(pk, in.left);
        const auto r = encrypt_sample(pk, in.right);
        ev.reset_stats();
        const auto capacity = run_op(ev, op, params, l, r).capacity();
        return std::pair(capacity, ev.stats());
      };
      const auto ma = measure(a);
      const auto mb = measure(b);
      const auto tag = std::string(op_name(op)) + " trial " + std::to_string(trial);
      out.expect_eq(ma.first, mb.first, tag + ": capacity");
      out.expect_eq(ma.second.gates(), mb.second.gates(), tag + ": gate count");
      out.expect_eq(ma.second.and_gates, mb.second.and_gates, tag + ": and gates");
      out.expect_eq(ma.second.refreshes, mb.second.refreshes, tag + ": refresh count");
      out.expect_eq(ma.second.encryptions, mb.second.encryptions, tag + ": encryptions");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// 5. Protocol over the computer catalog.

Outcome protocol() {
  Outcome out;
  auto pc = read_csv_file(std::string(ENCDB_FIXTURE_DIR) + "/pc.csv", "pc");
  ClientSession client(SecurityContext::circular(8), ClientOptions{}, 5);
  ServerStore server;
  server.receive(client.setup_keys());
  server.receive(client.upload(pc));
  const auto plan = parse_plan("select(speed>1, table(pc))", server.catalog());

  auto honest = [&]() {
    auto count = server.receive(client.submit_query(plan));
    auto fetch = client.receive_count(*count);
    return std::pair(*count, *server.receive(fetch));
  };

  auto [count, reply] = honest();
  out.expect_eq(client.decrypted_count(count.query_id), std::optional<std::size_t>(2), "presence sum");
  const auto rows = client.receive_rows(reply);
  out.expect_eq(as_multiset(rows.rows),
                std::vector<Row>{{1001, 3, 1024, 250, 2114}, {1002, 2, 512, 80, 478}},
                "returned rows");

  ByteWriter full;
  server.tables().at("pc").write(full);
  out.expect_eq(server.tables().at("pc").capacity(), std::size_t{3}, "capacity");
  out.expect(reply.payload.size() < full.bytes().size(),
             "fetch payload " + std::to_string(reply.payload.size()) + " bytes vs full table " +
                 std::to_string(full.bytes().size()));

  // Server drops one present row from an otherwise honest reply.
  auto [count2, reply2] = honest();
  ByteReader r(reply2.payload);
  const auto n = r.u32();
  std::vector<EncRow> fetched;
  for (std::uint32_t i = 0; i < n; ++i) fetched.push_back(EncRow::read(r));
  ByteWriter w;
  w.u32(n - 1);
  for (std::uint32_t i = 1; i < n; ++i) fetched[i].write(w);
  bool detected = false;
  try {
    client.receive_rows(Envelope{MessageType::kFetchReply, reply2.query_id, std::move(w).bytes()});
  } catch (const Error& e) {
    detected = e.code() == Errc::kVerificationFailure;
  }
  out.expect(detected, "short reply accepted");
  return out;
}

// ---------------------------------------------------------------------------
// 6. Noise semantics.

Outcome noise() {
  Outcome out;
  constexpr std::uint32_t budget = 8;
  auto chain = [&](Evaluator& ev) {
    auto x = ev.encrypt(true);
    for (std::uint32_t i = 0; i < budget + 1; ++i) x = ev.gate_and(x, ev.encrypt(true));
    return x;
  };
  std::uint64_t first_refreshes = 0;
  for (int run = 0; run < 2; ++run) {
    auto kp = keygen(SecurityContext::circular(budget), 6);
    Evaluator ev(kp.ladder);
    auto x = chain(ev);
    out.expect(kp.client.decrypt(x), "circular chain result");
    out.expect(ev.stats().refreshes >= 1, "circular chain refreshed");
    if (run == 0) first_refreshes = ev.stats().refreshes;
    else out.expect_eq(ev.stats().refreshes, first_refreshes, "refresh count deterministic");

    auto lv = keygen(SecurityContext::leveled(1, budget), 6);
    Evaluator ev1(lv.ladder);
    Errc code = Errc::kInvalidArgument;
    try {
      chain(ev1);
    } catch (const Error& e) {
      code = e.code();
    }
    out.expect(code == Errc::kLadderExhausted, "leveled D=1 raised " + std::string(to_string(code)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// 7. Composition.

Outcome composition() {
  Outcome out;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto w = random_workload(seed);
    out.expect_eq(to_text(random_workload(seed).plan), to_text(w.plan), "seed " + std::to_string(seed) + " not reproducible");
    const auto ops = operator_count(w.plan);
    out.expect(ops >= 2 && ops <= 4, "seed " + std::to_string(seed) + " has " + std::to_string(ops) + " operators");
    RunOptions opts;
    opts.key_seed = seed;
    auto rep = diff_run(w.plan, w.tables, opts);
    out.expect(rep.pass, "seed " + std::to_string(seed) + " " + to_text(w.plan) + ": " + rep.detail);
  }
  return out;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "gate layer truth tables and refresh transparency", 5, gate_layer},
      {2, "w=4 circuits exhaustive with trichotomy", 120, circuits},
      {3, "14 operators x 200 random tables vs oracle", 600, operators},
      {4, "shape obliviousness of capacities, gates, refreshes", 600, obliviousness},
      {5, "end-to-end select with compact fetch and verification", 60, protocol},
      {6, "noise budget: circular refresh, leveled D=1 exhausted", 5, noise},
      {7, "100 random 2-4 operator plans via diff_run", 600, composition},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    std::string error;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = error.empty() && o.failures == 0 && in_time;
    failed += pass ? 0 : 1;
    std::printf("[%s] criterion %d: %s (%llu checks, %llu failures, %.2fs, limit %.0fs)\n",
                pass ? "PASS" : "FAIL", c.id, c.name, static_cast<unsigned long long>(o.checks),
                static_cast<unsigned long long>(o.failures), secs, c.limit_s);
    if (!error.empty()) std::printf("    exception: %s\n", error.c_str());
    if (o.failures) std::printf("    first failure: %s\n", o.first_failure.c_str());
    if (!in_time) std::printf("    exceeded time limit\n");
    std::fflush(stdout);
  }
  std::printf("%d of 7 criteria passed\n", 7 - failed);
  return failed == 0 ? 0 : 1;
}
