// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// End-to-end driver: runs a plan through the full client/server flow,
// compares against the plaintext oracle, and generates random workloads.

#pragma once

#include <chrono>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "encdb/oracle.hpp"
#include "encdb/protocol.hpp"

namespace encdb {

struct RunOptions {
  SecurityContext security = SecurityContext::circular(8);
  std::size_t default_width = 8;
  std::size_t slack = 0;
  CursorAdvance cursor = CursorAdvance::kAtCursor;
  /// Flip the output of this AND gate (0-based, counted from query start).
  std::optional<std::uint64_t> fault_and;
  std::optional<std::uint64_t> key_seed;
};

struct RunStats {
  GateStats gates;
  double wall_ms = 0;
  std::size_t result_capacity = 0;
  std::size_t n = 0;
  std::size_t n_prime = 0;
  std::size_t fetch_bytes = 0;
};

struct RunResult {
  PlainTable rows;
  RunStats stats;
  /// Every message in send order, as it crossed the boundary.
  std::vector<Envelope> transcript;
};

namespace detail {

inline Envelope wire(const Envelope& e, std::vector<Envelope>& transcript) {
  auto copy = Envelope::deserialize(e.serialize());
  transcript.push_back(copy);
  return copy;
}

}  // namespace detail

/// Setup, literal encryption, server evaluation, count, fetch and verify.
/// Gate statistics cover query evaluation and result return only.
inline RunResult run_encrypted(const Plan& plan, const oracle::PlainCatalog& tables,
                               const RunOptions& opts = {}) {
  RunResult out;
  auto& tr = out.transcript;
  ClientSession client(opts.security, ClientOptions{opts.slack, opts.default_width}, opts.key_seed);
  ServerStore server(ExecOptions{opts.default_width, opts.cursor});

  server.receive(detail::wire(client.setup_keys(), tr));
  for (const auto& [name, t] : tables) {
    PlainTable named = t;
    named.name = name;
    server.receive(detail::wire(client.upload(named), tr));
  }

  auto& ev = server.evaluator();
  ev.reset_stats();
  ev.inject_fault_at_and(opts.fault_and);
  const auto start = std::chrono::steady_clock::now();

  auto count = server.receive(detail::wire(client.submit_query(plan), tr));
  auto count_msg = detail::wire(*count, tr);
  const auto query_id = count_msg.query_id;
  auto fetch = client.receive_count(count_msg);
  out.stats.n = client.decrypted_count(query_id).value_or(0);
  auto fetch_msg = detail::wire(fetch, tr);
  {
    ByteReader r(fetch_msg.payload);
    out.stats.n_prime = static_cast<std::size_t>(r.u64());
  }
  auto reply = detail::wire(*server.receive(fetch_msg), tr);
  out.stats.fetch_bytes = reply.payload.size();
  out.rows = client.receive_rows(reply);

  out.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out.stats.gates = ev.stats();
  {
    ByteReader r(count_msg.payload);
    CipherWord::read(r);
    out.stats.result_capacity = r.u32();
  }
  return out;
}

struct DiffReport {
  bool pass = false;
  std::string detail;
  PlainTable expected;
  PlainTable actual;
  RunStats stats;
};

inline std::string format_row(const Row& r) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < r.size(); ++i) os << (i ? ", " : "") << r[i];
  os << ')';
  return os.str();
}

/// Empty if equal as multisets, else names the first differing element.
inline std::string multiset_mismatch(const std::vector<Row>& expected, const std::vector<Row>& actual) {
  auto e = as_multiset(expected);
  auto a = as_multiset(actual);
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < e.size() || j < a.size()) {
    if (i < e.size() && j < a.size() && e[i] == a[j]) {
      ++i;
      ++j;
      continue;
    }
    if (j >= a.size() || (i < e.size() && e[i] < a[j]))
      return "missing row " + format_row(e[i]) + " (expected " + std::to_string(e.size()) +
             " rows, got " + std::to_string(a.size()) + ")";
    return "unexpected row " + format_row(a[j]) + " (expected " + std::to_string(e.size()) +
           " rows, got " + std::to_string(a.size()) + ")";
  }
  return {};
}

/// PASS iff the encrypted flow and the oracle agree as multisets.
inline DiffReport diff_run(const Plan& plan, const oracle::PlainCatalog& tables,
                           const RunOptions& opts = {}) {
  DiffReport rep;
  rep.expected = oracle::run(plan, tables, PlanOptions{opts.default_width});
  try {
    auto res = run_encrypted(plan, tables, opts);
    rep.actual = std::move(res.rows);
    rep.stats = res.stats;
  } catch (const Error& e) {
    rep.detail = std::string("encrypted run failed: ") + e.what();
    return rep;
  }
  rep.detail = multiset_mismatch(rep.expected.rows, rep.actual.rows);
  rep.pass = rep.detail.empty();
  return rep;
}

// ---------------------------------------------------------------------------
// Random workloads.

struct RandomConfig {
  std::size_t max_rows = 6;
  std::size_t min_width = 4;
  std::size_t max_width = 8;
  std::size_t min_ops = 2;
  std::size_t max_ops = 4;
  std::size_t max_depth = 3;
};

struct Workload {
  oracle::PlainCatalog tables;
  Plan plan;
};

namespace detail {

class WorkloadGenerator {
 public:
  WorkloadGenerator(std::uint64_t seed, RandomConfig cfg) : rng_(seed), cfg_(cfg) {}

  Workload generate() {
    Workload w;
    const auto width = uniform(cfg_.min_width, cfg_.max_width);
    w.tables["r"] = table("r", {"a", "b"}, width);
    w.tables["s"] = table("s", {"a", "b"}, width);
    w.tables["t"] = table("t", {"c", "d"}, width);
    catalog_ = oracle::schemas(w.tables);
    const auto ops = uniform(cfg_.min_ops, cfg_.max_ops);
    w.plan = gen(ops, cfg_.max_depth, Family::kAb, Mode::kAny).first;
    return w;
  }

 private:
  enum class Family { kAb, kCd };
  // kPreserve: output schema equals the base table's (select/distinct/sort/set ops).
  // kNoAggregate: may also project; never introduces new column names.
  enum class Mode { kAny, kNoAggregate, kPreserve };

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool coin() { return uniform(0, 1) == 1; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[uniform(0, v.size() - 1)];
  }

  PlainTable table(const std::string& name, const std::vector<std::string>& cols, std::size_t width) {
    std::vector<Column> schema;
    for (const auto& c : cols) schema.push_back(Column{c, width});
    PlainTable t{name, Schema(schema), {}};
    // Small value ranges make duplicates and matches across tables likely.
    const auto hi = coin() ? std::min<std::uint64_t>(3, max_value(width)) : max_value(width);
    const auto rows = uniform(0, cfg_.max_rows);
    for (std::size_t r = 0; r < rows; ++r) {
      Row row;
      for (std::size_t c = 0; c < cols.size(); ++c)
        row.push_back(std::uniform_int_distribution<std::uint64_t>(0, hi)(rng_));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  static std::size_t capacity(std::size_t depth) { return (std::size_t{1} << depth) - 1; }

  std::vector<std::string> names(const Schema& s) {
    std::vector<std::string> out;
    for (const auto& c : s.columns()) out.push_back(c.name);
    return out;
  }

  std::vector<std::string> subset(std::vector<std::string> all, std::size_t min_size) {
    std::shuffle(all.begin(), all.end(), rng_);
    std::vector<std::string> out;
    for (const auto& n : all)
      if (out.size() < min_size || coin()) out.push_back(n);
    return out;
  }

  PredExpr comparison(const Schema& s) {
    PredExpr p;
    p.kind = PredExpr::Kind::kCompare;
    p.op = static_cast<CmpOp>(uniform(0, 5));
    const auto& col = s.column(uniform(0, s.size() - 1));
    p.lhs = Operand::col(col.name);
    if (s.size() > 1 && uniform(0, 3) == 0) {
      p.rhs = Operand::col(s.column(uniform(0, s.size() - 1)).name);
    } else {
      const auto hi = coin() ? std::min<std::uint64_t>(4, max_value(col.width)) : max_value(col.width);
      p.rhs = Operand::lit(std::uniform_int_distribution<std::uint64_t>(0, hi)(rng_));
    }
    return p;
  }

  PredExpr predicate(const Schema& s) {
    auto p = comparison(s);
    switch (uniform(0, 5)) {
      case 0:
      case 1: {
        PredExpr n;
        n.kind = coin() ? PredExpr::Kind::kAnd : PredExpr::Kind::kOr;
        n.children = {std::move(p), comparison(s)};
        return n;
      }
      case 2: {
        PredExpr n;
        n.kind = PredExpr::Kind::kNot;
        n.children = {std::move(p)};
        return n;
      }
      default: return p;
    }
  }

  std::pair<Plan, Schema> leaf(Family fam) {
    Plan p;
    p.op = PlanOp::kTable;
    p.table = fam == Family::kCd ? "t" : (coin() ? "r" : "s");
    return {p, catalog_.at(p.table)};
  }

  std::pair<Plan, Schema> gen(std::size_t ops, std::size_t depth, Family fam, Mode mode) {
    if (ops == 0) return leaf(fam);
    const auto rest = ops - 1;
    const auto sub = capacity(depth - 1);
    std::vector<PlanOp> choices;
    if (rest <= sub) {
      choices.insert(choices.end(), {PlanOp::kSelect, PlanOp::kDistinct, PlanOp::kSort});
      if (mode != Mode::kPreserve) choices.push_back(PlanOp::kProject);
      if (mode == Mode::kAny)
        choices.insert(choices.end(), {PlanOp::kCount, PlanOp::kSum, PlanOp::kMin, PlanOp::kMax,
                                       PlanOp::kAvg, PlanOp::kGroupBy});
    }
    if (rest <= 2 * sub) {
      choices.insert(choices.end(), {PlanOp::kUnion, PlanOp::kIntersect, PlanOp::kDiff});
      if (mode == Mode::kAny && fam == Family::kAb) choices.push_back(PlanOp::kCross);
    }

    Plan p;
    p.op = pick(choices);
    const bool binary = p.op == PlanOp::kUnion || p.op == PlanOp::kIntersect ||
                        p.op == PlanOp::kDiff || p.op == PlanOp::kCross;
    if (binary) {
      const auto lo = rest > sub ? rest - sub : 0;
      const auto left_ops = uniform(lo, std::min(rest, sub));
      const auto right_ops = rest - left_ops;
      if (p.op == PlanOp::kCross) {
        auto [l, ls] = gen(left_ops, depth - 1, Family::kAb, Mode::kNoAggregate);
        auto [r, rs] = gen(right_ops, depth - 1, Family::kCd, Mode::kNoAggregate);
        p.children = {std::move(l), std::move(r)};
        auto cols = ls.columns();
        cols.insert(cols.end(), rs.columns().begin(), rs.columns().end());
        return {std::move(p), Schema(cols)};
      }
      auto [l, ls] = gen(left_ops, depth - 1, fam, Mode::kPreserve);
      auto [r, rs] = gen(right_ops, depth - 1, fam, Mode::kPreserve);
      p.children = {std::move(l), std::move(r)};
      return {std::move(p), ls};
    }

    auto [c, cs] = gen(rest, depth - 1, fam, mode);
    p.children = {std::move(c)};
    auto cols = names(cs);
    switch (p.op) {
      case PlanOp::kSelect: p.pred = predicate(cs); break;
      case PlanOp::kProject: p.columns = subset(cols, 1); break;
      case PlanOp::kSort:
        p.columns = subset(cols, 1);
        if (p.columns.size() > 2) p.columns.resize(2);
        p.direction = coin() ? SortDirection::kAscending : SortDirection::kDescending;
        break;
      case PlanOp::kSum:
      case PlanOp::kMin:
      case PlanOp::kMax:
      case PlanOp::kAvg: p.column = pick(cols); break;
      case PlanOp::kGroupBy: {
        std::vector<std::string> groupable;
        for (const auto& n : cols)
          if (n != "sum") groupable.push_back(n);
        p.columns = groupable.empty() ? groupable : subset(groupable, 0);
        p.column = pick(cols);
        break;
      }
      default: break;
    }
    return {p, output_schema(p, catalog_)};
  }

  std::mt19937_64 rng_;
  RandomConfig cfg_;
  Catalog catalog_;
};

}  // namespace detail

/// Tables r(a,b), s(a,b), t(c,d) with random rows and a random type-correct
/// plan of min_ops..max_ops operators, nested at most max_depth deep.
/// Reproducible from the seed.
inline Workload random_workload(std::uint64_t seed, const RandomConfig& cfg = {}) {
  return detail::WorkloadGenerator(seed, cfg).generate();
}

}  // namespace encdb
