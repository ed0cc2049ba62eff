// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Plaintext reference engine with standard bag semantics. Shares nothing with
// the encrypted path except the plan AST and the table containers.
//
// Conventions the encrypted engine also follows: aggregates wrap modulo
// 2^width of their result column; min, max and avg over no rows give 0;
// avg is floor(sum / count) with both terms already wrapped.

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "encdb/plan.hpp"

namespace encdb::oracle {

using PlainCatalog = std::map<std::string, PlainTable, std::less<>>;

inline Catalog schemas(const PlainCatalog& tables) {
  Catalog c;
  for (const auto& [name, t] : tables) c.emplace(name, t.schema);
  return c;
}

inline std::uint64_t wrap(std::uint64_t v, std::size_t width) { return v & max_value(width); }

inline std::uint64_t operand_value(const Operand& o, const Schema& schema, const Row& row) {
  switch (o.kind) {
    case Operand::Kind::kColumn: return row[schema.index_of(o.column)];
    case Operand::Kind::kLiteral: return o.value;
    case Operand::Kind::kSlot: break;
  }
  throw Error(Errc::kTypeError, "the oracle evaluates plaintext literals only");
}

inline bool matches(const PredExpr& p, const Schema& schema, const Row& row) {
  switch (p.kind) {
    case PredExpr::Kind::kTrue: return true;
    case PredExpr::Kind::kFalse: return false;
    case PredExpr::Kind::kAnd:
      return matches(p.children[0], schema, row) && matches(p.children[1], schema, row);
    case PredExpr::Kind::kOr:
      return matches(p.children[0], schema, row) || matches(p.children[1], schema, row);
    case PredExpr::Kind::kNot: return !matches(p.children[0], schema, row);
    case PredExpr::Kind::kCompare: break;
  }
  const auto a = operand_value(p.lhs, schema, row);
  const auto b = operand_value(p.rhs, schema, row);
  switch (p.op) {
    case CmpOp::kEq: return a == b;
    case CmpOp::kNe: return a != b;
    case CmpOp::kGt: return a > b;
    case CmpOp::kLt: return a < b;
    case CmpOp::kGe: return a >= b;
    case CmpOp::kLe: return a <= b;
  }
  return false;
}

inline PlainTable select(const PredExpr& pred, const PlainTable& t) {
  PlainTable out{t.name, t.schema, {}};
  for (const auto& r : t.rows)
    if (matches(pred, t.schema, r)) out.rows.push_back(r);
  return out;
}

inline PlainTable project(const std::vector<std::string>& cols, const PlainTable& t) {
  std::vector<Column> schema;
  std::vector<std::size_t> idx;
  for (const auto& c : cols) {
    idx.push_back(t.schema.index_of(c));
    schema.push_back(t.schema.column(idx.back()));
  }
  PlainTable out{t.name, Schema(schema), {}};
  for (const auto& r : t.rows) {
    Row row;
    for (auto i : idx) row.push_back(r[i]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline PlainTable cross(const PlainTable& a, const PlainTable& b) {
  auto cols = a.schema.columns();
  cols.insert(cols.end(), b.schema.columns().begin(), b.schema.columns().end());
  PlainTable out{a.name + "_x_" + b.name, Schema(cols), {}};
  for (const auto& x : a.rows)
    for (const auto& y : b.rows) {
      Row r = x;
      r.insert(r.end(), y.begin(), y.end());
      out.rows.push_back(std::move(r));
    }
  return out;
}

inline PlainTable scalar(const std::string& name, std::size_t width, std::uint64_t v) {
  return PlainTable{name, Schema({Column{name, width}}), {{v}}};
}

inline std::uint64_t count(const PlainTable& t, std::size_t width) {
  return wrap(t.rows.size(), width);
}

inline std::uint64_t sum(const std::string& col, const PlainTable& t) {
  const auto c = t.schema.index_of(col);
  std::uint64_t s = 0;
  for (const auto& r : t.rows) s += r[c];
  return wrap(s, t.schema.column(c).width);
}

inline std::uint64_t min(const std::string& col, const PlainTable& t) {
  const auto c = t.schema.index_of(col);
  if (t.rows.empty()) return 0;
  std::uint64_t m = t.rows.front()[c];
  for (const auto& r : t.rows) m = std::min(m, r[c]);
  return m;
}

inline std::uint64_t max(const std::string& col, const PlainTable& t) {
  const auto c = t.schema.index_of(col);
  std::uint64_t m = 0;
  for (const auto& r : t.rows) m = std::max(m, r[c]);
  return m;
}

inline std::uint64_t avg(const std::string& col, const PlainTable& t) {
  const auto width = t.schema.column(t.schema.index_of(col)).width;
  const auto n = count(t, width);
  return n == 0 ? 0 : sum(col, t) / n;
}

inline PlainTable distinct(const PlainTable& t) {
  PlainTable out{t.name, t.schema, {}};
  std::set<Row> seen;
  for (const auto& r : t.rows)
    if (seen.insert(r).second) out.rows.push_back(r);
  return out;
}

inline PlainTable sort(const std::vector<std::string>& keys, SortDirection dir, const PlainTable& t) {
  std::vector<std::size_t> idx;
  for (const auto& k : keys) idx.push_back(t.schema.index_of(k));
  auto key = [&](const Row& r) {
    Row k;
    for (auto i : idx) k.push_back(r[i]);
    return k;
  };
  PlainTable out = t;
  std::stable_sort(out.rows.begin(), out.rows.end(), [&](const Row& a, const Row& b) {
    return dir == SortDirection::kAscending ? key(a) < key(b) : key(b) < key(a);
  });
  return out;
}

inline PlainTable groupby_sum(const std::vector<std::string>& group, const std::string& col,
                              const PlainTable& t) {
  std::vector<std::size_t> idx;
  std::vector<Column> cols;
  for (const auto& g : group) {
    idx.push_back(t.schema.index_of(g));
    cols.push_back(t.schema.column(idx.back()));
  }
  const auto c = t.schema.index_of(col);
  const auto width = t.schema.column(c).width;
  cols.push_back(Column{"sum", width});
  std::map<Row, std::uint64_t> sums;
  for (const auto& r : t.rows) {
    Row k;
    for (auto i : idx) k.push_back(r[i]);
    sums[k] = wrap(sums[k] + r[c], width);
  }
  PlainTable out{t.name, Schema(cols), {}};
  for (const auto& [k, s] : sums) {
    Row r = k;
    r.push_back(s);
    out.rows.push_back(std::move(r));
  }
  return out;
}

inline PlainTable bag_union(const PlainTable& a, const PlainTable& b) {
  PlainTable out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  return out;
}

inline PlainTable bag_intersect(const PlainTable& a, const PlainTable& b) {
  std::map<Row, std::size_t> avail;
  for (const auto& r : b.rows) ++avail[r];
  PlainTable out{a.name, a.schema, {}};
  for (const auto& r : a.rows)
    if (auto it = avail.find(r); it != avail.end() && it->second > 0) {
      --it->second;
      out.rows.push_back(r);
    }
  return out;
}

inline PlainTable bag_diff(const PlainTable& a, const PlainTable& b) {
  std::map<Row, std::size_t> remove;
  for (const auto& r : b.rows) ++remove[r];
  PlainTable out{a.name, a.schema, {}};
  for (const auto& r : a.rows) {
    if (auto it = remove.find(r); it != remove.end() && it->second > 0) {
      --it->second;
      continue;
    }
    out.rows.push_back(r);
  }
  return out;
}

/// Evaluates a plaintext plan. The result holds only logically present rows.
inline PlainTable run(const Plan& plan, const PlainCatalog& tables, const PlanOptions& opts = {}) {
  auto child = [&](std::size_t i) { return run(plan.children.at(i), tables, opts); };
  switch (plan.op) {
    case PlanOp::kTable: {
      auto it = tables.find(plan.table);
      if (it == tables.end()) throw Error(Errc::kUnknownTable, "unknown table '" + plan.table + "'");
      return it->second;
    }
    case PlanOp::kSelect: return select(plan.pred, child(0));
    case PlanOp::kProject: return project(plan.columns, child(0));
    case PlanOp::kCross: return cross(child(0), child(1));
    case PlanOp::kCount: return scalar("count", opts.default_width, count(child(0), opts.default_width));
    case PlanOp::kSum:
    case PlanOp::kMin:
    case PlanOp::kMax:
    case PlanOp::kAvg: {
      auto t = child(0);
      const auto width = t.schema.column(t.schema.index_of(plan.column)).width;
      const std::string name(to_string(plan.op));
      std::uint64_t v = 0;
      if (plan.op == PlanOp::kSum) v = sum(plan.column, t);
      if (plan.op == PlanOp::kMin) v = min(plan.column, t);
      if (plan.op == PlanOp::kMax) v = max(plan.column, t);
      if (plan.op == PlanOp::kAvg) v = avg(plan.column, t);
      return scalar(name, width, v);
    }
    case PlanOp::kDistinct: return distinct(child(0));
    case PlanOp::kSort: return sort(plan.columns, plan.direction, child(0));
    case PlanOp::kGroupBy: return groupby_sum(plan.columns, plan.column, child(0));
    case PlanOp::kUnion: return bag_union(child(0), child(1));
    case PlanOp::kIntersect: return bag_intersect(child(0), child(1));
    case PlanOp::kDiff: return bag_diff(child(0), child(1));
  }
  throw Error(Errc::kTypeError, "unknown plan operator");
}

}  // namespace encdb::oracle
