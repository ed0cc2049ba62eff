// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Query plans: a prefix DSL over the relational operators.
//
//   select(pred, e)  project(cols, e)  cross(e, e)  count(e)  sum(col, e)
//   min(col, e)  max(col, e)  avg(col, e)  distinct(e)  sort(cols, asc|desc, e)
//   groupby(cols, col, e)  union(e, e)  intersect(e, e)  diff(e, e)  table(name)
//
// cols is a single column name or a bracketed list ([a, b] or []).
// Predicates are infix comparisons (= != <> > < >= <=) between columns and
// literals, combined with and/or/not and parentheses. A literal is either a
// decimal integer (client side) or an encrypted slot $k (server side).

#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "encdb/relalg.hpp"

namespace encdb {

enum class PlanOp {
  kTable,
  kSelect,
  kProject,
  kCross,
  kCount,
  kSum,
  kMin,
  kMax,
  kAvg,
  kDistinct,
  kSort,
  kGroupBy,
  kUnion,
  kIntersect,
  kDiff,
};

constexpr std::string_view to_string(PlanOp op) {
  switch (op) {
    case PlanOp::kTable: return "table";
    case PlanOp::kSelect: return "select";
    case PlanOp::kProject: return "project";
    case PlanOp::kCross: return "cross";
    case PlanOp::kCount: return "count";
    case PlanOp::kSum: return "sum";
    case PlanOp::kMin: return "min";
    case PlanOp::kMax: return "max";
    case PlanOp::kAvg: return "avg";
    case PlanOp::kDistinct: return "distinct";
    case PlanOp::kSort: return "sort";
    case PlanOp::kGroupBy: return "groupby";
    case PlanOp::kUnion: return "union";
    case PlanOp::kIntersect: return "intersect";
    case PlanOp::kDiff: return "diff";
  }
  return "?";
}

struct Operand {
  enum class Kind { kColumn, kLiteral, kSlot };
  Kind kind = Kind::kColumn;
  std::string column;
  std::uint64_t value = 0;
  std::size_t slot = 0;

  static Operand col(std::string name) { return {Kind::kColumn, std::move(name), 0, 0}; }
  static Operand lit(std::uint64_t v) { return {Kind::kLiteral, {}, v, 0}; }
  static Operand enc(std::size_t s) { return {Kind::kSlot, {}, 0, s}; }

  friend bool operator==(const Operand&, const Operand&) = default;
};

struct PredExpr {
  enum class Kind { kTrue, kFalse, kCompare, kAnd, kOr, kNot };
  Kind kind = Kind::kTrue;
  CmpOp op = CmpOp::kEq;
  Operand lhs;
  Operand rhs;
  std::vector<PredExpr> children;
  std::size_t pos = 0;

  friend bool operator==(const PredExpr& a, const PredExpr& b) {
    return a.kind == b.kind && a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs &&
           a.children == b.children;
  }
};

struct PlanNode {
  PlanOp op = PlanOp::kTable;
  std::string table;                 // kTable
  PredExpr pred;                     // kSelect
  std::vector<std::string> columns;  // project, sort keys, group columns
  std::string column;                // aggregate column, group-by sum column
  SortDirection direction = SortDirection::kAscending;
  std::vector<PlanNode> children;
  std::size_t pos = 0;

  friend bool operator==(const PlanNode& a, const PlanNode& b) {
    return a.op == b.op && a.table == b.table && a.pred == b.pred && a.columns == b.columns &&
           a.column == b.column && a.direction == b.direction && a.children == b.children;
  }
};

using Plan = PlanNode;
using Catalog = std::map<std::string, Schema, std::less<>>;

struct PlanOptions {
  /// Width of COUNT results and of literals that fit in it.
  std::size_t default_width = 8;
};

namespace detail {

class PlanParser {
 public:
  explicit PlanParser(std::string_view text) : text_(text) {}

  Plan parse() {
    auto p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::kParseError, msg + " at offset " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string ident() {
    skip_ws();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected identifier");
    auto start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string peek_ident() {
    skip_ws();
    auto save = pos_;
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) return {};
    auto id = ident();
    pos_ = save;
    return id;
  }

  std::uint64_t number() {
    skip_ws();
    auto start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected integer");
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc{}) {
      pos_ = start;
      fail("integer literal out of range");
    }
    return v;
  }

  std::vector<std::string> columns() {
    if (!accept('[')) return {ident()};
    std::vector<std::string> cols;
    if (accept(']')) return cols;
    do cols.push_back(ident());
    while (accept(','));
    expect(']');
    return cols;
  }

  Plan expr() {
    skip_ws();
    Plan node;
    node.pos = pos_;
    auto name = ident();
    static const std::map<std::string_view, PlanOp> kOps = {
        {"table", PlanOp::kTable},     {"select", PlanOp::kSelect}, {"project", PlanOp::kProject},
        {"cross", PlanOp::kCross},     {"count", PlanOp::kCount},   {"sum", PlanOp::kSum},
        {"min", PlanOp::kMin},         {"max", PlanOp::kMax},       {"avg", PlanOp::kAvg},
        {"distinct", PlanOp::kDistinct}, {"sort", PlanOp::kSort},   {"groupby", PlanOp::kGroupBy},
        {"union", PlanOp::kUnion},     {"intersect", PlanOp::kIntersect}, {"diff", PlanOp::kDiff},
    };
    auto it = kOps.find(name);
    if (it == kOps.end()) {
      pos_ = node.pos;
      fail("unknown operator '" + name + "'");
    }
    node.op = it->second;
    expect('(');
    switch (node.op) {
      case PlanOp::kTable: node.table = ident(); break;
      case PlanOp::kSelect:
        node.pred = pred_or();
        expect(',');
        node.children.push_back(expr());
        break;
      case PlanOp::kProject:
        node.columns = columns();
        expect(',');
        node.children.push_back(expr());
        break;
      case PlanOp::kCount:
      case PlanOp::kDistinct: node.children.push_back(expr()); break;
      case PlanOp::kSum:
      case PlanOp::kMin:
      case PlanOp::kMax:
      case PlanOp::kAvg:
        node.column = ident();
        expect(',');
        node.children.push_back(expr());
        break;
      case PlanOp::kSort: {
        node.columns = columns();
        expect(',');
        auto dir = ident();
        if (dir == "asc") node.direction = SortDirection::kAscending;
        else if (dir == "desc") node.direction = SortDirection::kDescending;
        else fail("sort direction must be asc or desc");
        expect(',');
        node.children.push_back(expr());
        break;
      }
      case PlanOp::kGroupBy:
        node.columns = columns();
        expect(',');
        node.column = ident();
        expect(',');
        node.children.push_back(expr());
        break;
      case PlanOp::kCross:
      case PlanOp::kUnion:
      case PlanOp::kIntersect:
      case PlanOp::kDiff:
        node.children.push_back(expr());
        expect(',');
        node.children.push_back(expr());
        break;
    }
    expect(')');
    return node;
  }

  PredExpr pred_or() {
    auto lhs = pred_and();
    while (peek_ident() == "or") {
      PredExpr n;
      n.pos = pos_;
      ident();
      n.kind = PredExpr::Kind::kOr;
      n.children.push_back(std::move(lhs));
      n.children.push_back(pred_and());
      lhs = std::move(n);
    }
    return lhs;
  }

  PredExpr pred_and() {
    auto lhs = pred_unary();
    while (peek_ident() == "and") {
      PredExpr n;
      n.pos = pos_;
      ident();
      n.kind = PredExpr::Kind::kAnd;
      n.children.push_back(std::move(lhs));
      n.children.push_back(pred_unary());
      lhs = std::move(n);
    }
    return lhs;
  }

  PredExpr pred_unary() {
    skip_ws();
    PredExpr n;
    n.pos = pos_;
    if (accept('(')) {
      auto inner = pred_or();
      expect(')');
      return inner;
    }
    auto id = peek_ident();
    if (id == "not") {
      ident();
      n.kind = PredExpr::Kind::kNot;
      n.children.push_back(pred_unary());
      return n;
    }
    if (id == "true" || id == "false") {
      ident();
      n.kind = id == "true" ? PredExpr::Kind::kTrue : PredExpr::Kind::kFalse;
      return n;
    }
    n.kind = PredExpr::Kind::kCompare;
    n.lhs = operand();
    n.op = cmp_op();
    n.rhs = operand();
    return n;
  }

  Operand operand() {
    skip_ws();
    if (accept('$')) return Operand::enc(static_cast<std::size_t>(number()));
    if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      return Operand::lit(number());
    return Operand::col(ident());
  }

  CmpOp cmp_op() {
    skip_ws();
    auto rest = text_.substr(pos_);
    auto take = [&](std::string_view tok, CmpOp op) -> std::optional<CmpOp> {
      if (rest.substr(0, tok.size()) != tok) return std::nullopt;
      pos_ += tok.size();
      return op;
    };
    static constexpr std::pair<std::string_view, CmpOp> kTokens[] = {
        {"==", CmpOp::kEq}, {"!=", CmpOp::kNe}, {"<>", CmpOp::kNe}, {">=", CmpOp::kGe},
        {"<=", CmpOp::kLe}, {"=", CmpOp::kEq},  {">", CmpOp::kGt},  {"<", CmpOp::kLt}};
    for (auto [tok, op] : kTokens)
      if (auto r = take(tok, op)) return *r;
    fail("expected comparison operator");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void print_columns(std::ostream& os, const std::vector<std::string>& cols) {
  os << '[';
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << ']';
}

inline void print_operand(std::ostream& os, const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::kColumn: os << o.column; break;
    case Operand::Kind::kLiteral: os << o.value; break;
    case Operand::Kind::kSlot: os << '$' << o.slot; break;
  }
}

inline void print_pred(std::ostream& os, const PredExpr& p) {
  switch (p.kind) {
    case PredExpr::Kind::kTrue: os << "true"; break;
    case PredExpr::Kind::kFalse: os << "false"; break;
    case PredExpr::Kind::kCompare:
      print_operand(os, p.lhs);
      os << to_string(p.op);
      print_operand(os, p.rhs);
      break;
    case PredExpr::Kind::kAnd:
    case PredExpr::Kind::kOr:
      os << '(';
      print_pred(os, p.children[0]);
      os << (p.kind == PredExpr::Kind::kAnd ? " and " : " or ");
      print_pred(os, p.children[1]);
      os << ')';
      break;
    case PredExpr::Kind::kNot:
      os << "not ";
      print_pred(os, p.children[0]);
      break;
  }
}

inline void print_plan(std::ostream& os, const Plan& p) {
  os << to_string(p.op) << '(';
  switch (p.op) {
    case PlanOp::kTable: os << p.table; break;
    case PlanOp::kSelect: print_pred(os, p.pred); os << ", "; break;
    case PlanOp::kProject: print_columns(os, p.columns); os << ", "; break;
    case PlanOp::kSum:
    case PlanOp::kMin:
    case PlanOp::kMax:
    case PlanOp::kAvg: os << p.column << ", "; break;
    case PlanOp::kSort:
      print_columns(os, p.columns);
      os << (p.direction == SortDirection::kAscending ? ", asc, " : ", desc, ");
      break;
    case PlanOp::kGroupBy:
      print_columns(os, p.columns);
      os << ", " << p.column << ", ";
      break;
    default: break;
  }
  for (std::size_t i = 0; i < p.children.size(); ++i) {
    if (i) os << ", ";
    print_plan(os, p.children[i]);
  }
  os << ')';
}

[[noreturn]] inline void type_fail(Errc code, const std::string& msg, std::size_t pos) {
  throw Error(code, msg + " at offset " + std::to_string(pos));
}

inline void check_pred(const PredExpr& p, const Schema& schema, std::size_t pos) {
  switch (p.kind) {
    case PredExpr::Kind::kTrue:
    case PredExpr::Kind::kFalse: return;
    case PredExpr::Kind::kCompare:
      for (const auto* o : {&p.lhs, &p.rhs})
        if (o->kind == Operand::Kind::kColumn && !schema.find(o->column))
          type_fail(Errc::kUnknownColumn, "unknown column '" + o->column + "'", p.pos);
      return;
    default:
      for (const auto& c : p.children) check_pred(c, schema, pos);
  }
}

inline void require_column(const Schema& schema, const std::string& name, std::size_t pos) {
  if (!schema.find(name)) type_fail(Errc::kUnknownColumn, "unknown column '" + name + "'", pos);
}

}  // namespace detail

inline std::string to_text(const Plan& plan) {
  std::ostringstream os;
  detail::print_plan(os, plan);
  return os.str();
}

inline std::string to_text(const PredExpr& pred) {
  std::ostringstream os;
  detail::print_pred(os, pred);
  return os.str();
}

/// Output schema of `plan`; throws UnknownTable / UnknownColumn / TypeError.
inline Schema output_schema(const Plan& plan, const Catalog& catalog, const PlanOptions& opts = {}) {
  using detail::require_column;
  using detail::type_fail;
  auto child = [&](std::size_t i) { return output_schema(plan.children.at(i), catalog, opts); };
  auto wrap = [&](auto&& fn) -> Schema {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == Errc::kDuplicateColumn || e.code() == Errc::kInvalidArgument)
        type_fail(Errc::kTypeError, e.what(), plan.pos);
      throw;
    }
  };
  switch (plan.op) {
    case PlanOp::kTable: {
      auto it = catalog.find(plan.table);
      if (it == catalog.end()) type_fail(Errc::kUnknownTable, "unknown table '" + plan.table + "'", plan.pos);
      return it->second;
    }
    case PlanOp::kSelect: {
      auto s = child(0);
      detail::check_pred(plan.pred, s, plan.pos);
      return s;
    }
    case PlanOp::kProject: {
      auto s = child(0);
      std::vector<Column> cols;
      for (const auto& c : plan.columns) {
        require_column(s, c, plan.pos);
        cols.push_back(s.column(s.index_of(c)));
      }
      return wrap([&] { return Schema(cols); });
    }
    case PlanOp::kCross: {
      auto a = child(0);
      auto b = child(1);
      auto cols = a.columns();
      cols.insert(cols.end(), b.columns().begin(), b.columns().end());
      return wrap([&] { return Schema(cols); });
    }
    case PlanOp::kCount: {
      child(0);
      return Schema({Column{"count", opts.default_width}});
    }
    case PlanOp::kSum:
    case PlanOp::kMin:
    case PlanOp::kMax:
    case PlanOp::kAvg: {
      auto s = child(0);
      require_column(s, plan.column, plan.pos);
      return Schema({Column{std::string(to_string(plan.op)), s.column(s.index_of(plan.column)).width}});
    }
    case PlanOp::kDistinct: return child(0);
    case PlanOp::kSort: {
      auto s = child(0);
      for (const auto& c : plan.columns) require_column(s, c, plan.pos);
      return s;
    }
    case PlanOp::kGroupBy: {
      auto s = child(0);
      std::vector<Column> cols;
      for (const auto& c : plan.columns) {
        require_column(s, c, plan.pos);
        cols.push_back(s.column(s.index_of(c)));
      }
      require_column(s, plan.column, plan.pos);
      cols.push_back(Column{"sum", s.column(s.index_of(plan.column)).width});
      return wrap([&] { return Schema(cols); });
    }
    case PlanOp::kUnion:
    case PlanOp::kIntersect:
    case PlanOp::kDiff: {
      auto a = child(0);
      auto b = child(1);
      if (!(a == b))
        type_fail(Errc::kTypeError, std::string(to_string(plan.op)) + " operands have different schemas",
                  plan.pos);
      return a;
    }
  }
  type_fail(Errc::kTypeError, "unknown plan operator", plan.pos);
}

/// Parses and type-checks `text` against `catalog`.
inline Plan parse_plan(std::string_view text, const Catalog& catalog, const PlanOptions& opts = {}) {
  auto plan = detail::PlanParser(text).parse();
  output_schema(plan, catalog, opts);
  return plan;
}

/// Number of operator nodes, excluding table leaves.
inline std::size_t operator_count(const Plan& plan) {
  std::size_t n = plan.op == PlanOp::kTable ? 0 : 1;
  for (const auto& c : plan.children) n += operator_count(c);
  return n;
}

// ---------------------------------------------------------------------------
// Server-side execution.

using TableMap = std::map<std::string, EncTable, std::less<>>;

struct ExecOptions {
  std::size_t default_width = 8;
  CursorAdvance cursor = CursorAdvance::kAtCursor;
};

namespace detail {

inline Term bind_operand(const Operand& o, std::span<const CipherWord> literals) {
  switch (o.kind) {
    case Operand::Kind::kColumn: return ColumnRef{o.column};
    case Operand::Kind::kSlot:
      if (o.slot >= literals.size())
        throw Error(Errc::kTypeError, "encrypted literal $" + std::to_string(o.slot) + " not supplied");
      return literals[o.slot];
    case Operand::Kind::kLiteral: break;
  }
  throw Error(Errc::kTypeError, "plaintext literal " + std::to_string(o.value) +
                                    " reached the server; encrypt query literals first");
}

inline Predicate bind_pred(const PredExpr& p, std::span<const CipherWord> literals) {
  switch (p.kind) {
    case PredExpr::Kind::kTrue: return Predicate::constant(true);
    case PredExpr::Kind::kFalse: return Predicate::constant(false);
    case PredExpr::Kind::kCompare:
      return Predicate::compare(p.op, bind_operand(p.lhs, literals), bind_operand(p.rhs, literals));
    case PredExpr::Kind::kAnd:
      return bind_pred(p.children[0], literals) && bind_pred(p.children[1], literals);
    case PredExpr::Kind::kOr:
      return bind_pred(p.children[0], literals) || bind_pred(p.children[1], literals);
    case PredExpr::Kind::kNot: return !bind_pred(p.children[0], literals);
  }
  throw Error(Errc::kTypeError, "unknown predicate node");
}

inline EncTable single_row(Evaluator& ev, std::string name, std::string column, CipherWord value) {
  auto width = value.width();
  EncTable t{std::move(name), Schema({Column{std::move(column), width}}), {}};
  t.rows.push_back(EncRow{{std::move(value)}, ev.encrypt(true)});
  return t;
}

}  // namespace detail

/// Evaluates `plan` bottom-up over encrypted tables. Aggregates yield a
/// one-row table whose single column is named after the aggregate.
inline EncTable execute(Evaluator& ev, const Plan& plan, const TableMap& tables,
                        std::span<const CipherWord> literals, const ExecOptions& opts = {}) {
  auto child = [&](std::size_t i) { return execute(ev, plan.children.at(i), tables, literals, opts); };
  switch (plan.op) {
    case PlanOp::kTable: {
      auto it = tables.find(plan.table);
      if (it == tables.end()) throw Error(Errc::kUnknownTable, "unknown table '" + plan.table + "'");
      return it->second;
    }
    case PlanOp::kSelect: return op_select(ev, detail::bind_pred(plan.pred, literals), child(0));
    case PlanOp::kProject: return op_project(plan.columns, child(0));
    case PlanOp::kCross: {
      auto a = child(0);
      return op_cross(ev, a, child(1));
    }
    case PlanOp::kCount:
      return detail::single_row(ev, "count", "count", op_count(ev, child(0), opts.default_width));
    case PlanOp::kSum: return detail::single_row(ev, "sum", "sum", op_sum(ev, plan.column, child(0)));
    case PlanOp::kMin: return detail::single_row(ev, "min", "min", op_min(ev, plan.column, child(0)));
    case PlanOp::kMax: return detail::single_row(ev, "max", "max", op_max(ev, plan.column, child(0)));
    case PlanOp::kAvg: return detail::single_row(ev, "avg", "avg", op_avg(ev, plan.column, child(0)));
    case PlanOp::kDistinct: return op_distinct(ev, child(0));
    case PlanOp::kSort: return op_sort(ev, plan.columns, plan.direction, child(0));
    case PlanOp::kGroupBy: return op_groupby_sum(ev, plan.columns, plan.column, child(0));
    case PlanOp::kUnion: {
      auto a = child(0);
      return op_bag_union(a, child(1));
    }
    case PlanOp::kIntersect: {
      auto a = child(0);
      return op_bag_intersect(ev, a, child(1), opts.cursor);
    }
    case PlanOp::kDiff: {
      auto a = child(0);
      return op_bag_diff(ev, a, child(1), opts.cursor);
    }
  }
  throw Error(Errc::kTypeError, "unknown plan operator");
}

}  // namespace encdb
