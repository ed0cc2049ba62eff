// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>

#include "encdb/table.hpp"

namespace encdb {

enum class CmpOp { kEq, kNe, kGt, kLt, kGe, kLe };

constexpr std::string_view to_string(CmpOp op) {
  switch (op) {
    case CmpOp::kEq: return "=";
    case CmpOp::kNe: return "!=";
    case CmpOp::kGt: return ">";
    case CmpOp::kLt: return "<";
    case CmpOp::kGe: return ">=";
    case CmpOp::kLe: return "<=";
  }
  return "?";
}

struct ColumnRef {
  std::string name;
};

/// A comparison operand on the server: a column of the row or an encrypted literal.
using Term = std::variant<ColumnRef, CipherWord>;

/// Row predicate over encrypted data; evaluates to one encrypted bit per row.
class Predicate {
 public:
  static Predicate constant(bool value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kConst;
    n->value = value;
    return Predicate(std::move(n));
  }
  static Predicate always() { return constant(true); }

  static Predicate compare(CmpOp op, Term lhs, Term rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kCompare;
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return Predicate(std::move(n));
  }

  friend Predicate operator&&(Predicate a, Predicate b) {
    return binary(Kind::kAnd, std::move(a), std::move(b));
  }
  friend Predicate operator||(Predicate a, Predicate b) {
    return binary(Kind::kOr, std::move(a), std::move(b));
  }
  friend Predicate operator!(Predicate a) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kNot;
    n->left = std::move(a.node_);
    return Predicate(std::move(n));
  }

  /// Throws SchemaMismatch if a column reference does not resolve.
  void check(const Schema& schema) const { check(*node_, schema); }

  CipherBit evaluate(Evaluator& ev, const Schema& schema, const EncRow& row) const {
    return eval(*node_, ev, schema, row);
  }

 private:
  enum class Kind { kConst, kCompare, kAnd, kOr, kNot };
  struct Node {
    Kind kind = Kind::kConst;
    bool value = true;
    CmpOp op = CmpOp::kEq;
    Term lhs;
    Term rhs;
    std::shared_ptr<const Node> left;
    std::shared_ptr<const Node> right;
  };

  explicit Predicate(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Predicate binary(Kind kind, Predicate a, Predicate b) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->left = std::move(a.node_);
    n->right = std::move(b.node_);
    return Predicate(std::move(n));
  }

  static void check(const Node& n, const Schema& schema) {
    auto check_term = [&](const Term& t) {
      if (const auto* col = std::get_if<ColumnRef>(&t); col && !schema.find(col->name))
        throw Error(Errc::kSchemaMismatch, "predicate references unknown column '" + col->name + "'");
    };
    switch (n.kind) {
      case Kind::kConst: return;
      case Kind::kCompare:
        check_term(n.lhs);
        check_term(n.rhs);
        return;
      case Kind::kAnd:
      case Kind::kOr:
        check(*n.left, schema);
        check(*n.right, schema);
        return;
      case Kind::kNot: check(*n.left, schema); return;
    }
  }

  static const CipherWord& resolve(const Term& t, const Schema& schema, const EncRow& row) {
    if (const auto* col = std::get_if<ColumnRef>(&t)) {
      auto idx = schema.find(col->name);
      if (!idx) throw Error(Errc::kSchemaMismatch, "unknown column '" + col->name + "'");
      return row.cells[*idx];
    }
    return std::get<CipherWord>(t);
  }

  static CipherBit eval(const Node& n, Evaluator& ev, const Schema& schema, const EncRow& row) {
    switch (n.kind) {
      case Kind::kConst: return ev.encrypt(n.value, row.presence.epoch());
      case Kind::kAnd:
        return ev.gate_and(eval(*n.left, ev, schema, row), eval(*n.right, ev, schema, row));
      case Kind::kOr:
        return ev.gate_or(eval(*n.left, ev, schema, row), eval(*n.right, ev, schema, row));
      case Kind::kNot: return ev.gate_not(eval(*n.left, ev, schema, row));
      case Kind::kCompare: break;
    }
    // Unsigned values compare correctly after zero-extending the narrower side.
    CipherWord a = resolve(n.lhs, schema, row);
    CipherWord b = resolve(n.rhs, schema, row);
    if (a.width() < b.width()) a = zero_extend(ev, a, b.width());
    if (b.width() < a.width()) b = zero_extend(ev, b, a.width());
    switch (n.op) {
      case CmpOp::kEq: return word_eq(ev, a, b);
      case CmpOp::kNe: return word_ne(ev, a, b);
      case CmpOp::kGt: return word_gt(ev, a, b);
      case CmpOp::kLt: return word_lt(ev, a, b);
      case CmpOp::kGe: return word_ge(ev, a, b);
      case CmpOp::kLe: return word_le(ev, a, b);
    }
    throw Error(Errc::kInvalidArgument, "unknown comparison operator");
  }

  std::shared_ptr<const Node> node_;
};

}  // namespace encdb
