// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Relational algebra over encrypted tables with presence bits.
//
// Every operator loops only over public quantities (capacities, schema
// widths); encrypted values flow exclusively through gates. Logical
// membership is carried by the presence bit, so output capacities depend
// on input capacities alone.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "encdb/predicate.hpp"

namespace encdb {

enum class SortDirection { kAscending, kDescending };

/// How the encrypted cursor over the right operand of intersect/diff moves.
enum class CursorAdvance {
  /// Advance only while the inner loop is standing on the cursor row. This
  /// yields exact multiset semantics and is the default.
  kAtCursor,
  /// Advance on every qualifying inner row, wherever the cursor is. Kept to
  /// document its divergence from multiset intersection on duplicate runs.
  kAnyRow,
};

namespace detail {

inline CipherBit bit_mux(Evaluator& ev, const CipherBit& flag, const CipherBit& a,
                         const CipherBit& b) {
  return ev.gate_xor(ev.gate_and(flag, a), ev.gate_and(ev.gate_not(flag), b));
}

inline std::vector<std::size_t> resolve_columns(const Schema& schema,
                                                std::span<const std::string> names) {
  std::vector<std::size_t> idx;
  idx.reserve(names.size());
  for (const auto& n : names) idx.push_back(schema.index_of(n));
  return idx;
}

inline std::vector<CipherWord> pick(const EncRow& row, std::span<const std::size_t> idx) {
  std::vector<CipherWord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(row.cells[i]);
  return out;
}

inline void require_same_schema(const EncTable& a, const EncTable& b, const char* op) {
  if (!(a.schema == b.schema))
    throw Error(Errc::kSchemaMismatch, std::string(op) + ": operand schemas differ");
}

// swap(x, y, f): x' = f ? y : x, y' = f ? x : y, whole rows including presence.
inline void conditional_swap(Evaluator& ev, EncRow& x, EncRow& y, const CipherBit& f) {
  for (std::size_t c = 0; c < x.cells.size(); ++c) {
    auto nx = word_mux(ev, f, y.cells[c], x.cells[c]);
    auto ny = word_mux(ev, f, x.cells[c], y.cells[c]);
    x.cells[c] = std::move(nx);
    y.cells[c] = std::move(ny);
  }
  auto px = bit_mux(ev, f, y.presence, x.presence);
  auto py = bit_mux(ev, f, x.presence, y.presence);
  x.presence = std::move(px);
  y.presence = std::move(py);
}

}  // namespace detail

using SortKey = std::function<std::vector<CipherWord>(const EncRow&)>;

/// Exchange sort with the fixed schedule i = 1..n, j = 1..n-1 (n(n-1)
/// compare-and-swaps). The comparator is strict, so equal keys never swap
/// and the sort is stable. Rows move whole, presence bit included.
inline std::vector<EncRow> sort_rows(Evaluator& ev, std::vector<EncRow> rows, const SortKey& key,
                                     SortDirection dir) {
  const auto n = rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      auto kj = key(rows[j]);
      auto kn = key(rows[j + 1]);
      auto f = dir == SortDirection::kAscending ? lex_gt(ev, kj, kn) : lex_gt(ev, kn, kj);
      detail::conditional_swap(ev, rows[j], rows[j + 1], f);
    }
  }
  return rows;
}

/// p' = p AND pred(row); cells untouched.
inline EncTable op_select(Evaluator& ev, const Predicate& pred, const EncTable& t) {
  pred.check(t.schema);
  EncTable out{t.name, t.schema, {}};
  out.rows.reserve(t.capacity());
  for (const auto& row : t.rows) {
    auto keep = pred.evaluate(ev, t.schema, row);
    out.rows.push_back(EncRow{row.cells, ev.gate_and(row.presence, keep)});
  }
  return out;
}

inline EncTable op_project(std::span<const std::string> columns, const EncTable& t) {
  auto idx = detail::resolve_columns(t.schema, columns);
  std::vector<Column> cols;
  cols.reserve(idx.size());
  for (auto i : idx) cols.push_back(t.schema.column(i));
  EncTable out{t.name, Schema(std::move(cols)), {}};
  out.rows.reserve(t.capacity());
  for (const auto& row : t.rows) out.rows.push_back(EncRow{detail::pick(row, idx), row.presence});
  return out;
}

/// Every pair of rows, presence = p1 AND p2. Column names must be disjoint.
inline EncTable op_cross(Evaluator& ev, const EncTable& a, const EncTable& b) {
  std::vector<Column> cols = a.schema.columns();
  cols.insert(cols.end(), b.schema.columns().begin(), b.schema.columns().end());
  EncTable out{a.name + "_x_" + b.name, Schema(std::move(cols)), {}};
  out.rows.reserve(a.capacity() * b.capacity());
  for (const auto& r1 : a.rows) {
    for (const auto& r2 : b.rows) {
      std::vector<CipherWord> cells = r1.cells;
      cells.insert(cells.end(), r2.cells.begin(), r2.cells.end());
      out.rows.push_back(EncRow{std::move(cells), ev.gate_and(r1.presence, r2.presence)});
    }
  }
  return out;
}

/// Number of present rows, mod 2^width.
inline CipherWord op_count(Evaluator& ev, const EncTable& t, std::size_t width) {
  auto count = zero_word(ev, width);
  for (const auto& row : t.rows) count = word_add_bit(ev, count, row.presence);
  return count;
}

/// Sum of `column` over present rows, mod 2^width of the column.
inline CipherWord op_sum(Evaluator& ev, const std::string& column, const EncTable& t) {
  const auto c = t.schema.index_of(column);
  auto sum = zero_word(ev, t.schema.column(c).width);
  for (const auto& row : t.rows) sum = word_add(ev, sum, word_and_bit(ev, row.cells[c], row.presence));
  return sum;
}

namespace detail {

// found latches at the first present row; f selects the rows that replace
// the running extreme. Zero present rows leave the initial encrypted 0.
inline CipherWord extreme(Evaluator& ev, const std::string& column, const EncTable& t,
                          bool want_max) {
  const auto c = t.schema.index_of(column);
  auto found = ev.encrypt(false);
  auto best = zero_word(ev, t.schema.column(c).width);
  for (const auto& row : t.rows) {
    const auto& x = row.cells[c];
    auto better = want_max ? word_gt(ev, x, best) : word_gt(ev, best, x);
    auto not_found = ev.gate_not(found);
    auto f = ev.gate_and(row.presence, ev.gate_xor(ev.gate_and(found, better), not_found));
    found = ev.gate_xor(found, ev.gate_and(not_found, row.presence));
    best = word_mux(ev, f, x, best);
  }
  return best;
}

}  // namespace detail

inline CipherWord op_min(Evaluator& ev, const std::string& column, const EncTable& t) {
  return detail::extreme(ev, column, t, false);
}

inline CipherWord op_max(Evaluator& ev, const std::string& column, const EncTable& t) {
  return detail::extreme(ev, column, t, true);
}

/// floor(sum / count) at the column's width; 0 over no present rows.
inline CipherWord op_avg(Evaluator& ev, const std::string& column, const EncTable& t) {
  const auto width = t.schema.column(t.schema.index_of(column)).width;
  return word_div(ev, op_sum(ev, column, t), op_count(ev, t, width));
}

/// Clears the presence of every row that equals an earlier present row.
inline EncTable op_distinct(Evaluator& ev, const EncTable& t) {
  EncTable out = t;
  const auto n = t.capacity();
  for (std::size_t i = 1; i < n; ++i) {
    auto f = ev.encrypt(false);
    for (std::size_t j = 0; j < i; ++j) {
      auto equals = ev.gate_and(tuple_eq(ev, t.rows[i].cells, t.rows[j].cells), t.rows[j].presence);
      f = ev.gate_xor(f, ev.gate_and(ev.gate_not(f), equals));
    }
    out.rows[i].presence = detail::bit_mux(ev, f, ev.encrypt(false), t.rows[i].presence);
  }
  return out;
}

/// Sorts all physical rows by the given columns, lexicographically.
inline EncTable op_sort(Evaluator& ev, std::span<const std::string> keys, SortDirection dir,
                        const EncTable& t) {
  auto idx = detail::resolve_columns(t.schema, keys);
  SortKey key = [idx](const EncRow& r) { return detail::pick(r, idx); };
  return EncTable{t.name, t.schema, sort_rows(ev, t.rows, key, dir)};
}

/// GROUP BY `group_columns` with SUM(`sum_column`), output schema
/// group_columns + "sum". Sorts on the group columns, then one scan emits a
/// row whenever the group changes (n-1 emissions) plus the last group.
inline EncTable op_groupby_sum(Evaluator& ev, std::span<const std::string> group_columns,
                               const std::string& sum_column, const EncTable& t) {
  auto gidx = detail::resolve_columns(t.schema, group_columns);
  const auto c = t.schema.index_of(sum_column);
  const auto sum_width = t.schema.column(c).width;

  std::vector<Column> cols;
  for (auto i : gidx) cols.push_back(t.schema.column(i));
  cols.push_back(Column{"sum", sum_width});
  EncTable out{t.name, Schema(std::move(cols)), {}};

  auto sorted = op_sort(ev, group_columns, SortDirection::kAscending, t);
  const auto n = sorted.capacity();
  if (n == 0) return out;
  out.rows.reserve(n);

  auto emit = [&](const EncRow& prev, const CipherWord& sum, CipherBit present) {
    auto cells = detail::pick(prev, gidx);
    cells.push_back(sum);
    out.rows.push_back(EncRow{std::move(cells), std::move(present)});
  };

  const auto zero = zero_word(ev, sum_width);
  auto sum = zero;
  auto f = ev.encrypt(false);
  const EncRow* prev = nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = sorted.rows[i];
    CipherBit f1 = ev.encrypt(false);
    if (i != 0) {
      f1 = tuple_eq(ev, detail::pick(*prev, gidx), detail::pick(row, gidx));
      auto not_f1 = ev.gate_not(f1);
      emit(*prev, sum, ev.gate_and(not_f1, f));
      f = ev.gate_xor(ev.gate_and(not_f1, row.presence),
                      ev.gate_and(f1, ev.gate_or(f, row.presence)));
    } else {
      f = row.presence;
    }
    prev = &row;
    auto v = word_mux(ev, row.presence, row.cells[c], zero);
    sum = word_add(ev, word_mux(ev, f1, sum, zero), v);
  }
  emit(*prev, sum, f);
  return out;
}

inline EncTable op_bag_union(const EncTable& a, const EncTable& b) {
  detail::require_same_schema(a, b, "union");
  EncTable out{a.name, a.schema, a.rows};
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  return out;
}

namespace detail {

// Both operands sorted on all columns, then a doubly nested scan with an
// encrypted cursor i2 into the right operand. Rows of the right operand
// before the cursor are consumed: matched, smaller than the current left
// row, or absent. Returns the sorted left rows and their match flags.
inline std::pair<EncTable, std::vector<CipherBit>> match_sorted(Evaluator& ev, const EncTable& a,
                                                                const EncTable& b,
                                                                CursorAdvance mode) {
  require_same_schema(a, b, "intersect/diff");
  std::vector<std::string> all;
  for (const auto& col : a.schema.columns()) all.push_back(col.name);
  auto left = op_sort(ev, all, SortDirection::kAscending, a);
  auto right = op_sort(ev, all, SortDirection::kAscending, b);
  const auto n1 = left.capacity();
  const auto n2 = right.capacity();

  // kAnyRow may advance up to n1*n2 times; kAtCursor at most n2 times.
  const auto cursor_width =
      bit_length(mode == CursorAdvance::kAtCursor ? n2 + 1 : n1 * n2 + 1);
  std::vector<CipherWord> index;
  index.reserve(n2);
  for (std::size_t j = 0; j < n2; ++j) index.push_back(encrypt_word(ev, j + 1, cursor_width));

  auto cursor = encrypt_word(ev, 1, cursor_width);
  std::vector<CipherBit> matched;
  matched.reserve(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    const auto& r1 = left.rows[i];
    auto f = ev.encrypt(false);
    for (std::size_t j = 0; j < n2; ++j) {
      const auto& r2 = right.rows[j];
      auto skip = word_gt(ev, cursor, index[j]);
      auto eq = tuple_eq(ev, r1.cells, r2.cells);
      auto gt = lex_gt(ev, r1.cells, r2.cells);
      auto f2 = ev.gate_and(ev.gate_and(ev.gate_not(f), ev.gate_not(skip)),
                            ev.gate_and(eq, ev.gate_and(r1.presence, r2.presence)));
      f = ev.gate_or(f, f2);
      auto advance = ev.gate_or(ev.gate_or(f2, gt), ev.gate_not(r2.presence));
      if (mode == CursorAdvance::kAtCursor)
        advance = ev.gate_and(advance, word_eq(ev, cursor, index[j]));
      cursor = word_add_bit(ev, cursor, advance);
    }
    matched.push_back(std::move(f));
  }
  return {std::move(left), std::move(matched)};
}

}  // namespace detail

/// Multiset intersection; output is the left operand sorted, capacity n1.
inline EncTable op_bag_intersect(Evaluator& ev, const EncTable& a, const EncTable& b,
                                 CursorAdvance mode = CursorAdvance::kAtCursor) {
  auto [out, matched] = detail::match_sorted(ev, a, b, mode);
  for (std::size_t i = 0; i < out.capacity(); ++i) out.rows[i].presence = matched[i];
  return out;
}

/// Multiset difference a - b; output is the left operand sorted, capacity n1.
inline EncTable op_bag_diff(Evaluator& ev, const EncTable& a, const EncTable& b,
                            CursorAdvance mode = CursorAdvance::kAtCursor) {
  auto [out, matched] = detail::match_sorted(ev, a, b, mode);
  for (std::size_t i = 0; i < out.capacity(); ++i)
    out.rows[i].presence = ev.gate_and(ev.gate_not(matched[i]), out.rows[i].presence);
  return out;
}

}  // namespace encdb
