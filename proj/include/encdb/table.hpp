// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "encdb/circuits.hpp"

namespace encdb {

struct Column {
  std::string name;
  std::size_t width = 8;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered, uniquely named columns with per-column bit widths. Public.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string> seen;
    for (const auto& c : columns_) {
      if (c.width == 0 || c.width > 64)
        throw Error(Errc::kInvalidArgument, "column '" + c.name + "' width must be in [1, 64]");
      if (!seen.insert(c.name).second)
        throw Error(Errc::kDuplicateColumn, "column '" + c.name + "' appears twice");
    }
  }

  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t i) const { return columns_[i]; }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name == name) return i;
    return std::nullopt;
  }
  std::size_t index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw Error(Errc::kUnknownColumn, "no column named '" + std::string(name) + "'");
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<Column> columns_;
};

using Row = std::vector<std::uint64_t>;

/// Unencrypted table: what the client owns and what the oracle works on.
struct PlainTable {
  std::string name;
  Schema schema;
  std::vector<Row> rows;

  void validate() const {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != schema.size())
        throw Error(Errc::kSchemaMismatch, "row " + std::to_string(r) + " has " +
                                               std::to_string(rows[r].size()) + " cells, expected " +
                                               std::to_string(schema.size()));
      for (std::size_t c = 0; c < schema.size(); ++c)
        if (!fits(rows[r][c], schema.column(c).width))
          throw Error(Errc::kValueOverflow,
                      "value " + std::to_string(rows[r][c]) + " in column '" +
                          schema.column(c).name + "' needs more than " +
                          std::to_string(schema.column(c).width) + " bits");
    }
  }
};

struct EncRow {
  std::vector<CipherWord> cells;
  CipherBit presence;

  void write(ByteWriter& w) const {
    w.header(RecordKind::kEncRow);
    w.u32(static_cast<std::uint32_t>(cells.size()));
    for (const auto& c : cells) c.write(w);
    presence.write(w);
  }
  static EncRow read(ByteReader& r) {
    r.header(RecordKind::kEncRow);
    auto n = r.u32();
    std::vector<CipherWord> cells;
    cells.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) cells.push_back(CipherWord::read(r));
    auto p = CipherBit::read(r);
    return EncRow{std::move(cells), std::move(p)};
  }
};

/// Encrypted table with a presence bit per physical row. The schema and the
/// capacity (physical row count) are public; which rows are present is not.
struct EncTable {
  std::string name;
  Schema schema;
  std::vector<EncRow> rows;

  std::size_t capacity() const { return rows.size(); }

  void validate() const {
    for (const auto& row : rows) {
      if (row.cells.size() != schema.size())
        throw Error(Errc::kSchemaMismatch, "row arity does not match schema of " + name);
      for (std::size_t c = 0; c < schema.size(); ++c)
        if (row.cells[c].width() != schema.column(c).width)
          throw Error(Errc::kWidthMismatch, "cell width does not match column '" +
                                                schema.column(c).name + "'");
    }
  }

  void write(ByteWriter& w) const {
    w.header(RecordKind::kEncTable);
    w.str(name);
    w.u32(static_cast<std::uint32_t>(schema.size()));
    for (const auto& c : schema.columns()) {
      w.str(c.name);
      w.u32(static_cast<std::uint32_t>(c.width));
    }
    w.u32(static_cast<std::uint32_t>(rows.size()));
    for (const auto& row : rows) row.write(w);
  }
  static EncTable read(ByteReader& r) {
    r.header(RecordKind::kEncTable);
    EncTable t;
    t.name = r.str();
    auto ncols = r.u32();
    std::vector<Column> cols;
    for (std::uint32_t i = 0; i < ncols; ++i) {
      auto name = r.str();
      cols.push_back(Column{std::move(name), r.u32()});
    }
    t.schema = Schema(std::move(cols));
    auto nrows = r.u32();
    t.rows.reserve(nrows);
    for (std::uint32_t i = 0; i < nrows; ++i) t.rows.push_back(EncRow::read(r));
    t.validate();
    return t;
  }
};

/// Encrypts every cell and presence bit under `pk`. `presence` defaults to
/// all rows present.
inline EncTable encrypt_table(const PublicKey& pk, const PlainTable& plain,
                              std::span<const bool> presence = {}) {
  plain.validate();
  if (!presence.empty() && presence.size() != plain.rows.size())
    throw Error(Errc::kInvalidArgument, "presence vector length differs from row count");
  EncTable t{plain.name, plain.schema, {}};
  t.rows.reserve(plain.rows.size());
  for (std::size_t r = 0; r < plain.rows.size(); ++r) {
    std::vector<CipherWord> cells;
    cells.reserve(plain.schema.size());
    for (std::size_t c = 0; c < plain.schema.size(); ++c)
      cells.push_back(encrypt_word(pk, plain.rows[r][c], plain.schema.column(c).width));
    const bool present = presence.empty() ? true : presence[r];
    t.rows.push_back(EncRow{std::move(cells), encrypt_bit(pk, present)});
  }
  return t;
}

/// Every physical row decrypted, alongside its presence bit.
struct DecryptedTable {
  PlainTable table;
  std::vector<bool> presence;

  PlainTable present_rows() const {
    PlainTable out{table.name, table.schema, {}};
    for (std::size_t r = 0; r < table.rows.size(); ++r)
      if (presence[r]) out.rows.push_back(table.rows[r]);
    return out;
  }
};

inline Row decrypt_row(const ClientKeys& keys, const EncRow& row) {
  Row out;
  out.reserve(row.cells.size());
  for (const auto& c : row.cells) out.push_back(decrypt_word(keys, c));
  return out;
}

inline DecryptedTable decrypt_table(const ClientKeys& keys, const EncTable& t) {
  DecryptedTable out{PlainTable{t.name, t.schema, {}}, {}};
  for (const auto& row : t.rows) {
    out.table.rows.push_back(decrypt_row(keys, row));
    out.presence.push_back(keys.decrypt(row.presence));
  }
  return out;
}

/// Rows sorted lexicographically, for multiset comparison.
inline std::vector<Row> as_multiset(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace encdb
