// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "encdb/encdb.hpp"

namespace encdb::testing {

/// The three-row computer catalog, third row logically absent.
inline PlainTable pc_table() {
  return PlainTable{"pc",
                    Schema({{"model", 12}, {"speed", 4}, {"ram", 12}, {"hd", 12}, {"price", 12}}),
                    {{1001, 3, 1024, 250, 2114}, {1002, 2, 512, 80, 478}, {1003, 1, 512, 250, 600}}};
}

inline std::vector<bool> pc_presence() { return {true, true, false}; }

inline EncTable encrypt_with(const PublicKey& pk, const PlainTable& t, const std::vector<bool>& presence) {
  // std::vector<bool> has no contiguous storage to span over.
  auto flags = std::make_unique<bool[]>(presence.size());
  std::copy(presence.begin(), presence.end(), flags.get());
  return encrypt_table(pk, t, std::span<const bool>(flags.get(), presence.size()));
}

/// Random table plus presence bits, values below 2^width.
struct RandomTable {
  PlainTable plain;
  std::vector<bool> presence;

  PlainTable present() const {
    PlainTable out{plain.name, plain.schema, {}};
    for (std::size_t i = 0; i < plain.rows.size(); ++i)
      if (presence[i]) out.rows.push_back(plain.rows[i]);
    return out;
  }
};

inline RandomTable random_table(std::mt19937_64& rng, const Schema& schema, std::size_t max_rows,
                                std::uint64_t value_cap = ~std::uint64_t{0}) {
  RandomTable t{PlainTable{"t", schema, {}}, {}};
  const auto rows = std::uniform_int_distribution<std::size_t>(0, max_rows)(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    Row row;
    for (const auto& c : schema.columns()) {
      const auto hi = std::min(value_cap, max_value(c.width));
      row.push_back(std::uniform_int_distribution<std::uint64_t>(0, hi)(rng));
    }
    t.plain.rows.push_back(std::move(row));
    t.presence.push_back((rng() & 3U) != 0);
  }
  return t;
}

}  // namespace encdb::testing
