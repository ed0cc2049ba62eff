// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Minimal client/server round trip: upload a table, run a selection with an
// encrypted literal, fetch only the matching rows.

#include <cstdio>

#include "encdb/encdb.hpp"

int main() {
  using namespace encdb;

  PlainTable pc{"pc",
                Schema({{"model", 12}, {"speed", 4}, {"price", 12}}),
                {{1001, 3, 2114}, {1002, 2, 478}, {1003, 1, 600}}};

  ClientSession client(SecurityContext::circular(8));
  ServerStore server;
  server.receive(client.setup_keys());
  server.receive(client.upload(pc));

  auto plan = parse_plan("select(speed > 1, table(pc))", server.catalog());
  auto count = server.receive(client.submit_query(plan));
  auto fetch = client.receive_count(*count);
  auto result = client.receive_rows(*server.receive(fetch));

  for (const auto& row : result.rows)
    std::printf("model=%llu speed=%llu price=%llu\n", static_cast<unsigned long long>(row[0]),
                static_cast<unsigned long long>(row[1]), static_cast<unsigned long long>(row[2]));
  const auto stats = server.evaluator().stats();
  std::printf("gates=%llu refreshes=%llu\n", static_cast<unsigned long long>(stats.gates()),
              static_cast<unsigned long long>(stats.refreshes));
  return 0;
}
