// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// encdb: ingest CSV tables, run plans through the encrypted engine, compare
// against the plaintext oracle and report gate statistics.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "encdb/csv.hpp"
#include "encdb/engine.hpp"

namespace {

using namespace encdb;

struct Settings {
  std::size_t width_default = 8;
  std::uint32_t depth_budget = 8;
  std::string mode = "circular";
  std::size_t slack = 0;
  std::optional<std::uint64_t> seed;
  bool stats = false;
  std::vector<std::string> tables;
  std::string plan;
  std::size_t random = 0;
  std::optional<std::uint64_t> fault_gate;
  std::string cursor = "at-cursor";
  std::size_t repeat = 1;
};

SecurityContext security(const Settings& s) {
  if (s.mode == "circular") return SecurityContext::circular(s.depth_budget);
  if (s.mode.rfind("leveled:", 0) == 0) {
    const auto d = std::stoul(s.mode.substr(8));
    return SecurityContext::leveled(static_cast<std::uint32_t>(d), s.depth_budget);
  }
  throw Error(Errc::kInvalidArgument, "--mode must be circular or leveled:D");
}

RunOptions run_options(const Settings& s) {
  RunOptions o;
  o.security = security(s);
  o.security.validate();
  o.default_width = s.width_default;
  o.slack = s.slack;
  o.cursor = s.cursor == "any-row" ? CursorAdvance::kAnyRow : CursorAdvance::kAtCursor;
  o.fault_and = s.fault_gate;
  o.key_seed = s.seed;
  return o;
}

oracle::PlainCatalog load_tables(const Settings& s) {
  oracle::PlainCatalog out;
  for (const auto& spec : s.tables) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(Errc::kInvalidArgument, "--table expects name=path, got '" + spec + "'");
    auto name = spec.substr(0, eq);
    out.insert_or_assign(name, read_csv_file(spec.substr(eq + 1), name, s.width_default));
  }
  return out;
}

void print_stats(const RunStats& st) {
  std::printf("gates=%llu\n", static_cast<unsigned long long>(st.gates.gates()));
  std::printf("xor_gates=%llu\n", static_cast<unsigned long long>(st.gates.xor_gates));
  std::printf("and_gates=%llu\n", static_cast<unsigned long long>(st.gates.and_gates));
  std::printf("refreshes=%llu\n", static_cast<unsigned long long>(st.gates.refreshes));
  std::printf("encryptions=%llu\n", static_cast<unsigned long long>(st.gates.encryptions));
  std::printf("result_capacity=%zu\n", st.result_capacity);
  std::printf("n=%zu\n", st.n);
  std::printf("n_prime=%zu\n", st.n_prime);
  std::printf("fetch_bytes=%zu\n", st.fetch_bytes);
  std::printf("wall_ms=%.3f\n", st.wall_ms);
}

int cmd_ingest(const Settings& s) {
  const auto tables = load_tables(s);
  if (tables.empty()) throw Error(Errc::kInvalidArgument, "ingest needs at least one --table");
  auto keys = keygen(security(s), s.seed);
  for (const auto& [name, t] : tables) {
    auto enc = encrypt_table(keys.ladder.public_key(1), t);
    ByteWriter w;
    enc.write(w);
    auto back = decrypt_table(keys.client, enc);
    const bool ok = back.table.rows == t.rows;
    std::printf("table=%s\n", name.c_str());
    std::printf("columns=");
    for (std::size_t i = 0; i < t.schema.size(); ++i)
      std::printf("%s%s:%zu", i ? "," : "", t.schema.column(i).name.c_str(), t.schema.column(i).width);
    std::printf("\nrows=%zu\nencrypted_bytes=%zu\nround_trip=%s\n", t.rows.size(), w.bytes().size(),
                ok ? "ok" : "mismatch");
    if (!ok) return 1;
  }
  return 0;
}

int cmd_query(const Settings& s) {
  const auto tables = load_tables(s);
  const auto plan = parse_plan(s.plan, oracle::schemas(tables), PlanOptions{s.width_default});
  const auto res = run_encrypted(plan, tables, run_options(s));
  write_csv(std::cout, res.rows);
  std::cout.flush();
  if (s.stats) print_stats(res.stats);
  return 0;
}

bool report(const std::string& label, const DiffReport& rep, bool stats) {
  std::printf("%s %s", rep.pass ? "PASS" : "FAIL", label.c_str());
  if (!rep.pass) std::printf(": %s", rep.detail.c_str());
  std::printf("\n");
  if (stats) print_stats(rep.stats);
  return rep.pass;
}

int cmd_diff(const Settings& s) {
  auto opts = run_options(s);
  if (s.random > 0) {
    const auto base = s.seed.value_or(0);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < s.random; ++i) {
      const auto seed = base + i;
      auto w = random_workload(seed);
      opts.key_seed = seed;
      if (!report("seed=" + std::to_string(seed) + " " + to_text(w.plan), diff_run(w.plan, w.tables, opts),
                  s.stats))
        ++failures;
    }
    std::printf("passed=%zu failed=%zu\n", s.random - failures, failures);
    return failures == 0 ? 0 : 1;
  }
  const auto tables = load_tables(s);
  const auto plan = parse_plan(s.plan, oracle::schemas(tables), PlanOptions{s.width_default});
  return report(to_text(plan), diff_run(plan, tables, opts), s.stats) ? 0 : 1;
}

int cmd_bench(const Settings& s) {
  auto opts = run_options(s);
  std::vector<std::pair<Plan, oracle::PlainCatalog>> work;
  if (s.random > 0) {
    for (std::size_t i = 0; i < s.random; ++i) {
      auto w = random_workload(s.seed.value_or(0) + i);
      work.emplace_back(std::move(w.plan), std::move(w.tables));
    }
  } else {
    auto tables = load_tables(s);
    auto plan = parse_plan(s.plan, oracle::schemas(tables), PlanOptions{s.width_default});
    work.emplace_back(std::move(plan), std::move(tables));
  }
  RunStats total;
  std::size_t runs = 0;
  for (std::size_t r = 0; r < s.repeat; ++r)
    for (const auto& [plan, tables] : work) {
      const auto st = run_encrypted(plan, tables, opts).stats;
      total.gates.xor_gates += st.gates.xor_gates;
      total.gates.and_gates += st.gates.and_gates;
      total.gates.refreshes += st.gates.refreshes;
      total.gates.encryptions += st.gates.encryptions;
      total.wall_ms += st.wall_ms;
      total.result_capacity += st.result_capacity;
      total.n += st.n;
      total.n_prime += st.n_prime;
      total.fetch_bytes += st.fetch_bytes;
      ++runs;
    }
  std::printf("runs=%zu\n", runs);
  print_stats(total);
  std::printf("gates_per_ms=%.1f\n", total.wall_ms > 0 ? double(total.gates.gates()) / total.wall_ms : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query processing over a simulated leveled FHE backend"};
  app.require_subcommand(1);
  Settings s;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--table", s.tables, "Register a CSV table as name=path")->take_all();
    sub->add_option("--width-default", s.width_default, "Width of CSV columns without :width, and of count")
        ->check(CLI::Range(1, 64));
    sub->add_option("--depth-budget", s.depth_budget, "Multiplicative depth before a refresh")
        ->check(CLI::Range(1, 1 << 20));
    sub->add_option("--mode", s.mode, "circular or leveled:D");
    sub->add_option("--seed", s.seed, "Key seed; first seed for --random");
    sub->add_flag("--stats", s.stats, "Print key=value statistics");
  };
  auto with_plan = [&](CLI::App* sub, bool random_ok) {
    sub->add_option("--plan", s.plan, "Plan text");
    sub->add_option("--slack", s.slack, "Extra rows requested beyond the count");
    sub->add_option("--fault-gate", s.fault_gate, "Flip the output of the n-th AND gate");
    sub->add_option("--cursor", s.cursor, "Intersect/diff cursor rule")
        ->check(CLI::IsMember({"at-cursor", "any-row"}));
    if (random_ok) sub->add_option("--random", s.random, "Run N generated workloads instead of --plan");
  };

  auto* ingest = app.add_subcommand("ingest", "Load, encrypt and verify CSV tables");
  common(ingest);
  auto* query = app.add_subcommand("query", "Run a plan through the encrypted flow, print rows as CSV");
  common(query);
  with_plan(query, false);
  auto* diff = app.add_subcommand("diff", "Compare the encrypted flow with the plaintext oracle");
  common(diff);
  with_plan(diff, true);
  auto* bench = app.add_subcommand("bench", "Aggregate statistics over repeated runs");
  common(bench);
  with_plan(bench, true);
  bench->add_option("--repeat", s.repeat, "Repetitions")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const bool needs_plan = !ingest->parsed() && s.random == 0;
    if (needs_plan && s.plan.empty()) throw Error(Errc::kInvalidArgument, "--plan is required");
    if (ingest->parsed()) return cmd_ingest(s);
    if (query->parsed()) return cmd_query(s);
    if (diff->parsed()) return cmd_diff(s);
    return cmd_bench(s);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
