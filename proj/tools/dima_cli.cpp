/*
 * Copyright (c) 2026, The DIMA Schedulability Analyzer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: simulate, smc, mc, gantt, validate.
//
// Exit codes: 0 pass, 1 violation, 2 usage or configuration error,
// 3 inconclusive.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dima/analysis.hpp"
#include "dima/config.hpp"
#include "dima/engine.hpp"
#include "dima/monitor.hpp"
#include "dima/report.hpp"
#include "dima/trace.hpp"

namespace {

using namespace dima;

constexpr int kExitUsage = 2;

unsigned default_workers() {
  if (const char* env = std::getenv("DIMA_WORKERS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "ignoring malformed DIMA_WORKERS=" << env << "\n";
    }
  }
  return 0;
}

std::uint64_t parse_budget(const std::string& text) {
  if (text == "tiny") return 1000;
  std::size_t pos = 0;
  const std::uint64_t base = std::stoull(text, &pos);
  const std::string suffix = text.substr(pos);
  if (suffix.empty()) return base;
  if (suffix == "k" || suffix == "K") return base * 1000;
  if (suffix == "M") return base * 1000 * 1000;
  if (suffix == "G") return base * 1000 * 1000 * 1000;
  throw ConfigError("bad budget " + text);
}

SystemConfig load_valid(const std::string& path) {
  SystemConfig cfg = load_config(path);
  const auto diags = validate(cfg);
  for (const auto& d : diags)
    if (d.severity == Severity::Error) std::cerr << "error [" << d.code << "] " << d.message << "\n";
  if (has_errors(diags)) throw ConfigError("configuration " + path + " is invalid");
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void write_witness(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_trace(out, trace);
}

struct SimulateArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string horizon;
  std::string trace;
};

int cmd_simulate(const SimulateArgs& a) {
  const SystemConfig cfg = load_valid(a.config);
  const Micros horizon = a.horizon.empty() ? cfg.smc.horizon : parse_duration(a.horizon);
  const Model model(cfg, Scope::global());
  Trace trace;
  const Verdict v = run(model, a.seed, horizon, &trace);
  if (!a.trace.empty()) write_witness(a.trace, trace);
  std::cout << v.describe() << "\n";
  if (!v.ok()) {
    const Verdict check = monitor_offline(trace, cfg);
    std::cout << "offline monitor: " << (check.same(v) ? "agrees" : "DISAGREES: " + check.describe()) << "\n";
  }
  return v.ok() ? 0 : 1;
}

struct SmcArgs {
  std::string config;
  SmcQuery q;
  std::string horizon;
  std::string witness = "smc-witness.ndjson";
};

int cmd_smc(SmcArgs a) {
  const SystemConfig cfg = load_valid(a.config);
  a.q.horizon = a.horizon.empty() ? cfg.smc.horizon : parse_duration(a.horizon);
  const AnalysisReport rep = smc_test(cfg, a.q);
  std::string path;
  if (rep.witness) {
    path = a.witness;
    write_witness(path, *rep.witness);
  }
  std::cout << report_json(rep, path) << "\n";
  return exit_code(rep.decision);
}

struct McArgs {
  std::string config;
  std::string partition;
  bool global = false;
  std::string tick = "100us";
  std::string branching = "Endpoints";
  std::string horizon;
  std::string budget = "20M";
  unsigned workers = 0;
  std::string witness = "mc-witness.ndjson";
};

int cmd_mc(const McArgs& a) {
  const SystemConfig cfg = load_valid(a.config);
  McQuery q;
  q.tick = parse_duration(a.tick);
  if (a.branching == "Endpoints") q.branching = Branching::Endpoints;
  else if (a.branching == "FullTick") q.branching = Branching::FullTick;
  else throw ConfigError("branching must be Endpoints or FullTick");
  q.horizon = a.horizon.empty() ? 0 : parse_duration(a.horizon);
  q.budget = parse_budget(a.budget);
  q.workers = a.workers;
  if (a.global == !a.partition.empty()) throw ConfigError("give exactly one of --partition or --global");

  if (a.partition == "all") {
    const auto parts = mc_check_all(cfg, q);
    const AnalysisReport rep = compositional_verdict(cfg, parts);
    std::string path;
    if (rep.witness) {
      path = a.witness;
      write_witness(path, *rep.witness);
    }
    for (const auto& p : parts)
      std::cerr << p.scope << ": " << to_string(p.decision) << " (" << p.stats.states << " states, " << p.stats.seconds
                << " s)\n";
    std::cout << report_json(rep, path, parts) << "\n";
    return exit_code(rep.decision);
  }
  if (!a.global) q.partition = a.partition;
  const AnalysisReport rep = mc_check(cfg, q);
  std::string path;
  if (rep.witness) {
    path = a.witness;
    write_witness(path, *rep.witness);
  }
  std::cout << report_json(rep, path) << "\n";
  return exit_code(rep.decision);
}

struct GanttArgs {
  std::string trace;
  std::string format = "svg";
  std::string window;
  std::string output;
};

int cmd_gantt(const GanttArgs& a) {
  std::ifstream in(a.trace);
  if (!in) throw ConfigError("cannot read " + a.trace);
  const Trace trace = read_trace(in);
  std::optional<Interval> window;
  if (!a.window.empty()) window = parse_window(a.window);
  const GanttDoc doc = build_gantt(trace, window);
  const std::string text = a.format == "csv" ? to_csv(doc) : to_svg(doc);
  if (a.output.empty()) std::cout << text;
  else write_file(a.output, text);
  return 0;
}

int cmd_validate(const std::string& path) {
  const SystemConfig cfg = load_config(path);
  const auto diags = validate(cfg);
  for (const auto& d : diags)
    std::cout << (d.severity == Severity::Error ? "error" : "warning") << " [" << d.code << "] " << d.message << "\n";
  std::cout << "config hash " << config_hash_hex(cfg) << "\n";
  return has_errors(diags) ? kExitUsage : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schedulability analysis of distributed IMA configurations"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run one stochastic simulation");
  s->add_option("config", sim.config, "Configuration JSON")->required();
  s->add_option("--seed", sim.seed, "Random seed");
  s->add_option("--horizon", sim.horizon, "Horizon (us, or with unit)");
  s->add_option("--trace", sim.trace, "Write the NDJSON trace here");

  SmcArgs smc;
  smc.q.workers = default_workers();
  auto* st = app.add_subcommand("smc", "Statistical hypothesis test over stochastic runs");
  st->add_option("config", smc.config, "Configuration JSON")->required();
  st->add_option("--theta", smc.q.theta, "Violation probability bound");
  st->add_option("--alpha", smc.q.alpha, "Type I error bound");
  st->add_option("--beta", smc.q.beta, "Type II error bound");
  st->add_option("--delta", smc.q.delta, "Indifference half-width");
  st->add_option("--horizon", smc.horizon, "Horizon (us, or with unit)");
  st->add_option("--max-runs", smc.q.max_runs, "Maximum number of runs");
  st->add_option("--min-runs", smc.q.min_runs, "Runs required before accepting H0 (default: bound below theta)");
  st->add_option("--workers", smc.q.workers, "Worker threads (default DIMA_WORKERS or all cores)");
  st->add_option("--seed", smc.q.seed, "First seed");
  st->add_option("--witness", smc.witness, "Witness trace path");

  McArgs mc;
  mc.workers = default_workers();
  auto* m = app.add_subcommand("mc", "Exhaustive discrete-time model checking");
  m->add_option("config", mc.config, "Configuration JSON")->required();
  m->add_option("--partition", mc.partition, "Partition id, or 'all' for compositional analysis");
  m->add_flag("--global", mc.global, "Check the whole system at once");
  m->add_option("--tick", mc.tick, "Time step (default 100us)");
  m->add_option("--branching", mc.branching, "Endpoints or FullTick");
  m->add_option("--horizon", mc.horizon, "Horizon (default: 2 hyper-periods, at most 400ms)");
  m->add_option("--budget", mc.budget, "State budget, e.g. 5M, or 'tiny'");
  m->add_option("--workers", mc.workers, "Worker threads");
  m->add_option("--witness", mc.witness, "Witness trace path");

  GanttArgs gantt;
  auto* g = app.add_subcommand("gantt", "Render a trace as a Gantt chart");
  g->add_option("trace", gantt.trace, "NDJSON trace")->required();
  g->add_option("--out", gantt.format, "svg or csv")->check(CLI::IsMember({"svg", "csv"}));
  g->add_option("--window", gantt.window, "t0:t1");
  g->add_option("-o,--output", gantt.output, "Output file (default stdout)");

  std::string validate_path;
  auto* v = app.add_subcommand("validate", "Check a configuration");
  v->add_option("config", validate_path, "Configuration JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*st) return cmd_smc(smc);
    if (*m) return cmd_mc(mc);
    if (*g) return cmd_gantt(gantt);
    if (*v) return cmd_validate(validate_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TraceFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
