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

#pragma once

// Schedulability analysis: SPRT hypothesis testing and binomial estimation
// over stochastic runs, and bounded exhaustive exploration of the
// discrete-time semantics, globally or per partition.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dima/config.hpp"
#include "dima/engine.hpp"
#include "dima/interfaces.hpp"
#include "dima/trace.hpp"

namespace dima {

struct SmcQuery {
  Micros horizon = 100 * kMillis;
  double theta = 0.001;
  double alpha = 0.05;
  double beta = 0.05;
  double delta = 0.005;
  std::int64_t max_runs = 100000;
  /// Runs to complete before H0 may be accepted. Negative selects the
  /// smallest count whose zero-violation 95% upper bound is below theta.
  std::int64_t min_runs = -1;
  unsigned workers = 0;  // 0: hardware concurrency
  std::uint64_t seed = 0;
};

/// Throws ConfigError when the query is out of range.
void validate(const SmcQuery& q);

/// Zero-violation run count whose exact 95% upper bound drops below theta.
std::int64_t runs_for_bound(double theta);

struct BinomialInterval {
  double low = 0.0;
  double high = 1.0;
};

/// Exact (Clopper-Pearson) two-sided interval for x successes in n trials.
BinomialInterval clopper_pearson(std::int64_t x, std::int64_t n, double confidence = 0.95);

struct McQuery {
  std::optional<std::string> partition;  // global when empty
  Micros tick = 100;
  Micros horizon = 0;  // 0: default for the scope
  Branching branching = Branching::Endpoints;
  std::uint64_t budget = 20'000'000;  // stored states
  bool collect_all = false;           // keep exploring past violations
  unsigned workers = 0;
};

struct ViolationKey {
  ViolationKind kind;
  Micros time;
  std::string subject;
  friend auto operator<=>(const ViolationKey&, const ViolationKey&) = default;
};

struct Statistics {
  std::int64_t runs = 0;
  std::int64_t violations = 0;
  std::optional<BinomialInterval> interval;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t peak_frontier = 0;
  double seconds = 0.0;
  std::uint64_t memory_bytes = 0;
};

enum class Decision { Schedulable, PassesSmc, NonSchedulable, Inconclusive };
const char* to_string(Decision d);

struct AnalysisReport {
  Decision decision = Decision::Inconclusive;
  std::string scope = "global";
  std::string method;     // "smc" or "mc"
  std::string semantics;  // what was checked
  std::vector<std::string> caveats;
  std::string config_hash;
  Verdict violation;             // first violation when NonSchedulable
  std::optional<Trace> witness;  // replayable when NonSchedulable
  std::vector<ViolationKey> all_violations;  // collect_all only
  std::map<std::string, Interval> envelopes;
  Statistics stats;
};

/// Exit code contract: 0 pass, 1 violation, 3 inconclusive.
int exit_code(Decision d);

AnalysisReport smc_test(const SystemConfig& cfg, const SmcQuery& q);

struct Estimate {
  std::int64_t runs = 0;
  std::int64_t violations = 0;
  BinomialInterval interval;
};

Estimate smc_estimate(const SystemConfig& cfg, Micros horizon, std::int64_t runs, unsigned workers = 0,
                      std::uint64_t seed = 0);

/// Least common multiple of the periodic constants of a model, doubled and
/// capped at 400 ms.
Micros default_mc_horizon(const Model& model);

/// Send-offset envelopes of every message, measured by exhaustive
/// exploration of each source partition in isolation.
SendEnvelopes send_envelopes(const SystemConfig& cfg, Micros tick, Branching branching, unsigned workers = 0);

/// Explores `model` exhaustively. The scope and envelopes are taken from the
/// model.
AnalysisReport mc_explore(const Model& model, const McQuery& q);

/// Builds the scope (computing envelopes for a partition slice) and explores it.
AnalysisReport mc_check(const SystemConfig& cfg, const McQuery& q);

/// Runs mc_check for every partition. Partitions run concurrently.
std::vector<AnalysisReport> mc_check_all(const SystemConfig& cfg, McQuery q);

/// Throws ConfigError when a partition is missing or hashes disagree.
AnalysisReport compositional_verdict(const SystemConfig& cfg, const std::vector<AnalysisReport>& reports);

}  // namespace dima
