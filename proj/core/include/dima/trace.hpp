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

// Run verdicts and the NDJSON trace format.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dima/config.hpp"

namespace dima {

enum class ViolationKind { DeadlineMiss, RefreshViolation, QueuingOverflow };
enum class FaultKind { VlError, LinkError, InvariantFault };

const char* to_string(ViolationKind k);
const char* to_string(FaultKind k);

struct Verdict {
  enum class Outcome { NoViolationWithinHorizon, Violation, ModelFault };

  Outcome outcome = Outcome::NoViolationWithinHorizon;
  ViolationKind kind = ViolationKind::DeadlineMiss;  // when Violation
  FaultKind fault = FaultKind::InvariantFault;       // when ModelFault
  Micros time = 0;
  std::string subject;
  std::string detail;

  [[nodiscard]] bool ok() const { return outcome == Outcome::NoViolationWithinHorizon; }
  [[nodiscard]] bool violation() const { return outcome == Outcome::Violation; }
  [[nodiscard]] std::string describe() const;

  static Verdict pass(Micros horizon) { return Verdict{Outcome::NoViolationWithinHorizon, {}, {}, horizon, {}, {}}; }
  static Verdict violated(ViolationKind k, Micros t, std::string subject, std::string detail = {});
  static Verdict faulted(FaultKind f, Micros t, std::string subject, std::string detail = {});

  /// Outcome, kind, time and subject agree (detail is informational).
  [[nodiscard]] bool same(const Verdict& o) const;
};

const char* to_string(Verdict::Outcome o);

struct TraceRecord {
  Micros t = 0;
  std::string subject;
  std::string transition;
  std::string detail;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TraceHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  Micros horizon = 0;
  std::string mode = "smc";     // "smc" (stochastic) or "mc" (scripted choices)
  std::string scope = "global";  // "global" or a partition id
  Micros tick = 0;               // mc only
  std::string branching;         // mc only
  std::map<std::string, Interval> envelopes;  // interface send envelopes of a slice
  std::vector<std::vector<int>> choices;      // mc only: one script per macro-step
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceRecord> records;
  Verdict verdict;
  bool complete = false;  // carries its final verdict record
};

struct TraceFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_trace(std::ostream& out, const Trace& trace);
std::string trace_to_string(const Trace& trace);
/// Throws TraceFormatError on malformed input.
Trace read_trace(std::istream& in);
Trace trace_from_string(const std::string& text);

}  // namespace dima
