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

#include "dima/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace dima {

using nlohmann::json;

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::DeadlineMiss: return "DeadlineMiss";
    case ViolationKind::RefreshViolation: return "RefreshViolation";
    case ViolationKind::QueuingOverflow: return "QueuingOverflow";
  }
  return "?";
}

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::VlError: return "VlError";
    case FaultKind::LinkError: return "LinkError";
    case FaultKind::InvariantFault: return "InvariantFault";
  }
  return "?";
}

const char* to_string(Verdict::Outcome o) {
  switch (o) {
    case Verdict::Outcome::NoViolationWithinHorizon: return "NoViolationWithinHorizon";
    case Verdict::Outcome::Violation: return "Violation";
    case Verdict::Outcome::ModelFault: return "ModelFault";
  }
  return "?";
}

Verdict Verdict::violated(ViolationKind k, Micros t, std::string subject, std::string detail) {
  Verdict v;
  v.outcome = Outcome::Violation;
  v.kind = k;
  v.time = t;
  v.subject = std::move(subject);
  v.detail = std::move(detail);
  return v;
}

Verdict Verdict::faulted(FaultKind f, Micros t, std::string subject, std::string detail) {
  Verdict v;
  v.outcome = Outcome::ModelFault;
  v.fault = f;
  v.time = t;
  v.subject = std::move(subject);
  v.detail = std::move(detail);
  return v;
}

bool Verdict::same(const Verdict& o) const {
  if (outcome != o.outcome) return false;
  switch (outcome) {
    case Outcome::NoViolationWithinHorizon: return true;
    case Outcome::Violation: return kind == o.kind && time == o.time && subject == o.subject;
    case Outcome::ModelFault: return fault == o.fault && time == o.time && subject == o.subject;
  }
  return false;
}

std::string Verdict::describe() const {
  std::ostringstream os;
  switch (outcome) {
    case Outcome::NoViolationWithinHorizon: os << "no violation within " << time << "us"; break;
    case Outcome::Violation: os << to_string(kind) << " on " << subject << " at " << time << "us"; break;
    case Outcome::ModelFault: os << "model fault " << to_string(fault) << " on " << subject << " at " << time << "us"; break;
  }
  if (!detail.empty()) os << " (" << detail << ")";
  return os.str();
}

namespace {

json header_json(const TraceHeader& h) {
  json j{{"type", "header"}, {"config_hash", h.config_hash}, {"seed", h.seed},
         {"horizon", h.horizon}, {"mode", h.mode},           {"scope", h.scope}};
  if (h.mode == "mc") {
    j["tick"] = h.tick;
    j["branching"] = h.branching;
    j["choices"] = h.choices;
  }
  if (!h.envelopes.empty()) {
    json env = json::object();
    for (const auto& [m, iv] : h.envelopes) env[m] = {iv.min, iv.max};
    j["envelopes"] = env;
  }
  return j;
}

json verdict_json(const Verdict& v) {
  json j{{"type", "verdict"}, {"outcome", to_string(v.outcome)}, {"t", v.time}, {"subject", v.subject}};
  if (v.outcome == Verdict::Outcome::Violation) j["kind"] = to_string(v.kind);
  if (v.outcome == Verdict::Outcome::ModelFault) j["kind"] = to_string(v.fault);
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

Verdict verdict_from(const json& j) {
  const std::string outcome = j.at("outcome").get<std::string>();
  const Micros t = j.at("t").get<Micros>();
  const std::string subject = j.value("subject", "");
  const std::string detail = j.value("detail", "");
  if (outcome == "NoViolationWithinHorizon") return Verdict::pass(t);
  const std::string kind = j.at("kind").get<std::string>();
  if (outcome == "Violation") {
    for (auto k : {ViolationKind::DeadlineMiss, ViolationKind::RefreshViolation, ViolationKind::QueuingOverflow})
      if (kind == to_string(k)) return Verdict::violated(k, t, subject, detail);
  } else if (outcome == "ModelFault") {
    for (auto f : {FaultKind::VlError, FaultKind::LinkError, FaultKind::InvariantFault})
      if (kind == to_string(f)) return Verdict::faulted(f, t, subject, detail);
  }
  throw TraceFormatError("unknown verdict '" + outcome + "/" + kind + "'");
}

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  out << header_json(trace.header).dump() << '\n';
  for (const auto& r : trace.records) {
    json j{{"t", r.t}, {"subject", r.subject}, {"transition", r.transition}, {"detail", r.detail}};
    out << j.dump() << '\n';
  }
  if (trace.complete) out << verdict_json(trace.verdict).dump() << '\n';
}

std::string trace_to_string(const Trace& trace) {
  std::ostringstream os;
  write_trace(os, trace);
  return os.str();
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  Micros last_t = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      const std::string type = j.value("type", "record");
      if (type == "header") {
        TraceHeader& h = trace.header;
        h.config_hash = j.at("config_hash").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.horizon = j.at("horizon").get<Micros>();
        h.mode = j.value("mode", "smc");
        h.scope = j.value("scope", "global");
        h.tick = j.value("tick", Micros{0});
        h.branching = j.value("branching", "");
        if (j.contains("choices")) h.choices = j.at("choices").get<std::vector<std::vector<int>>>();
        if (j.contains("envelopes"))
          for (const auto& [m, iv] : j.at("envelopes").items()) h.envelopes[m] = {iv.at(0).get<Micros>(), iv.at(1).get<Micros>()};
        have_header = true;
      } else if (type == "verdict") {
        trace.verdict = verdict_from(j);
        trace.complete = true;
      } else {
        if (!have_header) throw TraceFormatError("record before header");
        TraceRecord r{j.at("t").get<Micros>(), j.at("subject").get<std::string>(),
                      j.at("transition").get<std::string>(), j.value("detail", "")};
        if (r.t < last_t) throw TraceFormatError("line " + std::to_string(lineno) + ": time decreases");
        last_t = r.t;
        trace.records.push_back(std::move(r));
      }
    } catch (const json::exception& e) {
      throw TraceFormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw TraceFormatError("missing header record");
  return trace;
}

Trace trace_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_trace(is);
}

}  // namespace dima
