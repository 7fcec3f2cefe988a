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

#include <doctest.h>

#include <json.hpp>

#include <map>
#include <regex>

#include "dima/engine.hpp"
#include "dima/report.hpp"
#include "support.hpp"

using namespace dima;
using dima::test::case1;

namespace {

const Trace& violating_trace() {
  static const Trace trace = [] {
    const Model model(case1(), Scope::global());
    for (std::uint64_t seed = 0;; ++seed) {
      Trace t;
      if (!run(model, seed, 100 * kMillis, &t).ok()) return t;
    }
  }();
  return trace;
}

// Minimal well-formedness check: balanced, properly nested elements.
bool balanced_xml(const std::string& text) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z][\w:-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3].length() > 0) continue;
    if (m[1].length() == 0) {
      stack.push_back(m[2]);
    } else {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("window parsing") {
  CHECK(parse_window("10ms:20ms") == Interval{10000, 20000});
  CHECK(parse_window("0:500") == Interval{0, 500});
  CHECK_THROWS_AS(parse_window("20ms"), ConfigError);
  CHECK_THROWS_AS(parse_window("20ms:10ms"), ConfigError);
}

TEST_CASE("gantt segments cover tasks, partitions and the network") {
  const GanttDoc doc = build_gantt(violating_trace());
  std::map<std::string, int> lanes;
  for (const auto& s : doc.segments) {
    ++lanes[s.lane];
    CHECK(s.start <= s.end);
  }
  for (const char* lane : {"task", "partition", "vltx", "vlrx", "port"}) CHECK(lanes[lane] > 0);
  REQUIRE_FALSE(doc.markers.empty());
  CHECK(doc.markers.back().subject == "Msg2@P3");
}

TEST_CASE("a task runs in one interval at a time") {
  const GanttDoc doc = build_gantt(violating_trace());
  std::map<std::string, Micros> last_end;
  for (const auto& s : doc.segments) {
    if (s.lane != "task" || s.state != "Running") continue;
    auto [it, fresh] = last_end.try_emplace(s.subject, s.end);
    if (!fresh) {
      CHECK(s.start >= it->second);
      it->second = s.end;
    }
  }
  CHECK_FALSE(last_end.empty());
}

TEST_CASE("clipping to a window") {
  const Interval w{20000, 40000};
  const GanttDoc doc = build_gantt(violating_trace(), w);
  CHECK(doc.t0 == w.min);
  CHECK(doc.t1 == w.max);
  CHECK_FALSE(doc.segments.empty());
  for (const auto& s : doc.segments) {
    CHECK(s.start >= w.min);
    CHECK(s.end <= w.max);
  }
}

TEST_CASE("CSV round-trip") {
  const GanttDoc doc = build_gantt(violating_trace());
  const std::string csv = to_csv(doc);
  CHECK(csv.rfind("subject,lane,state,start_us,end_us\n", 0) == 0);
  CHECK(segments_from_csv(csv) == doc.segments);
  CHECK_THROWS_AS(segments_from_csv("nope\n"), TraceFormatError);
  CHECK_THROWS_AS(segments_from_csv("subject,lane,state,start_us,end_us\na,b,c\n"), TraceFormatError);
}

TEST_CASE("SVG output is well formed and marks the violation") {
  const std::string svg = to_svg(build_gantt(violating_trace()));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("class=\"violation\"") != std::string::npos);
  CHECK(balanced_xml(svg));
}

TEST_CASE("JSON report") {
  AnalysisReport rep;
  rep.decision = Decision::NonSchedulable;
  rep.method = "smc";
  rep.config_hash = config_hash_hex(case1());
  rep.violation = violating_trace().verdict;
  rep.stats.runs = 2;
  rep.stats.violations = 1;
  const auto j = nlohmann::json::parse(report_json(rep, "w.ndjson"));
  CHECK(j.at("decision") == "NonSchedulable");
  CHECK(j.at("violation").at("subject") == "Msg2@P3");
  CHECK(j.at("violation").at("kind") == "RefreshViolation");
  CHECK(j.at("witness") == "w.ndjson");
  CHECK(j.at("statistics").at("runs") == 2);
}
