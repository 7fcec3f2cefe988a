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

#include <sstream>

#include "dima/engine.hpp"
#include "dima/monitor.hpp"
#include "support.hpp"

using namespace dima;
using dima::test::case1;
using dima::test::case2;

namespace {

Trace simulate(const SystemConfig& cfg, std::uint64_t seed, Micros horizon = 100 * kMillis) {
  const Model model(cfg, Scope::global());
  Trace t;
  run(model, seed, horizon, &t);
  return t;
}

std::uint64_t first_violating_seed(const SystemConfig& cfg) {
  const Model model(cfg, Scope::global());
  for (std::uint64_t seed = 0; seed < 500; ++seed)
    if (!run(model, seed, 100 * kMillis).ok()) return seed;
  FAIL("no violating seed");
  return 0;
}

}  // namespace

TEST_CASE("runs are deterministic per seed") {
  const std::string a = trace_to_string(simulate(case1(), 7));
  const std::string b = trace_to_string(simulate(case1(), 7));
  CHECK(a == b);
  CHECK(a != trace_to_string(simulate(case1(), 8)));
}

TEST_CASE("replay reproduces a run byte for byte") {
  for (std::uint64_t seed : std::vector<std::uint64_t>{0, 3, first_violating_seed(case1())}) {
    const Trace t = simulate(case1(), seed);
    CHECK(t.complete);
    const Trace again = replay(case1(), t.header);
    CHECK(trace_to_string(again) == trace_to_string(t));
  }
}

TEST_CASE("replay refuses a trace of another configuration") {
  const Trace t = simulate(case1(), 1, 10 * kMillis);
  CHECK_THROWS_AS(replay(case2(), t.header), ConfigError);
}

TEST_CASE("traces survive serialization") {
  const Trace t = simulate(case1(), first_violating_seed(case1()));
  const Trace back = trace_from_string(trace_to_string(t));
  CHECK(back.header == t.header);
  CHECK(back.records == t.records);
  CHECK(back.complete);
  CHECK(back.verdict.same(t.verdict));
}

TEST_CASE("the first case shows the refresh violation at P3") {
  const Trace t = simulate(case1(), first_violating_seed(case1()));
  REQUIRE(t.verdict.violation());
  CHECK(t.verdict.kind == ViolationKind::RefreshViolation);
  CHECK(t.verdict.subject == "Msg2@P3");
  CHECK(monitor_offline(t, case1()).same(t.verdict));
}

TEST_CASE("the second case runs clean") {
  const Model model(case2(), Scope::global());
  for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(run(model, seed, 100 * kMillis).ok());
}

TEST_CASE("a second write into a full queuing port overflows") {
  SystemConfig cfg = case1();
  for (auto& t : cfg.tasks)
    if (t.id == "Tsk4_2") t.chunks.insert(t.chunks.end() - 1, instr::Send{"Msg3"});
  const Model model(cfg, Scope::global());
  Trace trace;
  const Verdict v = run(model, 0, 100 * kMillis, &trace);
  REQUIRE(v.violation());
  CHECK(v.kind == ViolationKind::QueuingOverflow);
  CHECK(v.subject == "Msg3@P4.out");
  CHECK(monitor_offline(trace, cfg).same(v));
}

TEST_CASE("model subjects and constants") {
  const Model model(case1(), Scope::global());
  CHECK(model.partitions.size() == 5);
  CHECK(model.tasks.size() == case1().tasks.size());
  CHECK(model.message_index("Msg2") >= 0);
  CHECK(model.task_index("Tsk3_2") >= 0);
  for (Micros c : model.constants()) CHECK(c % 100 == 0);
}

TEST_CASE("a partition slice models the interfaces of its inputs") {
  const Model model(case1(), Scope::of_slice(build_slice(case1(), "P3")));
  CHECK(model.scope().name() == "P3");
  CHECK(model.partitions.size() == 1);
  CHECK(model.tasks.size() == 4);
  CHECK(model.interfaces.size() >= 3);
  Trace t;
  const Verdict v = run(model, 0, 100 * kMillis, &t);
  CHECK(monitor_offline(t, case1()).same(v));
}

TEST_CASE("time never goes backwards and the horizon bounds the run") {
  const Model model(case1(), Scope::global());
  RandomChooser ch(11);
  SimOptions opts;
  opts.horizon = 30 * kMillis;
  std::vector<TraceRecord> recs;
  Simulator sim(model, ch, opts, &recs);
  State s = sim.initial();
  Micros last = 0;
  while (true) {
    if (sim.process_instant(s)) break;
    if (!sim.advance(s)) break;
    CHECK(s.now > last);
    last = s.now;
  }
  CHECK(last <= opts.horizon);
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].t <= recs[i].t);
}

TEST_CASE("scripted choices repeat exactly") {
  const Model model(case1(), Scope::tasks_only("P1"));
  auto once = [&](std::vector<int> script) {
    ScriptChooser ch(std::move(script));
    SimOptions opts;
    opts.horizon = 50 * kMillis;
    std::vector<TraceRecord> recs;
    Simulator sim(model, ch, opts, &recs);
    State s = sim.initial();
    while (!sim.process_instant(s) && sim.advance(s)) {
    }
    return recs;
  };
  CHECK(once({1, 0, 1}) == once({1, 0, 1}));
  CHECK(once({}) == once({0, 0, 0, 0}));
}
