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

#include <algorithm>

#include "dima/config.hpp"
#include "support.hpp"

using namespace dima;
using dima::test::case1;
using dima::test::case2;
using nlohmann::json;

namespace {

bool has_code(const std::vector<Diagnostic>& diags, const std::string& code) {
  return std::any_of(diags.begin(), diags.end(), [&](const Diagnostic& d) { return d.code == code; });
}

json case1_doc() { return json::parse(serialize_config(case1())); }

}  // namespace

TEST_CASE("durations scale to integer microseconds") {
  CHECK(parse_duration("0.125ms") == 125);
  CHECK(parse_duration("25ms") == 25000);
  CHECK(parse_duration("800us") == 800);
  CHECK(parse_duration("2s") == 2'000'000);
  CHECK(parse_duration("42") == 42);
  CHECK(parse_duration("7.625ms") == 7625);
  CHECK_THROWS_AS(parse_duration("0.0001ms"), ConfigError);
  CHECK_THROWS_AS(parse_duration("5 parsecs"), ConfigError);
}

TEST_CASE("task rows expand into instructions") {
  const TaskSpec* t = case1().find_task("Tsk1_1");
  REQUIRE(t != nullptr);
  CHECK(std::get<Periodic>(t->release).period == 25000);
  CHECK(t->offset == 2000);
  CHECK(t->deadline == 25000);
  CHECK(t->priority == 2);
  const std::vector<Instruction> expected{instr::Compute{800, 1300}, instr::Compute{100, 200}, instr::End{}};
  CHECK(t->chunks == expected);

  const TaskSpec* t14 = case1().find_task("Tsk1_4");
  REQUIRE(t14 != nullptr);
  CHECK(std::holds_alternative<instr::Lock>(t14->chunks.at(0)));
  CHECK(std::holds_alternative<instr::Unlock>(t14->chunks.at(2)));
}

TEST_CASE("virtual link entries") {
  const VirtualLinkSpec* v1 = case1().find_vl("V1");
  REQUIRE(v1 != nullptr);
  CHECK(v1->bag == 8000);
  CHECK(v1->lmax == 200);
  CHECK(v1->source_es == "M1");
  CHECK(v1->routes.size() == 2);
}

TEST_CASE("an empty task list is reported") {
  json doc = case1_doc();
  doc["tasks"] = json::array();
  doc["messages"] = json::array();
  doc["mutexes"] = json::array();
  const SystemConfig cfg = parse_config(doc.dump());
  CHECK(has_code(validate(cfg), "no-tasks"));
}

TEST_CASE("bundled configurations validate") {
  CHECK_FALSE(has_errors(validate(case1())));
  CHECK_FALSE(has_errors(validate(case2())));
}

TEST_CASE("swapped windows of the second case are disjoint and cover the frame") {
  const PartitionSchedule* m1 = case2().schedule_of_module("M1");
  REQUIRE(m1 != nullptr);
  const PartitionSchedule* m2 = case2().schedule_of_module("M2");
  REQUIRE(m2 != nullptr);
  CHECK(case2().schedule_of_partition("P1")->windows.size() == 2);
  Micros covered = 0;
  for (const auto* s : {m1, m2, case2().schedule_of_module("M3")})
    for (const auto& w : s->windows) covered += w.duration;
  CHECK(covered == 25000);
  for (const auto& w : m1->windows) {
    if (w.partition == "P1") CHECK(w.offset == 5000);
    if (w.partition == "P2") CHECK(w.offset == 0);
  }
}

TEST_CASE("overlapping windows are reported") {
  json doc = case1_doc();
  for (auto& s : doc["schedules"])
    if (s["module"] == "M1") s["windows"][1]["offset"] = 4000;
  CHECK(has_code(validate(parse_config(doc.dump())), "window-overlap"));
}

TEST_CASE("an oversized sampling message without override is an error") {
  json doc = case1_doc();
  for (auto& m : doc["messages"])
    if (m["id"] == "Msg1") m.erase("frag");
  const auto diags = validate(parse_config(doc.dump()));
  CHECK(has_code(diags, "sampling-exceeds-lmax"));
  CHECK(has_code(validate(case1()), "sampling-fragmented"));
}

TEST_CASE("mutex ceilings") {
  CHECK(ceiling_of(case1(), "Mux1_1") == 5);
  CHECK(ceiling_of(case1(), "Mux5_1") == 3);
  CHECK(case1().find_mutex("Mux1_1")->ceiling == 5);

  json doc = case1_doc();
  doc["mutexes"].push_back({{"id", "Lonely"}, {"partition", "P1"}});
  const SystemConfig cfg = parse_config(doc.dump());
  CHECK(ceiling_of(cfg, "Lonely") == kLowestPriority);
  CHECK(has_code(validate(cfg), "mutex-unused"));
}

TEST_CASE("a mutex with a single user takes its priority") {
  json doc = case1_doc();
  for (auto& t : doc["tasks"]) {
    if (t["id"] != "Tsk1_5") continue;
    json kept = json::array();
    for (const auto& i : t["instructions"])
      if (i["op"] != "lock" && i["op"] != "unlock") kept.push_back(i);
    t["instructions"] = kept;
  }
  const SystemConfig cfg = parse_config(doc.dump());
  CHECK(ceiling_of(cfg, "Mux1_1") == case1().find_task("Tsk1_4")->priority);
}

TEST_CASE("default fragmentation") {
  CHECK(default_frag(306, 200, 47) == 2);
  CHECK(default_frag(307, 200, 47) == 3);
  CHECK(default_frag(100, 200, 47) == 1);
  CHECK(default_frag(10, 20, 47) == 10);
  CHECK(case1().find_message("Msg1")->frag == 2);
  CHECK(case1().find_message("Msg2")->frag == 1);
}

TEST_CASE("serialization round-trips and the hash is stable") {
  for (const SystemConfig* c : {&case1(), &case2()}) {
    const SystemConfig back = parse_config(serialize_config(*c));
    CHECK(back == *c);
    CHECK(config_hash(back) == config_hash(*c));
  }
  CHECK(config_hash(case1()) != config_hash(case2()));
  CHECK(config_hash_hex(case1()).size() == 16);
}

TEST_CASE("malformed documents raise ConfigError") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}
