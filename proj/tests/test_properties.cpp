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

// Randomized property suites. Each property is checked on at least 1000
// independently seeded cases.

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "dima/engine.hpp"
#include "dima/monitor.hpp"
#include "support.hpp"

using namespace dima;
using dima::test::case1;
using dima::test::case2;

namespace {

constexpr int kCases = 1000;

// Case 1 with a task that writes its queuing port twice per job.
const SystemConfig& overflow_cfg() {
  static const SystemConfig cfg = [] {
    SystemConfig c = case1();
    for (auto& t : c.tasks)
      if (t.id == "Tsk4_2") t.chunks.insert(t.chunks.end() - 1, instr::Send{"Msg3"});
    return c;
  }();
  return cfg;
}

// Models cycled through by the suites: both cases globally, a compositional
// slice with message interfaces, and a configuration that overflows.
const std::vector<Model>& models() {
  static const std::vector<Model> all = [] {
    std::vector<Model> m;
    m.emplace_back(case1(), Scope::global());
    m.emplace_back(case2(), Scope::global());
    m.emplace_back(case1(), Scope::of_slice(build_slice(case1(), "P3")));
    m.emplace_back(case2(), Scope::of_slice(build_slice(case2(), "P4")));
    m.emplace_back(overflow_cfg(), Scope::global());
    return m;
  }();
  return all;
}

struct Observed {
  std::vector<TraceRecord> records;
  std::vector<State> instants;  // state after each processed instant
  State last;
  std::optional<Verdict> verdict;
};

Observed observe(const Model& model, std::uint64_t seed, Micros horizon = 100 * kMillis, bool keep_states = false) {
  Observed o;
  RandomChooser ch(seed);
  SimOptions opts;
  opts.horizon = horizon;
  Simulator sim(model, ch, opts, &o.records);
  State s = sim.initial();
  for (;;) {
    o.verdict = sim.process_instant(s);
    if (keep_states) o.instants.push_back(s);
    if (o.verdict || !sim.advance(s)) break;
  }
  o.last = s;
  return o;
}

template <typename F>
void for_cases(F f) {
  for (int i = 0; i < kCases; ++i) {
    const Model& m = models()[static_cast<std::size_t>(i) % models().size()];
    f(m, static_cast<std::uint64_t>(1000 + i));
  }
}

}  // namespace

TEST_CASE("next window boundary matches a brute-force scan") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < kCases; ++i) {
    PartitionSchedule sched;
    sched.major_frame = std::uniform_int_distribution<Micros>(4, 40)(rng);
    Micros at = 0;
    int n = 0;
    while (at < sched.major_frame) {
      const Micros gap = std::uniform_int_distribution<Micros>(0, 3)(rng);
      const Micros len = std::uniform_int_distribution<Micros>(1, 6)(rng);
      if (at + gap + len > sched.major_frame) break;
      sched.windows.push_back({n++ % 2 == 0 ? "A" : "B", at + gap, len});
      at += gap + len;
    }
    if (std::none_of(sched.windows.begin(), sched.windows.end(), [](const auto& w) { return w.partition == "A"; }))
      continue;
    auto inside = [&](Micros t) {
      const Micros r = t % sched.major_frame;
      return std::any_of(sched.windows.begin(), sched.windows.end(),
                         [&](const auto& w) { return w.partition == "A" && w.offset <= r && r < w.offset + w.duration; });
    };
    Micros covered = 0;
    for (const auto& w : sched.windows)
      if (w.partition == "A") covered += w.duration;
    if (covered == sched.major_frame) continue;
    const Micros t = std::uniform_int_distribution<Micros>(0, 3 * sched.major_frame)(rng);
    Micros scan = t + 1;
    while (inside(scan) == inside(scan - 1)) ++scan;
    CHECK(next_boundary(sched, "A", t) == scan);
    CHECK(window_at(sched, "A", t).has_value() == inside(t));
  }
}

TEST_CASE("tasks run only inside their partition's windows") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed);
    std::map<std::string, Micros> since;
    for (const auto& r : o.records) {
      const int ti = m.task_index(r.subject);
      if (ti < 0) continue;
      const auto& task = m.tasks[static_cast<std::size_t>(ti)];
      const auto& part = m.partitions[static_cast<std::size_t>(task.partition)];
      if (r.transition == "run") {
        const auto w = window_at(*part.sched, part.id, r.t);
        REQUIRE(w.has_value());
        since[r.subject] = r.t;
      } else if (since.count(r.subject) &&
                 (r.transition == "preempt" || r.transition == "suspend" || r.transition == "end" ||
                  r.transition == "block" || r.transition == "delay")) {
        const Micros start = since[r.subject];
        since.erase(r.subject);
        const Micros frame_start = start - (start % part.sched->major_frame);
        const auto w = window_at(*part.sched, part.id, start);
        REQUIRE(w.has_value());
        CHECK(r.t <= frame_start + w->offset + w->duration);
      }
    }
  });
}

TEST_CASE("the running task heads its ready queue") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed, 100 * kMillis, true);
    for (const State& s : o.instants) {
      for (const auto& p : s.partitions) {
        const auto& rq = p.sched.rq;
        for (std::size_t k = 1; k < rq.size(); ++k) CHECK(rq[k - 1].prio <= rq[k].prio);
        for (const auto& e : rq) CHECK(e.prio == s.tasks[static_cast<std::size_t>(e.task)].eff_prio);
        if (!p.sched.inside) {
          CHECK(p.sched.running == -1);
        } else if (!rq.empty()) {
          CHECK(p.sched.running == rq.front().task);
        }
      }
      for (const auto& t : s.tasks) {
        int expect = t.base_prio;
        for (const auto& [mx, c] : t.held) expect = std::min(expect, c);
        CHECK(t.eff_prio == expect);
      }
    }
  });
}

TEST_CASE("equal priorities are served first come first served") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < kCases; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    std::vector<ReadyEntry> inserted;
    TaskSchedulerState st;
    for (int k = 0; k < n; ++k) {
      const int prio = std::uniform_int_distribution<int>(1, 4)(rng);
      enque(st, k, prio);
      inserted.push_back({k, prio});
    }
    std::stable_sort(inserted.begin(), inserted.end(),
                     [](const ReadyEntry& a, const ReadyEntry& b) { return a.prio < b.prio; });
    CHECK(st.rq == inserted);
  }
}

TEST_CASE("frames of a virtual link depart at least one BAG apart") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed);
    std::map<std::string, Micros> last;
    std::map<std::string, Micros> bag;
    for (const auto& v : m.vls) bag[v.name] = v.spec->bag;
    for (const auto& r : o.records) {
      if (r.transition != "depart") continue;
      if (auto it = last.find(r.subject); it != last.end()) CHECK(r.t - it->second >= bag.at(r.subject));
      last[r.subject] = r.t;
    }
  });
}

TEST_CASE("network transit stays within the route bounds") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed);
    std::map<std::string, Interval> bounds;
    for (const auto& v : m.vls)
      for (const auto& route : v.routes) bounds[route.name] = vl_rx_bounds(*v.spec, route.module, m.config().net);
    for (const auto& r : o.records) {
      if (r.transition != "arrive") continue;
      const Micros lat = std::stoll(r.detail) - r.t;
      const Interval b = bounds.at(r.subject);
      CHECK(lat >= b.min);
      CHECK(lat <= b.max);
    }
  });
}

TEST_CASE("buffers never silently exceed their capacity") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed, 100 * kMillis, true);
    for (const State& s : o.instants) {
      for (const auto& mr : s.messages) {
        CHECK(mr.src.buf <= mr.src.capacity);
        for (const auto& d : mr.dests) CHECK(d.port.buf <= d.port.capacity);
      }
      for (const auto& v : s.vls) CHECK(static_cast<int>(v.fifo.size()) <= m.config().net.max_msg);
      for (const auto& v : s.vls)
        for (const auto& rx : v.rx) CHECK(static_cast<int>(rx.in_flight.size()) <= m.config().net.max_packets);
    }
    // Every rejected write surfaces as a verdict.
    int rejected = 0;
    for (const auto& r : o.records)
      if (r.transition == "violation" && r.detail == "QueuingOverflow") ++rejected;
    if (rejected > 0) {
      REQUIRE(o.verdict.has_value());
      CHECK(o.verdict->kind == ViolationKind::QueuingOverflow);
    }
  });
}

TEST_CASE("chunk execution time lies between its bounds") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed);
    std::map<std::string, std::vector<instr::Compute>> computes;
    for (const auto& t : m.tasks)
      for (const auto& ins : t.spec->chunks)
        if (const auto* c = std::get_if<instr::Compute>(&ins)) computes[t.spec->id].push_back(*c);
    std::map<std::string, std::size_t> next;
    std::map<std::string, Micros> budget;
    for (const auto& r : o.records) {
      if (!computes.count(r.subject)) continue;
      if (r.transition == "release" || r.transition == "start-pending") {
        next[r.subject] = 0;
      } else if (r.transition == "compute") {
        const auto& c = computes.at(r.subject).at(next[r.subject]++);
        const Micros b = std::stoll(r.detail);
        CHECK(b >= c.bcet);
        CHECK(b <= c.wcet);
        budget[r.subject] = b;
      } else if (r.transition == "chunk-done") {
        CHECK(std::stoll(r.detail) == budget.at(r.subject));
      }
    }
  });
}

TEST_CASE("messages and frames are conserved along the chain") {
  for_cases([](const Model& m, std::uint64_t seed) {
    const Observed o = observe(m, seed);
    std::map<std::pair<std::string, std::string>, long> n;
    for (const auto& r : o.records) ++n[{r.subject, r.transition}];
    auto count = [&](const std::string& s, const std::string& t) {
      auto it = n.find({s, t});
      return it == n.end() ? 0L : it->second;
    };
    const State& s = o.last;
    std::map<int, long> frames_in;  // per VL, fragments forwarded by IP
    for (std::size_t k = 0; k < m.messages.size(); ++k) {
      const auto& mm = m.messages[k];
      const auto& mr = s.messages[k];
      const long forwarded = count(mm.iptx_name, "forward-done");
      if (mm.vl >= 0) frames_in[mm.vl] += forwarded * mm.spec->frag;
      const long writes = count(mm.src_port_name, "write");
      if (!mm.spec->is_sampling() && !o.verdict) CHECK(writes == forwarded + mr.src.buf);
      CHECK(forwarded <= writes);
      for (std::size_t d = 0; d < mm.dests.size(); ++d) {
        const auto& dest = mm.dests[d];
        const auto& dr = mr.dests[d];
        const long reassembled = count(dest.iprx_name, "reass-done");
        const long written = count(dest.port_name, "write");
        CHECK(written * mm.spec->reass + dr.iprx.cnt == reassembled);
      }
    }
    for (std::size_t v = 0; v < m.vls.size(); ++v) {
      const auto& mv = m.vls[v];
      const auto& vr = s.vls[v];
      const long departed = count(mv.name, "depart");
      CHECK(frames_in[static_cast<int>(v)] == departed + static_cast<long>(vr.fifo.size()));
      for (std::size_t r = 0; r < mv.routes.size(); ++r) {
        const long delivered = count(mv.routes[r].name, "deliver");
        CHECK(departed == delivered + static_cast<long>(vr.rx[r].in_flight.size()));
        // Each delivered frame reaches every destination partition on the route.
        for (std::size_t k = 0; k < m.messages.size(); ++k) {
          const auto& mm = m.messages[k];
          if (mm.vl != static_cast<int>(v)) continue;
          long frames = 0;
          for (const auto& rec : o.records)
            if (rec.subject == mv.routes[r].name && rec.transition == "deliver" && rec.detail == mm.spec->id) ++frames;
          for (std::size_t d = 0; d < mm.dests.size(); ++d) {
            if (mm.dests[d].route != static_cast<int>(r)) continue;
            const auto& ip = s.messages[k].dests[d].iprx;
            CHECK(frames == count(mm.dests[d].iprx_name, "reass-done") + ip.fifo);
          }
        }
      }
    }
  });
}

TEST_CASE("seeded runs replay byte for byte") {
  for_cases([](const Model& m, std::uint64_t seed) {
    if (m.scope().kind != Scope::Kind::Global) return;
    Trace t;
    run(m, seed, 100 * kMillis, &t);
    CHECK(trace_to_string(replay(m.config(), t.header)) == trace_to_string(t));
  });
  // Scoped models replay through their header as well.
  for (int i = 0; i < kCases / 4; ++i) {
    const Model& m = models()[2 + static_cast<std::size_t>(i) % 2];
    Trace t;
    run(m, static_cast<std::uint64_t>(i), 100 * kMillis, &t);
    CHECK(trace_to_string(replay(m.config(), t.header)) == trace_to_string(t));
  }
}

TEST_CASE("online and offline monitors agree") {
  int violations = 0;
  for_cases([&](const Model& m, std::uint64_t seed) {
    Trace t;
    const Verdict v = run(m, seed, 100 * kMillis, &t);
    const Verdict off = monitor_offline(t, m.config());
    CHECK_MESSAGE(off.same(v), v.describe() << " vs " << off.describe());
    if (!v.ok()) ++violations;
  });
  CHECK(violations > 0);
}
