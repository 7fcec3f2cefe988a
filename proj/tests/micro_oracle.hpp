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

// A 2-task / 1-mutex / 1-message system on one module, and a brute-force
// enumerator for it that shares no code with the engine. Every choice (release
// jitter, compute time, network transit) is drawn up front for each job or
// frame, and each combination runs through a 1 ms time-stepped simulation.

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <set>
#include <string>
#include <vector>

#include "dima/analysis.hpp"
#include "dima/config.hpp"

namespace dima::test {

inline std::string micro_config_text(int window_ms, int refresh_ms) {
  std::string text = R"({
  "modules": ["M"],
  "partitions": {"P": "M"},
  "schedules": [{"module": "M", "major_frame": "4ms",
                 "windows": [{"partition": "P", "offset": "0ms", "duration": "@WINDOW@"}]}],
  "tasks": [
    {"id": "T1", "partition": "P", "release": {"type": "periodic", "period": "4ms"},
     "offset": "0ms", "jitter": "1ms", "deadline": "4ms", "priority": 1,
     "chunks": [{"time": ["1ms", "2ms"], "mutex": "Mx", "output": "Msg"}]},
    {"id": "T2", "partition": "P", "release": {"type": "periodic", "period": "8ms"},
     "offset": "0ms", "jitter": "0ms", "deadline": "8ms", "priority": 2,
     "chunks": [{"time": ["1ms", "3ms"], "mutex": "Mx", "input": "Msg"}]}
  ],
  "mutexes": [{"id": "Mx", "partition": "P"}],
  "messages": [{"id": "Msg", "length": 10, "vl": "V", "source": "P", "destinations": ["P"],
                "port": {"mode": "sampling", "refresh_period": "@REFRESH@"}}],
  "virtual_links": [{"id": "V", "bag": "1ms", "lmax": 200, "tx_delay": "0ms", "source_es": "M",
                     "routes": {"M": {"links": 1, "switches": 0}}}],
  "network": {"tech": ["0ms", "0ms"], "switch": ["0ms", "0ms"], "rx": ["0ms", "1ms"],
              "ip_fwd": ["1ms", "1ms"], "ip_reass": ["0ms", "0ms"], "tx_jitter": ["0ms", "0ms"],
              "max_packets": 4, "max_msg": 4}
})";
  auto put = [&](const std::string& key, int ms) { text.replace(text.find(key), key.size(), std::to_string(ms) + "ms"); };
  put("@WINDOW@", window_ms);
  put("@REFRESH@", refresh_ms);
  return text;
}

inline SystemConfig micro_config(int window_ms = 3, int refresh_ms = 3) {
  return parse_config(micro_config_text(window_ms, refresh_ms));
}

inline constexpr Micros kMicroHorizon = 8000;

struct MicroChoices {
  std::array<int, 3> t1_jitter{};   // per T1 job, 0..1 ms
  std::array<int, 3> t1_compute{};  // per T1 job, 1..2 ms
  std::array<int, 2> t2_compute{};  // per T2 job, 1..3 ms
  std::array<int, 3> transit{};     // per frame, 0..1 ms
};

/// First violation of one fully determined run, or none.
inline std::optional<ViolationKey> micro_run(const MicroChoices& c, int kWindow, int kRefresh) {
  constexpr int kFrame = 4, kHorizon = 8, kCeiling = 1;
  struct Job {
    std::string id;
    int period, jitter_max, deadline, base;
    bool t1;  // program: Lock Compute Unlock Send End; else Receive Lock Compute Unlock End
    bool active = false, computing = false, drawn = false;
    int release = 0, pending = -1, pc = 0, exe = 0, budget = 0, eff = 0, jobs = 0, started = 0;
    int next_nominal = 0, next_release = 0;
  };
  std::array<Job, 2> task{Job{"T1", 4, 1, 4, 1, true}, Job{"T2", 8, 0, 8, 2, false}};
  for (auto& t : task) t.eff = t.base;
  std::vector<int> queue;  // ready tasks, front runs while inside
  bool inside = false;
  int holder = -1;
  int fwd_until = -1, frames = 0, last_delivery = -1, last_write = -1;
  std::vector<int> in_flight;

  auto ms = [](int t) { return static_cast<Micros>(t) * 1000; };
  auto enqueue = [&](int i) {
    auto it = std::find_if(queue.begin(), queue.end(), [&](int j) { return task[j].eff > task[i].eff; });
    queue.insert(it, i);
  };
  auto regroup = [&](int i) {
    queue.erase(std::find(queue.begin(), queue.end(), i));
    auto it = std::find_if(queue.begin(), queue.end(), [&](int j) { return task[j].eff >= task[i].eff; });
    queue.insert(it, i);
  };
  auto start = [&](int i, int t) {
    Job& j = task[i];
    j.active = true;
    j.release = t;
    j.pc = 0;
    j.computing = false;
    j.eff = j.base;
    ++j.started;
    enqueue(i);
  };

  for (int t = 0; t <= kHorizon; ++t) {
    if (t % kFrame == 0) inside = true;
    if (kWindow < kFrame && t % kFrame == kWindow) inside = false;

    for (bool progress = true; progress;) {
      progress = false;
      for (int i = 0; i < 2 && !progress; ++i) {
        Job& j = task[i];
        if (j.next_release == t) {
          progress = true;
          if (!j.drawn && j.jitter_max > 0) {
            j.drawn = true;
            const int d = c.t1_jitter[static_cast<std::size_t>(j.jobs)];
            if (d > 0) {
              j.next_release = t + d;
              continue;
            }
          }
          j.drawn = false;
          j.next_nominal += j.period;
          j.next_release = j.next_nominal;
          ++j.jobs;
          if (j.active) j.pending = t;
          else start(i, t);
          continue;
        }
        if (!inside || queue.empty() || queue.front() != i) continue;
        if (j.computing && j.exe < j.budget) continue;
        progress = true;
        if (j.computing) {
          j.computing = false;
          ++j.pc;
          continue;
        }
        enum Op { Lock, Compute, Unlock, Send, Receive, End };
        static constexpr Op t1_code[] = {Lock, Compute, Unlock, Send, End};
        static constexpr Op t2_code[] = {Receive, Lock, Compute, Unlock, End};
        switch (j.t1 ? t1_code[j.pc] : t2_code[j.pc]) {
          case Lock:
            if (holder >= 0) throw std::logic_error("oracle: blocked lock");
            holder = i;
            j.eff = kCeiling;
            regroup(i);
            ++j.pc;
            break;
          case Unlock:
            holder = -1;
            j.eff = j.base;
            regroup(i);
            ++j.pc;
            break;
          case Compute:
            j.budget = j.t1 ? c.t1_compute[static_cast<std::size_t>(j.started - 1)]
                            : c.t2_compute[static_cast<std::size_t>(j.started - 1)];
            j.exe = 0;
            j.computing = true;
            break;
          case Send:
            if (fwd_until < 0) fwd_until = t + 1;
            ++j.pc;
            break;
          case Receive:
            if (last_write >= 0 && t - last_write > kRefresh)
              return ViolationKey{ViolationKind::RefreshViolation, ms(t), "Msg@P"};
            ++j.pc;
            break;
          case End:
            j.active = false;
            queue.erase(std::find(queue.begin(), queue.end(), i));
            if (j.pending >= 0) {
              const int r = j.pending;
              j.pending = -1;
              start(i, r);
            }
            break;
        }
      }
    }

    if (fwd_until == t) {
      fwd_until = -1;
      const int d = std::max(t + c.transit[static_cast<std::size_t>(frames++)], last_delivery);
      last_delivery = d;
      in_flight.push_back(d);
    }
    while (!in_flight.empty() && in_flight.front() == t) {
      in_flight.erase(in_flight.begin());
      last_write = t;
    }

    for (const Job& j : task) {
      if ((j.active && j.release + j.deadline == t) || (j.pending >= 0 && j.pending + j.deadline == t))
        return ViolationKey{ViolationKind::DeadlineMiss, ms(t), j.id};
    }

    if (inside && !queue.empty()) {
      Job& run = task[static_cast<std::size_t>(queue.front())];
      if (run.computing && run.exe < run.budget) ++run.exe;
    }
  }
  return std::nullopt;
}

/// Union of first violations over every combination of choices.
inline std::vector<ViolationKey> micro_enumerate(int window_ms = 3, int refresh_ms = 3) {
  std::set<ViolationKey> out;
  MicroChoices c;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b)
      for (int d = 0; d < 9; ++d)
        for (int e = 0; e < 8; ++e) {
          for (int k = 0; k < 3; ++k) {
            c.t1_jitter[static_cast<std::size_t>(k)] = (a >> k) & 1;
            c.t1_compute[static_cast<std::size_t>(k)] = 1 + ((b >> k) & 1);
            c.transit[static_cast<std::size_t>(k)] = (e >> k) & 1;
          }
          c.t2_compute = {1 + d % 3, 1 + d / 3};
          if (auto v = micro_run(c, window_ms, refresh_ms)) out.insert(*v);
        }
  return {out.begin(), out.end()};
}

}  // namespace dima::test
