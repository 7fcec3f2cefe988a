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

#include "dima/sched.hpp"

#include <algorithm>

namespace dima {

std::optional<PartitionWindow> window_at(const PartitionSchedule& sched, std::string_view pid, Micros t) {
  if (sched.major_frame <= 0) return std::nullopt;
  const Micros pos = t % sched.major_frame;
  for (const auto& w : sched.windows)
    if (w.partition == pid && pos >= w.offset && pos < w.offset + w.duration) return w;
  return std::nullopt;
}

Micros next_boundary(const PartitionSchedule& sched, std::string_view pid, Micros t) {
  const Micros frame = sched.major_frame;
  const bool inside = window_at(sched, pid, t).has_value();
  bool any = false;
  for (Micros cur = t; cur <= t + 2 * frame;) {
    const Micros base = cur - cur % frame;
    Micros best = kNever;
    // Scanning the current and the next frame always finds the next edge.
    for (Micros f = base; f <= base + frame; f += frame) {
      for (const auto& w : sched.windows) {
        if (w.partition != pid) continue;
        any = true;
        for (Micros edge : {f + w.offset, f + w.offset + w.duration})
          if (edge > cur && edge < best) best = edge;
      }
    }
    if (!any) throw ConfigError("partition " + std::string(pid) + " has no window");
    // Adjacent windows of the same partition do not change its status.
    if (window_at(sched, pid, best).has_value() != inside) return best;
    cur = best;
  }
  return kNever;  // the partition owns the whole frame
}

SchedLocation TaskSchedulerState::location() const {
  if (inside) return rq.empty() ? SchedLocation::Idle : SchedLocation::Occupied;
  return rq.empty() ? SchedLocation::NoTask : SchedLocation::WaitPartition;
}

void enque(TaskSchedulerState& st, int task, int prio) {
  for (const auto& e : st.rq)
    if (e.task == task) throw InvariantFault("task already in ready queue");
  auto pos = std::find_if(st.rq.begin(), st.rq.end(), [&](const ReadyEntry& e) { return e.prio > prio; });
  st.rq.insert(pos, ReadyEntry{task, prio});
}

namespace {

SchedCommands dispatch(TaskSchedulerState& st) {
  SchedCommands cmds;
  if (!st.inside) return cmds;
  const int head = st.front();
  if (head == st.running) return cmds;
  if (st.running >= 0) cmds.push_back({SchedOp::Stop, st.running});
  if (head >= 0) cmds.push_back({SchedOp::Sched, head});
  st.running = head;
  return cmds;
}

void remove_running(TaskSchedulerState& st, int task, const char* what) {
  if (st.running != task || st.front() != task)
    throw InvariantFault(std::string(what) + " from a task that is not running");
  st.rq.erase(st.rq.begin());
  st.running = -1;
}

}  // namespace

SchedCommands on_ready(TaskSchedulerState& st, int task, int prio) {
  enque(st, task, prio);
  return dispatch(st);
}

SchedCommands on_release(TaskSchedulerState& st, int task) {
  remove_running(st, task, "release");
  return dispatch(st);
}

SchedCommands on_block(TaskSchedulerState& st, int task) {
  remove_running(st, task, "block");
  return dispatch(st);
}

SchedCommands on_enter_partition(TaskSchedulerState& st) {
  if (st.inside) throw InvariantFault("enter_partition while inside");
  st.inside = true;
  return dispatch(st);
}

SchedCommands on_exit_partition(TaskSchedulerState& st) {
  if (!st.inside) throw InvariantFault("exit_partition while outside");
  st.inside = false;
  SchedCommands cmds;
  if (st.running >= 0) cmds.push_back({SchedOp::Suspend, st.running});
  st.running = -1;
  return cmds;
}

SchedCommands reprioritize(TaskSchedulerState& st, int task, int prio) {
  auto it = std::find_if(st.rq.begin(), st.rq.end(), [&](const ReadyEntry& e) { return e.task == task; });
  if (it == st.rq.end()) throw InvariantFault("reprioritize of a task outside the ready queue");
  st.rq.erase(it);
  auto pos = std::find_if(st.rq.begin(), st.rq.end(), [&](const ReadyEntry& e) { return e.prio >= prio; });
  st.rq.insert(pos, ReadyEntry{task, prio});
  return dispatch(st);
}

}  // namespace dima
