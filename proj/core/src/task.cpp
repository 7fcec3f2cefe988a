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

#include "dima/task.hpp"

#include <algorithm>
#include <cmath>

namespace dima {

const char* to_string(TaskLocation loc) {
  switch (loc) {
    case TaskLocation::WaitInitial: return "WaitInitial";
    case TaskLocation::Ready: return "Ready";
    case TaskLocation::Running: return "Running";
    case TaskLocation::ReadOp: return "ReadOp";
    case TaskLocation::Blocked: return "Blocked";
    case TaskLocation::WaitDelay: return "WaitDelay";
    case TaskLocation::WaitNextRelease: return "WaitNextRelease";
    case TaskLocation::MsgErr: return "MsgErr";
    case TaskLocation::DeadlineMiss: return "DeadlineMiss";
  }
  return "?";
}

Interval release_window(const TaskSpec& spec, int k, Micros prev_release) {
  if (const auto* p = std::get_if<Periodic>(&spec.release)) {
    const Micros nominal = k * p->period + spec.offset;
    return {nominal, nominal + spec.jitter};
  }
  const auto& s = std::get<Sporadic>(spec.release);
  return {k == 0 ? spec.offset : prev_release + s.min_separation, kNever};
}

Micros sample_release(const TaskSpec& spec, int k, Micros prev_release, double u) {
  const Interval w = release_window(spec, k, prev_release);
  if (spec.is_periodic()) {
    const auto span = static_cast<double>(w.max - w.min + 1);
    return w.min + std::min<Micros>(w.max - w.min, static_cast<Micros>(u * span));
  }
  const Micros tail = exponential_tail(std::get<Sporadic>(spec.release).smc_rate, u);
  return tail == kNever ? kNever : w.min + tail;
}

Micros exponential_tail(double rate, double u) {
  if (rate <= 0.0) return 0;
  const double tail = -std::log1p(-u) / rate;
  if (tail >= 1e15) return kNever;
  return static_cast<Micros>(tail);
}

Branch fetch_and_dispatch(const TaskSpec& spec, const TaskState& st) {
  if (st.pc < 0 || st.pc >= static_cast<int>(spec.chunks.size()))
    throw InvariantFault("pc out of range for task " + spec.id);
  return static_cast<Branch>(spec.chunks[static_cast<std::size_t>(st.pc)].index());
}

namespace {

int effective(const TaskState& st) {
  int p = st.base_prio;
  for (const auto& [m, c] : st.held) p = std::min(p, c);
  return p;
}

}  // namespace

LockOutcome pcp_lock(TaskState& st, MutexState& mx, int task, int mutex, int ceiling, bool elevation) {
  for (const auto& [m, c] : st.held)
    if (m == mutex) throw InvariantFault("re-lock of a held mutex");
  if (mx.holder >= 0) {
    // Only reachable without elevation, or when the holder suspended itself
    // inside the critical section.
    mx.blocked.push_back(task);
    return LockOutcome::Blocked;
  }
  mx.holder = task;
  st.held.emplace_back(mutex, elevation ? ceiling : st.base_prio);
  st.eff_prio = effective(st);
  return LockOutcome::Acquired;
}

std::vector<int> pcp_unlock(TaskState& st, MutexState& mx, int task, int mutex) {
  auto it = std::find_if(st.held.begin(), st.held.end(), [&](const auto& h) { return h.first == mutex; });
  if (it == st.held.end() || mx.holder != task) throw InvariantFault("unlock of a mutex the task does not hold");
  st.held.erase(it);
  st.eff_prio = effective(st);
  mx.holder = -1;
  std::vector<int> woken;
  woken.swap(mx.blocked);
  return woken;
}

bool advance_exec(TaskState& st, Micros delta) {
  if (delta < 0 || st.exe + delta > st.budget) throw InvariantFault("execution overshoots the chunk budget");
  st.exe += delta;
  return st.exe == st.budget;
}

bool check_deadline(const TaskState& st, Micros deadline, Micros now) {
  return st.active && now >= st.release + deadline;
}

}  // namespace dima
