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

// Task automata: release generation, the instruction interpreter with its
// execution-time stopwatch, and immediate-ceiling mutexes.

#include <utility>
#include <vector>

#include "dima/config.hpp"
#include "dima/sched.hpp"

namespace dima {

enum class TaskLocation {
  WaitInitial,
  Ready,
  Running,
  ReadOp,
  Blocked,
  WaitDelay,
  WaitNextRelease,
  MsgErr,
  DeadlineMiss,
};

const char* to_string(TaskLocation loc);

struct TaskState {
  TaskLocation loc = TaskLocation::WaitInitial;
  int pc = 0;
  Micros exe = 0;     // stopwatch for the current Compute
  Micros budget = 0;  // duration chosen for the current Compute
  bool computing = false;
  bool active = false;           // a job is released and has not ended
  Micros pending_release = kNever;  // release that arrived while the job was active
  Micros release = 0;            // actual release of the current job
  Micros nominal = 0;            // nominal release of the current job
  Micros next_release = kNever;  // next release event
  Micros next_nominal = 0;       // nominal time of the next periodic job
  bool drawn = false;            // jitter or sporadic tail already chosen
  Micros delay_until = kNever;
  int base_prio = 0;
  int eff_prio = 0;
  std::vector<std::pair<int, int>> held;  // (mutex, ceiling), innermost last

  friend bool operator==(const TaskState&, const TaskState&) = default;
};

struct MutexState {
  int holder = -1;
  std::vector<int> blocked;
  friend bool operator==(const MutexState&, const MutexState&) = default;
};

/// Release interval of job k. Periodic: [k*T + O, k*T + O + J]. Sporadic:
/// [prev + S, kNever), or [O, kNever) for the first job.
Interval release_window(const TaskSpec& spec, int k, Micros prev_release);

/// Stochastic release for job k from a uniform draw u in [0, 1). Periodic
/// jitter is uniform over the integer window; the sporadic tail is
/// exponential with the task's rate.
Micros sample_release(const TaskSpec& spec, int k, Micros prev_release, double u);

/// Exponential waiting time with the given rate (events per us) from a
/// uniform draw u in [0, 1). A non-positive rate gives no wait.
Micros exponential_tail(double rate, double u);

enum class Branch { Compute, Lock, Unlock, Delay, Send, Receive, End };

/// Branch selected by the instruction at pc. Throws InvariantFault when pc is
/// out of range.
Branch fetch_and_dispatch(const TaskSpec& spec, const TaskState& st);

enum class LockOutcome { Acquired, Blocked };

/// Immediate ceiling protocol: the lock is taken and the task's effective
/// priority rises to the ceiling. With elevation disabled a held mutex blocks
/// the caller instead.
LockOutcome pcp_lock(TaskState& st, MutexState& mx, int task, int mutex, int ceiling, bool elevation);

/// Releases the mutex, restores the effective priority and returns the tasks
/// that were blocked on it.
std::vector<int> pcp_unlock(TaskState& st, MutexState& mx, int task, int mutex);

/// Accrues delta of execution. Returns true when the Compute completes.
/// Throws InvariantFault when delta would overshoot the budget.
bool advance_exec(TaskState& st, Micros delta);

/// True iff the current job has not ended by release + deadline.
bool check_deadline(const TaskState& st, Micros deadline, Micros now);

}  // namespace dima
