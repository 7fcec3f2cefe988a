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

// Two-level ARINC-653 scheduling: TDM partition windows and the per-partition
// preemptive fixed-priority task scheduler.

#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dima/config.hpp"

namespace dima {

/// Raised when a transition is attempted from a state that cannot allow it.
struct InvariantFault : std::logic_error {
  using std::logic_error::logic_error;
};

/// Window of `pid` containing t mod major_frame, with [start, end) bounds.
std::optional<PartitionWindow> window_at(const PartitionSchedule& sched, std::string_view pid, Micros t);

/// Least t' > t at which `pid` enters or leaves a window. Throws ConfigError
/// when the partition has no window.
Micros next_boundary(const PartitionSchedule& sched, std::string_view pid, Micros t);

enum class SchedLocation { NoTask, Idle, WaitPartition, Occupied };

struct ReadyEntry {
  int task = -1;
  int prio = 0;
  friend bool operator==(const ReadyEntry&, const ReadyEntry&) = default;
};

struct TaskSchedulerState {
  bool inside = false;
  std::vector<ReadyEntry> rq;  // ascending effective priority value, FIFO among equals
  int running = -1;

  [[nodiscard]] SchedLocation location() const;
  [[nodiscard]] int front() const { return rq.empty() ? -1 : rq.front().task; }
  friend bool operator==(const TaskSchedulerState&, const TaskSchedulerState&) = default;
};

enum class SchedOp { Stop, Sched, Suspend };

struct SchedCommand {
  SchedOp op;
  int task;
  friend bool operator==(const SchedCommand&, const SchedCommand&) = default;
};

using SchedCommands = std::vector<SchedCommand>;

/// Inserts behind every entry of equal or higher priority.
void enque(TaskSchedulerState& st, int task, int prio);

SchedCommands on_ready(TaskSchedulerState& st, int task, int prio);
/// The running task finished its job and leaves the ready queue.
SchedCommands on_release(TaskSchedulerState& st, int task);
/// The running task blocked on a mutex and leaves the ready queue.
SchedCommands on_block(TaskSchedulerState& st, int task);
SchedCommands on_enter_partition(TaskSchedulerState& st);
SchedCommands on_exit_partition(TaskSchedulerState& st);
/// Effective priority change from ceiling elevation or restore. The task
/// moves to the head of its new priority group.
SchedCommands reprioritize(TaskSchedulerState& st, int task, int prio);

}  // namespace dima
