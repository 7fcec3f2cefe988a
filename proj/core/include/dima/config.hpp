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

// System model description: modules, partition schedules, tasks, mutexes,
// messages, virtual links and network constants. All durations are integer
// microseconds of model time.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dima {

/// Model time and durations, in microseconds.
using Micros = std::int64_t;

inline constexpr Micros kMillis = 1000;

/// Timer value for "no pending event".
inline constexpr Micros kNever = std::numeric_limits<Micros>::max();

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses "25ms", "800us", "0.125ms", "2s" or a bare integer (microseconds).
/// Throws ConfigError when the value is not an exact integer number of us.
Micros parse_duration(std::string_view text);
std::string format_duration(Micros us);

struct Interval {
  Micros min = 0;
  Micros max = 0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct PartitionWindow {
  std::string partition;
  Micros offset = 0;
  Micros duration = 0;
  friend bool operator==(const PartitionWindow&, const PartitionWindow&) = default;
};

struct PartitionSchedule {
  std::string module;
  Micros major_frame = 0;
  std::vector<PartitionWindow> windows;  // sorted by offset
  friend bool operator==(const PartitionSchedule&, const PartitionSchedule&) = default;
};

struct Periodic {
  Micros period = 0;
  friend bool operator==(const Periodic&, const Periodic&) = default;
};

struct Sporadic {
  Micros min_separation = 0;
  double smc_rate = 0.0;  // events per microsecond for the exponential tail
  friend bool operator==(const Sporadic&, const Sporadic&) = default;
};

using ReleasePattern = std::variant<Periodic, Sporadic>;

namespace instr {
struct Compute {
  Micros bcet = 0;
  Micros wcet = 0;
  friend bool operator==(const Compute&, const Compute&) = default;
};
struct Lock {
  std::string mutex;
  friend bool operator==(const Lock&, const Lock&) = default;
};
struct Unlock {
  std::string mutex;
  friend bool operator==(const Unlock&, const Unlock&) = default;
};
struct Delay {
  Micros amount = 0;
  friend bool operator==(const Delay&, const Delay&) = default;
};
struct Send {
  std::string message;
  friend bool operator==(const Send&, const Send&) = default;
};
struct Receive {
  std::string message;
  friend bool operator==(const Receive&, const Receive&) = default;
};
struct End {
  friend bool operator==(const End&, const End&) = default;
};
}  // namespace instr

using Instruction = std::variant<instr::Compute, instr::Lock, instr::Unlock, instr::Delay,
                                 instr::Send, instr::Receive, instr::End>;

struct TaskSpec {
  std::string id;
  std::string partition;
  ReleasePattern release = Periodic{};
  Micros offset = 0;
  Micros jitter = 0;
  Micros deadline = 0;
  int priority = 0;  // smaller value = higher priority
  std::vector<Instruction> chunks;

  [[nodiscard]] bool is_periodic() const { return std::holds_alternative<Periodic>(release); }
  /// Period for periodic tasks, minimum separation for sporadic ones.
  [[nodiscard]] Micros separation() const;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct MutexSpec {
  std::string id;
  std::string partition;
  int ceiling = 0;
  friend bool operator==(const MutexSpec&, const MutexSpec&) = default;
};

struct SamplingPort {
  Micros refresh_period = 0;
  friend bool operator==(const SamplingPort&, const SamplingPort&) = default;
};

struct QueuingPort {
  int capacity = 1;
  friend bool operator==(const QueuingPort&, const QueuingPort&) = default;
};

using PortMode = std::variant<SamplingPort, QueuingPort>;

struct MessageSpec {
  std::string id;
  int length = 0;  // bytes
  std::string vl;
  std::string source;  // partition
  std::vector<std::string> destinations;
  PortMode port_mode = SamplingPort{};
  int frag = 1;
  int reass = 1;
  bool frag_override = false;

  [[nodiscard]] bool is_sampling() const { return std::holds_alternative<SamplingPort>(port_mode); }
  friend bool operator==(const MessageSpec&, const MessageSpec&) = default;
};

struct Route {
  int links = 1;
  int switches = 0;
  friend bool operator==(const Route&, const Route&) = default;
};

struct VirtualLinkSpec {
  std::string id;
  Micros bag = 0;
  int lmax = 0;  // bytes
  Micros tx_delay = 0;
  std::string source_es;  // module id
  std::map<std::string, Route> routes;  // destination module -> route
  friend bool operator==(const VirtualLinkSpec&, const VirtualLinkSpec&) = default;
};

struct NetworkParams {
  Interval tech;
  Interval sw;
  Interval rx;
  Interval ip_fwd;
  Interval ip_reass;
  std::vector<Micros> tx_jitter;  // indexed by concurrent VL count at an ES output
  int max_packets = 1;
  int max_msg = 1;
  int frame_overhead = 47;  // bytes of headers subtracted from Lmax for payload

  /// Maximum configuration jitter for `active_vls` concurrent VLs (clamped).
  [[nodiscard]] Micros jitter_for(int active_vls) const;
  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct SmcDefaults {
  Micros horizon = 100 * kMillis;
  double theta = 0.001;
  friend bool operator==(const SmcDefaults&, const SmcDefaults&) = default;
};

struct SystemConfig {
  std::vector<std::string> modules;
  std::map<std::string, std::string> partitions;  // partition -> module
  std::vector<PartitionSchedule> schedules;
  std::vector<TaskSpec> tasks;
  std::vector<MutexSpec> mutexes;
  std::vector<MessageSpec> messages;
  std::vector<VirtualLinkSpec> vls;
  NetworkParams net;
  SmcDefaults smc;
  bool pcp_elevation = true;  // immediate ceiling elevation on Lock

  [[nodiscard]] const TaskSpec* find_task(std::string_view id) const;
  [[nodiscard]] const MutexSpec* find_mutex(std::string_view id) const;
  [[nodiscard]] const MessageSpec* find_message(std::string_view id) const;
  [[nodiscard]] const VirtualLinkSpec* find_vl(std::string_view id) const;
  [[nodiscard]] const PartitionSchedule* schedule_of_module(std::string_view module) const;
  [[nodiscard]] const PartitionSchedule* schedule_of_partition(std::string_view pid) const;
  [[nodiscard]] std::string module_of(std::string_view pid) const;
  [[nodiscard]] std::vector<std::string> partition_ids() const;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
};

/// Parses a JSON configuration document. Applies unit scaling, expands
/// table-style chunk rows into instruction lists, computes default
/// fragmentation and derives mutex ceilings. Throws ConfigError.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const SystemConfig& cfg);

/// Stable 64-bit digest of the canonical serialization.
std::uint64_t config_hash(const SystemConfig& cfg);
std::string config_hash_hex(const SystemConfig& cfg);

std::vector<Diagnostic> validate(const SystemConfig& cfg);
bool has_errors(const std::vector<Diagnostic>& diags);

/// Ceiling assigned to a mutex that no task locks.
inline constexpr int kLowestPriority = 1 << 20;

/// Ceiling = smallest numeric priority among tasks locking the mutex. A mutex
/// nobody locks gets kLowestPriority; validate() reports it.
int ceiling_of(const SystemConfig& cfg, std::string_view mutex);

/// ceil(length / max(1, lmax - overhead)).
int default_frag(int length, int lmax, int overhead);

}  // namespace dima
