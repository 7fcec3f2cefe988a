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

// Discrete-event kernel for the composed model. One step semantics serves
// both stochastic simulation and exhaustive exploration; they differ only in
// the Chooser that resolves delays and nondeterministic choices.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dima/afdx.hpp"
#include "dima/config.hpp"
#include "dima/interfaces.hpp"
#include "dima/sched.hpp"
#include "dima/task.hpp"
#include "dima/trace.hpp"

namespace dima {

/// What part of the system a model instantiates.
struct Scope {
  enum class Kind { Global, Slice, TasksOnly };
  Kind kind = Kind::Global;
  std::string partition;  // Slice and TasksOnly
  PartitionSlice slice;   // Slice

  static Scope global() { return {}; }
  static Scope of_slice(PartitionSlice s);
  /// The partition's tasks alone; Send and Receive touch no port.
  static Scope tasks_only(std::string pid);
  [[nodiscard]] std::string name() const { return kind == Kind::Global ? "global" : partition; }
};

/// Compiled, immutable view of a configuration under a scope. Safe to share
/// across concurrent runs.
class Model {
 public:
  Model(const SystemConfig& cfg, Scope scope);

  struct Op {
    Branch op;
    Micros a = 0;  // bcet or delay amount
    Micros b = 0;  // wcet
    int ref = -1;  // mutex or model message index
  };
  struct Task {
    const TaskSpec* spec;
    int partition;
    int subject;
    std::vector<Op> code;
  };
  struct Partition {
    std::string id;
    int module;
    const PartitionSchedule* sched;
    int subject;
    std::vector<int> tasks;
  };
  struct Mutex {
    std::string id;
    int ceiling;
  };
  struct Dest {
    int partition;  // model partition
    int route;      // index into the VL's routes
    int subject;    // IPRx
    std::string port_name;
    std::string iprx_name;
  };
  enum class Sender { Task, Interface, None };
  struct Message {
    const MessageSpec* spec;
    int vl = -1;
    bool transmit = false;  // source port feeds the network chain
    Sender sender = Sender::None;
    int iface = -1;
    int subject;  // IPTx
    std::vector<Dest> dests;
    std::string src_port_name;
    std::string iptx_name;
  };
  struct Route {
    std::string module;
    Interval bounds;
    int subject;
    std::string name;
  };
  struct Vl {
    const VirtualLinkSpec* spec;
    int es;  // module index
    int subject;
    std::vector<Route> routes;
    std::string name;
  };
  struct Interface {
    MsgInterfaceSpec spec;
    int message;
    int subject;
    std::string name;
  };

  [[nodiscard]] const SystemConfig& config() const { return *cfg_; }
  [[nodiscard]] const Scope& scope() const { return scope_; }
  [[nodiscard]] const std::string& config_hash() const { return hash_; }

  std::vector<Partition> partitions;
  std::vector<Task> tasks;
  std::vector<Mutex> mutexes;
  std::vector<Message> messages;
  std::vector<Vl> vls;
  std::vector<Interface> interfaces;
  std::vector<std::string> modules;

  [[nodiscard]] int message_index(const std::string& id) const;
  [[nodiscard]] int task_index(const std::string& id) const;
  /// Every duration the step semantics can produce, for tick validation.
  [[nodiscard]] std::vector<Micros> constants() const;

 private:
  std::shared_ptr<const SystemConfig> cfg_;
  Scope scope_;
  std::string hash_;
};

struct PartitionRt {
  TaskSchedulerState sched;
  Micros next_boundary = kNever;
  friend bool operator==(const PartitionRt&, const PartitionRt&) = default;
};

struct InterfaceRt {
  Micros next = kNever;
  Micros base = 0;   // nominal release of the pending emission
  bool emit = false;  // next is an emission (else a release decision)
  bool drawn = false;
  friend bool operator==(const InterfaceRt&, const InterfaceRt&) = default;
};

struct DestRt {
  MsgBuffer port;
  IpRxState iprx;
  friend bool operator==(const DestRt&, const DestRt&) = default;
};

struct MessageRt {
  MsgBuffer src;
  IpTxState iptx;
  std::vector<DestRt> dests;
  friend bool operator==(const MessageRt&, const MessageRt&) = default;
};

struct VlRt {
  std::deque<int> fifo;  // frames by message index
  VlTxState tx;
  std::vector<VlRxState> rx;  // per route
  friend bool operator==(const VlRt&, const VlRt&) = default;
};

struct State {
  Micros now = 0;
  std::vector<PartitionRt> partitions;
  std::vector<TaskState> tasks;
  std::vector<MutexState> mutexes;
  std::vector<InterfaceRt> interfaces;
  std::vector<MessageRt> messages;
  std::vector<VlRt> vls;
  friend bool operator==(const State&, const State&) = default;
};

/// Canonical byte encoding, used as the visited-set key.
void encode(const State& s, std::string& out);

/// Resolves delays and nondeterministic choices.
class Chooser {
 public:
  virtual ~Chooser() = default;
  /// Index in [0, n) for a choice made on behalf of `subject`.
  virtual int pick(int subject, int n) = 0;
  /// Uniform draw in [0, 1). Only stochastic choosers support it.
  virtual double uniform(int subject) = 0;
  [[nodiscard]] virtual bool stochastic() const = 0;
};

/// Counter-based stream keyed by (seed, subject, draw index): reordering one
/// component's events never shifts another component's draws.
class RandomChooser final : public Chooser {
 public:
  explicit RandomChooser(std::uint64_t seed) : seed_(seed) {}
  int pick(int subject, int n) override;
  double uniform(int subject) override;
  [[nodiscard]] bool stochastic() const override { return true; }

 private:
  std::uint64_t next(int subject);
  std::uint64_t seed_;
  std::vector<std::uint64_t> counters_;
};

/// Replays a script of choice indices and records the arity of each choice.
/// Choices past the end of the script take index 0.
class ScriptChooser final : public Chooser {
 public:
  ScriptChooser() = default;
  explicit ScriptChooser(std::vector<int> script) : script_(std::move(script)) {}
  void reset(std::vector<int> script);
  int pick(int subject, int n) override;
  double uniform(int subject) override;
  [[nodiscard]] bool stochastic() const override { return false; }

  [[nodiscard]] const std::vector<int>& taken() const { return taken_; }
  [[nodiscard]] const std::vector<int>& arities() const { return arities_; }

 private:
  std::vector<int> script_;
  std::vector<int> taken_;
  std::vector<int> arities_;
};

enum class Branching { Endpoints, FullTick };
const char* to_string(Branching b);

struct SimOptions {
  Micros horizon = 100 * kMillis;
  Micros tick = 100;  // discrete choosers only
  Branching branching = Branching::Endpoints;
};

/// Observes every Send: message index and offset from the sender's nominal release.
using SendObserver = std::function<void(int msg, Micros offset)>;

class Simulator {
 public:
  Simulator(const Model& model, Chooser& chooser, SimOptions opts, std::vector<TraceRecord>* trace = nullptr);

  void set_send_observer(SendObserver obs) { observer_ = std::move(obs); }
  [[nodiscard]] State initial() const;
  /// Processes every event due at s.now in tie order. Returns the first
  /// violation or fault.
  std::optional<Verdict> process_instant(State& s);
  /// Moves to the next event time, accruing execution. False when nothing
  /// remains at or before the horizon.
  bool advance(State& s);
  /// Drops history that cannot influence the future, so equivalent states
  /// compare equal.
  void normalize(State& s) const;

 private:
  struct Impl;
  const Model& m_;
  Chooser& ch_;
  SimOptions opts_;
  std::vector<TraceRecord>* trace_;
  SendObserver observer_;
  friend struct Impl;
};

/// One stochastic run to the horizon or the first violation.
Verdict run(const Model& model, std::uint64_t seed, Micros horizon, Trace* trace = nullptr);

/// Re-executes the run described by a trace header. Throws ConfigError when
/// the configuration hash does not match.
Trace replay(const SystemConfig& cfg, const TraceHeader& header);

/// Builds the model a trace header refers to.
Model model_for(const SystemConfig& cfg, const TraceHeader& header);

}  // namespace dima
