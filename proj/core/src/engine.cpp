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

#include "dima/engine.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

namespace dima {

// ---------------------------------------------------------------------------
// Model

Scope Scope::of_slice(PartitionSlice s) {
  Scope sc;
  sc.kind = Kind::Slice;
  sc.partition = s.partition;
  sc.slice = std::move(s);
  return sc;
}

Scope Scope::tasks_only(std::string pid) {
  Scope sc;
  sc.kind = Kind::TasksOnly;
  sc.partition = std::move(pid);
  return sc;
}

namespace {

template <class T, class F>
int index_where(const std::vector<T>& v, F&& f) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (f(v[i])) return static_cast<int>(i);
  return -1;
}

}  // namespace

Model::Model(const SystemConfig& cfg, Scope scope)
    : cfg_(std::make_shared<const SystemConfig>(cfg)), scope_(std::move(scope)), hash_(config_hash_hex(cfg)) {
  const SystemConfig& c = *cfg_;
  modules = c.modules;
  auto module_index = [&](const std::string& id) {
    const int i = index_where(modules, [&](const std::string& m) { return m == id; });
    if (i < 0) throw ConfigError("unknown module " + id);
    return i;
  };

  std::vector<std::string> pids =
      scope_.kind == Scope::Kind::Global ? c.partition_ids() : std::vector<std::string>{scope_.partition};
  for (const auto& pid : pids) {
    const auto* sched = c.schedule_of_partition(pid);
    if (!sched) throw ConfigError("partition " + pid + " has no schedule");
    partitions.push_back({pid, module_index(c.module_of(pid)), sched, 0, {}});
  }
  auto partition_index = [&](const std::string& pid) {
    return index_where(partitions, [&](const Partition& p) { return p.id == pid; });
  };

  for (const auto& t : c.tasks) {
    const int p = partition_index(t.partition);
    if (p < 0) continue;
    partitions[static_cast<std::size_t>(p)].tasks.push_back(static_cast<int>(tasks.size()));
    tasks.push_back({&t, p, 0, {}});
  }
  for (const auto& mx : c.mutexes) mutexes.push_back({mx.id, mx.ceiling});

  auto add_message = [&](const std::string& id, Sender sender, bool transmit, const std::vector<std::string>& dests,
                         const MsgInterfaceSpec* iface) {
    const MessageSpec* spec = c.find_message(id);
    if (!spec) throw ConfigError("unknown message " + id);
    Message msg;
    msg.spec = spec;
    msg.sender = sender;
    msg.transmit = transmit;
    msg.src_port_name = id + "@" + spec->source + ".out";
    msg.iptx_name = "iptx:" + id;
    const int mi = static_cast<int>(messages.size());
    if (iface) {
      msg.iface = static_cast<int>(interfaces.size());
      interfaces.push_back({*iface, mi, 0, "snd:" + id});
    }
    if (transmit) {
      const VirtualLinkSpec* vs = c.find_vl(spec->vl);
      if (!vs) throw ConfigError("unknown virtual link " + spec->vl);
      int vi = index_where(vls, [&](const Vl& v) { return v.spec == vs; });
      if (vi < 0) {
        vi = static_cast<int>(vls.size());
        vls.push_back({vs, module_index(vs->source_es), 0, {}, "vltx:" + vs->id});
      }
      msg.vl = vi;
      Vl& vl = vls[static_cast<std::size_t>(vi)];
      for (const auto& d : dests) {
        const int p = partition_index(d);
        if (p < 0) continue;
        const std::string mod = c.module_of(d);
        int ri = index_where(vl.routes, [&](const Route& r) { return r.module == mod; });
        if (ri < 0) {
          ri = static_cast<int>(vl.routes.size());
          vl.routes.push_back({mod, vl_rx_bounds(*vs, mod, c.net), 0, "vlrx:" + vs->id + ":" + mod});
        }
        msg.dests.push_back({p, ri, 0, id + "@" + d, "iprx:" + id + ":" + d});
      }
    }
    messages.push_back(std::move(msg));
  };

  switch (scope_.kind) {
    case Scope::Kind::Global:
      for (const auto& m : c.messages) add_message(m.id, Sender::Task, true, m.destinations, nullptr);
      break;
    case Scope::Kind::Slice: {
      const auto& sl = scope_.slice;
      for (const auto& id : sl.outbound) add_message(id, Sender::Task, true, c.find_message(id)->destinations, nullptr);
      for (const auto& in : sl.inbound) add_message(in.message, Sender::Interface, true, {sl.partition}, &in);
      for (const auto& co : sl.colocated) add_message(co.message, Sender::Interface, true, {}, &co);
      break;
    }
    case Scope::Kind::TasksOnly:
      for (const auto& m : c.messages)
        if (m.source == scope_.partition) add_message(m.id, Sender::Task, false, {}, nullptr);
      break;
  }

  for (auto& t : tasks) {
    for (const auto& ins : t.spec->chunks) {
      Op op{static_cast<Branch>(ins.index())};
      std::visit(
          [&](const auto& x) {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, instr::Compute>) {
              op.a = x.bcet;
              op.b = x.wcet;
            } else if constexpr (std::is_same_v<X, instr::Delay>) {
              op.a = x.amount;
            } else if constexpr (std::is_same_v<X, instr::Lock> || std::is_same_v<X, instr::Unlock>) {
              op.ref = index_where(mutexes, [&](const Mutex& mx) { return mx.id == x.mutex; });
              if (op.ref < 0) throw ConfigError("unknown mutex " + x.mutex);
            } else if constexpr (std::is_same_v<X, instr::Send> || std::is_same_v<X, instr::Receive>) {
              op.ref = message_index(x.message);
            }
          },
          ins);
      t.code.push_back(op);
    }
  }

  // Subject ids follow the tie-break scan order of the kernel.
  int subject = 0;
  for (auto& p : partitions) p.subject = subject++;
  for (auto& t : tasks) t.subject = subject++;
  for (auto& i : interfaces) i.subject = subject++;
  for (auto& m : messages) m.subject = subject++;
  for (auto& v : vls) v.subject = subject++;
  for (auto& v : vls)
    for (auto& r : v.routes) r.subject = subject++;
  for (auto& m : messages)
    for (auto& d : m.dests) d.subject = subject++;
}

int Model::message_index(const std::string& id) const {
  return index_where(messages, [&](const Message& m) { return m.spec->id == id; });
}

int Model::task_index(const std::string& id) const {
  return index_where(tasks, [&](const Task& t) { return t.spec->id == id; });
}

std::vector<Micros> Model::constants() const {
  std::vector<Micros> out;
  for (const auto& p : partitions) {
    out.push_back(p.sched->major_frame);
    for (const auto& w : p.sched->windows) {
      out.push_back(w.offset);
      out.push_back(w.duration);
    }
  }
  for (const auto& t : tasks) {
    out.insert(out.end(), {t.spec->offset, t.spec->jitter, t.spec->deadline, t.spec->separation()});
    for (const auto& op : t.code)
      if (op.op == Branch::Compute || op.op == Branch::Delay) out.insert(out.end(), {op.a, op.b});
  }
  for (const auto& i : interfaces) {
    if (const auto* p = std::get_if<PeriodicMsgPattern>(&i.spec.pattern)) {
      out.insert(out.end(), {p->period, p->initial_offset, p->offset.min, p->offset.max, p->jitter});
    } else {
      const auto& s = std::get<SporadicMsgPattern>(i.spec.pattern);
      out.insert(out.end(), {s.min_separation, s.initial_offset, s.offset.min, s.offset.max});
    }
  }
  bool network = false;
  for (const auto& m : messages) {
    if (!m.transmit) continue;
    network = true;
    if (const auto* sp = std::get_if<SamplingPort>(&m.spec->port_mode)) out.push_back(sp->refresh_period);
  }
  if (network) {
    const auto& n = cfg_->net;
    for (const Interval& iv : {n.tech, n.ip_fwd, n.ip_reass}) out.insert(out.end(), {iv.min, iv.max});
    out.insert(out.end(), n.tx_jitter.begin(), n.tx_jitter.end());
    for (const auto& v : vls) {
      out.insert(out.end(), {v.spec->bag, v.spec->tx_delay});
      for (const auto& r : v.routes) out.insert(out.end(), {r.bounds.min, r.bounds.max});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// State encoding

namespace {

struct Enc {
  std::string& out;
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  void port(const MsgBuffer& b) {
    put<std::int32_t>(b.buf);
    put<Micros>(b.last_reset);
  }
};

}  // namespace

void encode(const State& s, std::string& out) {
  out.clear();
  Enc e{out};
  e.put<Micros>(s.now);
  for (const auto& p : s.partitions) {
    e.put<Micros>(p.next_boundary);
    e.put<std::uint8_t>(p.sched.inside);
    e.put<std::int16_t>(static_cast<std::int16_t>(p.sched.running));
    e.put<std::uint16_t>(static_cast<std::uint16_t>(p.sched.rq.size()));
    for (const auto& r : p.sched.rq) {
      e.put<std::int16_t>(static_cast<std::int16_t>(r.task));
      e.put<std::int32_t>(r.prio);
    }
  }
  for (const auto& t : s.tasks) {
    e.put<std::uint8_t>(static_cast<std::uint8_t>(t.loc));
    e.put<std::int16_t>(static_cast<std::int16_t>(t.pc));
    e.put<std::uint8_t>(static_cast<std::uint8_t>(t.computing | (t.active << 1) | (t.drawn << 2)));
    for (Micros v : {t.exe, t.budget, t.pending_release, t.release, t.nominal, t.next_release, t.next_nominal,
                     t.delay_until})
      e.put<Micros>(v);
    e.put<std::int32_t>(t.eff_prio);
    e.put<std::uint8_t>(static_cast<std::uint8_t>(t.held.size()));
    for (const auto& [m, c] : t.held) e.put<std::int16_t>(static_cast<std::int16_t>(m));
  }
  for (const auto& m : s.mutexes) {
    e.put<std::int16_t>(static_cast<std::int16_t>(m.holder));
    e.put<std::uint8_t>(static_cast<std::uint8_t>(m.blocked.size()));
    for (int b : m.blocked) e.put<std::int16_t>(static_cast<std::int16_t>(b));
  }
  for (const auto& i : s.interfaces) {
    e.put<Micros>(i.next);
    e.put<Micros>(i.base);
    e.put<std::uint8_t>(static_cast<std::uint8_t>(i.emit | (i.drawn << 1)));
  }
  for (const auto& m : s.messages) {
    e.port(m.src);
    e.put<std::uint8_t>(static_cast<std::uint8_t>(m.iptx.forwarding | (m.iptx.vl_error << 1)));
    e.put<Micros>(m.iptx.until);
    for (const auto& d : m.dests) {
      e.port(d.port);
      e.put<std::int16_t>(static_cast<std::int16_t>(d.iprx.fifo));
      e.put<std::int16_t>(static_cast<std::int16_t>(d.iprx.cnt));
      e.put<std::uint8_t>(static_cast<std::uint8_t>(d.iprx.busy | (d.iprx.invalid << 1)));
      e.put<Micros>(d.iprx.until);
    }
  }
  for (const auto& v : s.vls) {
    e.put<std::uint8_t>(static_cast<std::uint8_t>(v.fifo.size()));
    for (int f : v.fifo) e.put<std::int16_t>(static_cast<std::int16_t>(f));
    e.put<std::uint8_t>(static_cast<std::uint8_t>(v.tx.loc));
    for (Micros x : {v.tx.start, v.tx.depart, v.tx.wait_until, v.tx.last_departure}) e.put<Micros>(x);
    for (const auto& r : v.rx) {
      e.put<std::uint8_t>(static_cast<std::uint8_t>(r.in_flight.size()));
      for (const auto& f : r.in_flight) {
        e.put<Micros>(f.delivery);
        e.put<std::int16_t>(static_cast<std::int16_t>(f.msg));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Choosers

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RandomChooser::next(int subject) {
  const auto s = static_cast<std::size_t>(subject);
  if (s >= counters_.size()) counters_.resize(s + 1, 0);
  const std::uint64_t index = counters_[s]++;
  return splitmix64(splitmix64(splitmix64(seed_) ^ static_cast<std::uint64_t>(subject)) ^ index);
}

double RandomChooser::uniform(int subject) { return static_cast<double>(next(subject) >> 11) * 0x1.0p-53; }

int RandomChooser::pick(int subject, int n) {
  if (n <= 1) return 0;
  return static_cast<int>((next(subject) >> 11) % static_cast<std::uint64_t>(n));
}

void ScriptChooser::reset(std::vector<int> script) {
  script_ = std::move(script);
  taken_.clear();
  arities_.clear();
}

int ScriptChooser::pick(int /*subject*/, int n) {
  if (n <= 1) return 0;
  const std::size_t pos = taken_.size();
  int idx = pos < script_.size() ? script_[pos] : 0;
  if (idx < 0 || idx >= n) throw InvariantFault("choice script does not match the model");
  taken_.push_back(idx);
  arities_.push_back(n);
  return idx;
}

double ScriptChooser::uniform(int /*subject*/) { throw InvariantFault("stochastic draw in exhaustive mode"); }

const char* to_string(Branching b) { return b == Branching::Endpoints ? "Endpoints" : "FullTick"; }

// ---------------------------------------------------------------------------
// Step semantics

struct Simulator::Impl {
  Simulator& sim;
  State& s;

  const Model& m() const { return sim.m_; }
  const SystemConfig& cfg() const { return sim.m_.config(); }
  Chooser& ch() const { return sim.ch_; }

  void rec(const std::string& subject, const char* transition, std::string detail = {}) const {
    if (sim.trace_) sim.trace_->push_back({s.now, subject, transition, std::move(detail)});
  }

  const std::string& task_name(int i) const { return m().tasks[static_cast<std::size_t>(i)].spec->id; }

  Micros delay(int subject, Interval iv) const {
    if (iv.max <= iv.min) return iv.min;
    if (ch().stochastic()) {
      const Micros span = iv.max - iv.min + 1;
      const auto off = static_cast<Micros>(ch().uniform(subject) * static_cast<double>(span));
      return iv.min + std::min(off, span - 1);
    }
    if (sim.opts_.branching == Branching::Endpoints) return ch().pick(subject, 2) == 0 ? iv.min : iv.max;
    const Micros tick = sim.opts_.tick;
    const Micros steps = (iv.max - iv.min + tick - 1) / tick;
    const Micros k = ch().pick(subject, static_cast<int>(steps + 1));
    return std::min(iv.min + k * tick, iv.max);
  }

  void apply(const SchedCommands& cmds, int p) const {
    for (const auto& c : cmds) {
      auto& t = s.tasks[static_cast<std::size_t>(c.task)];
      switch (c.op) {
        case SchedOp::Stop:
          t.loc = TaskLocation::Ready;
          rec(task_name(c.task), "preempt");
          break;
        case SchedOp::Sched:
          t.loc = TaskLocation::Running;
          rec(m().partitions[static_cast<std::size_t>(p)].id + ".sched", "dispatch", task_name(c.task));
          rec(task_name(c.task), "run");
          break;
        case SchedOp::Suspend:
          t.loc = TaskLocation::Ready;
          rec(task_name(c.task), "suspend");
          break;
      }
    }
  }


  // -- class 0: partition boundaries
  void boundary(int p) {
    const auto& mp = m().partitions[static_cast<std::size_t>(p)];
    auto& pr = s.partitions[static_cast<std::size_t>(p)];
    const bool in = window_at(*mp.sched, mp.id, s.now).has_value();
    if (in && !pr.sched.inside) {
      rec(mp.id, "enter");
      apply(on_enter_partition(pr.sched), p);
    } else if (!in && pr.sched.inside) {
      rec(mp.id, "exit");
      apply(on_exit_partition(pr.sched), p);
    }
    pr.next_boundary = next_boundary(*mp.sched, mp.id, s.now);
  }

  // -- class 2: tasks
  void start_job(int i, Micros release, Micros nominal, bool was_pending) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    const auto& mt = m().tasks[static_cast<std::size_t>(i)];
    t.active = true;
    t.release = release;
    t.nominal = nominal;
    t.pc = 0;
    t.computing = false;
    t.exe = t.budget = 0;
    t.loc = TaskLocation::Ready;
    t.eff_prio = t.base_prio;
    rec(mt.spec->id, was_pending ? "start-pending" : "release");
    apply(on_ready(s.partitions[static_cast<std::size_t>(mt.partition)].sched, i, t.eff_prio), mt.partition);
  }

  void release_job(int i, Micros nominal) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    if (t.active) {
      if (t.pending_release != kNever) throw InvariantFault("release overrun on task " + task_name(i));
      t.pending_release = s.now;
      rec(task_name(i), "release-pending");
      return;
    }
    start_job(i, s.now, nominal, false);
  }

  void release_due(int i) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    const auto& mt = m().tasks[static_cast<std::size_t>(i)];
    const TaskSpec& spec = *mt.spec;
    if (const auto* per = std::get_if<Periodic>(&spec.release)) {
      if (!t.drawn && spec.jitter > 0) {
        const Micros d = delay(mt.subject, {0, spec.jitter});
        t.drawn = true;
        if (d > 0) {
          t.next_release = s.now + d;
          return;
        }
      }
      const Micros nominal = t.next_nominal;
      t.next_nominal += per->period;
      t.next_release = t.next_nominal;
      t.drawn = false;
      release_job(i, nominal);
      return;
    }
    const auto& spo = std::get<Sporadic>(spec.release);
    if (!t.drawn) {
      if (ch().stochastic()) {
        const Micros tail = exponential_tail(spo.smc_rate, ch().uniform(mt.subject));
        t.drawn = true;
        if (tail > 0) {
          t.next_release = tail == kNever ? kNever : s.now + tail;
          return;
        }
      } else if (ch().pick(mt.subject, 2) == 1) {
        t.next_release = s.now + sim.opts_.tick;
        return;
      }
    }
    t.drawn = false;
    t.next_release = s.now + spo.min_separation;
    release_job(i, s.now);
  }

  void delay_done(int i) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    const auto& mt = m().tasks[static_cast<std::size_t>(i)];
    t.delay_until = kNever;
    ++t.pc;
    t.loc = TaskLocation::Ready;
    rec(mt.spec->id, "delay-done");
    apply(on_ready(s.partitions[static_cast<std::size_t>(mt.partition)].sched, i, t.eff_prio), mt.partition);
  }

  std::optional<Verdict> write_source_port(int msg) {
    auto& mr = s.messages[static_cast<std::size_t>(msg)];
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    rec(mm.src_port_name, "write");
    if (port_send(mr.src) == PortOutcome::Overflow)
      return Verdict::violated(ViolationKind::QueuingOverflow, s.now, mm.src_port_name, "source port full");
    start_iptx(msg);
    return std::nullopt;
  }

  void start_iptx(int msg) {
    auto& mr = s.messages[static_cast<std::size_t>(msg)];
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    if (mr.iptx.forwarding || mr.iptx.vl_error || mr.src.buf == 0) return;
    const Micros tf = delay(mm.subject, cfg().net.ip_fwd);
    ip_tx_begin(mr.iptx, mr.src, s.now, tf);
    rec(mm.iptx_name, "forward-begin");
  }

  std::optional<Verdict> do_send(int i, int msg) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    if (msg < 0) return std::nullopt;
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    if (sim.observer_) {
      const Micros base = m().tasks[static_cast<std::size_t>(i)].spec->is_periodic() ? t.nominal : t.release;
      sim.observer_(msg, s.now - base);
    }
    rec(task_name(i), "send", mm.spec->id);
    if (!mm.transmit) return std::nullopt;
    return write_source_port(msg);
  }

  std::optional<Verdict> do_receive(int i, int msg) {
    if (msg < 0) return std::nullopt;
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    const int p = m().tasks[static_cast<std::size_t>(i)].partition;
    const int d = index_where(mm.dests, [&](const Model::Dest& x) { return x.partition == p; });
    if (d < 0) return std::nullopt;
    auto& dr = s.messages[static_cast<std::size_t>(msg)].dests[static_cast<std::size_t>(d)];
    const auto& dest = mm.dests[static_cast<std::size_t>(d)];
    rec(dest.port_name, "read", task_name(i));
    if (dr.port.sampling) {
      const Micros refresh = std::get<SamplingPort>(mm.spec->port_mode).refresh_period;
      if (auto age = refresh_check(dr.port, s.now, refresh)) {
        dr.iprx.invalid = true;
        return Verdict::violated(ViolationKind::RefreshViolation, s.now, dest.port_name,
                                 "age " + std::to_string(*age) + "us > " + std::to_string(refresh) + "us");
      }
    } else {
      port_receive(dr.port);
    }
    return std::nullopt;
  }

  std::optional<Verdict> task_step(int i) {
    auto& t = s.tasks[static_cast<std::size_t>(i)];
    const auto& mt = m().tasks[static_cast<std::size_t>(i)];
    auto& sched = s.partitions[static_cast<std::size_t>(mt.partition)].sched;
    if (t.computing) {
      t.computing = false;
      ++t.pc;
      rec(mt.spec->id, "chunk-done", std::to_string(t.exe));
      return std::nullopt;
    }
    const Branch br = fetch_and_dispatch(*mt.spec, t);
    const Model::Op& op = mt.code[static_cast<std::size_t>(t.pc)];
    switch (br) {
      case Branch::Compute:
        t.budget = delay(mt.subject, {op.a, op.b});
        t.exe = 0;
        t.computing = true;
        rec(mt.spec->id, "compute", std::to_string(t.budget));
        return std::nullopt;
      case Branch::Lock: {
        const auto& mx = m().mutexes[static_cast<std::size_t>(op.ref)];
        auto& ms = s.mutexes[static_cast<std::size_t>(op.ref)];
        if (pcp_lock(t, ms, i, op.ref, mx.ceiling, cfg().pcp_elevation) == LockOutcome::Acquired) {
          ++t.pc;
          rec(mt.spec->id, "lock", mx.id);
          apply(reprioritize(sched, i, t.eff_prio), mt.partition);
        } else {
          t.loc = TaskLocation::Blocked;
          rec(mt.spec->id, "block", mx.id);
          apply(on_block(sched, i), mt.partition);
        }
        return std::nullopt;
      }
      case Branch::Unlock: {
        const auto& mx = m().mutexes[static_cast<std::size_t>(op.ref)];
        auto woken = pcp_unlock(t, s.mutexes[static_cast<std::size_t>(op.ref)], i, op.ref);
        ++t.pc;
        rec(mt.spec->id, "unlock", mx.id);
        apply(reprioritize(sched, i, t.eff_prio), mt.partition);
        for (int w : woken) {
          auto& wt = s.tasks[static_cast<std::size_t>(w)];
          wt.loc = TaskLocation::Ready;
          rec(task_name(w), "wake");
          apply(on_ready(sched, w, wt.eff_prio), mt.partition);
        }
        return std::nullopt;
      }
      case Branch::Delay:
        if (op.a == 0) {
          ++t.pc;
          return std::nullopt;
        }
        t.loc = TaskLocation::WaitDelay;
        t.delay_until = s.now + op.a;
        rec(mt.spec->id, "delay", std::to_string(op.a));
        apply(on_block(sched, i), mt.partition);
        return std::nullopt;
      case Branch::Send:
        ++t.pc;
        return do_send(i, op.ref);
      case Branch::Receive:
        ++t.pc;
        return do_receive(i, op.ref);
      case Branch::End: {
        if (!t.held.empty()) throw InvariantFault("job of " + mt.spec->id + " ends holding a mutex");
        t.active = false;
        t.loc = TaskLocation::WaitNextRelease;
        rec(mt.spec->id, "end");
        apply(on_release(sched, i), mt.partition);
        if (t.pending_release != kNever) {
          const Micros r = t.pending_release;
          t.pending_release = kNever;
          const Micros nominal = mt.spec->is_periodic() ? t.nominal + mt.spec->separation() : r;
          start_job(i, r, nominal, true);
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // -- class 2: message interfaces
  std::optional<Verdict> interface_due(int k) {
    auto& ir = s.interfaces[static_cast<std::size_t>(k)];
    const auto& mi = m().interfaces[static_cast<std::size_t>(k)];
    if (const auto* p = std::get_if<PeriodicMsgPattern>(&mi.spec.pattern)) {
      if (!ir.emit) {
        const Micros d = delay(mi.subject, {p->offset.min, p->offset.max + p->jitter});
        ir.emit = true;
        ir.next = s.now + d;
        if (d > 0) return std::nullopt;
      }
      rec(mi.name, "emit");
      ir.base += p->period;
      ir.next = ir.base;
      ir.emit = false;
      return write_source_port(mi.message);
    }
    const auto& sp = std::get<SporadicMsgPattern>(mi.spec.pattern);
    if (!ir.emit) {
      if (!ir.drawn) {
        if (ch().stochastic()) {
          const Micros tail = exponential_tail(sp.smc_rate, ch().uniform(mi.subject));
          ir.drawn = true;
          if (tail > 0) {
            ir.next = tail == kNever ? kNever : s.now + tail;
            return std::nullopt;
          }
        } else if (ch().pick(mi.subject, 2) == 1) {
          ir.next = s.now + sim.opts_.tick;
          return std::nullopt;
        }
      }
      ir.drawn = false;
      ir.base = s.now;
      const Micros d = delay(mi.subject, sp.offset);
      ir.emit = true;
      ir.next = s.now + d;
      if (d > 0) return std::nullopt;
    }
    rec(mi.name, "emit");
    ir.next = ir.base + sp.min_separation;
    ir.emit = false;
    return write_source_port(mi.message);
  }

  // -- class 3: network
  std::optional<Verdict> iptx_done(int msg) {
    auto& mr = s.messages[static_cast<std::size_t>(msg)];
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    auto& vr = s.vls[static_cast<std::size_t>(mm.vl)];
    if (ip_tx_complete(mr.iptx, mr.src, vr.fifo, msg, mm.spec->frag, cfg().net.max_msg) == IpTxOutcome::VlError) {
      rec(mm.iptx_name, "vl-error");
      return Verdict::faulted(FaultKind::VlError, s.now, mm.iptx_name, "VL FIFO lacks room for the fragments");
    }
    rec(mm.iptx_name, "forward-done");
    rec(mm.src_port_name, "forward");
    begin_vl(mm.vl);
    start_iptx(msg);
    return std::nullopt;
  }

  void begin_vl(int v) {
    auto& vr = s.vls[static_cast<std::size_t>(v)];
    const auto& mv = m().vls[static_cast<std::size_t>(v)];
    if (vr.fifo.empty() || vr.tx.loc == VlTxLocation::Sending || vr.tx.loc == VlTxLocation::WaitBag) return;
    int count = 0;
    for (std::size_t w = 0; w < m().vls.size(); ++w)
      if (m().vls[w].es == mv.es && !s.vls[w].fifo.empty()) ++count;
    const auto& net = cfg().net;
    const Micros tech = delay(mv.subject, net.tech);
    const Micros jitter = delay(mv.subject, {0, net.jitter_for(count)});
    vl_tx_begin(vr.tx, s.now, tech + mv.spec->tx_delay + jitter, mv.spec->bag);
    rec(mv.name, "sending", "vls=" + std::to_string(count) + " depart=" + std::to_string(vr.tx.depart));
  }

  std::optional<Verdict> vl_depart(int v) {
    auto& vr = s.vls[static_cast<std::size_t>(v)];
    const auto& mv = m().vls[static_cast<std::size_t>(v)];
    const int msg = vr.fifo.front();
    vr.fifo.pop_front();
    rec(mv.name, "depart", m().messages[static_cast<std::size_t>(msg)].spec->id);
    for (std::size_t r = 0; r < mv.routes.size(); ++r) {
      const auto& route = mv.routes[r];
      const Micros lat = delay(route.subject, route.bounds);
      if (vl_rx_accept(vr.rx[r], s.now, lat, msg, cfg().net.max_packets) == VlRxOutcome::LinkError) {
        rec(route.name, "link-error");
        return Verdict::faulted(FaultKind::LinkError, s.now, route.name, "more than max_packets frames in transit");
      }
      rec(route.name, "arrive", std::to_string(vr.rx[r].in_flight.back().delivery));
    }
    vl_tx_depart(vr.tx, s.now, !vr.fifo.empty(), mv.spec->bag);
    rec(mv.name, vr.tx.loc == VlTxLocation::Idle ? "idle" : "wait-bag");
    return std::nullopt;
  }

  void vl_bag_done(int v) {
    auto& vr = s.vls[static_cast<std::size_t>(v)];
    vl_tx_idle(vr.tx);
    rec(m().vls[static_cast<std::size_t>(v)].name, "bag-done");
    begin_vl(v);
  }

  void vl_deliver(int v, int r) {
    auto& rx = s.vls[static_cast<std::size_t>(v)].rx[static_cast<std::size_t>(r)];
    const auto& route = m().vls[static_cast<std::size_t>(v)].routes[static_cast<std::size_t>(r)];
    const InFlight f = rx.in_flight.front();
    rx.in_flight.pop_front();
    const auto& mm = m().messages[static_cast<std::size_t>(f.msg)];
    rec(route.name, "deliver", mm.spec->id);
    std::vector<int> order;
    for (std::size_t d = 0; d < mm.dests.size(); ++d)
      if (mm.dests[d].route == r) order.push_back(static_cast<int>(d));
    if (order.size() > 1) {
      // Random arrival order of a multicast frame at the partitions of one ES.
      int fact = 1;
      for (std::size_t k = 2; k <= order.size(); ++k) fact *= static_cast<int>(k);
      int code = ch().pick(route.subject, fact);
      std::vector<int> pool = order;
      order.clear();
      for (std::size_t k = pool.size(); k > 0; --k) {
        const int sel = code % static_cast<int>(k);
        code /= static_cast<int>(k);
        order.push_back(pool[static_cast<std::size_t>(sel)]);
        pool.erase(pool.begin() + sel);
      }
    }
    for (int d : order) {
      auto& dr = s.messages[static_cast<std::size_t>(f.msg)].dests[static_cast<std::size_t>(d)];
      ++dr.iprx.fifo;
      start_iprx(f.msg, d);
    }
  }

  void start_iprx(int msg, int d) {
    auto& dr = s.messages[static_cast<std::size_t>(msg)].dests[static_cast<std::size_t>(d)];
    const auto& dest = m().messages[static_cast<std::size_t>(msg)].dests[static_cast<std::size_t>(d)];
    if (dr.iprx.busy || dr.iprx.invalid || dr.iprx.fifo == 0) return;
    ip_rx_begin(dr.iprx, s.now, delay(dest.subject, cfg().net.ip_reass));
    rec(dest.iprx_name, "reass-begin");
  }

  std::optional<Verdict> iprx_done(int msg, int d) {
    auto& dr = s.messages[static_cast<std::size_t>(msg)].dests[static_cast<std::size_t>(d)];
    const auto& mm = m().messages[static_cast<std::size_t>(msg)];
    const auto& dest = mm.dests[static_cast<std::size_t>(d)];
    const IpRxOutcome out = ip_rx_complete(dr.iprx, dr.port, mm.spec->reass, s.now);
    rec(dest.iprx_name, "reass-done");
    if (out != IpRxOutcome::Partial) rec(dest.port_name, "write");
    if (out == IpRxOutcome::Overflow)
      return Verdict::violated(ViolationKind::QueuingOverflow, s.now, dest.port_name, "destination port full");
    start_iprx(msg, d);
    return std::nullopt;
  }

  // -- class 4: deadlines
  bool deadline_due(int i) const {
    const auto& t = s.tasks[static_cast<std::size_t>(i)];
    const Micros d = m().tasks[static_cast<std::size_t>(i)].spec->deadline;
    return (t.active && t.release + d == s.now) ||
           (t.pending_release != kNever && t.pending_release + d == s.now);
  }

  /// Fires the first due event in (class, subject, kind) order. Returns
  /// false when nothing is due at s.now.
  bool fire_next(std::optional<Verdict>& v) {
    const Micros now = s.now;
    for (std::size_t p = 0; p < s.partitions.size(); ++p)
      if (s.partitions[p].next_boundary == now) {
        boundary(static_cast<int>(p));
        return true;
      }
    for (std::size_t i = 0; i < s.tasks.size(); ++i) {
      auto& t = s.tasks[i];
      const int ii = static_cast<int>(i);
      if (t.next_release == now) {
        release_due(ii);
        return true;
      }
      if (t.loc == TaskLocation::WaitDelay && t.delay_until == now) {
        delay_done(ii);
        return true;
      }
      if (t.loc == TaskLocation::Running && (!t.computing || t.exe == t.budget)) {
        v = task_step(ii);
        return true;
      }
    }
    for (std::size_t k = 0; k < s.interfaces.size(); ++k)
      if (s.interfaces[k].next == now) {
        v = interface_due(static_cast<int>(k));
        return true;
      }
    for (std::size_t k = 0; k < s.messages.size(); ++k)
      if (s.messages[k].iptx.forwarding && s.messages[k].iptx.until == now) {
        v = iptx_done(static_cast<int>(k));
        return true;
      }
    for (std::size_t k = 0; k < s.vls.size(); ++k) {
      const auto& tx = s.vls[k].tx;
      if (tx.loc == VlTxLocation::Sending && tx.depart == now) {
        v = vl_depart(static_cast<int>(k));
        return true;
      }
      if (tx.loc == VlTxLocation::WaitBag && tx.wait_until == now) {
        vl_bag_done(static_cast<int>(k));
        return true;
      }
    }
    for (std::size_t k = 0; k < s.vls.size(); ++k)
      for (std::size_t r = 0; r < s.vls[k].rx.size(); ++r)
        if (!s.vls[k].rx[r].in_flight.empty() && s.vls[k].rx[r].in_flight.front().delivery == now) {
          vl_deliver(static_cast<int>(k), static_cast<int>(r));
          return true;
        }
    for (std::size_t k = 0; k < s.messages.size(); ++k)
      for (std::size_t d = 0; d < s.messages[k].dests.size(); ++d)
        if (s.messages[k].dests[d].iprx.busy && s.messages[k].dests[d].iprx.until == now) {
          v = iprx_done(static_cast<int>(k), static_cast<int>(d));
          return true;
        }
    for (std::size_t i = 0; i < s.tasks.size(); ++i)
      if (deadline_due(static_cast<int>(i))) {
        v = Verdict::violated(ViolationKind::DeadlineMiss, now, task_name(static_cast<int>(i)));
        return true;
      }
    return false;
  }
};

Simulator::Simulator(const Model& model, Chooser& chooser, SimOptions opts, std::vector<TraceRecord>* trace)
    : m_(model), ch_(chooser), opts_(opts), trace_(trace) {}

State Simulator::initial() const {
  State s;
  s.now = 0;
  for (const auto& p : m_.partitions) {
    PartitionRt pr;
    pr.next_boundary = window_at(*p.sched, p.id, 0) ? 0 : next_boundary(*p.sched, p.id, 0);
    s.partitions.push_back(pr);
  }
  for (const auto& t : m_.tasks) {
    TaskState ts;
    ts.base_prio = ts.eff_prio = t.spec->priority;
    ts.next_release = t.spec->offset;
    ts.next_nominal = t.spec->offset;
    s.tasks.push_back(ts);
  }
  s.mutexes.resize(m_.mutexes.size());
  for (const auto& i : m_.interfaces) {
    InterfaceRt ir;
    const Micros first = std::holds_alternative<PeriodicMsgPattern>(i.spec.pattern)
                             ? std::get<PeriodicMsgPattern>(i.spec.pattern).initial_offset
                             : std::get<SporadicMsgPattern>(i.spec.pattern).initial_offset;
    ir.next = first;
    ir.base = first;
    s.interfaces.push_back(ir);
  }
  for (const auto& mm : m_.messages) {
    MessageRt mr;
    mr.src = make_port(mm.spec->port_mode);
    for (std::size_t d = 0; d < mm.dests.size(); ++d) mr.dests.push_back({make_port(mm.spec->port_mode), {}});
    s.messages.push_back(std::move(mr));
  }
  for (const auto& v : m_.vls) {
    VlRt vr;
    vr.rx.resize(v.routes.size());
    s.vls.push_back(std::move(vr));
  }
  return s;
}

std::optional<Verdict> Simulator::process_instant(State& s) {
  Impl impl{*this, s};
  try {
    for (;;) {
      std::optional<Verdict> v;
      if (!impl.fire_next(v)) return std::nullopt;
      if (v) {
        impl.rec(v->subject, v->outcome == Verdict::Outcome::Violation ? "violation" : "fault",
                 v->outcome == Verdict::Outcome::Violation ? to_string(v->kind) : to_string(v->fault));
        return v;
      }
    }
  } catch (const InvariantFault& e) {
    impl.rec("engine", "fault", e.what());
    return Verdict::faulted(FaultKind::InvariantFault, s.now, "engine", e.what());
  }
}

bool Simulator::advance(State& s) {
  Micros next = kNever;
  auto consider = [&](Micros t) { next = std::min(next, t); };
  for (const auto& p : s.partitions) consider(p.next_boundary);
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    const auto& t = s.tasks[i];
    const Micros d = m_.tasks[i].spec->deadline;
    consider(t.next_release);
    if (t.loc == TaskLocation::WaitDelay) consider(t.delay_until);
    if (t.loc == TaskLocation::Running && t.computing) consider(s.now + (t.budget - t.exe));
    if (t.active) consider(t.release + d);
    if (t.pending_release != kNever) consider(t.pending_release + d);
  }
  for (const auto& i : s.interfaces) consider(i.next);
  for (const auto& mr : s.messages) {
    if (mr.iptx.forwarding) consider(mr.iptx.until);
    for (const auto& d : mr.dests)
      if (d.iprx.busy) consider(d.iprx.until);
  }
  for (const auto& v : s.vls) {
    if (v.tx.loc == VlTxLocation::Sending) consider(v.tx.depart);
    if (v.tx.loc == VlTxLocation::WaitBag) consider(v.tx.wait_until);
    for (const auto& r : v.rx)
      if (!r.in_flight.empty()) consider(r.in_flight.front().delivery);
  }
  if (next == kNever || next > opts_.horizon) return false;
  if (next <= s.now) throw InvariantFault("event left unprocessed at " + std::to_string(s.now));
  const Micros delta = next - s.now;
  for (auto& t : s.tasks)
    if (t.loc == TaskLocation::Running && t.computing) advance_exec(t, delta);
  s.now = next;
  return true;
}

void Simulator::normalize(State& s) const {
  const Micros h = opts_.horizon;
  auto clip = [&](Micros& t) {
    if (t != kNever && t > h) t = kNever;
  };
  for (auto& p : s.partitions) clip(p.next_boundary);
  for (std::size_t i = 0; i < s.tasks.size(); ++i) {
    auto& t = s.tasks[i];
    clip(t.next_release);
    if (t.next_release == kNever) {
      t.next_nominal = 0;
      t.drawn = false;
    }
    if (!m_.tasks[i].spec->is_periodic()) t.next_nominal = 0;
    if (!t.active) t.release = t.nominal = 0;
    if (!t.computing) t.exe = t.budget = 0;
    clip(t.delay_until);
  }
  for (auto& i : s.interfaces) {
    clip(i.next);
    if (i.next == kNever) i.base = 0;
  }
  for (std::size_t k = 0; k < s.messages.size(); ++k) {
    auto& mr = s.messages[k];
    const auto& mm = m_.messages[k];
    clip(mr.iptx.until);
    for (auto& d : mr.dests) {
      clip(d.iprx.until);
      if (d.port.sampling && d.port.last_reset >= 0) {
        const Micros refresh = std::get<SamplingPort>(mm.spec->port_mode).refresh_period;
        if (s.now - d.port.last_reset > refresh) d.port.last_reset = kStale;
      }
    }
  }
  for (std::size_t k = 0; k < s.vls.size(); ++k) {
    auto& v = s.vls[k];
    const Micros bag = m_.vls[k].spec->bag;
    clip(v.tx.depart);
    clip(v.tx.wait_until);
    if (v.tx.loc == VlTxLocation::Idle || v.tx.loc == VlTxLocation::Init) v.tx.start = 0;
    if (v.tx.loc != VlTxLocation::WaitBag && v.tx.last_departure != kNever && v.tx.last_departure + bag <= s.now)
      v.tx.last_departure = kNever;
    for (auto& r : v.rx)
      for (auto& f : r.in_flight) clip(f.delivery);
  }
}

// ---------------------------------------------------------------------------
// Runs and replay

namespace {

TraceHeader header_for(const Model& model) {
  TraceHeader h;
  h.config_hash = model.config_hash();
  h.scope = model.scope().name();
  if (model.scope().kind == Scope::Kind::Slice) {
    const auto& sl = model.scope().slice;
    for (const auto* group : {&sl.inbound, &sl.colocated})
      for (const auto& i : *group) {
        if (!i.envelope_derived) continue;
        const Interval off = std::holds_alternative<PeriodicMsgPattern>(i.pattern)
                                 ? std::get<PeriodicMsgPattern>(i.pattern).offset
                                 : std::get<SporadicMsgPattern>(i.pattern).offset;
        h.envelopes[i.message] = off;
      }
  }
  return h;
}

}  // namespace

Verdict run(const Model& model, std::uint64_t seed, Micros horizon, Trace* trace) {
  RandomChooser chooser(seed);
  SimOptions opts;
  opts.horizon = horizon;
  Simulator sim(model, chooser, opts, trace ? &trace->records : nullptr);
  State s = sim.initial();
  Verdict verdict = Verdict::pass(horizon);
  for (;;) {
    if (auto v = sim.process_instant(s)) {
      verdict = *v;
      break;
    }
    bool more = false;
    try {
      more = sim.advance(s);
    } catch (const InvariantFault& e) {
      verdict = Verdict::faulted(FaultKind::InvariantFault, s.now, "engine", e.what());
      break;
    }
    if (!more) break;
  }
  if (trace) {
    trace->header = header_for(model);
    trace->header.seed = seed;
    trace->header.horizon = horizon;
    trace->header.mode = "smc";
    trace->verdict = verdict;
    trace->complete = true;
  }
  return verdict;
}

Model model_for(const SystemConfig& cfg, const TraceHeader& header) {
  if (header.scope == "global") return Model(cfg, Scope::global());
  if (!cfg.partitions.count(header.scope)) throw ConfigError("unknown scope " + header.scope);
  SendEnvelopes env(header.envelopes.begin(), header.envelopes.end());
  return Model(cfg, Scope::of_slice(build_slice(cfg, header.scope, env)));
}

Trace replay(const SystemConfig& cfg, const TraceHeader& header) {
  if (config_hash_hex(cfg) != header.config_hash)
    throw ConfigError("configuration hash mismatch: trace " + header.config_hash + ", config " + config_hash_hex(cfg));
  const Model model = model_for(cfg, header);
  Trace trace;
  if (header.mode != "mc") {
    run(model, header.seed, header.horizon, &trace);
    trace.header = header;
    return trace;
  }
  ScriptChooser chooser;
  SimOptions opts;
  opts.horizon = header.horizon;
  opts.tick = header.tick;
  opts.branching = header.branching == "FullTick" ? Branching::FullTick : Branching::Endpoints;
  Simulator sim(model, chooser, opts, &trace.records);
  State s = sim.initial();
  trace.header = header;
  trace.verdict = Verdict::pass(header.horizon);
  for (const auto& script : header.choices) {
    chooser.reset(script);
    if (auto v = sim.process_instant(s)) {
      trace.verdict = *v;
      break;
    }
    if (!sim.advance(s)) break;
  }
  trace.complete = true;
  return trace;
}

}  // namespace dima
