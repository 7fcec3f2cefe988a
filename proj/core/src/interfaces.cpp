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

#include "dima/interfaces.hpp"

#include <algorithm>
#include <set>

namespace dima {

const TaskSpec* sender_of(const SystemConfig& cfg, const std::string& message) {
  const TaskSpec* found = nullptr;
  for (const auto& t : cfg.tasks)
    for (const auto& ins : t.chunks)
      if (const auto* s = std::get_if<instr::Send>(&ins); s && s->message == message) {
        if (found && found != &t) throw ConfigError("message " + message + " has several sending tasks");
        found = &t;
      }
  return found;
}

MsgInterfaceSpec derive_interface(const SystemConfig& cfg, const std::string& message, const SendEnvelopes& envelopes) {
  const TaskSpec* t = sender_of(cfg, message);
  if (!t) throw ConfigError("message " + message + " has no sending task");

  Interval phase;
  Micros jitter = t->jitter;
  bool derived = false;
  if (auto it = envelopes.find(message); it != envelopes.end()) {
    phase = it->second;
    jitter = 0;
    derived = true;
  } else {
    Micros before = 0;
    for (const auto& ins : t->chunks) {
      if (const auto* s = std::get_if<instr::Send>(&ins); s && s->message == message) break;
      if (const auto* c = std::get_if<instr::Compute>(&ins)) before += c->wcet;
      if (const auto* d = std::get_if<instr::Delay>(&ins)) before += d->amount;
    }
    phase = {0, before};
  }

  MsgInterfaceSpec spec;
  spec.message = message;
  spec.derived_from = t->id;
  spec.envelope_derived = derived;
  if (const auto* p = std::get_if<Periodic>(&t->release)) {
    spec.pattern = PeriodicMsgPattern{p->period, t->offset, phase, jitter};
  } else {
    const auto& s = std::get<Sporadic>(t->release);
    if (!derived) phase.max += jitter;
    spec.pattern = SporadicMsgPattern{s.min_separation, s.smc_rate, t->offset, phase};
  }
  return spec;
}

Interval emission_window(const MsgInterfaceSpec& spec, int k, Micros prev) {
  if (const auto* p = std::get_if<PeriodicMsgPattern>(&spec.pattern)) {
    const Micros nominal = p->initial_offset + k * p->period;
    return {nominal + p->offset.min, nominal + p->offset.max + p->jitter};
  }
  const auto& s = std::get<SporadicMsgPattern>(spec.pattern);
  const Micros start = k == 0 ? s.initial_offset : prev + s.min_separation;
  return {start + s.offset.min, start + s.offset.max};
}

PartitionSlice build_slice(const SystemConfig& cfg, const std::string& pid, const SendEnvelopes& envelopes) {
  PartitionSlice slice;
  slice.partition = pid;
  for (const auto& t : cfg.tasks)
    if (t.partition == pid) slice.tasks.push_back(t.id);

  std::set<std::string> included;
  std::set<std::string> source_es;
  for (const auto& m : cfg.messages) {
    const bool dest = std::find(m.destinations.begin(), m.destinations.end(), pid) != m.destinations.end();
    if (m.source == pid) {
      slice.outbound.push_back(m.id);
    } else if (dest) {
      slice.inbound.push_back(derive_interface(cfg, m.id, envelopes));
    } else {
      continue;
    }
    included.insert(m.id);
    if (const auto* vl = cfg.find_vl(m.vl)) source_es.insert(vl->source_es);
  }
  // Frames of other VLs leaving the same ES change the transmit jitter.
  for (const auto& m : cfg.messages) {
    if (included.count(m.id)) continue;
    const auto* vl = cfg.find_vl(m.vl);
    if (vl && source_es.count(vl->source_es)) slice.colocated.push_back(derive_interface(cfg, m.id, envelopes));
  }
  return slice;
}

bool slice_closed(const SystemConfig& cfg, const PartitionSlice& slice) {
  auto receives = [&](const std::string& msg) {
    for (const auto& id : slice.tasks) {
      const auto* t = cfg.find_task(id);
      if (!t) return false;
      for (const auto& ins : t->chunks)
        if (const auto* r = std::get_if<instr::Receive>(&ins); r && r->message == msg) return true;
    }
    return false;
  };
  auto sends = [&](const std::string& msg) {
    for (const auto& id : slice.tasks) {
      const auto* t = cfg.find_task(id);
      if (!t) return false;
      for (const auto& ins : t->chunks)
        if (const auto* s = std::get_if<instr::Send>(&ins); s && s->message == msg) return true;
    }
    return false;
  };
  for (const auto& in : slice.inbound)
    if (!cfg.find_message(in.message) || !receives(in.message)) return false;
  for (const auto& out : slice.outbound)
    if (!sends(out)) return false;
  for (const auto& c : slice.colocated)
    if (!cfg.find_message(c.message)) return false;
  // Every Send/Receive of the partition's tasks must be backed by a chain.
  for (const auto& id : slice.tasks) {
    for (const auto& ins : cfg.find_task(id)->chunks) {
      if (const auto* s = std::get_if<instr::Send>(&ins)) {
        if (std::find(slice.outbound.begin(), slice.outbound.end(), s->message) == slice.outbound.end()) return false;
      } else if (const auto* r = std::get_if<instr::Receive>(&ins)) {
        const bool inbound = std::any_of(slice.inbound.begin(), slice.inbound.end(),
                                         [&](const auto& i) { return i.message == r->message; });
        const bool local = std::find(slice.outbound.begin(), slice.outbound.end(), r->message) != slice.outbound.end();
        if (!inbound && !local) return false;
      }
    }
  }
  return true;
}

}  // namespace dima
