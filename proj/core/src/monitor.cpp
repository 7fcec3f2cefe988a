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

#include "dima/monitor.hpp"

#include <deque>
#include <map>
#include <optional>

namespace dima {

namespace {

struct PortBook {
  const MessageSpec* msg = nullptr;
  bool source = false;
  Micros last_write = -1;
  int count = 0;
};

class Monitor {
 public:
  explicit Monitor(const SystemConfig& cfg) : cfg_(cfg) {
    for (const auto& t : cfg.tasks) deadlines_[t.id] = t.deadline;
  }

  std::optional<Verdict> record(const TraceRecord& r) {
    if (auto it = deadlines_.find(r.subject); it != deadlines_.end()) {
      if (r.transition == "release" || r.transition == "release-pending") {
        releases_[r.subject].push_back(r.t);
      } else if (r.transition == "end") {
        auto& q = releases_[r.subject];
        if (!q.empty()) q.pop_front();
      }
      return std::nullopt;
    }
    if (r.transition == "vl-error") return Verdict::faulted(FaultKind::VlError, r.t, r.subject);
    if (r.transition == "link-error") return Verdict::faulted(FaultKind::LinkError, r.t, r.subject);
    if (r.transition == "fault" && r.subject == "engine")
      return Verdict::faulted(FaultKind::InvariantFault, r.t, r.subject, r.detail);
    PortBook* p = port(r.subject);
    if (!p) return std::nullopt;
    const auto* sp = std::get_if<SamplingPort>(&p->msg->port_mode);
    const auto* qp = std::get_if<QueuingPort>(&p->msg->port_mode);
    if (r.transition == "write") {
      p->last_write = r.t;
      if (qp && ++p->count > qp->capacity) {
        return Verdict::violated(ViolationKind::QueuingOverflow, r.t, r.subject);
      }
    } else if (r.transition == "forward") {
      if (qp && p->count > 0) --p->count;
    } else if (r.transition == "read") {
      if (sp && p->last_write >= 0 && r.t - p->last_write > sp->refresh_period) {
        return Verdict::violated(ViolationKind::RefreshViolation, r.t, r.subject,
                                 "age " + std::to_string(r.t - p->last_write) + "us");
      }
      if (qp && p->count > 0) --p->count;
    }
    return std::nullopt;
  }

  /// Earliest outstanding deadline expiry at or before `limit`.
  std::optional<Verdict> deadline_by(Micros limit, bool inclusive) const {
    std::optional<Verdict> best;
    for (const auto& [task, q] : releases_) {
      if (q.empty()) continue;
      const Micros due = q.front() + deadlines_.at(task);
      if (due > limit || (!inclusive && due == limit)) continue;
      if (!best || due < best->time) best = Verdict::violated(ViolationKind::DeadlineMiss, due, task);
    }
    return best;
  }

 private:
  PortBook* port(const std::string& name) {
    if (auto it = ports_.find(name); it != ports_.end()) return &it->second;
    const auto at = name.find('@');
    if (at == std::string::npos) return nullptr;
    const MessageSpec* msg = cfg_.find_message(name.substr(0, at));
    if (!msg) return nullptr;
    std::string part = name.substr(at + 1);
    bool source = false;
    if (part.size() > 4 && part.compare(part.size() - 4, 4, ".out") == 0) {
      part.resize(part.size() - 4);
      source = true;
    }
    if (!cfg_.partitions.count(part)) return nullptr;
    return &ports_.emplace(name, PortBook{msg, source, -1, 0}).first->second;
  }

  const SystemConfig& cfg_;
  std::map<std::string, Micros> deadlines_;
  std::map<std::string, std::deque<Micros>> releases_;
  std::map<std::string, PortBook> ports_;
};

}  // namespace

Verdict monitor_offline(const Trace& trace, const SystemConfig& cfg) {
  Monitor mon(cfg);
  const auto& recs = trace.records;
  std::size_t i = 0;
  while (i < recs.size()) {
    const Micros t = recs[i].t;
    if (auto v = mon.deadline_by(t, false)) return *v;
    for (; i < recs.size() && recs[i].t == t; ++i) {
      if (auto v = mon.record(recs[i])) return *v;
    }
    if (auto v = mon.deadline_by(t, true)) return *v;
  }
  if (auto v = mon.deadline_by(trace.header.horizon, true)) return *v;
  return Verdict::pass(trace.header.horizon);
}

}  // namespace dima
