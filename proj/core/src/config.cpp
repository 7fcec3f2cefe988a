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

#include "dima/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace dima {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Micros parse_duration(std::string_view text) {
  const std::string s = trim(text);
  std::size_t i = 0;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
  const std::string number = s.substr(0, i);
  const std::string unit = trim(std::string_view(s).substr(i));
  if (number.empty() || std::count(number.begin(), number.end(), '.') > 1)
    fail("malformed duration '" + s + "'");

  Micros scale = 1;
  if (unit.empty() || unit == "us") scale = 1;
  else if (unit == "ms") scale = kMillis;
  else if (unit == "s") scale = 1000 * kMillis;
  else fail("unknown duration unit in '" + s + "'");

  const auto dot = number.find('.');
  const std::string whole = number.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string{} : number.substr(dot + 1);
  while (!frac.empty() && frac.back() == '0') frac.pop_back();

  Micros w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc{} || p != whole.data() + whole.size()) fail("malformed duration '" + s + "'");
  }
  // Exact decimal scaling: frac digits / 10^len * scale must be integral.
  Micros f = 0;
  Micros denom = 1;
  for (char c : frac) {
    f = f * 10 + (c - '0');
    denom *= 10;
    if (denom > 1'000'000'000'000LL) fail("too many fractional digits in '" + s + "'");
  }
  if ((f * scale) % denom != 0) fail("duration '" + s + "' is not an integer number of microseconds");
  return w * scale + (f * scale) / denom;
}

std::string format_duration(Micros us) { return std::to_string(us) + "us"; }

Micros TaskSpec::separation() const {
  if (const auto* p = std::get_if<Periodic>(&release)) return p->period;
  return std::get<Sporadic>(release).min_separation;
}

Micros NetworkParams::jitter_for(int active_vls) const {
  if (tx_jitter.empty()) return 0;
  const auto idx = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(active_vls, 0)), 0,
                                           tx_jitter.size() - 1);
  return tx_jitter[idx];
}

const TaskSpec* SystemConfig::find_task(std::string_view id) const {
  for (const auto& t : tasks)
    if (t.id == id) return &t;
  return nullptr;
}
const MutexSpec* SystemConfig::find_mutex(std::string_view id) const {
  for (const auto& m : mutexes)
    if (m.id == id) return &m;
  return nullptr;
}
const MessageSpec* SystemConfig::find_message(std::string_view id) const {
  for (const auto& m : messages)
    if (m.id == id) return &m;
  return nullptr;
}
const VirtualLinkSpec* SystemConfig::find_vl(std::string_view id) const {
  for (const auto& v : vls)
    if (v.id == id) return &v;
  return nullptr;
}
const PartitionSchedule* SystemConfig::schedule_of_module(std::string_view module) const {
  for (const auto& s : schedules)
    if (s.module == module) return &s;
  return nullptr;
}
const PartitionSchedule* SystemConfig::schedule_of_partition(std::string_view pid) const {
  return schedule_of_module(module_of(pid));
}
std::string SystemConfig::module_of(std::string_view pid) const {
  auto it = partitions.find(std::string(pid));
  return it == partitions.end() ? std::string{} : it->second;
}
std::vector<std::string> SystemConfig::partition_ids() const {
  std::vector<std::string> out;
  for (const auto& [p, m] : partitions) out.push_back(p);
  return out;
}

int default_frag(int length, int lmax, int overhead) {
  const int payload = std::max(1, lmax - overhead);
  return std::max(1, (length + payload - 1) / payload);
}

int ceiling_of(const SystemConfig& cfg, std::string_view mutex) {
  int best = kLowestPriority;
  for (const auto& t : cfg.tasks)
    for (const auto& ins : t.chunks)
      if (const auto* l = std::get_if<instr::Lock>(&ins); l && l->mutex == mutex)
        best = std::min(best, t.priority);
  return best;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

Micros dur(const json& j, const std::string& what) {
  if (j.is_number_integer()) return j.get<Micros>();
  if (j.is_string()) {
    try {
      return parse_duration(j.get<std::string>());
    } catch (const ConfigError& e) {
      fail(what + ": " + e.what());
    }
  }
  fail(what + ": expected a duration");
}

Interval interval(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) fail(what + ": expected [min, max]");
  return {dur(j[0], what), dur(j[1], what)};
}

const json& req(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) fail(ctx + ": missing '" + key + "'");
  return j.at(key);
}

std::vector<std::string> string_list(const json& j) {
  std::vector<std::string> out;
  if (j.is_null()) return out;
  if (j.is_string()) {
    out.push_back(j.get<std::string>());
    return out;
  }
  for (const auto& e : j) out.push_back(e.get<std::string>());
  return out;
}

Instruction parse_instruction(const json& j, const std::string& ctx) {
  const std::string op = req(j, "op", ctx).get<std::string>();
  if (op == "compute") return instr::Compute{dur(req(j, "bcet", ctx), ctx), dur(req(j, "wcet", ctx), ctx)};
  if (op == "lock") return instr::Lock{req(j, "mutex", ctx).get<std::string>()};
  if (op == "unlock") return instr::Unlock{req(j, "mutex", ctx).get<std::string>()};
  if (op == "delay") return instr::Delay{dur(req(j, "amount", ctx), ctx)};
  if (op == "send") return instr::Send{req(j, "message", ctx).get<std::string>()};
  if (op == "receive") return instr::Receive{req(j, "message", ctx).get<std::string>()};
  if (op == "end") return instr::End{};
  fail(ctx + ": unknown instruction '" + op + "'");
}

// Table-style rows: {time:[bcet,wcet], mutex, output, input}. Receives come
// first, each row is one compute wrapped by its mutex, sends follow the last
// compute.
std::vector<Instruction> expand_rows(const json& rows, const std::string& ctx) {
  std::vector<Instruction> receives, body, sends;
  for (const auto& row : rows) {
    const Interval t = interval(req(row, "time", ctx), ctx + ".time");
    const auto mutexes = string_list(row.value("mutex", json{}));
    for (const auto& in : string_list(row.value("input", json{}))) receives.push_back(instr::Receive{in});
    for (const auto& m : mutexes) body.push_back(instr::Lock{m});
    body.push_back(instr::Compute{t.min, t.max});
    for (auto it = mutexes.rbegin(); it != mutexes.rend(); ++it) body.push_back(instr::Unlock{*it});
    for (const auto& out : string_list(row.value("output", json{}))) sends.push_back(instr::Send{out});
  }
  std::vector<Instruction> all;
  all.insert(all.end(), receives.begin(), receives.end());
  all.insert(all.end(), body.begin(), body.end());
  all.insert(all.end(), sends.begin(), sends.end());
  all.push_back(instr::End{});
  return all;
}

TaskSpec parse_task(const json& j) {
  TaskSpec t;
  t.id = req(j, "id", "task").get<std::string>();
  const std::string ctx = "task " + t.id;
  t.partition = req(j, "partition", ctx).get<std::string>();
  const json& rel = req(j, "release", ctx);
  const std::string type = req(rel, "type", ctx + ".release").get<std::string>();
  if (type == "periodic") {
    t.release = Periodic{dur(req(rel, "period", ctx), ctx + ".period")};
  } else if (type == "sporadic") {
    Sporadic s;
    s.min_separation = dur(req(rel, "min_separation", ctx), ctx + ".min_separation");
    s.smc_rate = rel.contains("smc_rate") ? rel.at("smc_rate").get<double>()
                                          : (s.min_separation > 0 ? 1.0 / static_cast<double>(s.min_separation) : 0.0);
    t.release = s;
  } else {
    fail(ctx + ": unknown release type '" + type + "'");
  }
  t.offset = j.contains("offset") ? dur(j.at("offset"), ctx + ".offset") : 0;
  t.jitter = j.contains("jitter") ? dur(j.at("jitter"), ctx + ".jitter") : 0;
  t.deadline = j.contains("deadline") ? dur(j.at("deadline"), ctx + ".deadline") : t.separation();
  t.priority = req(j, "priority", ctx).get<int>();
  if (j.contains("instructions")) {
    for (const auto& e : j.at("instructions")) t.chunks.push_back(parse_instruction(e, ctx));
  } else if (j.contains("chunks")) {
    if (!j.at("chunks").empty()) t.chunks = expand_rows(j.at("chunks"), ctx);
  } else {
    fail(ctx + ": needs 'chunks' or 'instructions'");
  }
  return t;
}

MessageSpec parse_message(const json& j) {
  MessageSpec m;
  m.id = req(j, "id", "message").get<std::string>();
  const std::string ctx = "message " + m.id;
  m.length = req(j, "length", ctx).get<int>();
  m.vl = req(j, "vl", ctx).get<std::string>();
  m.source = req(j, "source", ctx).get<std::string>();
  m.destinations = string_list(req(j, "destinations", ctx));
  const json& port = req(j, "port", ctx);
  const std::string mode = req(port, "mode", ctx + ".port").get<std::string>();
  if (mode == "sampling") m.port_mode = SamplingPort{dur(req(port, "refresh_period", ctx), ctx + ".refresh_period")};
  else if (mode == "queuing") m.port_mode = QueuingPort{req(port, "capacity", ctx).get<int>()};
  else fail(ctx + ": unknown port mode '" + mode + "'");
  if (j.contains("frag")) {
    m.frag = j.at("frag").get<int>();
    m.frag_override = true;
  }
  if (j.contains("reass")) m.reass = j.at("reass").get<int>();
  return m;
}

void resolve(SystemConfig& cfg, const std::set<std::string>& explicit_ceiling, const std::set<std::string>& explicit_reass) {
  std::set<std::string> modules(cfg.modules.begin(), cfg.modules.end());
  auto need_partition = [&](const std::string& p, const std::string& ctx) {
    if (!cfg.partitions.count(p)) fail(ctx + ": unknown partition '" + p + "'");
  };
  for (const auto& [p, m] : cfg.partitions)
    if (!modules.count(m)) fail("partition " + p + ": unknown module '" + m + "'");
  for (const auto& s : cfg.schedules) {
    if (!modules.count(s.module)) fail("schedule: unknown module '" + s.module + "'");
    for (const auto& w : s.windows) need_partition(w.partition, "schedule " + s.module);
  }
  for (const auto& t : cfg.tasks) {
    need_partition(t.partition, "task " + t.id);
    for (const auto& ins : t.chunks) {
      std::visit(
          [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, instr::Lock> || std::is_same_v<T, instr::Unlock>) {
              if (!cfg.find_mutex(op.mutex)) fail("task " + t.id + ": unknown mutex '" + op.mutex + "'");
            } else if constexpr (std::is_same_v<T, instr::Send> || std::is_same_v<T, instr::Receive>) {
              if (!cfg.find_message(op.message)) fail("task " + t.id + ": unknown message '" + op.message + "'");
            }
          },
          ins);
    }
  }
  for (const auto& m : cfg.mutexes) need_partition(m.partition, "mutex " + m.id);
  for (auto& m : cfg.messages) {
    need_partition(m.source, "message " + m.id);
    for (const auto& d : m.destinations) need_partition(d, "message " + m.id);
    const auto* vl = cfg.find_vl(m.vl);
    if (!vl) fail("message " + m.id + ": unknown virtual link '" + m.vl + "'");
    if (!m.frag_override) {
      m.frag = m.is_sampling() ? 1 : default_frag(m.length, vl->lmax, cfg.net.frame_overhead);
    }
    if (!explicit_reass.count(m.id)) m.reass = m.frag;
  }
  for (const auto& v : cfg.vls) {
    if (!modules.count(v.source_es)) fail("virtual link " + v.id + ": unknown source ES '" + v.source_es + "'");
    for (const auto& [dst, r] : v.routes)
      if (!modules.count(dst)) fail("virtual link " + v.id + ": unknown route destination '" + dst + "'");
  }
  for (auto& mx : cfg.mutexes)
    if (!explicit_ceiling.count(mx.id)) mx.ceiling = ceiling_of(cfg, mx.id);
}

}  // namespace

SystemConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(std::string("syntax error at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail("configuration must be a JSON object");

  SystemConfig cfg;
  std::set<std::string> explicit_ceiling, explicit_reass;
  try {
    for (const auto& m : req(doc, "modules", "config")) cfg.modules.push_back(m.get<std::string>());
    for (const auto& [p, m] : req(doc, "partitions", "config").items()) cfg.partitions[p] = m.get<std::string>();

    for (const auto& s : req(doc, "schedules", "config")) {
      PartitionSchedule ps;
      ps.module = req(s, "module", "schedule").get<std::string>();
      ps.major_frame = dur(req(s, "major_frame", "schedule " + ps.module), "schedule " + ps.module);
      for (const auto& w : req(s, "windows", "schedule " + ps.module)) {
        ps.windows.push_back({req(w, "partition", "window").get<std::string>(), dur(req(w, "offset", "window"), "window.offset"),
                              dur(req(w, "duration", "window"), "window.duration")});
      }
      std::stable_sort(ps.windows.begin(), ps.windows.end(),
                       [](const auto& a, const auto& b) { return a.offset < b.offset; });
      cfg.schedules.push_back(std::move(ps));
    }

    for (const auto& t : req(doc, "tasks", "config")) cfg.tasks.push_back(parse_task(t));

    if (doc.contains("mutexes")) {
      for (const auto& m : doc.at("mutexes")) {
        MutexSpec mx{req(m, "id", "mutex").get<std::string>(), req(m, "partition", "mutex").get<std::string>(), 0};
        if (m.contains("ceiling")) {
          mx.ceiling = m.at("ceiling").get<int>();
          explicit_ceiling.insert(mx.id);
        }
        cfg.mutexes.push_back(std::move(mx));
      }
    }

    const json& net = req(doc, "network", "config");
    cfg.net.tech = interval(req(net, "tech", "network"), "network.tech");
    cfg.net.sw = interval(req(net, "switch", "network"), "network.switch");
    cfg.net.rx = interval(req(net, "rx", "network"), "network.rx");
    cfg.net.ip_fwd = interval(req(net, "ip_fwd", "network"), "network.ip_fwd");
    cfg.net.ip_reass = interval(req(net, "ip_reass", "network"), "network.ip_reass");
    for (const auto& v : req(net, "tx_jitter", "network")) cfg.net.tx_jitter.push_back(dur(v, "network.tx_jitter"));
    cfg.net.max_packets = req(net, "max_packets", "network").get<int>();
    cfg.net.max_msg = req(net, "max_msg", "network").get<int>();
    cfg.net.frame_overhead = net.value("frame_overhead", 47);

    if (doc.contains("messages")) {
      for (const auto& m : doc.at("messages")) {
        cfg.messages.push_back(parse_message(m));
        if (m.contains("reass")) explicit_reass.insert(cfg.messages.back().id);
      }
    }
    if (doc.contains("virtual_links")) {
      for (const auto& v : doc.at("virtual_links")) {
        VirtualLinkSpec vl;
        vl.id = req(v, "id", "virtual link").get<std::string>();
        const std::string ctx = "virtual link " + vl.id;
        vl.bag = dur(req(v, "bag", ctx), ctx + ".bag");
        vl.lmax = req(v, "lmax", ctx).get<int>();
        vl.tx_delay = v.contains("tx_delay") ? dur(v.at("tx_delay"), ctx + ".tx_delay") : 0;
        vl.source_es = req(v, "source_es", ctx).get<std::string>();
        for (const auto& [dst, r] : req(v, "routes", ctx).items())
          vl.routes[dst] = Route{req(r, "links", ctx).get<int>(), r.value("switches", 0)};
        cfg.vls.push_back(std::move(vl));
      }
    }
    if (doc.contains("smc")) {
      const json& s = doc.at("smc");
      if (s.contains("horizon")) cfg.smc.horizon = dur(s.at("horizon"), "smc.horizon");
      if (s.contains("theta")) cfg.smc.theta = s.at("theta").get<double>();
    }
    cfg.pcp_elevation = doc.value("pcp_elevation", true);
  } catch (const json::exception& e) {
    fail(std::string("schema error: ") + e.what());
  }

  resolve(cfg, explicit_ceiling, explicit_reass);
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json to_json(const Instruction& ins) {
  return std::visit(
      [](const auto& op) -> json {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, instr::Compute>) return {{"op", "compute"}, {"bcet", op.bcet}, {"wcet", op.wcet}};
        else if constexpr (std::is_same_v<T, instr::Lock>) return {{"op", "lock"}, {"mutex", op.mutex}};
        else if constexpr (std::is_same_v<T, instr::Unlock>) return {{"op", "unlock"}, {"mutex", op.mutex}};
        else if constexpr (std::is_same_v<T, instr::Delay>) return {{"op", "delay"}, {"amount", op.amount}};
        else if constexpr (std::is_same_v<T, instr::Send>) return {{"op", "send"}, {"message", op.message}};
        else if constexpr (std::is_same_v<T, instr::Receive>) return {{"op", "receive"}, {"message", op.message}};
        else return {{"op", "end"}};
      },
      ins);
}

}  // namespace

std::string serialize_config(const SystemConfig& cfg) {
  json doc;
  doc["modules"] = cfg.modules;
  doc["partitions"] = cfg.partitions;
  doc["schedules"] = json::array();
  for (const auto& s : cfg.schedules) {
    json js{{"module", s.module}, {"major_frame", s.major_frame}, {"windows", json::array()}};
    for (const auto& w : s.windows)
      js["windows"].push_back({{"partition", w.partition}, {"offset", w.offset}, {"duration", w.duration}});
    doc["schedules"].push_back(js);
  }
  doc["tasks"] = json::array();
  for (const auto& t : cfg.tasks) {
    json jt{{"id", t.id}, {"partition", t.partition}, {"offset", t.offset}, {"jitter", t.jitter},
            {"deadline", t.deadline}, {"priority", t.priority}};
    if (const auto* p = std::get_if<Periodic>(&t.release)) {
      jt["release"] = {{"type", "periodic"}, {"period", p->period}};
    } else {
      const auto& s = std::get<Sporadic>(t.release);
      jt["release"] = {{"type", "sporadic"}, {"min_separation", s.min_separation}, {"smc_rate", s.smc_rate}};
    }
    jt["instructions"] = json::array();
    for (const auto& ins : t.chunks) jt["instructions"].push_back(to_json(ins));
    doc["tasks"].push_back(jt);
  }
  doc["mutexes"] = json::array();
  for (const auto& m : cfg.mutexes)
    doc["mutexes"].push_back({{"id", m.id}, {"partition", m.partition}, {"ceiling", m.ceiling}});
  doc["messages"] = json::array();
  for (const auto& m : cfg.messages) {
    json jm{{"id", m.id}, {"length", m.length}, {"vl", m.vl}, {"source", m.source},
            {"destinations", m.destinations}, {"reass", m.reass}};
    if (m.frag_override) jm["frag"] = m.frag;
    if (const auto* s = std::get_if<SamplingPort>(&m.port_mode))
      jm["port"] = {{"mode", "sampling"}, {"refresh_period", s->refresh_period}};
    else
      jm["port"] = {{"mode", "queuing"}, {"capacity", std::get<QueuingPort>(m.port_mode).capacity}};
    doc["messages"].push_back(jm);
  }
  doc["virtual_links"] = json::array();
  for (const auto& v : cfg.vls) {
    json jv{{"id", v.id}, {"bag", v.bag}, {"lmax", v.lmax}, {"tx_delay", v.tx_delay}, {"source_es", v.source_es}};
    jv["routes"] = json::object();
    for (const auto& [dst, r] : v.routes) jv["routes"][dst] = {{"links", r.links}, {"switches", r.switches}};
    doc["virtual_links"].push_back(jv);
  }
  auto iv = [](const Interval& i) { return json::array({i.min, i.max}); };
  doc["network"] = {{"tech", iv(cfg.net.tech)},         {"switch", iv(cfg.net.sw)},
                    {"rx", iv(cfg.net.rx)},             {"ip_fwd", iv(cfg.net.ip_fwd)},
                    {"ip_reass", iv(cfg.net.ip_reass)}, {"tx_jitter", cfg.net.tx_jitter},
                    {"max_packets", cfg.net.max_packets}, {"max_msg", cfg.net.max_msg},
                    {"frame_overhead", cfg.net.frame_overhead}};
  doc["smc"] = {{"horizon", cfg.smc.horizon}, {"theta", cfg.smc.theta}};
  doc["pcp_elevation"] = cfg.pcp_elevation;
  return doc.dump(2);
}

std::uint64_t config_hash(const SystemConfig& cfg) {
  // FNV-1a over the canonical serialization.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const SystemConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct DiagSink {
  std::vector<Diagnostic> out;
  void error(std::string code, std::string msg) { out.push_back({Severity::Error, std::move(code), std::move(msg)}); }
  void warn(std::string code, std::string msg) { out.push_back({Severity::Warning, std::move(code), std::move(msg)}); }
};

void check_schedules(const SystemConfig& cfg, DiagSink& d) {
  std::set<Micros> frames;
  for (const auto& s : cfg.schedules) {
    frames.insert(s.major_frame);
    if (s.major_frame <= 0) d.error("major-frame", "schedule " + s.module + ": major frame must be positive");
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      const auto& w = s.windows[i];
      if (w.duration <= 0) d.error("window-duration", "window of " + w.partition + " has non-positive duration");
      if (w.offset < 0 || w.offset + w.duration > s.major_frame)
        d.error("window-frame", "window of " + w.partition + " exceeds the major frame of " + s.module);
      if (cfg.module_of(w.partition) != s.module)
        d.error("window-module", "window of " + w.partition + " is not hosted on module " + s.module);
      if (i > 0) {
        const auto& prev = s.windows[i - 1];
        if (w.offset < prev.offset + prev.duration)
          d.error("window-overlap", "windows of " + prev.partition + " and " + w.partition + " overlap on " + s.module);
      }
    }
  }
  if (frames.size() > 1)
    d.warn("major-frame-mismatch", "modules use different major frames; compositional analysis assumes a common one");
  for (const auto& [p, m] : cfg.partitions) {
    const auto* s = cfg.schedule_of_module(m);
    const bool has_window = s && std::any_of(s->windows.begin(), s->windows.end(),
                                             [&](const auto& w) { return w.partition == p; });
    if (!has_window) d.error("no-window", "partition " + p + " has no window in its module's schedule");
  }
}

void check_task(const SystemConfig& cfg, const TaskSpec& t, DiagSink& d) {
  const std::string ctx = "task " + t.id;
  if (t.separation() <= 0) d.error("release", ctx + ": period/min separation must be positive");
  if (t.deadline <= 0 || t.deadline > t.separation())
    d.error("deadline", ctx + ": deadline must be in (0, period or min separation]");
  if (t.offset < 0 || t.jitter < 0) d.error("release", ctx + ": negative offset or jitter");
  if (t.chunks.empty()) {
    d.error("chunks", ctx + ": instruction list is empty");
    return;
  }
  if (!std::holds_alternative<instr::End>(t.chunks.back())) d.error("chunks", ctx + ": last instruction must be End");
  std::vector<std::string> held;
  for (std::size_t i = 0; i < t.chunks.size(); ++i) {
    const auto& ins = t.chunks[i];
    if (std::holds_alternative<instr::End>(ins) && i + 1 != t.chunks.size())
      d.error("chunks", ctx + ": End before the last instruction");
    if (const auto* c = std::get_if<instr::Compute>(&ins); c && (c->bcet < 0 || c->bcet > c->wcet))
      d.error("bcet-wcet", ctx + ": bcet must be in [0, wcet]");
    if (const auto* dl = std::get_if<instr::Delay>(&ins); dl && dl->amount < 0)
      d.error("delay", ctx + ": negative delay");
    if (const auto* l = std::get_if<instr::Lock>(&ins)) {
      const auto* mx = cfg.find_mutex(l->mutex);
      if (mx && mx->partition != t.partition) d.error("mutex-partition", ctx + ": mutex " + l->mutex + " belongs to another partition");
      if (std::find(held.begin(), held.end(), l->mutex) != held.end()) d.error("lock-nesting", ctx + ": re-locks " + l->mutex);
      held.push_back(l->mutex);
    }
    if (const auto* u = std::get_if<instr::Unlock>(&ins)) {
      if (held.empty() || held.back() != u->mutex) d.error("lock-nesting", ctx + ": unlock of " + u->mutex + " is not properly nested");
      else held.pop_back();
    }
    if (const auto* s = std::get_if<instr::Send>(&ins)) {
      const auto* m = cfg.find_message(s->message);
      if (m && m->source != t.partition) d.error("send-source", ctx + ": sends " + s->message + " but is not in its source partition");
    }
    if (const auto* r = std::get_if<instr::Receive>(&ins)) {
      const auto* m = cfg.find_message(r->message);
      if (m && std::find(m->destinations.begin(), m->destinations.end(), t.partition) == m->destinations.end())
        d.error("receive-destination", ctx + ": receives " + r->message + " but is not a destination");
    }
  }
  if (!held.empty()) d.error("lock-nesting", ctx + ": job ends while holding " + held.back());
}

bool task_uses(const SystemConfig& cfg, const std::string& pid, const std::string& msg, bool send) {
  for (const auto& t : cfg.tasks) {
    if (t.partition != pid) continue;
    for (const auto& ins : t.chunks) {
      if (send) {
        if (const auto* s = std::get_if<instr::Send>(&ins); s && s->message == msg) return true;
      } else if (const auto* r = std::get_if<instr::Receive>(&ins); r && r->message == msg) {
        return true;
      }
    }
  }
  return false;
}

void check_messages(const SystemConfig& cfg, DiagSink& d) {
  for (const auto& m : cfg.messages) {
    const std::string ctx = "message " + m.id;
    const auto* vl = cfg.find_vl(m.vl);
    if (m.destinations.empty()) d.error("destinations", ctx + ": no destinations");
    if (m.frag < 1) d.error("frag", ctx + ": frag must be >= 1");
    if (m.reass != m.frag) d.error("reass", ctx + ": reass must equal frag");
    if (const auto* q = std::get_if<QueuingPort>(&m.port_mode); q && q->capacity < 0)
      d.error("capacity", ctx + ": negative queuing capacity");
    if (const auto* s = std::get_if<SamplingPort>(&m.port_mode); s && s->refresh_period <= 0)
      d.error("refresh", ctx + ": refresh period must be positive");
    if (vl && m.is_sampling() && m.length > vl->lmax) {
      if (m.frag_override)
        d.warn("sampling-fragmented", ctx + ": sampling message exceeds Lmax; fragmented by override (frag=" + std::to_string(m.frag) + ")");
      else
        d.error("sampling-exceeds-lmax", ctx + ": sampling message exceeds Lmax");
    }
    if (!task_uses(cfg, m.source, m.id, true)) d.error("no-sender", ctx + ": no task in " + m.source + " sends it");
    for (const auto& dst : m.destinations) {
      if (!task_uses(cfg, dst, m.id, false)) d.error("no-receiver", ctx + ": no task in " + dst + " receives it");
      if (vl) {
        const std::string mod = cfg.module_of(dst);
        if (!vl->routes.count(mod)) d.error("unroutable", ctx + ": " + m.vl + " has no route to module " + mod);
      }
    }
    if (vl && vl->source_es != cfg.module_of(m.source))
      d.error("vl-source", ctx + ": " + m.vl + " does not start at the source partition's module");
  }
}

void check_network(const SystemConfig& cfg, DiagSink& d) {
  const auto& n = cfg.net;
  auto iv = [&](const Interval& i, const char* name) {
    if (i.min < 0 || i.min > i.max) d.error("interval", std::string("network.") + name + ": need 0 <= min <= max");
  };
  iv(n.tech, "tech");
  iv(n.sw, "switch");
  iv(n.rx, "rx");
  iv(n.ip_fwd, "ip_fwd");
  iv(n.ip_reass, "ip_reass");
  if (n.tx_jitter.empty()) d.error("tx-jitter", "network.tx_jitter must be non-empty");
  if (!std::is_sorted(n.tx_jitter.begin(), n.tx_jitter.end())) d.error("tx-jitter", "network.tx_jitter must be non-decreasing");
  if (n.max_packets < 1) d.error("max-packets", "network.max_packets must be >= 1");
  if (n.max_msg < 1) d.error("max-msg", "network.max_msg must be >= 1");
  for (const auto& v : cfg.vls) {
    if (v.bag <= 0) d.error("bag", "virtual link " + v.id + ": BAG must be positive");
    if (v.tx_delay < 0) d.error("tx-delay", "virtual link " + v.id + ": negative tx_delay");
    for (const auto& [dst, r] : v.routes)
      if (r.links < 1 || r.switches < 0) d.error("route", "virtual link " + v.id + ": route to " + dst + " needs links >= 1, switches >= 0");
  }
  for (const auto& m : cfg.messages)
    if (m.frag > n.max_msg) d.error("frag", "message " + m.id + ": frag exceeds FIFO capacity max_msg");
}

}  // namespace

std::vector<Diagnostic> validate(const SystemConfig& cfg) {
  DiagSink d;
  if (cfg.tasks.empty()) d.error("no-tasks", "no tasks");
  check_schedules(cfg, d);
  std::set<std::string> ids;
  for (const auto& t : cfg.tasks) {
    if (!ids.insert(t.id).second) d.error("duplicate", "duplicate task id " + t.id);
    check_task(cfg, t, d);
  }
  for (const auto& mx : cfg.mutexes) {
    const int c = ceiling_of(cfg, mx.id);
    if (c == kLowestPriority) d.warn("mutex-unused", "mutex " + mx.id + " is never locked");
    else if (mx.ceiling != c)
      d.error("ceiling-mismatch", "mutex " + mx.id + ": configured ceiling " + std::to_string(mx.ceiling) +
                                      " differs from derived " + std::to_string(c));
  }
  check_messages(cfg, d);
  check_network(cfg, d);
  if (cfg.smc.horizon <= 0) d.error("horizon", "smc.horizon must be positive");
  if (!(cfg.smc.theta > 0.0 && cfg.smc.theta < 1.0)) d.error("theta", "smc.theta must be in (0, 1)");
  return d.out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const auto& d) { return d.severity == Severity::Error; });
}

}  // namespace dima
