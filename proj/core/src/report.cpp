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

#include "dima/report.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

namespace dima {

using nlohmann::json;

namespace {

std::string lane_of(const std::string& subject) {
  auto starts = [&](const char* p) { return subject.rfind(p, 0) == 0; };
  if (starts("snd:")) return "snd";
  if (starts("iptx:")) return "iptx";
  if (starts("vltx:")) return "vltx";
  if (starts("vlrx:")) return "vlrx";
  if (starts("iprx:")) return "iprx";
  if (subject.find('@') != std::string::npos) return "port";
  if (subject.size() > 6 && subject.compare(subject.size() - 6, 6, ".sched") == 0) return "scheduler";
  return "";
}

/// Tracks one open interval per subject.
class Builder {
 public:
  void open(const std::string& subject, const std::string& lane, const std::string& state, Micros t) {
    close(subject, t);
    touch(subject);
    open_[subject] = {subject, lane, state, t, t};
  }
  void close(const std::string& subject, Micros t) {
    auto it = open_.find(subject);
    if (it == open_.end()) return;
    it->second.end = t;
    if (it->second.end > it->second.start) segs_.push_back(it->second);
    open_.erase(it);
  }
  void event(const std::string& subject, const std::string& lane, const std::string& state, Micros t) {
    touch(subject);
    segs_.push_back({subject, lane, state, t, t});
  }
  void span(const std::string& subject, const std::string& lane, const std::string& state, Micros a, Micros b) {
    touch(subject);
    segs_.push_back({subject, lane, state, a, b});
  }
  void finish(Micros t) {
    while (!open_.empty()) close(open_.begin()->first, t);
  }
  void touch(const std::string& subject) {
    if (std::find(order_.begin(), order_.end(), subject) == order_.end()) order_.push_back(subject);
  }

  std::vector<Segment> segs_;
  std::vector<std::string> order_;

 private:
  std::map<std::string, Segment> open_;
};

}  // namespace

GanttDoc build_gantt(const Trace& trace, std::optional<Interval> window) {
  Builder b;
  const Micros end = trace.complete ? trace.verdict.time : (trace.records.empty() ? 0 : trace.records.back().t);
  std::map<std::string, bool> partition_seen;
  for (const auto& r : trace.records) {
    const std::string lane = lane_of(r.subject);
    const std::string& tr = r.transition;
    if (tr == "violation" || tr == "fault" || tr == "vl-error" || tr == "link-error") continue;
    if (lane.empty()) {
      if (tr == "enter" || tr == "exit") {
        if (!partition_seen[r.subject] && tr == "exit") b.open(r.subject, "partition", "Inside", 0);
        if (!partition_seen[r.subject] && tr == "enter" && r.t > 0) b.open(r.subject, "partition", "Outside", 0);
        partition_seen[r.subject] = true;
        b.open(r.subject, "partition", tr == "enter" ? "Inside" : "Outside", r.t);
      } else if (tr == "run") {
        b.open(r.subject, "task", "Running", r.t);
      } else if (tr == "release" || tr == "start-pending" || tr == "preempt" || tr == "suspend" || tr == "wake" ||
                 tr == "delay-done") {
        b.open(r.subject, "task", "Ready", r.t);
      } else if (tr == "end" || tr == "block" || tr == "delay") {
        b.close(r.subject, r.t);
      } else if (tr == "send") {
        b.event("snd:" + r.detail, "snd", "Send", r.t);
      }
      continue;
    }
    if (lane == "scheduler") {
      b.event(r.subject, lane, "Dispatch:" + r.detail, r.t);
    } else if (lane == "snd") {
      b.event(r.subject, lane, "Emit", r.t);
    } else if (lane == "iptx") {
      if (tr == "forward-begin") b.open(r.subject, lane, "Forwarding", r.t);
      if (tr == "forward-done") b.close(r.subject, r.t);
    } else if (lane == "vltx") {
      if (tr == "sending") b.open(r.subject, lane, "Sending", r.t);
      if (tr == "wait-bag") b.open(r.subject, lane, "WaitBag", r.t);
      if (tr == "idle" || tr == "bag-done") b.close(r.subject, r.t);
      if (tr == "depart") b.event(r.subject, lane, "Depart", r.t);
    } else if (lane == "vlrx") {
      if (tr == "arrive") b.span(r.subject, lane, "Transit", r.t, std::stoll(r.detail));
    } else if (lane == "iprx") {
      if (tr == "reass-begin") b.open(r.subject, lane, "Reassembly", r.t);
      if (tr == "reass-done") b.close(r.subject, r.t);
    } else if (lane == "port") {
      b.event(r.subject, lane, tr == "write" ? "Write" : tr == "read" ? "Read" : "Forward", r.t);
    }
  }
  b.finish(std::max(end, trace.records.empty() ? Micros{0} : trace.records.back().t));

  GanttDoc doc;
  doc.t0 = window ? window->min : 0;
  doc.t1 = window ? window->max : end;
  doc.lanes = b.order_;
  for (auto s : b.segs_) {
    if (s.end < doc.t0 || s.start > doc.t1) continue;
    s.start = std::max(s.start, doc.t0);
    s.end = std::min(s.end, doc.t1);
    doc.segments.push_back(std::move(s));
  }
  std::stable_sort(doc.segments.begin(), doc.segments.end(),
                   [](const Segment& a, const Segment& c) { return a.start < c.start; });
  if (trace.complete && !trace.verdict.ok() && trace.verdict.time >= doc.t0 && trace.verdict.time <= doc.t1) {
    const std::string label = trace.verdict.violation() ? to_string(trace.verdict.kind) : to_string(trace.verdict.fault);
    doc.markers.push_back({trace.verdict.time, trace.verdict.subject, label});
    if (std::find(doc.lanes.begin(), doc.lanes.end(), trace.verdict.subject) == doc.lanes.end())
      doc.lanes.push_back(trace.verdict.subject);
  }
  return doc;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* colour(const Segment& s) {
  if (s.state == "Ready") return "#43a047";
  if (s.state == "Running") return "#1e88e5";
  if (s.state == "Inside") return "#43a047";
  if (s.state == "Outside") return "#e53935";
  if (s.state == "WaitBag") return "#bdbdbd";
  if (s.state == "Transit") return "#8e24aa";
  return "#fb8c00";
}

}  // namespace

std::string to_svg(const GanttDoc& doc) {
  constexpr double label_w = 140.0;
  constexpr double plot_w = 1200.0;
  constexpr double row_h = 18.0;
  const double span = static_cast<double>(std::max<Micros>(doc.t1 - doc.t0, 1));
  auto x = [&](Micros t) { return label_w + plot_w * static_cast<double>(t - doc.t0) / span; };
  std::map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < doc.lanes.size(); ++i) row[doc.lanes[i]] = i;
  const double height = row_h * static_cast<double>(doc.lanes.size() + 2);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + plot_w + 20 << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < doc.lanes.size(); ++i) {
    const double y = row_h * static_cast<double>(i + 1);
    os << "  <text x=\"4\" y=\"" << y + 12 << "\">" << xml_escape(doc.lanes[i]) << "</text>\n";
    os << "  <line x1=\"" << label_w << "\" y1=\"" << y + row_h << "\" x2=\"" << label_w + plot_w << "\" y2=\""
       << y + row_h << "\" stroke=\"#eeeeee\"/>\n";
  }
  for (const auto& s : doc.segments) {
    const double y = row_h * static_cast<double>(row[s.subject] + 1);
    const double x0 = x(s.start);
    const double w = std::max(1.0, x(s.end) - x0);
    const bool line = s.lane == "partition";
    os << "  <rect x=\"" << x0 << "\" y=\"" << (line ? y + 7 : y + 3) << "\" width=\"" << w << "\" height=\""
       << (line ? 4 : 12) << "\" fill=\"" << colour(s) << "\"><title>" << xml_escape(s.subject + " " + s.state + " " +
                                                                                      std::to_string(s.start) + "-" +
                                                                                      std::to_string(s.end))
       << "</title></rect>\n";
  }
  for (const auto& m : doc.markers) {
    const double mx = x(m.t);
    os << "  <line class=\"violation\" x1=\"" << mx << "\" y1=\"" << row_h << "\" x2=\"" << mx << "\" y2=\""
       << height - row_h << "\" stroke=\"#d50000\" stroke-width=\"2\"/>\n";
    os << "  <text x=\"" << mx + 3 << "\" y=\"" << height - 4 << "\" fill=\"#d50000\">"
       << xml_escape(m.label + " " + m.subject + " @" + std::to_string(m.t) + "us") << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string to_csv(const GanttDoc& doc) {
  std::ostringstream os;
  os << "subject,lane,state,start_us,end_us\n";
  for (const auto& s : doc.segments)
    os << s.subject << ',' << s.lane << ',' << s.state << ',' << s.start << ',' << s.end << '\n';
  return os.str();
}

std::vector<Segment> segments_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "subject,lane,state,start_us,end_us")
    throw TraceFormatError("missing CSV header");
  std::vector<Segment> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 5) throw TraceFormatError("bad CSV row: " + line);
    try {
      out.push_back({f[0], f[1], f[2], std::stoll(f[3]), std::stoll(f[4])});
    } catch (const std::exception&) {
      throw TraceFormatError("bad CSV row: " + line);
    }
  }
  return out;
}

Interval parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window must be t0:t1");
  const Interval w{parse_duration(text.substr(0, colon)), parse_duration(text.substr(colon + 1))};
  if (w.max < w.min) throw ConfigError("window end precedes its start");
  return w;
}

namespace {

json report_object(const AnalysisReport& rep, const std::string& witness_path) {
  json j;
  j["decision"] = to_string(rep.decision);
  j["scope"] = rep.scope;
  j["method"] = rep.method;
  j["semantics"] = rep.semantics;
  j["caveats"] = rep.caveats;
  j["config_hash"] = rep.config_hash;
  if (rep.decision == Decision::NonSchedulable) {
    json v;
    v["outcome"] = to_string(rep.violation.outcome);
    v["kind"] = rep.violation.violation() ? to_string(rep.violation.kind) : to_string(rep.violation.fault);
    v["time_us"] = rep.violation.time;
    v["subject"] = rep.violation.subject;
    v["detail"] = rep.violation.detail;
    j["violation"] = v;
    if (!witness_path.empty()) j["witness"] = witness_path;
  }
  json st;
  st["runs"] = rep.stats.runs;
  st["violations"] = rep.stats.violations;
  if (rep.stats.interval) st["interval95"] = {rep.stats.interval->low, rep.stats.interval->high};
  st["states"] = rep.stats.states;
  st["transitions"] = rep.stats.transitions;
  st["seconds"] = rep.stats.seconds;
  st["memory_bytes"] = rep.stats.memory_bytes;
  j["statistics"] = st;
  if (!rep.envelopes.empty()) {
    json env = json::object();
    for (const auto& [m, iv] : rep.envelopes) env[m] = {iv.min, iv.max};
    j["send_envelopes_us"] = env;
  }
  return j;
}

}  // namespace

std::string report_json(const AnalysisReport& rep, const std::string& witness_path,
                        const std::vector<AnalysisReport>& parts) {
  json j = report_object(rep, witness_path);
  if (!parts.empty()) {
    json arr = json::array();
    for (const auto& p : parts) arr.push_back(report_object(p, {}));
    j["partitions"] = arr;
  }
  return j.dump(2);
}

}  // namespace dima
