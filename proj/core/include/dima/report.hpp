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

// Gantt extraction from traces, SVG/CSV rendering and JSON reports.

#include <optional>
#include <string>
#include <vector>

#include "dima/analysis.hpp"
#include "dima/trace.hpp"

namespace dima {

struct Segment {
  std::string subject;
  std::string lane;   // task, partition, scheduler, snd, iptx, vltx, vlrx, iprx, port
  std::string state;  // Ready, Running, Inside, Outside, ...
  Micros start = 0;
  Micros end = 0;  // equal to start for instantaneous events
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Marker {
  Micros t = 0;
  std::string subject;
  std::string label;
};

struct GanttDoc {
  Micros t0 = 0;
  Micros t1 = 0;
  std::vector<std::string> lanes;  // subjects in display order
  std::vector<Segment> segments;
  std::vector<Marker> markers;
};

/// Segments of a trace, clipped to [window.min, window.max] when given.
GanttDoc build_gantt(const Trace& trace, std::optional<Interval> window = std::nullopt);

std::string to_svg(const GanttDoc& doc);
std::string to_csv(const GanttDoc& doc);
/// Parses the output of to_csv. Throws TraceFormatError on malformed input.
std::vector<Segment> segments_from_csv(const std::string& csv);

/// Parses "t0:t1" with durations as accepted by the configuration.
Interval parse_window(const std::string& text);

std::string report_json(const AnalysisReport& rep, const std::string& witness_path = {},
                        const std::vector<AnalysisReport>& parts = {});

}  // namespace dima
