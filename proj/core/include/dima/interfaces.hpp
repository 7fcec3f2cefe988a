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

// Message-interface environments and per-partition compositional slices.

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dima/config.hpp"

namespace dima {

struct PeriodicMsgPattern {
  Micros period = 0;
  Micros initial_offset = 0;
  Interval offset;  // send phase within the period
  Micros jitter = 0;
  friend bool operator==(const PeriodicMsgPattern&, const PeriodicMsgPattern&) = default;
};

struct SporadicMsgPattern {
  Micros min_separation = 0;
  double smc_rate = 0.0;
  Micros initial_offset = 0;
  Interval offset;
  friend bool operator==(const SporadicMsgPattern&, const SporadicMsgPattern&) = default;
};

using MsgPattern = std::variant<PeriodicMsgPattern, SporadicMsgPattern>;

struct MsgInterfaceSpec {
  std::string message;
  MsgPattern pattern;
  std::string derived_from;  // sending task
  bool envelope_derived = false;
  friend bool operator==(const MsgInterfaceSpec&, const MsgInterfaceSpec&) = default;
};

/// Send offset of a message relative to its sender's nominal release, jitter
/// included. Keyed by message id.
using SendEnvelopes = std::map<std::string, Interval>;

/// Mirrors the sending task's release pattern. Without an envelope the send
/// phase is [0, wcet of instructions before the Send] plus the task jitter.
/// Throws ConfigError unless exactly one task sends the message.
MsgInterfaceSpec derive_interface(const SystemConfig& cfg, const std::string& message,
                                  const SendEnvelopes& envelopes = {});

/// Earliest/latest emission of the k-th message. `prev` is the previous
/// emission's nominal start for sporadic patterns.
Interval emission_window(const MsgInterfaceSpec& spec, int k, Micros prev);

/// Task that sends `message`, or nullptr.
const TaskSpec* sender_of(const SystemConfig& cfg, const std::string& message);

struct PartitionSlice {
  std::string partition;
  std::vector<std::string> tasks;
  std::vector<MsgInterfaceSpec> inbound;    // full chain to the partition's port
  std::vector<std::string> outbound;        // source port, IPTx and VLinkTx only
  std::vector<MsgInterfaceSpec> colocated;  // other traffic sharing a source ES
  friend bool operator==(const PartitionSlice&, const PartitionSlice&) = default;
};

PartitionSlice build_slice(const SystemConfig& cfg, const std::string& pid, const SendEnvelopes& envelopes = {});

/// Every message in the slice has one sender and every inbound chain ends at
/// a receiving task of the partition.
bool slice_closed(const SystemConfig& cfg, const PartitionSlice& slice);

}  // namespace dima
