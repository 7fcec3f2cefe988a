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

// ARINC-653 ports and the AFDX transmission chain: UDP/IP forwarding with
// fragmentation, virtual-link emission under BAG regulation, network transit
// and reassembly at the receiving end system.

#include <deque>
#include <optional>

#include "dima/config.hpp"

namespace dima {

/// Sampling-port reset markers.
inline constexpr Micros kNotWritten = -1;
inline constexpr Micros kStale = -2;  // older than its refresh period

/// Counted message buffer: a port or an end-system FIFO.
struct MsgBuffer {
  int buf = 0;
  int capacity = 1;
  bool sampling = false;
  Micros last_reset = kNotWritten;  // sampling ports only
  friend bool operator==(const MsgBuffer&, const MsgBuffer&) = default;
};

MsgBuffer make_port(const PortMode& mode);

enum class PortOutcome { Ok, Overflow };

/// Task-side write. Sampling overwrites; queuing counts up to capacity.
PortOutcome port_send(MsgBuffer& port);

/// Task-side read. Consumes one queued message; sampling reads are
/// non-destructive. Returns false on an empty port.
bool port_receive(MsgBuffer& port);

/// Age of the sample when it exceeds the refresh period (closed bound).
/// A never-written port has no sample and never violates.
std::optional<Micros> refresh_check(const MsgBuffer& port, Micros now, Micros refresh_period);

struct IpTxState {
  bool forwarding = false;
  Micros until = kNever;
  bool vl_error = false;  // latched
  friend bool operator==(const IpTxState&, const IpTxState&) = default;
};

/// Starts forwarding the head message of src if idle. Returns true if started.
bool ip_tx_begin(IpTxState& st, const MsgBuffer& src, Micros now, Micros t_f);

enum class IpTxOutcome { Forwarded, VlError };

/// Completes one forwarding: moves a message from src into the VL FIFO as
/// frag frames, or latches VlError when the FIFO lacks room.
IpTxOutcome ip_tx_complete(IpTxState& st, MsgBuffer& src, std::deque<int>& fifo, int msg, int frag, int max_msg);

enum class VlTxLocation { Init, Sending, WaitBag, Idle };

struct VlTxState {
  VlTxLocation loc = VlTxLocation::Init;
  Micros start = 0;                  // clock t reset
  Micros depart = kNever;            // pending departure while Sending
  Micros wait_until = kNever;        // end of WaitBag
  Micros last_departure = kNever;    // kNever until the first frame leaves
  friend bool operator==(const VlTxState&, const VlTxState&) = default;
};

/// Frame departure for a sending phase starting at `start`.
Micros vl_departure(Micros start, Micros emission_latency, Micros last_departure, Micros bag);

/// Begins a sending phase when the VL is idle and its FIFO has frames.
bool vl_tx_begin(VlTxState& st, Micros now, Micros emission_latency, Micros bag);

/// Frame leaves the ES; the VL waits out the BAG if more frames remain.
void vl_tx_depart(VlTxState& st, Micros now, bool fifo_nonempty, Micros bag);

/// WaitBag expired with an empty FIFO.
void vl_tx_idle(VlTxState& st);

/// [tx_delay*links + sw_min*switches + rx_min, tx_delay*links + sw_max*switches + rx_max].
/// Throws ConfigError when the VL has no route to dest.
Interval vl_rx_bounds(const VirtualLinkSpec& vl, const std::string& dest, const NetworkParams& net);

struct InFlight {
  Micros delivery = 0;
  int msg = -1;
  friend bool operator==(const InFlight&, const InFlight&) = default;
};

struct VlRxState {
  std::deque<InFlight> in_flight;
  friend bool operator==(const VlRxState&, const VlRxState&) = default;
};

enum class VlRxOutcome { Accepted, LinkError };

/// Adds a frame that entered the network at `now` with transit `latency`.
/// Delivery stays in order: never earlier than a frame ahead of it.
VlRxOutcome vl_rx_accept(VlRxState& st, Micros now, Micros latency, int msg, int max_packets);

struct IpRxState {
  int fifo = 0;  // fragments waiting at the receiving ES
  bool busy = false;
  Micros until = kNever;
  int cnt = 0;
  bool invalid = false;  // latched after a refresh violation on the port
  friend bool operator==(const IpRxState&, const IpRxState&) = default;
};

/// Starts reassembling the next fragment if idle. Returns true if started.
bool ip_rx_begin(IpRxState& st, Micros now, Micros delay);

enum class IpRxOutcome { Partial, Delivered, Overflow };

/// Completes one fragment; forwards the message when reass fragments arrived.
IpRxOutcome ip_rx_complete(IpRxState& st, MsgBuffer& dst, int reass, Micros now);

}  // namespace dima
