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

#include "dima/afdx.hpp"

#include <algorithm>

namespace dima {

MsgBuffer make_port(const PortMode& mode) {
  MsgBuffer p;
  if (const auto* q = std::get_if<QueuingPort>(&mode)) {
    p.capacity = q->capacity;
  } else {
    p.sampling = true;
    p.capacity = 1;
  }
  return p;
}

PortOutcome port_send(MsgBuffer& port) {
  if (port.sampling) {
    port.buf = 1;
    return PortOutcome::Ok;
  }
  if (port.buf >= port.capacity) return PortOutcome::Overflow;
  ++port.buf;
  return PortOutcome::Ok;
}

bool port_receive(MsgBuffer& port) {
  if (port.buf == 0) return false;
  if (!port.sampling) --port.buf;
  return true;
}

std::optional<Micros> refresh_check(const MsgBuffer& port, Micros now, Micros refresh_period) {
  if (!port.sampling || port.last_reset == kNotWritten) return std::nullopt;
  if (port.last_reset == kStale) return refresh_period + 1;
  const Micros age = now - port.last_reset;
  if (age > refresh_period) return age;
  return std::nullopt;
}

bool ip_tx_begin(IpTxState& st, const MsgBuffer& src, Micros now, Micros t_f) {
  if (st.forwarding || st.vl_error || src.buf == 0) return false;
  st.forwarding = true;
  st.until = now + t_f;
  return true;
}

IpTxOutcome ip_tx_complete(IpTxState& st, MsgBuffer& src, std::deque<int>& fifo, int msg, int frag, int max_msg) {
  st.forwarding = false;
  st.until = kNever;
  if (static_cast<int>(fifo.size()) > max_msg - frag) {
    st.vl_error = true;
    return IpTxOutcome::VlError;
  }
  src.buf = std::max(0, src.buf - 1);
  for (int i = 0; i < frag; ++i) fifo.push_back(msg);
  return IpTxOutcome::Forwarded;
}

Micros vl_departure(Micros start, Micros emission_latency, Micros last_departure, Micros bag) {
  const Micros earliest = start + emission_latency;
  if (last_departure == kNever) return earliest;
  return std::max(earliest, last_departure + bag);
}

bool vl_tx_begin(VlTxState& st, Micros now, Micros emission_latency, Micros bag) {
  if (st.loc == VlTxLocation::Sending || st.loc == VlTxLocation::WaitBag) return false;
  st.loc = VlTxLocation::Sending;
  st.start = now;
  st.depart = vl_departure(now, emission_latency, st.last_departure, bag);
  st.wait_until = kNever;
  return true;
}

void vl_tx_depart(VlTxState& st, Micros now, bool fifo_nonempty, Micros bag) {
  st.last_departure = now;
  st.depart = kNever;
  if (fifo_nonempty) {
    st.loc = VlTxLocation::WaitBag;
    st.wait_until = std::max(now, st.start + bag);
  } else {
    st.loc = VlTxLocation::Idle;
    st.wait_until = kNever;
  }
}

void vl_tx_idle(VlTxState& st) {
  st.loc = VlTxLocation::Idle;
  st.wait_until = kNever;
}

Interval vl_rx_bounds(const VirtualLinkSpec& vl, const std::string& dest, const NetworkParams& net) {
  auto it = vl.routes.find(dest);
  if (it == vl.routes.end()) throw ConfigError("virtual link " + vl.id + " has no route to " + dest);
  const Route& r = it->second;
  const Micros wire = vl.tx_delay * r.links;
  return {wire + net.sw.min * r.switches + net.rx.min, wire + net.sw.max * r.switches + net.rx.max};
}

VlRxOutcome vl_rx_accept(VlRxState& st, Micros now, Micros latency, int msg, int max_packets) {
  if (static_cast<int>(st.in_flight.size()) >= max_packets) return VlRxOutcome::LinkError;
  Micros delivery = now + latency;
  if (!st.in_flight.empty()) delivery = std::max(delivery, st.in_flight.back().delivery);
  st.in_flight.push_back({delivery, msg});
  return VlRxOutcome::Accepted;
}

bool ip_rx_begin(IpRxState& st, Micros now, Micros delay) {
  if (st.busy || st.invalid || st.fifo == 0) return false;
  st.busy = true;
  st.until = now + delay;
  return true;
}

IpRxOutcome ip_rx_complete(IpRxState& st, MsgBuffer& dst, int reass, Micros now) {
  st.busy = false;
  st.until = kNever;
  st.fifo = std::max(0, st.fifo - 1);
  if (++st.cnt < reass) return IpRxOutcome::Partial;
  st.cnt = 0;
  if (dst.sampling) {
    dst.buf = 1;
    dst.last_reset = now;
    return IpRxOutcome::Delivered;
  }
  if (dst.buf >= dst.capacity) return IpRxOutcome::Overflow;
  ++dst.buf;
  return IpRxOutcome::Delivered;
}

}  // namespace dima
