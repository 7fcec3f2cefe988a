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

#include <doctest.h>

#include "dima/afdx.hpp"
#include "support.hpp"

using namespace dima;
using dima::test::case1;

TEST_CASE("port writes") {
  MsgBuffer q = make_port(QueuingPort{1});
  CHECK(port_send(q) == PortOutcome::Ok);
  CHECK(q.buf == 1);
  CHECK(port_send(q) == PortOutcome::Overflow);

  MsgBuffer s = make_port(SamplingPort{50000});
  s.buf = 1;
  s.last_reset = 100;
  CHECK(port_send(s) == PortOutcome::Ok);
  CHECK(s.buf == 1);
  CHECK(s.last_reset == 100);
}

TEST_CASE("port reads") {
  MsgBuffer q = make_port(QueuingPort{2});
  CHECK_FALSE(port_receive(q));
  port_send(q);
  CHECK(port_receive(q));
  CHECK(q.buf == 0);
  MsgBuffer s = make_port(SamplingPort{50000});
  port_send(s);
  CHECK(port_receive(s));
  CHECK(port_receive(s));
}

TEST_CASE("IP forwarding moves fragments into the VL FIFO") {
  MsgBuffer src = make_port(QueuingPort{4});
  src.buf = 2;
  IpTxState st;
  std::deque<int> fifo;
  CHECK(ip_tx_begin(st, src, 0, 150));
  CHECK_FALSE(ip_tx_begin(st, src, 10, 150));
  CHECK(ip_tx_complete(st, src, fifo, 0, 1, 4) == IpTxOutcome::Forwarded);
  CHECK(ip_tx_begin(st, src, 150, 150));
  CHECK(ip_tx_complete(st, src, fifo, 0, 1, 4) == IpTxOutcome::Forwarded);
  CHECK(fifo.size() == 2);
  CHECK(src.buf == 0);

  MsgBuffer one = make_port(SamplingPort{50000});
  one.buf = 1;
  IpTxState st2;
  std::deque<int> f2;
  ip_tx_begin(st2, one, 0, 100);
  ip_tx_complete(st2, one, f2, 3, 2, 4);
  CHECK(f2 == std::deque<int>{3, 3});
}

TEST_CASE("forwarding into a full FIFO is a VL error") {
  MsgBuffer src = make_port(QueuingPort{1});
  src.buf = 1;
  IpTxState st;
  std::deque<int> fifo{0, 0, 0};
  ip_tx_begin(st, src, 0, 100);
  CHECK(ip_tx_complete(st, src, fifo, 0, 2, 4) == IpTxOutcome::VlError);
  CHECK(st.vl_error);
}

TEST_CASE("BAG spacing of departures") {
  CHECK(vl_departure(0, 100, kNever, 8000) == 100);
  CHECK(vl_departure(8100, 0, 100, 8000) == 8100);
  CHECK(vl_departure(8000, 50, 7000, 8000) == 15000);

  VlTxState st;
  CHECK(vl_tx_begin(st, 0, 0, 8000));
  CHECK(st.loc == VlTxLocation::Sending);
  vl_tx_depart(st, st.depart, true, 8000);
  CHECK(st.loc == VlTxLocation::WaitBag);
  CHECK(st.wait_until == 8000);

  VlTxState single;
  vl_tx_begin(single, 0, 0, 8000);
  vl_tx_depart(single, 0, false, 8000);
  CHECK(single.loc == VlTxLocation::Idle);
}

TEST_CASE("network transit bounds") {
  VirtualLinkSpec vl;
  vl.tx_delay = 16;
  vl.routes["M2"] = Route{2, 1};
  vl.routes["M3"] = Route{1, 0};
  NetworkParams net;
  net.sw = {10, 20};
  net.rx = {5, 8};
  CHECK(vl_rx_bounds(vl, "M2", net) == Interval{47, 60});
  CHECK(vl_rx_bounds(vl, "M3", net) == Interval{21, 24});
  CHECK_THROWS_AS(vl_rx_bounds(vl, "M9", net), ConfigError);

  const auto& c = case1();
  const VirtualLinkSpec& v2 = *c.find_vl("V2");
  const Route r = v2.routes.at("M2");
  const Interval expect{v2.tx_delay * r.links + c.net.sw.min * r.switches + c.net.rx.min,
                        v2.tx_delay * r.links + c.net.sw.max * r.switches + c.net.rx.max};
  CHECK(vl_rx_bounds(v2, "M2", c.net) == expect);
}

TEST_CASE("too many frames in flight is a link error") {
  VlRxState st;
  for (int i = 0; i < 3; ++i) CHECK(vl_rx_accept(st, i, 50, 0, 3) == VlRxOutcome::Accepted);
  CHECK(vl_rx_accept(st, 3, 50, 0, 3) == VlRxOutcome::LinkError);
}

TEST_CASE("deliveries stay in order") {
  VlRxState st;
  vl_rx_accept(st, 0, 60, 0, 4);
  vl_rx_accept(st, 5, 47, 1, 4);
  CHECK(st.in_flight[0].delivery == 60);
  CHECK(st.in_flight[1].delivery == 60);
}

TEST_CASE("reassembly") {
  MsgBuffer dst = make_port(SamplingPort{50000});
  IpRxState one;
  one.fifo = 1;
  CHECK(ip_rx_begin(one, 8000, 88));
  CHECK(ip_rx_complete(one, dst, 1, 8088) == IpRxOutcome::Delivered);
  CHECK(dst.last_reset == 8088);
  CHECK(dst.buf == 1);

  MsgBuffer d2 = make_port(QueuingPort{1});
  IpRxState two;
  two.fifo = 1;
  ip_rx_begin(two, 100, 50);
  CHECK(ip_rx_complete(two, d2, 2, 150) == IpRxOutcome::Partial);
  CHECK(d2.buf == 0);
  two.fifo = 1;
  ip_rx_begin(two, 300, 50);
  CHECK(ip_rx_complete(two, d2, 2, 350) == IpRxOutcome::Delivered);
  CHECK(d2.buf == 1);

  IpRxState three;
  three.fifo = 1;
  ip_rx_begin(three, 400, 10);
  CHECK(ip_rx_complete(three, d2, 1, 410) == IpRxOutcome::Overflow);
}

TEST_CASE("refresh check") {
  MsgBuffer p = make_port(SamplingPort{50000});
  p.last_reset = 8088;
  const auto age = refresh_check(p, 60000, 50000);
  REQUIRE(age.has_value());
  CHECK(*age == 51912);
  p.last_reset = 10000;
  CHECK_FALSE(refresh_check(p, 60000, 50000).has_value());
  p.last_reset = 60184;
  CHECK_FALSE(refresh_check(p, 60200, 50000).has_value());
  MsgBuffer never = make_port(SamplingPort{50000});
  CHECK_FALSE(refresh_check(never, 1'000'000, 50000).has_value());
}
