#include <gtest/gtest.h>

#include <random>

#include "smsim/netsim.hpp"

namespace smsim::net {
namespace {

TEST(Fabric, DeliversAfterLatency) {
  Fabric f;
  SimTime seen = -1;
  f.register_endpoint({"a", 5060}, [&](const Datagram& d) {
    seen = f.now();
    EXPECT_EQ(d.deliver_at, f.now());
  });
  f.send_datagram({"b", 1}, {"a", 5060}, to_bytes("x"), "t");
  f.run();
  EXPECT_EQ(seen, 50);
}

TEST(Fabric, SameInstantKeepsSendOrder) {
  Fabric f;
  std::string order;
  f.register_endpoint({"a", 1}, [&](const Datagram& d) { order += to_text(d.payload); });
  for (char c : std::string("abcdef")) f.send_datagram({"b", 1}, {"a", 1}, Bytes{static_cast<std::uint8_t>(c)}, "");
  f.run();
  EXPECT_EQ(order, "abcdef");
}

TEST(Fabric, DuplicateBindRejected) {
  Fabric f;
  f.register_endpoint({"a", 5060}, [](const Datagram&) {});
  EXPECT_THROW(f.register_endpoint({"a", 5060}, [](const Datagram&) {}), NetError);
  EXPECT_NO_THROW(f.register_endpoint({"b", 5060}, [](const Datagram&) {}));
}

TEST(Fabric, UnboundDestinationIsDroppedAndCounted) {
  Fabric f;
  f.send_datagram({"b", 1}, {"nowhere", 1}, to_bytes("x"), "");
  f.run();
  EXPECT_EQ(f.stats().dropped, 1u);
  EXPECT_EQ(f.stats().sent, f.stats().delivered + f.stats().dropped);
}

TEST(Fabric, RunUntilStopsAtBoundary) {
  Fabric f;
  int fired = 0;
  f.schedule_at(100, [&] { ++fired; });
  f.schedule_at(101, [&] { ++fired; });
  EXPECT_EQ(f.run_until(100), 1u);
  EXPECT_EQ(f.now(), 100);
  EXPECT_EQ(fired, 1);
}

std::vector<std::string> random_traffic(std::uint64_t seed) {
  Fabric f({50, 20, seed});
  std::mt19937_64 rng(seed);
  std::vector<Endpoint> eps;
  for (int i = 0; i < 8; ++i) {
    eps.push_back({"h" + std::to_string(i), 5060});
    f.register_endpoint(eps.back(), [&f](const Datagram& d) {
      EXPECT_GE(f.now(), d.deliver_at);
    });
  }
  for (int i = 0; i < 10000; ++i) {
    const auto& src = eps[rng() % eps.size()];
    const auto& dst = eps[rng() % eps.size()];
    f.schedule_at(static_cast<SimTime>(rng() % 5000), [&f, src, dst, i] {
      f.send_datagram(src, dst, to_bytes(std::to_string(i)), "MESSAGE");
    });
  }
  f.run();
  EXPECT_EQ(f.stats().sent, f.stats().delivered + f.stats().dropped);
  return f.event_log();
}

TEST(Fabric, SameSeedSameLog) {
  const auto a = random_traffic(5);
  EXPECT_EQ(a.size(), 10000u);
  EXPECT_EQ(a, random_traffic(5));
  EXPECT_NE(a, random_traffic(6));
}

TEST(RoutingTable, RendersDefaultRouteShape) {
  const std::vector<RouteEntry> t = {{"default", "fe80::5dc8", "rmnet0", 1024},
                                     {"2001:db8:1:fe03:fa:104:0:5", "fe80::1", "rmnet1", std::nullopt}};
  const std::string text = render_routing_table(t);
  EXPECT_EQ(text, "default via fe80::5dc8 dev rmnet0 metric 1024\n2001:db8:1:fe03:fa:104:0:5 via fe80::1 dev rmnet1\n");
  EXPECT_EQ(parse_routing_table(text), t);
}

TEST(RoutingTable, ParseErrorsCarryLineNumbers) {
  EXPECT_THROW(parse_routing_table(""), RoutingTableError);
  try {
    parse_routing_table("default via fe80::1 dev rmnet0\nbogus line\n");
    FAIL();
  } catch (const RoutingTableError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_routing_table("default via a dev x\ndefault via b dev y\n"), RoutingTableError);
}

}  // namespace
}  // namespace smsim::net
