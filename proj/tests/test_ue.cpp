#include <gtest/gtest.h>

#include <set>

#include "smsim/ue.hpp"
#include "world_fixture.hpp"

namespace smsim::ue {
namespace {

using nlohmann::json;
using scenario::World;
using testing::small_config;
using testing::test_device;

constexpr const char* kVictim = "3105554347";
constexpr const char* kAttacker = "3105552501";
constexpr const char* kPeer = "3105554348";

TEST(ImsDiscovery, PicksRouteOffTheDefaultInterface) {
  const auto [addr, dev] = discover_ims_address(
      "default via fe80::5dc8 dev rmnet0 metric 1024\n2001:db8:1:fe03:fa:104:0:5 via fe80::1 dev rmnet1\n");
  EXPECT_EQ(addr, "2001:db8:1:fe03:fa:104:0:5");
  EXPECT_EQ(dev, "rmnet1");
}

TEST(ImsDiscovery, HandlesSwappedInterfaces) {
  const auto [addr, dev] = discover_ims_address(
      "2001:db8:1:fe03:fa:104:0:5 via fe80::1 dev rmnet0\ndefault via fe80::5dc8 dev rmnet1 metric 1024\n");
  EXPECT_EQ(addr, "2001:db8:1:fe03:fa:104:0:5");
  EXPECT_EQ(dev, "rmnet0");
}

TEST(ImsDiscovery, DefaultOnlyIsAnError) {
  EXPECT_THROW(discover_ims_address("default via fe80::5dc8 dev rmnet0 metric 1024\n"), DeviceError);
  EXPECT_THROW(discover_ims_address("garbage"), DeviceError);
}

TEST(ImsDiscovery, WorldDevicesFindTheirServer) {
  World w(small_config());
  EXPECT_EQ(w.device(kVictim).ims_interface(), "rmnet1");
  EXPECT_EQ(w.device(kAttacker).ims_interface(), "rmnet0");
  EXPECT_EQ(w.device(kVictim).profile().ims_server_address, World::ims_address(0));
  EXPECT_EQ(w.device(kAttacker).profile().ims_server_address, World::ims_address(0));
}

TEST(Approval, ScriptRunsOut) {
  auto p = ApprovalPolicy::script({Decision::Deny, Decision::Approve});
  EXPECT_EQ(p.decide(), Decision::Deny);
  EXPECT_EQ(p.decide(), Decision::Approve);
  EXPECT_EQ(p.decide(), std::nullopt);
  EXPECT_EQ(p.consulted(), 3u);
}

TEST(AppPath, ShortCodeNeedsConfirmation) {
  World w(small_config({{"devices", {test_device(kVictim, "honest", "AutoDeny")}}}));
  w.register_all();
  auto& d = w.device(kVictim);
  EXPECT_EQ(d.send_sms_app("32665", "Hi"), SendResult::Blocked);
  EXPECT_TRUE(d.sends().empty());

  World w2(small_config({{"devices", {test_device(kVictim, "honest", json{{"script", json::array()}})}}}));
  w2.register_all();
  EXPECT_EQ(w2.device(kVictim).send_sms_app("32665", "Hi"), SendResult::AwaitingUserConfirm);
}

TEST(AppPath, ThirtyFirstSendInWindowAsksTheUser) {
  for (const std::string policy : {"AutoDeny", "AutoApprove"}) {
    World w(small_config({{"devices", {test_device(kVictim, "honest", policy), test_device(kPeer)}}}));
    w.register_all();
    auto& d = w.device(kVictim);
    for (int i = 0; i < 30; ++i) ASSERT_EQ(d.send_sms_app(kPeer, "m" + std::to_string(i)), SendResult::Sent);
    EXPECT_EQ(d.approval().consulted(), 0u);
    const auto want = policy == "AutoDeny" ? SendResult::Blocked : SendResult::Sent;
    EXPECT_EQ(d.send_sms_app(kPeer, "one more"), want) << policy;
    EXPECT_EQ(d.approval().consulted(), 1u);
  }
}

TEST(AppPath, WindowResetsAfterThirtyMinutes) {
  World w(small_config({{"devices", {test_device(kVictim, "honest", "AutoDeny"), test_device(kPeer)}}}));
  w.register_all();
  auto& d = w.device(kVictim);
  for (int i = 0; i < 30; ++i) d.send_sms_app(kPeer, "x");
  EXPECT_EQ(d.send_sms_app(kPeer, "x"), SendResult::Blocked);
  w.run_until(w.fabric().now() + Device::kAppWindow);
  EXPECT_EQ(d.send_sms_app(kPeer, "x"), SendResult::Sent);
}

TEST(RawPath, SkipsBothGates) {
  World w(small_config({{"devices", {test_device(kAttacker, "attacker", "AutoDeny"), test_device(kVictim)}}}));
  w.register_all();
  auto& a = w.device(kAttacker);
  for (int i = 0; i < 60; ++i) a.attacker_send_raw(kAttacker, "32665", "Hi");
  EXPECT_EQ(a.app_window_count(), 0u);
  EXPECT_EQ(a.approval().consulted(), 0u);
  w.run_until(w.fabric().now() + kSecond);
  EXPECT_EQ(a.counter("raw_accepted"), 60u);
}

TEST(RawPath, EverySourcePortIsAccepted) {
  World w(small_config());
  w.register_all();
  auto& a = w.device(kAttacker);
  for (int i = 0; i < 40; ++i) a.attacker_send_raw(kVictim, kPeer, "spoof " + std::to_string(i));
  w.run_until(w.fabric().now() + kSecond);
  std::set<std::uint16_t> ports;
  for (const auto& s : a.sends()) {
    EXPECT_TRUE(s.raw);
    EXPECT_EQ(s.final_code, 200);
    EXPECT_NE(s.source.port, sip::kSipPort);
    ports.insert(s.source.port);
  }
  EXPECT_GT(ports.size(), 30u);
  const auto& inbox = w.device(kPeer).inbox();
  ASSERT_EQ(inbox.size(), 40u);
  EXPECT_EQ(inbox.front().from, kVictim);
}

TEST(RawPath, ForeignFromIsOnlyPossibleRaw) {
  World w(small_config());
  w.register_all();
  auto& v = w.device(kVictim);
  v.send_sms_app(kPeer, "hello");
  w.run_until(w.fabric().now() + kSecond);
  ASSERT_EQ(w.device(kPeer).inbox().size(), 1u);
  EXPECT_EQ(w.device(kPeer).inbox()[0].from, kVictim);
  EXPECT_EQ(w.device(kPeer).inbox()[0].text, "hello");
}

TEST(Challenge440, AppPathAsksTheUserEachTime) {
  const json carriers = {{{"carrier_id", "OP-I"}, {"premium_codes", {"90999"}}}};
  const json script = {{"script", {"approve", "deny", "approve", "approve"}}};
  World w(small_config({{"carriers", carriers}, {"devices", {test_device(kVictim, "honest", script)}}}));
  w.register_all();
  auto& d = w.device(kVictim);
  EXPECT_EQ(d.send_sms_app("90999", "REDCROSS"), SendResult::Sent);
  w.run_until(w.fabric().now() + kSecond);
  EXPECT_TRUE(d.sends()[0].abandoned);
  EXPECT_EQ(d.sends()[0].final_code, 440);
  EXPECT_EQ(d.send_sms_app("90999", "REDCROSS"), SendResult::Sent);
  w.run_until(w.fabric().now() + kSecond);
  EXPECT_FALSE(d.sends()[1].abandoned);
  EXPECT_EQ(d.sends()[1].final_code, 200);
  EXPECT_EQ(w.carrier("OP-I").counter("challenged_440"), 2u);
  EXPECT_EQ(w.carrier("OP-I").counter("approved_440"), 1u);
  EXPECT_EQ(w.carrier("OP-I").held().size(), 1u);  // the denied one is never answered
}

TEST(AttackScript, InterleavesFirstAndSecondMessages) {
  World w(small_config({{"devices", {test_device(kAttacker, "attacker")}}}));
  w.register_all();
  auto& a = w.device(kAttacker);
  AttackScript s{{"3105554300", "3105554301", "3105554302"}, "90999", "REDCROSS", 730, SecondMessage{"YES", 1000}};
  const SimTime t0 = w.fabric().now();
  a.run_attack_script(s);
  w.run_until(t0 + 10 * kSecond);
  ASSERT_EQ(a.sends().size(), 6u);
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : a.sends()) order.emplace_back(r.from, r.text);
  const std::vector<std::pair<std::string, std::string>> want = {
      {"3105554300", "REDCROSS"}, {"3105554301", "REDCROSS"}, {"3105554300", "YES"},
      {"3105554302", "REDCROSS"}, {"3105554301", "YES"},      {"3105554302", "YES"}};
  EXPECT_EQ(order, want);
  EXPECT_EQ(a.sends()[1].sent_at - a.sends()[0].sent_at, 730);

  a.run_attack_script({{}, "90999", "REDCROSS", 730, std::nullopt});
  w.run_until(w.fabric().now() + 10 * kSecond);
  EXPECT_EQ(a.sends().size(), 6u);
  EXPECT_THROW(a.run_attack_script({{"1"}, "90999", "x", -1, std::nullopt}), DeviceError);
}

TEST(AttackScript, TemplateSubstitution) {
  EXPECT_EQ(render_template("My number is {victim}, {victim}", "42"), "My number is 42, 42");
  EXPECT_EQ(render_template("plain", "42"), "plain");
}

TEST(Ipsec, AppSendsTaggedRawSendsRejected) {
  const json carriers = {{{"carrier_id", "OP-I"}, {"security_mode", "IPSEC_3GPP"}}};
  World w(small_config({{"carriers", carriers}}));
  w.register_all();
  auto& a = w.device(kAttacker);
  EXPECT_EQ(a.send_sms_app(kPeer, "honest"), SendResult::Sent);
  a.attacker_send_raw(kVictim, kPeer, "spoof");
  w.run_until(w.fabric().now() + kSecond);
  EXPECT_EQ(a.sends()[0].final_code, 200);
  EXPECT_EQ(a.sends()[1].final_code, 403);
  EXPECT_EQ(w.carrier("OP-I").counter("rejected_integrity"), 1u);
  ASSERT_EQ(w.device(kPeer).inbox().size(), 1u);
  EXPECT_EQ(w.device(kPeer).inbox()[0].from, kAttacker);
}

TEST(Registration, WrongKeyIsRefused) {
  net::Fabric fabric;
  ims::Directory dir;
  ims::CarrierPolicy policy;
  policy.carrier_id = "OP-I";
  ims::Carrier carrier(fabric, dir, policy, World::ims_address(0), 1);
  carrier.add_subscriber(kVictim, to_bytes("right"));
  DeviceConfig dc;
  dc.number = kVictim;
  dc.carrier_id = "OP-I";
  dc.auth_key = to_bytes("wrong");
  dc.device_address = World::device_address(0, 0);
  dc.realm = policy.realm;
  dc.routing_table = {{"default", "fe80::5dc8", "rmnet0", 1024}, {World::ims_address(0), "fe80::1", "rmnet1", std::nullopt}};
  Device d(fabric, dc);
  d.register_with_ims();
  fabric.run();
  EXPECT_FALSE(d.registered());
  EXPECT_TRUE(d.registration_failed());
  EXPECT_THROW(d.send_sms_app(kPeer, "x"), DeviceError);
  EXPECT_EQ(carrier.counter("register_rejected"), 1u);
}

}  // namespace
}  // namespace smsim::ue
