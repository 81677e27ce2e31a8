#include <doctest.h>

#include <thread>

#include "fault_schedule.hpp"
#include "sbcep/broker.hpp"

using namespace sbcep;
using namespace sbcep::broker;

namespace {

std::size_t holders(const Cluster& c, const std::string& topic, std::uint64_t offset) {
  std::size_t n = 0;
  for (const auto& id : c.broker_ids()) {
    auto log = c.replica(id, topic, 0);
    n += log.size() > offset && log[offset].offset == offset;
  }
  return n;
}

}  // namespace

TEST_CASE("one publish lands on two brokers") {
  Cluster c;
  c.create_topic("t");
  auto ack = c.publish("t", "hello");
  CHECK(ack.offset == 0);
  CHECK(ack.partition == 0);
  CHECK(holders(c, "t", 0) == 2);
  CHECK(c.acknowledged() == 1);
}

TEST_CASE("unknown topics and brokers") {
  Cluster c;
  CHECK_THROWS_AS(c.publish("nope", "x"), DataError);
  CHECK_THROWS_AS(c.consume("nope", "g", 10), DataError);
  c.create_topic("t");
  CHECK_THROWS_AS(c.create_topic("t"), DataError);
  CHECK_THROWS_AS(c.fail_broker("Z"), DataError);
  CHECK_THROWS_AS(c.recover_broker("Z"), DataError);
}

TEST_CASE("offsets are dense and consumption commits") {
  Cluster c;
  c.create_topic("t");
  for (int i = 0; i < 10; ++i) CHECK(c.publish("t", std::to_string(i)).offset == static_cast<std::uint64_t>(i));
  CHECK(c.log_end("t", 0) == 10);

  Cluster d;
  d.create_topic("t");
  for (int i = 0; i < 3; ++i) d.publish("t", std::to_string(i));
  auto first = d.consume("t", "g", 100);
  REQUIRE(first.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(first[i].message.offset == i);
  CHECK(d.consume("t", "g", 100).empty());
  d.publish("t", "3");
  auto second = d.consume("t", "g", 100);
  REQUIRE(second.size() == 1);
  CHECK(second[0].message.payload == "3");
  CHECK(d.committed("g", "t", 0) == 4);
  // Groups are independent.
  CHECK(d.consume("t", "other", 100).size() == 4);
}

TEST_CASE("partitions are filled round-robin") {
  ClusterConfig cfg;
  cfg.default_partitions = 3;
  Cluster c(cfg);
  c.create_topic("t");
  for (int i = 0; i < 9; ++i) CHECK(c.publish("t", "x").partition == static_cast<std::size_t>(i % 3));
  for (std::size_t p = 0; p < 3; ++p) CHECK(c.log_end("t", p) == 3);
  CHECK(c.consume_partition("t", 1, "g", 10).size() == 3);
  CHECK_THROWS_AS(c.consume_partition("t", 3, "g", 10), DataError);
}

TEST_CASE("a failed broker loses nothing") {
  Cluster c;
  c.create_topic("t");
  for (int i = 0; i < 100; ++i) c.publish("t", std::to_string(i));
  c.fail_broker("A");
  auto all = c.consume("t", "g", 1000);
  REQUIRE(all.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(all[i].message.payload == std::to_string(i));
}

TEST_CASE("fail and recover without traffic") {
  Cluster c;
  c.create_topic("t");
  for (int i = 0; i < 5; ++i) c.publish("t", std::to_string(i));
  std::vector<std::vector<Message>> before;
  for (const auto& id : c.broker_ids()) before.push_back(c.replica(id, "t", 0));
  c.fail_broker("B");
  CHECK_FALSE(c.alive("B"));
  CHECK(c.live_count() == 2);
  c.recover_broker("B");
  CHECK(c.alive("B"));
  // Recovery resyncs B, so compare only the brokers that were already full.
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (before[i].size() == 5) CHECK(c.replica(c.broker_ids()[i], "t", 0) == before[i]);
  }
}

TEST_CASE("a recovered broker resyncs") {
  Cluster c;
  c.create_topic("t");
  c.fail_broker("A");
  for (int i = 0; i < 50; ++i) c.publish("t", std::to_string(i));
  CHECK(c.replica("A", "t", 0).empty());
  CHECK(c.replica("B", "t", 0).size() == 50);
  CHECK(c.replica("C", "t", 0).size() == 50);
  c.recover_broker("A");
  CHECK(c.replica("A", "t", 0) == c.replica("B", "t", 0));
  CHECK(c.replica("C", "t", 0) == c.replica("B", "t", 0));
}

TEST_CASE("two failures block publishing") {
  Cluster c;
  c.create_topic("t");
  c.publish("t", "0");
  c.fail_broker("A");
  c.fail_broker("B");
  CHECK_THROWS_AS(c.publish("t", "x"), Unavailable);
  CHECK(c.log_end("t", 0) == 1);
  c.recover_broker("A");
  CHECK(c.publish("t", "1").offset == 1);
}

TEST_CASE("reads fail when no live replica holds the data") {
  ClusterConfig cfg;
  cfg.replication_factor = 1;
  Cluster c(cfg);
  c.create_topic("t");
  c.publish("t", "x");
  std::string holder;
  for (const auto& id : c.broker_ids()) {
    if (!c.replica(id, "t", 0).empty()) holder = id;
  }
  c.fail_broker(holder);
  CHECK_THROWS_AS(c.consume("t", "g", 10), Unavailable);
  CHECK(c.committed("g", "t", 0) == 0);
  c.recover_broker(holder);
  CHECK(c.consume("t", "g", 10).size() == 1);
}

TEST_CASE("cluster config validation") {
  ClusterConfig cfg;
  cfg.replication_factor = 4;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.broker_ids = {"A", "A"};
  cfg.replication_factor = 1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = {};
  cfg.default_partitions = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("wait_for_data wakes on publish") {
  Cluster c;
  c.create_topic("t");
  CHECK_FALSE(c.wait_for_data("t", 0, "g", std::chrono::milliseconds(5)));
  std::thread producer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    c.publish("t", "x");
  });
  CHECK(c.wait_for_data("t", 0, "g", std::chrono::milliseconds(5000)));
  producer.join();
}

TEST_CASE("fault scenarios") {
  auto actions = parse_fault_scenario(
      "# comment\n"
      "at 10 fail A\n"
      "recover A\n"
      "at 25 fail C   # trailing\n"
      "at 40 recover C\n");
  REQUIRE(actions.size() == 4);
  CHECK(actions[0] == FaultAction{10, FaultAction::Kind::Fail, "A"});
  CHECK(actions[1] == FaultAction{10, FaultAction::Kind::Recover, "A"});
  CHECK(actions[3] == FaultAction{40, FaultAction::Kind::Recover, "C"});

  CHECK_THROWS_AS(parse_fault_scenario("at x fail A\n"), DataError);
  CHECK_THROWS_AS(parse_fault_scenario("at 5 explode A\n"), DataError);
  CHECK_THROWS_AS(parse_fault_scenario("at 5 fail\n"), DataError);
  CHECK_THROWS_AS(parse_fault_scenario("at 5 fail A\nat 4 recover A\n"), DataError);

  Cluster c;
  c.create_topic("t");
  FaultInjector inj(parse_fault_scenario("at 2 fail A\nat 4 recover A\n"));
  std::uint64_t published = 0;
  inj.apply_due(c, published);
  CHECK(c.alive("A"));
  for (int i = 0; i < 3; ++i) {
    c.publish("t", "x");
    inj.apply_due(c, ++published);
  }
  CHECK_FALSE(c.alive("A"));
  c.publish("t", "x");
  CHECK(inj.apply_due(c, ++published) == 1);
  CHECK(c.alive("A"));
  CHECK(inj.done());
}

TEST_CASE("randomized fault schedules") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto r = oracle::run_fault_schedule(seed);
    INFO("seed " << seed << ": " << r.failure);
    CHECK(r.ok);
    CHECK(r.delivered == 2 * r.acknowledged);
  }
}

TEST_CASE("faults concurrent with traffic") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto r = oracle::run_fault_schedule(seed, true);
    INFO("seed " << seed << ": " << r.failure);
    CHECK(r.ok);
  }
}
