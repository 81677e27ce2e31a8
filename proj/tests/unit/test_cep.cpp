#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "sbcep/cep.hpp"
#include "sbcep/surrogate.hpp"

using namespace sbcep;
using namespace sbcep::cep;

namespace {

SensorRecord reading(std::string id, double t, double h, double light, double co2, int occ = 0) {
  SensorRecord r;
  r.row_id = std::move(id);
  r.timestamp = DateTime::from_civil(2015, 2, 9, 2, 38, 59);
  r.temperature = t;
  r.humidity = h;
  r.light = light;
  r.co2 = co2;
  r.humidity_ratio = 0.0037;
  r.occupancy = occ;
  return r;
}

std::vector<std::string> tags_of(const std::vector<ComplexEvent>& ces) {
  std::vector<std::string> out;
  for (const auto& c : ces) out.push_back(c.tag);
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

ElementaryEvent ev(SensorRecord r) { return ElementaryEvent{std::move(r), 1, 0, 0}; }

}  // namespace

TEST_CASE("threshold bands") {
  const auto rules = rules::table2_rules();
  auto t = tags_of(derive_complex(ev(reading("1", 19.39, 26.7, 0, 470)), rules));
  CHECK_FALSE(has(t, kHumidityHigh));
  CHECK_FALSE(has(t, kTemperatureModerate));
  CHECK_FALSE(has(t, kAirQualityPoor));

  t = tags_of(derive_complex(ev(reading("1", 20.2, 20, 0, 456)), rules));
  CHECK(has(t, kTemperatureModerate));
  CHECK_FALSE(has(t, kTemperatureHigh));
  CHECK_FALSE(has(t, kAirQualityPoor));

  t = tags_of(derive_complex(ev(reading("1", 24.2, 20, 0, 1101)), rules));
  CHECK(has(t, kTemperatureHigh));
  CHECK_FALSE(has(t, kTemperatureModerate));
  CHECK(has(t, kAirQualityPoor));

  auto ces = derive_complex(ev(reading("1", 21, 31, 500, 1400, 1)), rules);
  t = tags_of(ces);
  CHECK(has(t, kHumidityHigh));
  CHECK(has(t, kAirQualityPoor));
  for (const auto& c : ces) {
    if (c.tag == kAirQualityPoor) {
      CHECK(c.rule_id == "threshold/AirQualityPoor");
      CHECK(c.feature == Feature::CO2);
      CHECK(c.value == 1400);
    }
  }
  // Band edges are exclusive.
  t = tags_of(derive_complex(ev(reading("1", 23, 30, 0, 1100)), rules));
  CHECK(has(t, kTemperatureModerate));
  CHECK_FALSE(has(t, kHumidityHigh));
  CHECK_FALSE(has(t, kAirQualityPoor));
}

TEST_CASE("occupancy event carries the deciding rule") {
  auto ces = derive_complex(ev(reading("1", 19, 26, 0, 470)), rules::table2_rules());
  REQUIRE_FALSE(ces.empty());
  CHECK(ces[0].tag == kOccupancyAbsent);
  CHECK(ces[0].rule_id == "Rule1");
  CHECK(ces[0].ruleset_version == rules::table2_rules().version());

  rules::RuleSet empty({}, 1);
  ces = derive_complex(ev(reading("1", 19, 26, 0, 470)), empty);
  CHECK(ces[0].tag == kOccupancyDetected);
  CHECK(ces[0].rule_id == kDefaultRuleId);

  auto tagged = rules::table2_rules().with_rule(rules::parse_rule("gas: IF co2 > 1000 THEN GasRise", 20));
  ces = derive_complex(ev(reading("1", 19, 26, 0, 1200)), tagged);
  CHECK(has(tags_of(ces), "GasRise"));
}

TEST_CASE("derive_complex is pure") {
  const auto rules = rules::table2_rules();
  auto e = ev(reading("1", 24, 35, 500, 1200, 1));
  auto a = derive_complex(e, rules);
  auto b = derive_complex(e, rules);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json_line(a[i]) == to_json_line(b[i]));
}

TEST_CASE("tumbling windows") {
  std::vector<SensorRecord> two{reading("1", 19.39, 26.7, 0, 470, 0), reading("2", 19.5, 26.7, 0, 470, 1)};
  auto agg = window_aggregate(two, {2});
  REQUIRE(agg.size() == 1);
  CHECK(*agg[0].temperature == doctest::Approx(19.445).epsilon(1e-12));
  CHECK(agg[0].row_id == "2");
  CHECK(*agg[0].occupancy == 1);

  std::vector<SensorRecord> five;
  for (int i = 0; i < 5; ++i) five.push_back(reading(std::to_string(i), 20 + i, 25, 0, 500));
  CHECK(window_aggregate(five, {2}).size() == 3);
  CHECK(window_aggregate(five, {1}) == five);
  CHECK(*window_aggregate(five, {2})[2].temperature == 24);
  CHECK_THROWS_AS(window_aggregate(five, {0}), UsageError);
}

TEST_CASE("event payload round trip") {
  auto r = reading("42", 21.5, 27.25, 430.5, 712.75, 1);
  CHECK(decode_event(encode_event(r)) == r);
  CHECK_THROWS_AS(decode_event(""), DataError);
}

TEST_CASE("pipeline over a dark stream") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(reading(std::to_string(i), 19.4, 26.7, 0, 470));
  publish_records(c, "sensor-rdf", recs);
  MemorySink sink;
  auto stats = run_pipeline(c, "sensor-rdf", rules::table2_rules(), {}, sink.sink());
  CHECK_FALSE(stats.error);
  CHECK(stats.events_in == 100);
  auto out = sink.events();
  CHECK(out.size() == 100);
  CHECK(stats.complex_events_out == 100);
  for (const auto& e : out) CHECK(e.tag == kOccupancyAbsent);
  // Arrival order within the partition.
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].source.offset == i);
}

TEST_CASE("empty stream") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  MemorySink sink;
  auto stats = run_pipeline(c, "sensor-rdf", rules::table2_rules(), {}, sink.sink());
  CHECK(stats.events_in == 0);
  CHECK(sink.events().empty());
}

TEST_CASE("every published event is evaluated once across partitions") {
  broker::ClusterConfig cfg;
  cfg.default_partitions = 3;
  broker::Cluster c(cfg);
  c.create_topic("sensor-rdf");
  auto recs = synthesize_occupancy({.rows = 900});
  publish_records(c, "sensor-rdf", recs);
  MemorySink sink;
  EngineConfig ec;
  ec.record_evaluations = true;
  auto stats = run_pipeline(c, "sensor-rdf", rules::table2_rules(), {}, sink.sink(), ec);
  CHECK(stats.events_in == 900);
  CHECK(stats.evaluations.size() == 900);
  CHECK(stats.throughput == doctest::Approx(stats.events_in / stats.wall_seconds));
  std::map<std::string, int> occ;
  for (const auto& e : sink.events()) {
    if (e.tag == kOccupancyAbsent || e.tag == kOccupancyDetected) ++occ[e.source.record.row_id];
  }
  CHECK(occ.size() == 900);
  for (const auto& [id, n] : occ) CHECK(n == 1);
}

TEST_CASE("windowed pipeline emits aggregated events") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 5; ++i) recs.push_back(reading(std::to_string(i), 20 + i, 25, 0, 500));
  publish_records(c, "sensor-rdf", recs);
  MemorySink sink;
  EngineConfig ec;
  ec.window = {2};
  auto stats = run_pipeline(c, "sensor-rdf", rules::table2_rules(), {}, sink.sink(), ec);
  CHECK(stats.events_in == 5);
  std::vector<double> temps;
  for (const auto& e : sink.events()) {
    if (e.tag == kOccupancyAbsent) temps.push_back(*e.source.record.temperature);
  }
  CHECK(temps == std::vector<double>{20.5, 22.5, 24});
}

TEST_CASE("a failing sink aborts with partial stats") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back(reading(std::to_string(i), 19, 26, 0, 470));
  publish_records(c, "sensor-rdf", recs);
  std::atomic<int> calls{0};
  Sink bad = [&](const ComplexEvent&) {
    if (++calls == 10) throw RuntimeFailure("disk full");
  };
  auto stats = run_pipeline(c, "sensor-rdf", rules::table2_rules(), {}, bad);
  REQUIRE(stats.error);
  CHECK(stats.error->find("disk full") != std::string::npos);
  CHECK(stats.events_in < 50);
}

TEST_CASE("deployments apply at the publish barrier") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back(reading(std::to_string(i), 19, 26, 0, 1500));
  MemorySink sink;
  EngineConfig ec;
  ec.record_evaluations = true;
  Engine engine(c, rules::table2_rules(), ec, sink.sink());
  publish_records(c, "sensor-rdf", std::span(recs).first(10));
  engine.deploy(Change::Inject, rules::parse_rule("gas: IF co2 > 1000 THEN GasRise", 20));
  publish_records(c, "sensor-rdf", std::span(recs).subspan(10));
  engine.start();
  auto stats = engine.drain_and_stop();
  REQUIRE(stats.evaluations.size() == 20);
  const auto v0 = rules::table2_rules().version();
  for (const auto& e : stats.evaluations) CHECK(e.version == (e.offset < 10 ? v0 : v0 + 1));
  std::size_t gas = 0;
  for (const auto& e : sink.events()) gas += e.tag == "GasRise";
  CHECK(gas == 10);
}

TEST_CASE("deploy on an idle engine") {
  broker::Cluster c;
  c.create_topic("sensor-rdf");
  MemorySink sink;
  Engine engine(c, rules::table2_rules(), {}, sink.sink());
  engine.start();
  const auto v = engine.ruleset()->version();
  const double latency = engine.deploy(Change::Inject, rules::parse_rule("gas: IF co2 > 1000 THEN GasRise", 20));
  CHECK(latency > 0);
  CHECK(engine.ruleset()->version() == v + 1);

  CHECK_THROWS_AS(engine.deploy(Change::Inject, rules::parse_rule("gas: IF co2 > 9 THEN X", 20)), DataError);
  CHECK_THROWS_AS(engine.deploy_delete("missing"), DataError);
  CHECK_THROWS_AS(engine.deploy(Change::Update, rules::parse_rule("missing: IF co2 > 9 THEN X", 20)), DataError);

  engine.deploy_delete("Rule1");
  CHECK_FALSE(engine.ruleset()->find("Rule1"));
  CHECK(engine.ruleset()->version() == v + 2);

  std::vector<SensorRecord> dark{reading("1", 19, 26, 0, 470)};
  publish_records(c, "sensor-rdf", dark);
  auto stats = engine.drain_and_stop();
  CHECK(stats.deployment_latencies.size() == 2);
  auto out = sink.events();
  REQUIRE_FALSE(out.empty());
  CHECK(out[0].rule_id != "Rule1");
}

TEST_CASE("concurrent deployments form contiguous version blocks") {
  broker::ClusterConfig cfg;
  cfg.default_partitions = 2;
  broker::Cluster c(cfg);
  c.create_topic("sensor-rdf");
  auto recs = synthesize_occupancy({.rows = 3000});
  MemorySink sink;
  EngineConfig ec;
  ec.record_evaluations = true;
  ec.batch = 16;
  Engine engine(c, rules::table2_rules(), ec, sink.sink());
  engine.start();
  std::thread producer([&] { publish_records(c, "sensor-rdf", recs); });
  for (int i = 0; i < 15; ++i) {
    engine.deploy(Change::Inject, rules::parse_rule("r" + std::to_string(i) + ": IF co2 > " + std::to_string(600 + i) +
                                                        " THEN T" + std::to_string(i),
                                                    100 + i));
  }
  producer.join();
  auto stats = engine.drain_and_stop();
  CHECK_FALSE(stats.error);
  REQUIRE(stats.evaluations.size() == recs.size());

  std::map<std::size_t, std::vector<Evaluation>> by_part;
  for (const auto& e : stats.evaluations) by_part[e.partition].push_back(e);
  for (auto& [p, evs] : by_part) {
    std::sort(evs.begin(), evs.end(), [](const Evaluation& a, const Evaluation& b) { return a.offset < b.offset; });
    for (std::size_t i = 0; i < evs.size(); ++i) {
      REQUIRE(evs[i].offset == i);
      if (i) REQUIRE(evs[i].version >= evs[i - 1].version);
    }
    CHECK(evs.size() == c.log_end("sensor-rdf", p));
  }
  // Every complex event names a rule of the version it was evaluated under.
  for (const auto& e : sink.events()) {
    if (e.rule_id.rfind("r", 0) == 0) {
      const int k = std::stoi(e.rule_id.substr(1));
      CHECK(e.ruleset_version >= rules::table2_rules().version() + static_cast<std::uint64_t>(k) + 1);
    }
  }
}

TEST_CASE("jsonl sink") {
  auto path = (std::filesystem::temp_directory_path() / "sbcep_cep_sink.jsonl").string();
  {
    JsonlSink js(path);
    auto s = js.sink();
    for (const auto& ce : derive_complex(ev(reading("7", 24, 35, 500, 1200, 1)), rules::table2_rules())) s(ce);
    CHECK(js.written() == 4);
  }
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["row_id"] == "7");
    ++n;
  }
  CHECK(n == 4);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(JsonlSink("/nonexistent-dir/x.jsonl"), RuntimeFailure);
}
