#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sbcep/broker.hpp"
#include "sbcep/ingest.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/rules.hpp"
#include "sbcep/sparql.hpp"

namespace sbcep::cep {

inline constexpr const char* kOccupancyDetected = "OccupancyDetected";
inline constexpr const char* kOccupancyAbsent = "OccupancyAbsent";
inline constexpr const char* kHumidityHigh = "HumidityHigh";
inline constexpr const char* kTemperatureModerate = "TemperatureModerate";
inline constexpr const char* kTemperatureHigh = "TemperatureHigh";
inline constexpr const char* kAirQualityPoor = "AirQualityPoor";

// Rule id carried by events that no label rule decided.
inline constexpr const char* kDefaultRuleId = "default";

struct ElementaryEvent {
  SensorRecord record;
  std::uint64_t arrival_time = 0;  // engine logical clock
  std::size_t partition = 0;
  std::uint64_t offset = 0;
};

struct ComplexEvent {
  std::string tag;
  std::string rule_id;  // label/tag rule id, "default", or "threshold/<tag>"
  ElementaryEvent source;
  std::uint64_t detection_time = 0;
  std::uint64_t ruleset_version = 0;
  std::optional<Feature> feature;  // banded feature behind a threshold tag
  std::optional<double> value;
};

struct ComplexEventThresholds {
  double humidity_high = 30;        // humidity > this
  double temperature_moderate = 20; // moderate < t <= high
  double temperature_high = 23;     // t > this
  double co2_poor = 1100;           // co2 > this

  void validate() const;
};

// Occupancy tag from classify(), then tag-rule events, then one event per
// threshold band the record falls into. Features the record lacks are skipped.
std::vector<ComplexEvent> derive_complex(const ElementaryEvent& event, const rules::RuleSet& ruleset,
                                         const ComplexEventThresholds& thresholds = {});

struct Window {
  std::size_t length = 1;  // events per tumbling window
};

// Per-feature means; occupancy by majority (ties count as occupied); row id
// and timestamp from the last event in the window.
SensorRecord aggregate(std::span<const SensorRecord> records);

class TumblingWindow {
 public:
  explicit TumblingWindow(Window w);
  std::optional<SensorRecord> push(SensorRecord record);
  std::optional<SensorRecord> flush();

 private:
  Window window_;
  std::vector<SensorRecord> pending_;
};

std::vector<SensorRecord> window_aggregate(std::span<const SensorRecord> records, Window window);

// Broker payloads are triple batches in the exchange format.
std::string encode_event(const SensorRecord& record);
SensorRecord decode_event(std::string_view payload);
std::size_t publish_records(broker::Cluster& cluster, const std::string& topic,
                            std::span<const SensorRecord> records);

// Called from worker threads; must tolerate concurrent calls.
using Sink = std::function<void(const ComplexEvent&)>;

class MemorySink {
 public:
  Sink sink();
  std::vector<ComplexEvent> events() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ComplexEvent> events_;
};

std::string to_json_line(const ComplexEvent& event);

class JsonlSink {
 public:
  explicit JsonlSink(const std::string& path);
  Sink sink();
  std::size_t written() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

struct Evaluation {
  std::size_t partition;
  std::uint64_t offset;
  std::uint64_t version;
};

struct EngineStats {
  std::size_t events_in = 0;
  std::size_t complex_events_out = 0;
  std::size_t query_hits = 0;  // events whose per-event query returned rows
  double wall_seconds = 0;
  double throughput = 0;  // events_in / wall_seconds
  std::vector<double> deployment_latencies;
  std::vector<Evaluation> evaluations;  // only when recorded
  std::optional<std::string> error;     // set when processing aborted
};

struct EngineConfig {
  std::string topic = "sensor-rdf";
  std::string group = "cep";
  ComplexEventThresholds thresholds;
  Window window;
  // Optional check evaluated after every event over the last live_window
  // events of that partition.
  std::optional<sparql::Query> per_event_query;
  std::size_t live_window = 32;
  std::size_t batch = 256;
  bool record_evaluations = false;
};

enum class Change { Inject, Update, Delete };

// One worker thread per partition. Rule deployments apply at a per-partition
// barrier: events published before the request are evaluated under the old
// version, everything after under the new one.
class Engine {
 public:
  Engine(broker::Cluster& cluster, rules::RuleSet initial, EngineConfig config, Sink sink);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void start();
  // Processes everything published so far, then stops the workers.
  EngineStats drain_and_stop();
  void stop();
  bool running() const { return running_.load(); }

  // Blocks until every partition has switched to the new version and returns
  // the seconds from request to switch. Throws DataError for an unknown id on
  // update/delete or a duplicate id on inject.
  double deploy(Change change, rules::Rule rule);
  double deploy_delete(const std::string& rule_id);
  // Latest requested rule set.
  std::shared_ptr<const rules::RuleSet> ruleset() const;

 private:
  struct Version {
    std::shared_ptr<const rules::RuleSet> rules;
    std::vector<std::uint64_t> barrier;  // per-partition log end at request
  };
  struct Partition;

  double install(std::shared_ptr<const rules::RuleSet> next);
  bool switched(const Version& v) const;
  void work(std::size_t p);
  void process(std::size_t p, const broker::Message& m);
  void emit(std::size_t p, const SensorRecord& rec, const broker::Message& m);
  void fail(const std::string& why);
  EngineStats collect();

  broker::Cluster& cluster_;
  EngineConfig config_;
  Sink sink_;
  std::size_t partitions_;

  mutable std::mutex versions_mutex_;
  std::condition_variable versions_cv_;
  std::vector<Version> versions_;
  std::atomic<std::size_t> version_count_{0};
  std::atomic<int> waiting_deploys_{0};
  std::vector<double> latencies_;

  std::vector<std::unique_ptr<Partition>> parts_;
  std::vector<std::thread> workers_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_requested_{false};
  std::atomic<bool> draining_{false};
  std::atomic<std::uint64_t> clock_{0};
  std::mutex error_mutex_;
  std::optional<std::string> error_;
  std::chrono::steady_clock::time_point started_;
  double wall_ = 0;
};

// Publishes nothing; runs an engine over what the topic already holds.
EngineStats run_pipeline(broker::Cluster& cluster, const std::string& topic, const rules::RuleSet& ruleset,
                         const ComplexEventThresholds& thresholds, Sink sink, EngineConfig config = {});

}  // namespace sbcep::cep
