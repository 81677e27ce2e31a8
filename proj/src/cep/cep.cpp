#include "sbcep/cep.hpp"

#include <deque>
#include <fstream>

#include "json.hpp"
#include "text_util.hpp"

namespace sbcep::cep {

void ComplexEventThresholds::validate() const {
  if (!(temperature_moderate <= temperature_high)) {
    throw UsageError("temperature moderate threshold must not exceed the high threshold");
  }
}

std::vector<ComplexEvent> derive_complex(const ElementaryEvent& event, const rules::RuleSet& ruleset,
                                         const ComplexEventThresholds& thresholds) {
  std::vector<ComplexEvent> out;
  auto make = [&](std::string tag, std::string rule_id) {
    ComplexEvent ce;
    ce.tag = std::move(tag);
    ce.rule_id = std::move(rule_id);
    ce.source = event;
    ce.detection_time = event.arrival_time;
    ce.ruleset_version = ruleset.version();
    return ce;
  };

  const auto c = rules::classify(ruleset, event.record);
  out.push_back(make(c.label == 1 ? kOccupancyDetected : kOccupancyAbsent,
                     c.defaulted ? std::string(kDefaultRuleId) : c.fired.front()));
  for (const auto& [rule_id, tag] : c.tags) out.push_back(make(tag, rule_id));

  auto banded = [&](const char* tag, Feature f, double v) {
    auto ce = make(tag, std::string("threshold/") + tag);
    ce.feature = f;
    ce.value = v;
    out.push_back(std::move(ce));
  };
  const auto& r = event.record;
  if (r.humidity && *r.humidity > thresholds.humidity_high) banded(kHumidityHigh, Feature::Humidity, *r.humidity);
  if (r.temperature) {
    const double t = *r.temperature;
    if (t > thresholds.temperature_high) banded(kTemperatureHigh, Feature::Temperature, t);
    else if (t > thresholds.temperature_moderate) banded(kTemperatureModerate, Feature::Temperature, t);
  }
  if (r.co2 && *r.co2 > thresholds.co2_poor) banded(kAirQualityPoor, Feature::CO2, *r.co2);
  return out;
}

SensorRecord aggregate(std::span<const SensorRecord> records) {
  if (records.empty()) throw DataError("cannot aggregate an empty window");
  SensorRecord out;
  out.row_id = records.back().row_id;
  out.timestamp = records.back().timestamp;
  for (Feature f : kAllFeatures) {
    if (f == Feature::Occupancy) continue;
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : records) {
      if (auto v = r.value(f)) {
        sum += *v;
        ++n;
      }
    }
    if (n) out.set(f, sum / static_cast<double>(n));
  }
  std::size_t occupied = 0, labelled = 0;
  for (const auto& r : records) {
    if (r.occupancy) {
      ++labelled;
      occupied += *r.occupancy == 1;
    }
  }
  if (labelled) out.occupancy = 2 * occupied >= labelled ? 1 : 0;
  return out;
}

TumblingWindow::TumblingWindow(Window w) : window_(w) {
  if (window_.length < 1) throw UsageError("window length must be at least 1");
}

std::optional<SensorRecord> TumblingWindow::push(SensorRecord record) {
  pending_.push_back(std::move(record));
  if (pending_.size() < window_.length) return std::nullopt;
  return flush();
}

std::optional<SensorRecord> TumblingWindow::flush() {
  if (pending_.empty()) return std::nullopt;
  if (pending_.size() == 1) {
    SensorRecord r = std::move(pending_.front());
    pending_.clear();
    return r;
  }
  SensorRecord r = aggregate(pending_);
  pending_.clear();
  return r;
}

std::vector<SensorRecord> window_aggregate(std::span<const SensorRecord> records, Window window) {
  TumblingWindow w(window);
  std::vector<SensorRecord> out;
  for (const auto& r : records) {
    if (auto a = w.push(r)) out.push_back(std::move(*a));
  }
  if (auto a = w.flush()) out.push_back(std::move(*a));
  return out;
}

std::string encode_event(const SensorRecord& record) { return rdf::serialize(rdf::to_triples(record)); }

SensorRecord decode_event(std::string_view payload) {
  const auto triples = rdf::parse_triples(payload);
  if (triples.empty()) throw DataError("empty event payload");
  return rdf::from_triples(triples);
}

std::size_t publish_records(broker::Cluster& cluster, const std::string& topic,
                            std::span<const SensorRecord> records) {
  for (const auto& r : records) cluster.publish(topic, encode_event(r));
  return records.size();
}

Sink MemorySink::sink() {
  return [this](const ComplexEvent& e) {
    std::lock_guard lock(mutex_);
    events_.push_back(e);
  };
}

std::vector<ComplexEvent> MemorySink::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::string to_json_line(const ComplexEvent& e) {
  nlohmann::json j;
  j["tag"] = e.tag;
  j["rule_id"] = e.rule_id;
  j["ruleset_version"] = e.ruleset_version;
  j["detection_time"] = e.detection_time;
  j["row_id"] = e.source.record.row_id;
  j["timestamp"] = e.source.record.timestamp ? nlohmann::json(e.source.record.timestamp->iso()) : nlohmann::json();
  j["partition"] = e.source.partition;
  j["offset"] = e.source.offset;
  if (e.feature) j["feature"] = std::string(feature_name(*e.feature));
  if (e.value) j["value"] = *e.value;
  return j.dump();
}

struct JsonlSink::State {
  std::mutex mutex;
  std::ofstream out;
  std::size_t written = 0;
};

JsonlSink::JsonlSink(const std::string& path) : state_(std::make_shared<State>()) {
  state_->out.open(path, std::ios::trunc);
  if (!state_->out) throw RuntimeFailure("cannot write '" + path + "'");
}

Sink JsonlSink::sink() {
  return [state = state_](const ComplexEvent& e) {
    std::lock_guard lock(state->mutex);
    state->out << to_json_line(e) << '\n';
    if (!state->out) throw RuntimeFailure("complex-event log write failed");
    ++state->written;
  };
}

std::size_t JsonlSink::written() const {
  std::lock_guard lock(state_->mutex);
  return state_->written;
}

// ---------------------------------------------------------------------------
// Engine

struct Engine::Partition {
  explicit Partition(Window w) : window(w) {}

  std::atomic<std::uint64_t> processed{0};  // offsets below this are evaluated
  std::uint64_t drain_target = 0;
  std::size_t version = 0;  // index into versions_, worker-local
  std::shared_ptr<const rules::RuleSet> rules;
  TumblingWindow window;
  std::optional<broker::Message> last;
  std::deque<std::vector<rdf::Triple>> live;
  rdf::TripleStore live_store;
  std::size_t events_in = 0;
  std::size_t complex_out = 0;
  std::size_t hits = 0;
  std::vector<Evaluation> evaluations;
};

Engine::Engine(broker::Cluster& cluster, rules::RuleSet initial, EngineConfig config, Sink sink)
    : cluster_(cluster), config_(std::move(config)), sink_(std::move(sink)) {
  config_.thresholds.validate();
  if (config_.batch == 0) throw UsageError("engine batch size must be positive");
  if (config_.live_window == 0) throw UsageError("live window must hold at least one event");
  partitions_ = cluster_.partitions(config_.topic);
  versions_.push_back({std::make_shared<const rules::RuleSet>(std::move(initial)),
                       std::vector<std::uint64_t>(partitions_, 0)});
  version_count_ = 1;
  for (std::size_t p = 0; p < partitions_; ++p) parts_.push_back(std::make_unique<Partition>(config_.window));
}

Engine::~Engine() { stop(); }

void Engine::start() {
  if (running_) return;
  stop_requested_ = false;
  draining_ = false;
  error_.reset();
  for (std::size_t p = 0; p < partitions_; ++p) {
    parts_[p]->processed = cluster_.committed(config_.group, config_.topic, p);
    std::lock_guard lock(versions_mutex_);
    parts_[p]->rules = versions_[parts_[p]->version].rules;
  }
  started_ = std::chrono::steady_clock::now();
  running_ = true;
  for (std::size_t p = 0; p < partitions_; ++p) workers_.emplace_back(&Engine::work, this, p);
}

void Engine::stop() {
  stop_requested_ = true;
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
  if (running_) {
    wall_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  }
  running_ = false;
  std::lock_guard lock(versions_mutex_);
  versions_cv_.notify_all();
}

EngineStats Engine::drain_and_stop() {
  if (running_) {
    for (std::size_t p = 0; p < partitions_; ++p) parts_[p]->drain_target = cluster_.log_end(config_.topic, p);
    draining_ = true;
    for (auto& w : workers_) {
      if (w.joinable()) w.join();
    }
    workers_.clear();
    wall_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    running_ = false;
    std::lock_guard lock(versions_mutex_);
    versions_cv_.notify_all();
  }
  return collect();
}

EngineStats Engine::collect() {
  EngineStats s;
  for (auto& part : parts_) {
    s.events_in += part->events_in;
    s.complex_events_out += part->complex_out;
    s.query_hits += part->hits;
    s.evaluations.insert(s.evaluations.end(), part->evaluations.begin(), part->evaluations.end());
  }
  s.wall_seconds = wall_;
  s.throughput = wall_ > 0 ? static_cast<double>(s.events_in) / wall_ : 0;
  {
    std::lock_guard lock(versions_mutex_);
    s.deployment_latencies = latencies_;
  }
  std::lock_guard lock(error_mutex_);
  s.error = error_;
  return s;
}

std::shared_ptr<const rules::RuleSet> Engine::ruleset() const {
  std::lock_guard lock(versions_mutex_);
  return versions_.back().rules;
}

bool Engine::switched(const Version& v) const {
  for (std::size_t p = 0; p < partitions_; ++p) {
    if (parts_[p]->processed.load() < v.barrier[p]) return false;
  }
  return true;
}

double Engine::deploy(Change change, rules::Rule rule) {
  const auto t0 = std::chrono::steady_clock::now();
  std::shared_ptr<const rules::RuleSet> next;
  {
    std::lock_guard lock(versions_mutex_);
    const rules::RuleSet& current = *versions_.back().rules;
    switch (change) {
      case Change::Inject: next = std::make_shared<const rules::RuleSet>(current.with_rule(std::move(rule))); break;
      case Change::Update: next = std::make_shared<const rules::RuleSet>(current.with_updated(std::move(rule))); break;
      case Change::Delete: next = std::make_shared<const rules::RuleSet>(current.without(rule.id)); break;
    }
  }
  install(std::move(next));
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::lock_guard lock(versions_mutex_);
  latencies_.push_back(latency);
  return latency;
}

double Engine::deploy_delete(const std::string& rule_id) {
  rules::Rule r;
  r.id = rule_id;
  return deploy(Change::Delete, std::move(r));
}

double Engine::install(std::shared_ptr<const rules::RuleSet> next) {
  const auto t0 = std::chrono::steady_clock::now();
  std::unique_lock lock(versions_mutex_);
  Version v{std::move(next), {}};
  v.barrier.reserve(partitions_);
  for (std::size_t p = 0; p < partitions_; ++p) v.barrier.push_back(cluster_.log_end(config_.topic, p));
  versions_.push_back(v);
  version_count_ = versions_.size();
  if (running_) {
    ++waiting_deploys_;
    versions_cv_.wait(lock, [&] { return !running_ || switched(v); });
    --waiting_deploys_;
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void Engine::fail(const std::string& why) {
  {
    std::lock_guard lock(error_mutex_);
    if (!error_) error_ = why;
  }
  stop_requested_ = true;
}

void Engine::work(std::size_t p) {
  Partition& part = *parts_[p];
  try {
    while (!stop_requested_) {
      auto batch = cluster_.consume_partition(config_.topic, p, config_.group, config_.batch);
      if (batch.empty()) {
        if (draining_ && part.processed.load() >= part.drain_target) break;
        cluster_.wait_for_data(config_.topic, p, config_.group, std::chrono::milliseconds(2));
        continue;
      }
      for (const auto& m : batch) {
        if (stop_requested_) break;
        process(p, m);
      }
    }
    if (!stop_requested_ && part.last) {
      if (auto rest = part.window.flush()) emit(p, *rest, *part.last);
    }
  } catch (const std::exception& e) {
    fail(e.what());
  }
  std::lock_guard lock(versions_mutex_);
  versions_cv_.notify_all();
}

void Engine::process(std::size_t p, const broker::Message& m) {
  Partition& part = *parts_[p];
  if (version_count_.load() > part.version + 1) {
    std::lock_guard lock(versions_mutex_);
    while (part.version + 1 < versions_.size() && versions_[part.version + 1].barrier[p] <= m.offset) {
      ++part.version;
    }
    part.rules = versions_[part.version].rules;
  }
  SensorRecord rec = decode_event(m.payload);
  part.last = m;

  if (config_.per_event_query) {
    auto triples = rdf::to_triples(rec);
    part.live_store.insert(triples);
    part.live.push_back(std::move(triples));
    if (part.live.size() > config_.live_window) {
      part.live_store.erase(part.live.front());
      part.live.pop_front();
    }
    if (sparql::evaluate(*config_.per_event_query, part.live_store).size() > 0) ++part.hits;
  }

  if (config_.window.length <= 1) {
    emit(p, rec, m);
  } else if (auto agg = part.window.push(std::move(rec))) {
    emit(p, *agg, m);
  }
  ++part.events_in;
  part.processed.store(m.offset + 1);
  if (waiting_deploys_.load() > 0) {
    std::lock_guard lock(versions_mutex_);
    versions_cv_.notify_all();
  }
}

void Engine::emit(std::size_t p, const SensorRecord& rec, const broker::Message& m) {
  Partition& part = *parts_[p];
  const auto& rules = part.rules;
  ElementaryEvent ev{rec, clock_.fetch_add(1) + 1, p, m.offset};
  if (config_.record_evaluations) part.evaluations.push_back({p, m.offset, rules->version()});
  for (auto& ce : derive_complex(ev, *rules, config_.thresholds)) {
    sink_(ce);
    ++part.complex_out;
  }
}

EngineStats run_pipeline(broker::Cluster& cluster, const std::string& topic, const rules::RuleSet& ruleset,
                         const ComplexEventThresholds& thresholds, Sink sink, EngineConfig config) {
  config.topic = topic;
  config.thresholds = thresholds;
  Engine engine(cluster, ruleset, std::move(config), std::move(sink));
  engine.start();
  return engine.drain_and_stop();
}

}  // namespace sbcep::cep
