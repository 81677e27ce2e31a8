#include "sbcep/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "json.hpp"
#include "sbcep/broker.hpp"
#include "sbcep/cep.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/sparql.hpp"
#include "sbcep/surrogate.hpp"
#include "text_util.hpp"

namespace sbcep::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const std::string kTopic = "bench";

Cell make_cell(std::string table, std::string row, std::string column, std::string unit,
               std::span<const double> values) {
  Cell c{std::move(table), std::move(row), std::move(column), std::move(unit), summarize(values), false, {}};
  return c;
}

Cell failed_cell(std::string table, std::string row, std::string column, std::string unit, std::string why) {
  Cell c{std::move(table), std::move(row), std::move(column), std::move(unit), {}, true, std::move(why)};
  return c;
}

BenchReport new_report(const BenchConfig& config) {
  BenchReport r;
  r.seed = config.seed;
  r.environment = environment_note();
  return r;
}

}  // namespace

std::vector<StoreSpec> table11_stores(bool include_large) {
  std::vector<StoreSpec> s = {{"RDF1", 8000, 19, 2200}, {"RDF2", 25000, 19, 3700}, {"RDF3", 175000, 19, 30000}};
  if (include_large) {
    s.push_back({"RDF4", 1000000, 32, 376000});
    s.push_back({"RDF5", 2000000, 48, 460000});
  }
  return s;
}

void BenchConfig::validate() const {
  for (auto n : event_counts) {
    if (n == 0) throw UsageError("event counts must be positive");
  }
  if (trials < 1 || deploy_trials < 1) throw UsageError("trials must be at least 1");
  if (live_window < 1) throw UsageError("live window must be at least 1");
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.samples = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
  return s;
}

const Cell* BenchReport::find(const std::string& table, const std::string& row, const std::string& column) const {
  for (const auto& c : cells) {
    if (c.table == table && c.row == row && c.column == column) return &c;
  }
  return nullptr;
}

void BenchReport::append(const BenchReport& other) {
  cells.insert(cells.end(), other.cells.begin(), other.cells.end());
}

std::string environment_note() {
  std::string note = "compiler=";
#if defined(__clang__)
  note += "clang " __clang_version__;
#elif defined(__GNUC__)
  note += "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__);
#else
  note += "unknown";
#endif
#ifdef NDEBUG
  note += "; build=release";
#else
  note += "; build=debug";
#endif
  note += "; hardware_threads=" + std::to_string(std::thread::hardware_concurrency());
  return note;
}

std::vector<SensorRecord> load_events(std::size_t n, std::uint64_t seed) {
  const auto ref = load_reference_dataset(seed);
  if (ref.records.empty()) throw DataError("reference dataset is empty");
  std::vector<SensorRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SensorRecord r = ref.records[i % ref.records.size()];
    r.row_id = "e" + std::to_string(i);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::vector<std::string> encode_all(std::span<const SensorRecord> events) {
  std::vector<std::string> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(cep::encode_event(e));
  return out;
}

std::unique_ptr<broker::Cluster> loaded_cluster(std::span<const std::string> payloads, std::size_t n) {
  auto cluster = std::make_unique<broker::Cluster>();
  cluster->create_topic(kTopic);
  for (std::size_t i = 0; i < n; ++i) cluster->publish(kTopic, payloads[i]);
  return cluster;
}

}  // namespace

BenchReport run_throughput(const BenchConfig& config) {
  config.validate();
  BenchReport report = new_report(config);
  if (config.event_counts.empty() || config.throughput_queries.empty()) return report;

  const std::size_t max_n = *std::max_element(config.event_counts.begin(), config.event_counts.end());
  const auto payloads = encode_all(load_events(max_n, config.seed));
  const auto ruleset = rules::table2_rules();

  std::map<std::string, sparql::Query> queries;
  for (const auto& id : config.throughput_queries) {
    const auto& all = sparql::throughput_queries();
    auto it = std::find_if(all.begin(), all.end(), [&](const sparql::CatalogQuery& q) { return q.id == id; });
    if (it == all.end()) throw UsageError("unknown throughput query '" + id + "'");
    queries.emplace(id, sparql::parse_query(it->text));
  }

  // seconds[(query, count)] over trials; trials interleave the cells.
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> seconds;
  std::map<std::pair<std::string, std::size_t>, std::string> failures;
  for (std::size_t t = 0; t < config.trials; ++t) {
    for (auto n : config.event_counts) {
      for (const auto& id : config.throughput_queries) {
        const auto key = std::make_pair(id, n);
        if (failures.count(key)) continue;
        try {
          auto cluster = loaded_cluster(payloads, n);
          cep::EngineConfig ec;
          ec.topic = kTopic;
          ec.per_event_query = queries.at(id);
          ec.live_window = config.live_window;
          cep::Engine engine(*cluster, ruleset, ec, [](const cep::ComplexEvent&) {});
          engine.start();
          auto stats = engine.drain_and_stop();
          if (stats.error) throw RuntimeFailure(*stats.error);
          if (stats.events_in != n) throw RuntimeFailure("engine consumed " + std::to_string(stats.events_in) + " of " + std::to_string(n));
          seconds[key].push_back(stats.wall_seconds);
        } catch (const std::exception& e) {
          failures[key] = e.what();
        }
      }
    }
  }

  for (const auto& id : config.throughput_queries) {
    for (auto n : config.event_counts) {
      const auto key = std::make_pair(id, n);
      const std::string col = std::to_string(n);
      if (failures.count(key)) {
        for (const char* table : {"throughput", "throughput_seconds", "event_cost"}) {
          report.cells.push_back(failed_cell(table, id, col, "", failures[key]));
        }
        continue;
      }
      const auto& secs = seconds[key];
      std::vector<double> rate, cost;
      for (double s : secs) {
        rate.push_back(static_cast<double>(n) / s);
        cost.push_back(s / static_cast<double>(n));
      }
      report.cells.push_back(make_cell("throughput", id, col, "events/s", rate));
      report.cells.push_back(make_cell("throughput_seconds", id, col, "s", secs));
      report.cells.push_back(make_cell("event_cost", id, col, "s/event", cost));
    }
  }
  return report;
}

BenchReport run_deployment_bench(const BenchConfig& config) {
  config.validate();
  BenchReport report = new_report(config);
  std::vector<std::size_t> loads{0};
  loads.insert(loads.end(), config.event_counts.begin(), config.event_counts.end());
  const std::size_t max_n = *std::max_element(loads.begin(), loads.end());
  const auto payloads = encode_all(load_events(max_n, config.seed));
  const auto base = rules::table2_rules();

  for (auto load : loads) {
    std::vector<double> latencies;
    std::string failure;
    for (std::size_t t = 0; t < config.deploy_trials && failure.empty(); ++t) {
      try {
        auto cluster = loaded_cluster(payloads, load);
        cep::EngineConfig ec;
        ec.topic = kTopic;
        cep::Engine engine(*cluster, base, ec, [](const cep::ComplexEvent&) {});
        engine.start();
        auto rule = rules::parse_rule("IF co2 > " + std::to_string(1100 + t) + " THEN AirQualityAlarm", 0,
                                      "bench-" + std::to_string(t));
        latencies.push_back(engine.deploy(cep::Change::Inject, rule));
        auto stats = engine.drain_and_stop();
        if (stats.error) throw RuntimeFailure(*stats.error);
      } catch (const std::exception& e) {
        failure = e.what();
      }
    }
    const std::string col = std::to_string(load);
    if (!failure.empty()) report.cells.push_back(failed_cell("deployment", "R1", col, "s", failure));
    else report.cells.push_back(make_cell("deployment", "R1", col, "s", latencies));
  }
  return report;
}

BenchReport run_query_scaling(const BenchConfig& config) {
  config.validate();
  BenchReport report = new_report(config);
  if (config.stores.empty() || config.scaling_queries.empty()) return report;

  std::vector<std::pair<std::string, sparql::Query>> queries;
  for (const auto& id : config.scaling_queries) {
    const auto& all = sparql::scaling_queries();
    auto it = std::find_if(all.begin(), all.end(), [&](const sparql::CatalogQuery& q) { return q.id == id; });
    if (it == all.end()) throw UsageError("unknown scaling query '" + id + "'");
    queries.emplace_back(id, sparql::parse_query(it->text));
  }
  for (const auto& spec : config.stores) {
    rdf::TripleStore store;
    try {
      store = rdf::generate_synthetic(spec.triples, spec.classes, spec.entities, config.seed);
    } catch (const std::exception& e) {
      for (const auto& [id, q] : queries) report.cells.push_back(failed_cell("scaling", id, spec.name, "s", e.what()));
      continue;
    }
    for (const auto& [id, q] : queries) {
      std::vector<double> secs;
      for (std::size_t t = 0; t < config.trials; ++t) {
        const auto t0 = Clock::now();
        auto rs = sparql::evaluate(q, store);
        secs.push_back(seconds_since(t0));
      }
      report.cells.push_back(make_cell("scaling", id, spec.name, "s", secs));
    }
  }
  return report;
}

MetricsReport compute_metrics(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw DataError("prediction and label lists differ in length (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(actual.size()) + ")");
  }
  MetricsReport m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i], a = actual[i];
    if ((p != 0 && p != 1) || (a != 0 && a != 1)) throw DataError("labels must be 0 or 1 (index " + std::to_string(i) + ")");
    if (p && a) ++m.tp;
    else if (p && !a) ++m.fp;
    else if (!p && a) ++m.fn;
    else ++m.tn;
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  m.precision = m.tp + m.fp == 0 ? 1.0 : d(m.tp) / d(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0 ? 1.0 : d(m.tp) / d(m.tp + m.fn);
  m.f1 = m.precision + m.recall == 0 ? 0.0 : 2 * m.precision * m.recall / (m.precision + m.recall);
  m.accuracy = m.total() == 0 ? 1.0 : d(m.tp + m.tn) / d(m.total());
  return m;
}

ClassificationRun evaluate_classifier(std::span<const SensorRecord> records, std::span<const Feature> features,
                                      const rules::InductionParams& params, double train_fraction,
                                      std::uint64_t seed, std::optional<std::size_t> max_test) {
  if (!(train_fraction > 0 && train_fraction < 1)) throw UsageError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(records.size())));
  std::vector<SensorRecord> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? train : test).push_back(records[order[i]]);
  if (max_test && test.size() > *max_test) test.resize(*max_test);
  if (train.empty() || test.empty()) throw DataError("not enough records for a train/test split");

  ClassificationRun run;
  run.tree = rules::induce_tree(train, features, Feature::Occupancy, params);
  run.rules = rules::extract_rules(run.tree);
  run.train_size = train.size();
  run.test_size = test.size();

  broker::Cluster cluster;
  cluster.create_topic(kTopic);
  cep::publish_records(cluster, kTopic, test);
  cep::MemorySink sink;
  auto stats = cep::run_pipeline(cluster, kTopic, run.rules, {}, sink.sink());
  if (stats.error) throw RuntimeFailure(*stats.error);

  std::vector<int> predicted(test.size(), -1), actual(test.size());
  for (const auto& e : sink.events()) {
    if (e.tag == cep::kOccupancyDetected) predicted.at(e.source.offset) = 1;
    else if (e.tag == cep::kOccupancyAbsent) predicted.at(e.source.offset) = 0;
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predicted[i] < 0) throw RuntimeFailure("no occupancy event for test record " + std::to_string(i));
    actual[i] = *test[i].occupancy;
  }
  run.metrics = compute_metrics(predicted, actual);
  return run;
}

BenchReport run_metrics(const BenchConfig& config) {
  config.validate();
  BenchReport report = new_report(config);
  const auto ref = load_reference_dataset(config.seed);
  const std::vector<Feature> features{Feature::Light, Feature::Humidity, Feature::CO2};
  const auto run = evaluate_classifier(ref.records, features, {}, 0.75, config.seed, config.metrics_events);
  const auto& m = run.metrics;
  auto put = [&](const char* col, double v, const char* unit) {
    const double vals[] = {v};
    report.cells.push_back(make_cell("metrics", "rules", col, unit, vals));
  };
  put("events", static_cast<double>(m.total()), "count");
  put("accuracy", m.accuracy, "ratio");
  put("precision", m.precision, "ratio");
  put("recall", m.recall, "ratio");
  put("f1", m.f1, "ratio");
  put("tp", static_cast<double>(m.tp), "count");
  put("fp", static_cast<double>(m.fp), "count");
  put("tn", static_cast<double>(m.tn), "count");
  put("fn", static_cast<double>(m.fn), "count");
  return report;
}

std::string format_report(const BenchReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    nlohmann::ordered_json j;
    j["seed"] = report.seed;
    j["environment"] = report.environment;
    j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
      nlohmann::ordered_json o;
      o["table"] = c.table;
      o["row"] = c.row;
      o["column"] = c.column;
      o["unit"] = c.unit;
      o["mean"] = c.stats.mean;
      o["stddev"] = c.stats.stddev;
      o["min"] = c.stats.min;
      o["median"] = c.stats.median;
      o["samples"] = c.stats.samples;
      o["status"] = c.failed ? "failed" : "ok";
      o["note"] = c.note;
      j["cells"].push_back(std::move(o));
    }
    return j.dump(2) + "\n";
  }
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  };
  std::string out = "table,row,column,unit,mean,stddev,min,median,samples,status,note\n";
  for (const auto& c : report.cells) {
    out += quote(c.table) + "," + quote(c.row) + "," + quote(c.column) + "," + quote(c.unit) + "," +
           detail::format_double(c.stats.mean) + "," + detail::format_double(c.stats.stddev) + "," +
           detail::format_double(c.stats.min) + "," + detail::format_double(c.stats.median) + "," +
           std::to_string(c.stats.samples) + "," + (c.failed ? "failed" : "ok") + "," + quote(c.note) + "\n";
  }
  return out;
}

void emit_report(const BenchReport& report, ReportFormat format, const std::string& path) {
  detail::write_file(path, format_report(report, format));
}

}  // namespace sbcep::bench
