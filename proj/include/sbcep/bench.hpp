#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbcep/ingest.hpp"
#include "sbcep/rules.hpp"

namespace sbcep::bench {

struct StoreSpec {
  std::string name;
  std::size_t triples = 0;
  std::size_t classes = 0;
  std::size_t entities = 0;
};

// RDF 1-3; RDF 4-5 (1M and 2M triples) only when include_large is set.
std::vector<StoreSpec> table11_stores(bool include_large = false);

struct BenchConfig {
  std::vector<std::size_t> event_counts{10000, 20000, 30000, 40000, 50000};
  std::vector<std::string> throughput_queries{"Q1", "Q2", "Q3", "Q4"};
  std::vector<std::string> scaling_queries{"Q1", "Q2", "Q3", "Q4", "Q5", "Q6"};
  std::vector<StoreSpec> stores = table11_stores();
  std::size_t trials = 5;
  std::size_t deploy_trials = 20;
  std::size_t live_window = 128;  // events the per-event throughput query sees
  std::uint64_t seed = 2015;
  std::size_t metrics_events = 1000;

  void validate() const;
};

struct Summary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation, 0 for one sample
  double min = 0;
  double median = 0;
  std::size_t samples = 0;
};

Summary summarize(std::span<const double> values);

struct Cell {
  std::string table;
  std::string row;
  std::string column;
  std::string unit;
  Summary stats;
  bool failed = false;
  std::string note;
};

struct BenchReport {
  std::vector<Cell> cells;
  std::string environment;
  std::uint64_t seed = 0;

  const Cell* find(const std::string& table, const std::string& row, const std::string& column) const;
  void append(const BenchReport& other);
};

std::string environment_note();

// Source events for load generation: the reference dataset cycled with
// fresh row ids.
std::vector<SensorRecord> load_events(std::size_t n, std::uint64_t seed);

// Tables: "throughput" (events/s), "throughput_seconds" (s), "event_cost" (s/event).
BenchReport run_throughput(const BenchConfig& config);
// Table "deployment": rows "R1", columns "0" (idle) and each event count.
BenchReport run_deployment_bench(const BenchConfig& config);
// Table "scaling": rows query ids, columns store names, seconds.
BenchReport run_query_scaling(const BenchConfig& config);

struct MetricsReport {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Labels must be 0 or 1 and the lists equally long.
MetricsReport compute_metrics(std::span<const int> predicted, std::span<const int> actual);

struct ClassificationRun {
  MetricsReport metrics;
  rules::DecisionTree tree;
  rules::RuleSet rules;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

// Seeded shuffle, train_fraction for induction, the rest streamed through
// the CEP engine; predictions are the engine's occupancy complex events.
ClassificationRun evaluate_classifier(std::span<const SensorRecord> records, std::span<const Feature> features,
                                      const rules::InductionParams& params, double train_fraction,
                                      std::uint64_t seed, std::optional<std::size_t> max_test = std::nullopt);

// Table "metrics": row "rules", columns accuracy/precision/recall/f1 and the
// confusion counts.
BenchReport run_metrics(const BenchConfig& config);

enum class ReportFormat { Csv, Json };
std::string format_report(const BenchReport& report, ReportFormat format);
void emit_report(const BenchReport& report, ReportFormat format, const std::string& path);

}  // namespace sbcep::bench
