// Command-line entry point: convert, query, train-rules, run, bench,
// gen-store, gen-dataset.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "sbcep/bench.hpp"
#include "sbcep/broker.hpp"
#include "sbcep/cep.hpp"
#include "sbcep/config.hpp"
#include "sbcep/error.hpp"
#include "sbcep/ingest.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/risk.hpp"
#include "sbcep/rules.hpp"
#include "sbcep/sparql.hpp"
#include "sbcep/surrogate.hpp"

namespace {

using namespace sbcep;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  out << text;
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

Settings settings(const std::string& config_path, const std::string& bands_path = {}) {
  Settings s;
  if (!config_path.empty()) s = apply_config(load_config(config_path), s);
  if (!bands_path.empty()) s = apply_config(load_config(bands_path), s);
  return s;
}

std::vector<SensorRecord> dataset(const std::string& csv, const Settings& s, std::uint64_t seed, bool verbose) {
  if (csv.empty()) {
    auto ref = load_reference_dataset(seed);
    if (verbose) std::cerr << "dataset: " << ref.origin << " (" << ref.records.size() << " records)\n";
    return std::move(ref.records);
  }
  auto raw = load_csv(csv, s.columns.value_or(ColumnMapping::occupancy_default()));
  if (raw.empty()) return raw;
  PreprocessReport rep;
  auto records = preprocess(raw, &rep);
  if (verbose) {
    std::cerr << "preprocess: " << rep.input << " in, " << rep.output << " out, " << rep.filled << " filled, "
              << rep.dropped << " dropped\n";
  }
  return records;
}

struct Common {
  std::string config;
  std::uint64_t seed = 2015;
  bool verbose = false;
};

int cmd_convert(const Common& c, const std::string& csv, const std::string& out) {
  const auto s = settings(c.config);
  const auto records = dataset(csv, s, c.seed, c.verbose);
  const auto store = rdf::build_store(records);
  spit(out, rdf::serialize(store));
  if (c.verbose) std::cerr << "triples: " << store.size() << "\n";
  return 0;
}

int cmd_query(const Common& c, const std::string& nt, const std::string& query_ref, const std::string& format) {
  std::string text;
  if (std::filesystem::exists(query_ref)) text = slurp(query_ref);
  else text = sparql::find_query(query_ref).text;
  const auto query = sparql::parse_query(text);
  const auto store = rdf::load_store(nt);
  const auto rs = sparql::evaluate(query, store);
  std::cout << (format == "json" ? sparql::to_json(rs) : sparql::to_csv(rs));
  std::cerr << rs.size() << " rows, query took " << rs.elapsed_seconds << " s\n";
  (void)c;
  return 0;
}

int cmd_train(const Common& c, const std::string& csv, const std::string& out, const std::string& tree_out) {
  const auto s = settings(c.config);
  const auto records = dataset(csv, s, c.seed, c.verbose);
  const auto tree = rules::induce_tree(records, s.features, Feature::Occupancy, s.induction);
  const auto rs = rules::extract_rules(tree);
  const std::string tree_text = rules::export_tree(tree);
  if (!tree_out.empty()) spit(tree_out, tree_text);
  if (out.empty() || out == "-") {
    std::cout << "# tree\n" << tree_text << "# rules\n" << rules::format_rules(rs);
  } else {
    spit(out, rules::format_rules(rs));
    std::cout << tree_text;
  }
  std::cerr << tree.leaf_count() << " leaves, depth " << tree.depth() << "\n";
  return 0;
}

struct RunOptions {
  std::string csv, rules, bands, alerts, events, faults;
};

int cmd_run(const Common& c, const RunOptions& o) {
  const auto s = settings(c.config, o.bands);
  const auto records = dataset(o.csv, s, c.seed, c.verbose);
  if (records.empty()) throw DataError("no records to process");

  const auto t0 = std::chrono::steady_clock::now();
  const auto history = rdf::build_store(records);
  const auto ruleset = o.rules.empty()
                           ? rules::extract_rules(rules::induce_tree(records, s.features, Feature::Occupancy, s.induction))
                           : rules::load_rules(o.rules);

  broker::Cluster cluster(s.cluster);
  const std::string topic = "sensor-rdf";
  cluster.create_topic(topic);
  broker::FaultInjector faults(o.faults.empty() ? std::vector<broker::FaultAction>{}
                                                : broker::parse_fault_scenario(slurp(o.faults)));
  std::uint64_t published = 0;
  for (const auto& r : records) {
    faults.apply_due(cluster, published);
    cluster.publish(topic, cep::encode_event(r));
    ++published;
  }
  faults.apply_due(cluster, published);

  auto alert_log = o.alerts.empty() ? std::make_unique<risk::AlertLog>() : std::make_unique<risk::AlertLog>(o.alerts);
  risk::Estimator estimator(&history, s.risk, *alert_log);
  std::optional<cep::JsonlSink> event_log;
  if (!o.events.empty()) event_log.emplace(o.events);
  auto risk_sink = estimator.sink();
  cep::Sink event_sink = event_log ? event_log->sink() : cep::Sink{};
  cep::Sink sink = [&](const cep::ComplexEvent& e) {
    if (event_sink) event_sink(e);
    risk_sink(e);
  };

  cep::EngineConfig ec;
  ec.window = s.window;
  const auto stats = cep::run_pipeline(cluster, topic, ruleset, s.thresholds, sink, ec);
  if (stats.error) throw RuntimeFailure("pipeline aborted: " + *stats.error);

  std::map<std::string, std::size_t> outcomes;
  for (const auto& d : estimator.decisions()) ++outcomes[std::string(risk::outcome_name(d.decision.outcome))];
  std::size_t confirmed = 0;
  const auto alerts = alert_log->alerts();
  for (const auto& a : alerts) confirmed += a.severity == "confirmed";

  std::cout << "events_in: " << stats.events_in << "\n"
            << "complex_events: " << stats.complex_events_out << "\n"
            << "ruleset_version: " << ruleset.version() << " (" << ruleset.size() << " rules)\n";
  for (const auto& [name, n] : outcomes) std::cout << "decisions." << name << ": " << n << "\n";
  std::cout << "alerts: " << alerts.size() << " (" << confirmed << " confirmed)\n";
  std::cerr << "pipeline took " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << " s, engine throughput " << stats.throughput << " events/s\n";
  return 0;
}

struct BenchOptions {
  std::string suite = "all";
  std::string format = "csv";
  std::string out;
  std::vector<std::size_t> counts;
  std::size_t trials = 5;
  std::size_t deploy_trials = 20;
  bool large = false;
};

int cmd_bench(const Common& c, const BenchOptions& o) {
  bench::BenchConfig cfg;
  cfg.seed = c.seed;
  cfg.trials = o.trials;
  cfg.deploy_trials = o.deploy_trials;
  cfg.stores = bench::table11_stores(o.large);
  if (!o.counts.empty()) cfg.event_counts = o.counts;
  bench::BenchReport report;
  report.seed = cfg.seed;
  report.environment = bench::environment_note();
  auto want = [&](const char* s) { return o.suite == "all" || o.suite == s; };
  if (want("throughput")) report.append(bench::run_throughput(cfg));
  if (want("deploy")) report.append(bench::run_deployment_bench(cfg));
  if (want("scaling")) report.append(bench::run_query_scaling(cfg));
  if (want("metrics")) report.append(bench::run_metrics(cfg));
  const auto fmt = o.format == "json" ? bench::ReportFormat::Json : bench::ReportFormat::Csv;
  if (o.out.empty() || o.out == "-") std::cout << bench::format_report(report, fmt);
  else bench::emit_report(report, fmt, o.out);
  return 0;
}

int cmd_gen_store(const Common& c, std::size_t triples, std::size_t classes, std::size_t entities,
                  const std::string& out) {
  const auto store = rdf::generate_synthetic(triples, classes, entities, c.seed);
  spit(out, rdf::serialize(store));
  if (c.verbose) {
    std::cerr << store.size() << " triples, " << store.class_count() << " classes, " << store.entity_count()
              << " entities\n";
  }
  return 0;
}

int cmd_gen_dataset(const Common& c, std::size_t rows, const std::string& out) {
  SurrogateParams p;
  p.seed = c.seed;
  p.rows = rows;
  spit(out, format_csv(synthesize_occupancy(p)));
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Data: return 2;
    case ErrorKind::Runtime: return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-based complex event processing for smart-building sensor streams"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "key = value configuration file");
  app.add_option("--seed", common.seed, "seed for synthetic data and sampling");
  app.add_flag("-v,--verbose", common.verbose, "diagnostics on stderr");

  std::string csv, out, nt, query_ref, format = "csv", tree_out;
  auto* convert = app.add_subcommand("convert", "convert a sensor CSV to the triple exchange format");
  convert->add_option("csv", csv, "input CSV")->required();
  convert->add_option("-o,--output", out, "output triple file (default stdout)");

  auto* query = app.add_subcommand("query", "evaluate a query over a triple file");
  query->add_option("store", nt, "triple file")->required();
  query->add_option("query", query_ref, "query file or catalog id")->required();
  query->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* train = app.add_subcommand("train-rules", "induce a decision tree and print its rules");
  train->add_option("csv", csv, "training CSV (default: reference dataset)");
  train->add_option("-o,--output", out, "rule file");
  train->add_option("--tree", tree_out, "tree text file");

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "broker -> CEP -> risk pipeline over a dataset");
  run->add_option("csv", run_opts.csv, "sensor CSV (default: reference dataset)");
  run->add_option("--rules", run_opts.rules, "rule file (default: induced from the data)");
  run->add_option("--bands", run_opts.bands, "band/threshold configuration");
  run->add_option("--alerts", run_opts.alerts, "alert log (JSONL)");
  run->add_option("--events", run_opts.events, "complex-event log (JSONL)");
  run->add_option("--faults", run_opts.faults, "broker fault scenario");

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "run benchmark suites and print a report");
  bench->add_option("--suite", bench_opts.suite, "throughput|deploy|scaling|metrics|all")
      ->check(CLI::IsMember({"throughput", "deploy", "scaling", "metrics", "all"}));
  bench->add_option("--format", bench_opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("-o,--output", bench_opts.out, "report file (default stdout)");
  bench->add_option("--counts", bench_opts.counts, "event counts")->delimiter(',');
  bench->add_option("--trials", bench_opts.trials, "trials per cell")->check(CLI::PositiveNumber);
  bench->add_option("--deploy-trials", bench_opts.deploy_trials, "deployments per load")->check(CLI::PositiveNumber);
  bench->add_flag("--large", bench_opts.large, "include the 1M and 2M triple stores");

  std::size_t triples = 0, classes = 0, entities = 0;
  auto* gen_store = app.add_subcommand("gen-store", "generate a synthetic triple store");
  gen_store->add_option("--triples", triples)->required();
  gen_store->add_option("--classes", classes)->required();
  gen_store->add_option("--entities", entities)->required();
  gen_store->add_option("-o,--output", out, "output triple file (default stdout)");

  std::size_t rows = 8143;
  auto* gen_dataset = app.add_subcommand("gen-dataset", "write the synthetic occupancy dataset as CSV");
  gen_dataset->add_option("--rows", rows, "row count");
  gen_dataset->add_option("-o,--output", out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*convert) return cmd_convert(common, csv, out);
    if (*query) return cmd_query(common, nt, query_ref, format);
    if (*train) return cmd_train(common, csv, out, tree_out);
    if (*run) return cmd_run(common, run_opts);
    if (*bench) return cmd_bench(common, bench_opts);
    if (*gen_store) return cmd_gen_store(common, triples, classes, entities, out);
    if (*gen_dataset) return cmd_gen_dataset(common, rows, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
