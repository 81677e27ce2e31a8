#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sbcep/cep.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/sparql.hpp"

namespace sbcep::risk {

enum class RiskLevel { Normal, Moderate, Risk };
enum class Outcome { NoAction, Watch, TakeAction, Alert };

std::string_view level_name(RiskLevel l);
std::string_view outcome_name(Outcome o);

// Half-open tiers: Normal <= moderate < Moderate <= risk < Risk.
struct Band {
  double moderate = 0;
  double risk = 0;
};

struct Bands {
  std::map<Feature, Band> by_feature;
  // Complex-event tag -> banded feature.
  std::map<std::string, Feature, std::less<>> tag_feature;

  // CO2 1100/1300, temperature 23/28, humidity 30/40.
  static Bands defaults();
  // Throws DataError when the tag has no configured band.
  Feature feature_for(std::string_view tag) const;
  const Band& band(Feature f) const;
  void validate() const;
};

RiskLevel band_value(double value, const Band& band);
// Uses the event's value, or the source record's reading of the tag's feature.
RiskLevel band_level(const cep::ComplexEvent& event, const Bands& bands);

struct RiskInputs {
  cep::ComplexEvent event;
  double value = 0;
  RiskLevel level = RiskLevel::Normal;
  bool historical_supports = false;
  bool realtime_supports = false;
};

struct RiskDecision {
  Outcome outcome = Outcome::NoAction;
  bool confirmed = false;
  std::string rationale;
  RiskLevel level = RiskLevel::Normal;
};

RiskDecision assess(RiskLevel level, bool realtime_supports, bool historical_supports);
RiskDecision assess(const RiskInputs& inputs);

struct Alert {
  std::string severity;  // "confirmed" | "unconfirmed"
  std::string message;
  std::string event_id;  // row id + tag
  std::string tag;
  double value = 0;
  std::string time;  // data time of the triggering reading
  std::string rationale;
};

// Append-only and safe for concurrent appenders. Rejects a second alert for
// the same event.
class AlertLog {
 public:
  AlertLog() = default;
  // Also streams every alert to a JSONL file.
  explicit AlertLog(const std::string& path);

  void append(Alert alert);
  std::vector<Alert> alerts() const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::vector<Alert> alerts_;
  std::set<std::string> ids_;
  std::optional<std::string> path_;
};

std::string to_json_line(const Alert& alert);

// Throws UsageError unless decision.outcome is Alert.
Alert emit_alert(const RiskDecision& decision, const cep::ComplexEvent& event, AlertLog& log);

struct EstimatorConfig {
  Bands bands = Bands::defaults();
  // Catalog query id (or query text) per banded feature.
  std::map<Feature, std::string> queries{
      {Feature::CO2, "co2-occupancy-humidity"}, {Feature::Temperature, "temperature"}, {Feature::Humidity, "humidity"}};
  std::size_t historical_min_rows = 1;
  std::int64_t historical_span_seconds = 24 * 3600;
  std::size_t live_window = 10;  // recent readings per partition
  std::size_t realtime_min_rows = 2;
};

// Restricts a query to observations dated in [from, to).
sparql::Query restrict_to_window(sparql::Query query, DateTime from, DateTime to);

struct DecisionRecord {
  std::string event_id;
  std::string tag;
  double value = 0;
  RiskDecision decision;
  bool realtime = false;
  bool historical = false;
};

// The per-event procedure: band, consult the live window and the stored RDF
// when at least Moderate, decide, and raise alerts.
class Estimator {
 public:
  Estimator(const rdf::TripleStore* history, EstimatorConfig config, AlertLog& log);

  // Tags without a band only feed the live window.
  std::optional<RiskDecision> observe(const cep::ComplexEvent& event);
  cep::Sink sink();

  bool realtime_supports(Feature f, std::size_t partition) const;
  bool historical_supports(Feature f, const std::optional<DateTime>& at) const;
  std::vector<DecisionRecord> decisions() const;

 private:
  struct Live {
    std::optional<std::uint64_t> last_offset;
    std::deque<std::vector<rdf::Triple>> events;
    rdf::TripleStore store;
  };

  void feed_live(const cep::ElementaryEvent& e);
  const sparql::Query& query_for(Feature f) const;

  const rdf::TripleStore* history_;
  EstimatorConfig config_;
  AlertLog& log_;
  std::map<Feature, sparql::Query> queries_;
  std::map<std::size_t, Live> live_;
  std::vector<DecisionRecord> decisions_;
  mutable std::mutex mutex_;
};

}  // namespace sbcep::risk
