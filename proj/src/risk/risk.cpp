#include "sbcep/risk.hpp"

#include <fstream>

#include "json.hpp"
#include "text_util.hpp"

namespace sbcep::risk {

std::string_view level_name(RiskLevel l) {
  switch (l) {
    case RiskLevel::Normal: return "Normal";
    case RiskLevel::Moderate: return "Moderate";
    case RiskLevel::Risk: return "Risk";
  }
  return "?";
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::NoAction: return "NoAction";
    case Outcome::Watch: return "Watch";
    case Outcome::TakeAction: return "TakeAction";
    case Outcome::Alert: return "Alert";
  }
  return "?";
}

Bands Bands::defaults() {
  Bands b;
  b.by_feature = {{Feature::CO2, {1100, 1300}}, {Feature::Temperature, {23, 28}}, {Feature::Humidity, {30, 40}}};
  b.tag_feature = {{cep::kAirQualityPoor, Feature::CO2},
                   {cep::kTemperatureModerate, Feature::Temperature},
                   {cep::kTemperatureHigh, Feature::Temperature},
                   {cep::kHumidityHigh, Feature::Humidity}};
  return b;
}

Feature Bands::feature_for(std::string_view tag) const {
  auto it = tag_feature.find(tag);
  if (it == tag_feature.end() || !by_feature.count(it->second)) {
    throw DataError("no risk band configured for tag '" + std::string(tag) + "'");
  }
  return it->second;
}

const Band& Bands::band(Feature f) const {
  auto it = by_feature.find(f);
  if (it == by_feature.end()) throw DataError("no risk band for feature '" + std::string(feature_name(f)) + "'");
  return it->second;
}

void Bands::validate() const {
  for (const auto& [f, b] : by_feature) {
    if (!(b.moderate <= b.risk)) {
      throw UsageError("risk band for " + std::string(feature_name(f)) + " must have moderate <= risk");
    }
  }
}

RiskLevel band_value(double value, const Band& band) {
  if (value <= band.moderate) return RiskLevel::Normal;
  if (value <= band.risk) return RiskLevel::Moderate;
  return RiskLevel::Risk;
}

RiskLevel band_level(const cep::ComplexEvent& event, const Bands& bands) {
  const Feature f = bands.feature_for(event.tag);
  std::optional<double> v = event.value;
  if (!v) v = event.source.record.value(f);
  if (!v) throw DataError("event '" + event.tag + "' carries no " + std::string(feature_name(f)) + " value");
  return band_value(*v, bands.band(f));
}

RiskDecision assess(RiskLevel level, bool realtime, bool historical) {
  RiskDecision d;
  d.level = level;
  switch (level) {
    case RiskLevel::Normal:
      d.outcome = Outcome::NoAction;
      d.rationale = "no risk: don't have to worry";
      break;
    case RiskLevel::Moderate:
      if (historical) {
        d.outcome = Outcome::TakeAction;
        d.rationale = realtime ? "moderate, stored and real-time data agree: don't have to worry but take action"
                               : "moderate, stored data supports it: don't have to worry but take action";
      } else {
        d.outcome = Outcome::Watch;
        d.rationale = "moderate: chance of worry but not sure";
      }
      break;
    case RiskLevel::Risk:
      if (realtime) {
        d.outcome = Outcome::Alert;
        d.confirmed = historical;
        d.rationale = historical ? "high risk, instant action needed: stored RDF result also supports it"
                                 : "high risk, instant action needed: not yet seen in stored RDF data";
      } else if (historical) {
        d.outcome = Outcome::TakeAction;
        d.rationale = "risk band reading without real-time confirmation: take action";
      } else {
        d.outcome = Outcome::Watch;
        d.rationale = "isolated risk band reading: keep watching";
      }
      break;
  }
  return d;
}

RiskDecision assess(const RiskInputs& in) { return assess(in.level, in.realtime_supports, in.historical_supports); }

AlertLog::AlertLog(const std::string& path) : path_(path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
}

void AlertLog::append(Alert alert) {
  std::lock_guard lock(mutex_);
  if (!ids_.insert(alert.event_id).second) throw DataError("duplicate alert for event '" + alert.event_id + "'");
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << to_json_line(alert) << '\n';
    if (!out) throw RuntimeFailure("alert log write failed for '" + *path_ + "'");
  }
  alerts_.push_back(std::move(alert));
}

std::vector<Alert> AlertLog::alerts() const {
  std::lock_guard lock(mutex_);
  return alerts_;
}

std::size_t AlertLog::size() const {
  std::lock_guard lock(mutex_);
  return alerts_.size();
}

std::string to_json_line(const Alert& a) {
  nlohmann::json j;
  j["time"] = a.time;
  j["severity"] = a.severity;
  j["tag"] = a.tag;
  j["value"] = a.value;
  j["rationale"] = a.rationale;
  j["event"] = a.event_id;
  return j.dump();
}

Alert emit_alert(const RiskDecision& decision, const cep::ComplexEvent& event, AlertLog& log) {
  if (decision.outcome != Outcome::Alert) {
    throw UsageError("emit_alert called on a " + std::string(outcome_name(decision.outcome)) + " decision");
  }
  Alert a;
  a.severity = decision.confirmed ? "confirmed" : "unconfirmed";
  a.tag = event.tag;
  a.event_id = event.source.record.row_id + "/" + event.tag;
  a.value = event.value.value_or(0);
  a.time = event.source.record.timestamp ? event.source.record.timestamp->iso() : std::string();
  a.rationale = decision.rationale;
  a.message = event.tag + " at " + detail::format_double(a.value) + " (" + a.severity + ")";
  log.append(a);
  return a;
}

sparql::Query restrict_to_window(sparql::Query query, DateTime from, DateTime to) {
  const std::string date_iri = std::string(rdf::kSchemaNs) + "date";
  std::optional<std::string> date_var;
  for (const auto& p : query.patterns) {
    if (!p.predicate.is_variable() && p.predicate.term.is_iri() && p.predicate.term.value == date_iri &&
        p.object.is_variable()) {
      date_var = p.object.variable;
      break;
    }
  }
  if (!date_var) {
    std::optional<std::string> subject;
    for (const auto& p : query.patterns) {
      if (p.subject.is_variable()) {
        subject = p.subject.variable;
        break;
      }
    }
    if (!subject) throw DataError("query has no observation variable to date");
    date_var = "_window_date";
    query.patterns.push_back({sparql::PatternTerm::var(*subject),
                              sparql::PatternTerm::constant(rdf::Term::iri(date_iri)),
                              sparql::PatternTerm::var(*date_var)});
  }
  using sparql::CastType;
  using sparql::CompareOp;
  using sparql::FilterExpr;
  query.add_filter(FilterExpr::compare(
      {CastType::DateTime, *date_var, CompareOp::Ge, static_cast<double>(from.epoch_seconds())}));
  query.add_filter(FilterExpr::compare(
      {CastType::DateTime, *date_var, CompareOp::Lt, static_cast<double>(to.epoch_seconds())}));
  return query;
}

Estimator::Estimator(const rdf::TripleStore* history, EstimatorConfig config, AlertLog& log)
    : history_(history), config_(std::move(config)), log_(log) {
  config_.bands.validate();
  if (config_.live_window == 0) throw UsageError("risk live window must hold at least one reading");
  for (const auto& [f, spec] : config_.queries) {
    const bool inline_text = spec.find('{') != std::string::npos;
    queries_.emplace(f, sparql::parse_query(inline_text ? spec : sparql::find_query(spec).text));
  }
}

const sparql::Query& Estimator::query_for(Feature f) const {
  auto it = queries_.find(f);
  if (it == queries_.end()) throw DataError("no risk query configured for " + std::string(feature_name(f)));
  return it->second;
}

void Estimator::feed_live(const cep::ElementaryEvent& e) {
  Live& live = live_[e.partition];
  if (live.last_offset && *live.last_offset == e.offset) return;
  live.last_offset = e.offset;
  auto triples = rdf::to_triples(e.record);
  live.store.insert(triples);
  live.events.push_back(std::move(triples));
  if (live.events.size() > config_.live_window) {
    live.store.erase(live.events.front());
    live.events.pop_front();
  }
}

bool Estimator::realtime_supports(Feature f, std::size_t partition) const {
  auto it = live_.find(partition);
  if (it == live_.end()) return false;
  return sparql::evaluate(query_for(f), it->second.store).size() >= config_.realtime_min_rows;
}

bool Estimator::historical_supports(Feature f, const std::optional<DateTime>& at) const {
  if (!history_ || !at) return false;
  const auto q = restrict_to_window(query_for(f), *at - config_.historical_span_seconds, *at);
  return sparql::evaluate(q, *history_).size() >= config_.historical_min_rows;
}

std::optional<RiskDecision> Estimator::observe(const cep::ComplexEvent& event) {
  std::lock_guard lock(mutex_);
  feed_live(event.source);
  auto it = config_.bands.tag_feature.find(event.tag);
  if (it == config_.bands.tag_feature.end()) return std::nullopt;
  const Feature f = it->second;

  RiskInputs in;
  in.event = event;
  in.level = band_level(event, config_.bands);
  in.value = event.value ? *event.value : event.source.record.value(f).value_or(0);
  if (in.level != RiskLevel::Normal) {
    in.realtime_supports = realtime_supports(f, event.source.partition);
    in.historical_supports = historical_supports(f, event.source.record.timestamp);
  }
  RiskDecision d = assess(in);
  if (d.outcome == Outcome::Alert) emit_alert(d, event, log_);
  decisions_.push_back({event.source.record.row_id + "/" + event.tag, event.tag, in.value, d, in.realtime_supports,
                        in.historical_supports});
  return d;
}

cep::Sink Estimator::sink() {
  return [this](const cep::ComplexEvent& e) { observe(e); };
}

std::vector<DecisionRecord> Estimator::decisions() const {
  std::lock_guard lock(mutex_);
  return decisions_;
}

}  // namespace sbcep::risk
