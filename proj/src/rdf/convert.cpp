#include <algorithm>
#include <set>

#include "sbcep/error.hpp"
#include "sbcep/rdf.hpp"
#include "text_util.hpp"

namespace sbcep::rdf {

PredicateMap PredicateMap::occupancy_default() {
  const std::string ns(kSchemaNs);
  PredicateMap m;
  m.entries = {{RecordField::Date, ns + "date"},
               {RecordField::Temperature, ns + "Temperature"},
               {RecordField::Humidity, ns + "Humidity"},
               {RecordField::Light, ns + "Light"},
               {RecordField::CO2, ns + "CO2"},
               {RecordField::HumidityRatio, ns + "HumidityRatio"},
               {RecordField::Occupancy, ns + "Occupancy"}};
  return m;
}

PredicateMap PredicateMap::restricted_to(std::span<const RecordField> fields) const {
  PredicateMap m;
  for (const auto& e : entries) {
    if (std::find(fields.begin(), fields.end(), e.first) != fields.end()) m.entries.push_back(e);
  }
  return m;
}

void PredicateMap::validate() const {
  std::set<RecordField> fields;
  std::set<std::string> iris;
  for (const auto& [field, iri] : entries) {
    if (field == RecordField::RowId) throw DataError("predicate map cannot map the row id");
    if (iri.empty() || iri.find_first_of(" \t\r\n<>\"") != std::string::npos) {
      throw DataError("invalid predicate IRI '" + iri + "'");
    }
    if (!fields.insert(field).second || !iris.insert(iri).second) {
      throw DataError("predicate map is not injective at '" + iri + "'");
    }
  }
}

std::string observation_subject(std::string_view base, std::string_view row_id) {
  std::string s(base);
  s += "/observation/";
  s += row_id;
  return s;
}

namespace {

std::optional<Term> field_literal(const SensorRecord& r, RecordField f) {
  auto real = [](const std::optional<double>& v) -> std::optional<Term> {
    if (!v) return std::nullopt;
    return Term::literal(detail::format_double(*v), Datatype::Float);
  };
  switch (f) {
    case RecordField::RowId: return std::nullopt;
    case RecordField::Date:
      if (!r.timestamp) return std::nullopt;
      return Term::literal(r.timestamp->iso(), Datatype::DateTime);
    case RecordField::Temperature: return real(r.temperature);
    case RecordField::Humidity: return real(r.humidity);
    case RecordField::Light: return real(r.light);
    case RecordField::CO2: return real(r.co2);
    case RecordField::HumidityRatio: return real(r.humidity_ratio);
    case RecordField::Occupancy:
      if (!r.occupancy) return std::nullopt;
      return Term::literal(std::to_string(*r.occupancy), Datatype::Integer);
  }
  return std::nullopt;
}

}  // namespace

std::vector<Triple> to_triples(const SensorRecord& record, const PredicateMap& map,
                               std::string_view base) {
  std::vector<Triple> out;
  out.reserve(map.entries.size());
  const Term subject = Term::iri(observation_subject(base, record.row_id));
  for (const auto& [field, iri] : map.entries) {
    if (auto lit = field_literal(record, field)) {
      out.push_back(Triple{subject, Term::iri(iri), std::move(*lit)});
    }
  }
  return out;
}

SensorRecord from_triples(std::span<const Triple> triples, const PredicateMap& map) {
  SensorRecord r;
  if (triples.empty()) return r;
  const std::string& subject = triples.front().subject.value;
  if (auto pos = subject.rfind("/observation/"); pos != std::string::npos) {
    r.row_id = subject.substr(pos + 13);
  }
  for (const auto& t : triples) {
    auto it = std::find_if(map.entries.begin(), map.entries.end(),
                           [&](const auto& e) { return e.second == t.predicate.value; });
    if (it == map.entries.end() || !t.object.is_literal()) continue;
    const std::string& lex = t.object.value;
    switch (it->first) {
      case RecordField::RowId: break;
      case RecordField::Date: r.timestamp = DateTime::parse(lex); break;
      case RecordField::Temperature: r.temperature = detail::parse_double(lex); break;
      case RecordField::Humidity: r.humidity = detail::parse_double(lex); break;
      case RecordField::Light: r.light = detail::parse_double(lex); break;
      case RecordField::CO2: r.co2 = detail::parse_double(lex); break;
      case RecordField::HumidityRatio: r.humidity_ratio = detail::parse_double(lex); break;
      case RecordField::Occupancy:
        if (auto v = detail::parse_int(lex)) r.occupancy = static_cast<int>(*v);
        break;
    }
  }
  return r;
}

TripleStore build_store(std::span<const SensorRecord> records, const PredicateMap& map,
                        std::string_view base) {
  map.validate();
  TripleStore store;
  for (const auto& r : records) store.insert(to_triples(r, map, base));
  return store;
}

}  // namespace sbcep::rdf
