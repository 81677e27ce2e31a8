#include <algorithm>
#include <cmath>
#include <random>

#include "sbcep/error.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/surrogate.hpp"
#include "text_util.hpp"

namespace sbcep::rdf {

TripleStore generate_synthetic(std::size_t n_triples, std::size_t n_classes, std::size_t n_entities,
                               std::uint64_t seed) {
  if (!(n_triples >= n_entities && n_entities >= n_classes && n_classes >= 1)) {
    throw DataError("infeasible synthetic store: need triples >= entities >= classes >= 1 (got " +
                    std::to_string(n_triples) + ", " + std::to_string(n_entities) + ", " +
                    std::to_string(n_classes) + ")");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::string ns(kSchemaNs);
  const std::string entity_base = std::string(kDefaultBase) + "/entity/";
  const Term type = Term::iri(std::string(kRdfType));

  // Property predicates in fill order; extra passes use annotation predicates.
  const std::vector<std::string> sensor_predicates = {
      ns + "date", ns + "Temperature", ns + "Humidity", ns + "Light",
      ns + "CO2",  ns + "HumidityRatio", ns + "Occupancy"};

  const auto start = DateTime::from_civil(2015, 2, 2, 14, 19, 0).epoch_seconds();
  const auto span = DateTime::from_civil(2015, 2, 18, 9, 19, 0).epoch_seconds() - start;

  // Per-entity state keeps the literals of one entity mutually consistent.
  struct EntityState {
    double temperature, humidity;
    bool occupied;
  };
  std::vector<EntityState> state(n_entities);
  for (auto& s : state) {
    s.occupied = unit(rng) < 0.25;
    s.temperature = 19.0 + 5.4 * unit(rng) + (s.occupied ? 0.8 : 0.0);
    s.humidity = 16.7 + 22.4 * unit(rng);
  }

  auto value_for = [&](std::size_t pass, std::size_t e) -> Term {
    const auto& s = state[e];
    switch (pass) {
      case 0: {
        const auto t = start + static_cast<std::int64_t>(unit(rng) * static_cast<double>(span));
        return Term::literal(DateTime(t).iso(), Datatype::DateTime);
      }
      case 1: return Term::literal(detail::format_double(std::round(s.temperature * 1000) / 1000), Datatype::Float);
      case 2: return Term::literal(detail::format_double(std::round(s.humidity * 1000) / 1000), Datatype::Float);
      case 3: {
        const double lux = s.occupied ? 380.0 + 320.0 * unit(rng) : (unit(rng) < 0.6 ? 0.0 : 250.0 * unit(rng));
        return Term::literal(detail::format_double(std::round(lux * 4) / 4), Datatype::Float);
      }
      case 4: {
        const double ppm = s.occupied ? 600.0 + 1400.0 * unit(rng) * unit(rng) : 412.0 + 300.0 * unit(rng);
        return Term::literal(detail::format_double(std::round(ppm * 4) / 4), Datatype::Float);
      }
      case 5: return Term::literal(detail::format_double(humidity_ratio(s.temperature, s.humidity)), Datatype::Float);
      case 6: return Term::literal(s.occupied ? "1" : "0", Datatype::Integer);
      default: return Term::literal("note " + std::to_string(pass) + "/" + std::to_string(e), Datatype::String);
    }
  };

  // Entities [0, full) are complete observations; the rest carry only their
  // class. Triples beyond eight per entity go to annotation passes.
  const std::size_t props = sensor_predicates.size();
  const std::size_t full = std::min(n_entities, (n_triples - n_entities) / props);
  std::size_t remaining = n_triples - n_entities - full * props;

  TripleStore store;
  std::vector<Triple> batch;
  batch.reserve(n_triples);
  auto subject = [&](std::size_t e) { return Term::iri(entity_base + std::to_string(e)); };
  for (std::size_t e = 0; e < n_entities; ++e) {
    batch.push_back(Triple{subject(e), type, Term::iri(ns + "SensorClass" + std::to_string(e % n_classes))});
    if (e < full) {
      for (std::size_t pass = 0; pass < props; ++pass) {
        batch.push_back(Triple{subject(e), Term::iri(sensor_predicates[pass]), value_for(pass, e)});
      }
    }
  }
  if (full < n_entities) {
    // Fewer than `props` triples left: a partial observation.
    for (std::size_t pass = 0; remaining > 0; ++pass, --remaining) {
      batch.push_back(Triple{subject(full), Term::iri(sensor_predicates[pass]), value_for(pass, full)});
    }
  }
  for (std::size_t pass = props; remaining > 0; ++pass) {
    const Term predicate = Term::iri(ns + "annotation" + std::to_string(pass));
    for (std::size_t e = 0; e < n_entities && remaining > 0; ++e, --remaining) {
      batch.push_back(Triple{subject(e), predicate, value_for(pass, e)});
    }
  }
  store.insert(batch);
  return store;
}

}  // namespace sbcep::rdf
