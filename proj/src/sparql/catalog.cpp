#include "sbcep/sparql.hpp"

namespace sbcep::sparql {

namespace {

constexpr const char* kPrologue =
    "PREFIX ns1: <http://schema.org/>\n"
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n";

std::string with_prologue(const char* body) { return std::string(kPrologue) + body; }

}  // namespace

const std::vector<CatalogQuery>& scaling_queries() {
  static const std::vector<CatalogQuery> queries = {
      {"Q1", "dates with humidity above 30",
       with_prologue("SELECT ?date ?humidity\n"
                     "WHERE {\n"
                     "  ?description ns1:date ?date .\n"
                     "  ?description ns1:Humidity ?humidity .\n"
                     "  FILTER (xsd:float(?humidity) > 30)\n"
                     "}\n")},
      {"Q2", "dates with temperature above 20",
       with_prologue("SELECT ?date ?temperature\n"
                     "WHERE {\n"
                     "  ?description ns1:date ?date .\n"
                     "  ?description ns1:Temperature ?temperature .\n"
                     "  FILTER (xsd:float(?temperature) > 20)\n"
                     "}\n")},
      {"Q3", "temperature above 23 between 2015-02-03 08:00 and 2015-02-04 23:00",
       with_prologue("SELECT ?date ?temperature\n"
                     "WHERE {?description ns1:date ?date .\n"
                     "      ?description ns1:Temperature ?temperature .\n"
                     "      FILTER (xsd:dateTime(?date) >= xsd:dateTime(\"2015-02-03T08:00:00\") &&\n"
                     "xsd:dateTime(?date) <= xsd:dateTime(\"2015-02-04T23:00:00\")\n"
                     "&&(xsd:float(?temperature) > 23))\n"
                     "}\n")},
      {"Q4", "occupied rooms with CO2 above 1100 and humidity above 12",
       with_prologue("SELECT ?date ?CO2 ?occupancy ?humidity\n"
                     "WHERE { ?description ns1:date ?date .\n"
                     "?description ns1:CO2 ?CO2 .\n"
                     "?description ns1:Occupancy ?occupancy .\n"
                     "?description ns1:Humidity ?humidity .\n"
                     "FILTER (xsd:float(?CO2) > 1100 && xsd:integer(?occupancy) = 1 && xsd:float(?humidity) > 12)}\n"),
       true},
      {"Q5", "every CO2 reading",
       with_prologue("SELECT ?description ?CO2\n"
                     "WHERE { ?description ns1:CO2 ?CO2 }\n")},
      {"Q6", "bright, warm, stuffy observations",
       with_prologue("SELECT ?date ?temperature ?light ?CO2\n"
                     "WHERE { ?description ns1:date ?date .\n"
                     "?description ns1:Temperature ?temperature .\n"
                     "?description ns1:Light ?light .\n"
                     "?description ns1:CO2 ?CO2 .\n"
                     "FILTER (xsd:float(?temperature) > 21 && xsd:float(?light) > 365.125 && xsd:float(?CO2) > 600)}\n"),
       true},
  };
  return queries;
}

const std::vector<CatalogQuery>& throughput_queries() {
  // Filtered variables are bound last so every candidate walks the full join.
  static const std::vector<CatalogQuery> queries = {
      {"Q1", "occupancy detected, gated on temperature",
       with_prologue("SELECT ?date ?temperature\n"
                     "WHERE { ?obs ns1:date ?date .\n"
                     "?obs ns1:CO2 ?CO2 .\n"
                     "?obs ns1:HumidityRatio ?ratio .\n"
                     "?obs ns1:Temperature ?temperature .\n"
                     "?obs ns1:Occupancy ?occupancy .\n"
                     "FILTER (xsd:float(?temperature) > 20 && xsd:integer(?occupancy) = 1)}\n"),
       true},
      {"Q2", "occupancy detected, gated on humidity",
       with_prologue("SELECT ?date ?humidity\n"
                     "WHERE { ?obs ns1:date ?date .\n"
                     "?obs ns1:Light ?light .\n"
                     "?obs ns1:Humidity ?humidity .\n"
                     "?obs ns1:Occupancy ?occupancy .\n"
                     "FILTER (xsd:float(?humidity) > 25 && xsd:integer(?occupancy) = 1)}\n")},
      {"Q3", "occupancy detected, gated on CO2",
       with_prologue("SELECT ?date ?CO2\n"
                     "WHERE { ?obs ns1:date ?date .\n"
                     "?obs ns1:CO2 ?CO2 .\n"
                     "?obs ns1:Occupancy ?occupancy .\n"
                     "FILTER (xsd:float(?CO2) > 600 && xsd:integer(?occupancy) = 1)}\n")},
      {"Q4", "occupancy detected, gated on humidity ratio",
       with_prologue("SELECT ?ratio\n"
                     "WHERE { ?obs ns1:HumidityRatio ?ratio .\n"
                     "?obs ns1:Occupancy ?occupancy .\n"
                     "FILTER (xsd:float(?ratio) > 0.004 && xsd:integer(?occupancy) = 1)}\n")},
  };
  return queries;
}

const std::vector<CatalogQuery>& example_queries() {
  static const std::vector<CatalogQuery> queries = [] {
    std::vector<CatalogQuery> all;
    const char* scaling_ids[] = {"humidity", "temperature", "temperature-window", "co2-occupancy-humidity",
                                 "co2-readings", "bright-warm-stuffy"};
    const auto& s = scaling_queries();
    for (std::size_t i = 0; i < s.size(); ++i) {
      CatalogQuery q = s[i];
      q.id = scaling_ids[i];
      all.push_back(q);
    }
    // The screenshot of the CO2/occupancy/humidity query filters at 1180
    // while its listing says 1100; both are kept.
    CatalogQuery alt = s[3];
    alt.id = "co2-occupancy-humidity-1180";
    alt.description = "occupied rooms with CO2 above 1180 and humidity above 12";
    alt.text.replace(alt.text.find("> 1100"), 6, "> 1180");
    all.push_back(alt);
    const char* tp_ids[] = {"occupied-temperature", "occupied-humidity", "occupied-co2", "occupied-humidity-ratio"};
    const auto& t = throughput_queries();
    for (std::size_t i = 0; i < t.size(); ++i) {
      CatalogQuery q = t[i];
      q.id = tp_ids[i];
      all.push_back(q);
    }
    return all;
  }();
  return queries;
}

const CatalogQuery& find_query(std::string_view id) {
  for (const auto& q : example_queries()) {
    if (q.id == id) return q;
  }
  throw DataError("unknown catalog query '" + std::string(id) + "'");
}

}  // namespace sbcep::sparql
