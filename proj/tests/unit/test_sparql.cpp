#include <doctest.h>

#include <json.hpp>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/sparql.hpp"

using namespace sbcep;
using namespace sbcep::sparql;
using rdf::Datatype;
using rdf::Term;

namespace {

const std::string kPrologue =
    "PREFIX ns1: <http://schema.org/>\n"
    "PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>\n";

double epoch(int y, unsigned mo, unsigned d, unsigned h) {
  return static_cast<double>(DateTime::from_civil(y, mo, d, h).epoch_seconds());
}

SensorRecord rec(std::string id, double co2, int occ, double humidity) {
  SensorRecord r;
  r.row_id = std::move(id);
  r.timestamp = DateTime::from_civil(2015, 2, 12, 19, 40, 0);
  r.temperature = 21;
  r.humidity = humidity;
  r.light = 500;
  r.co2 = co2;
  r.humidity_ratio = 0.004;
  r.occupancy = occ;
  return r;
}

void check_against_oracle(const std::string& text, const rdf::TripleStore& store,
                          const std::vector<rdf::Triple>& triples) {
  Query q = parse_query(text);
  auto got = evaluate(q, store).rows;
  auto want = oracle::naive_select(q, triples);
  INFO(text);
  CHECK(got == want);
}

}  // namespace

TEST_CASE("humidity query parses") {
  Query q = parse_query(find_query("humidity").text);
  CHECK(q.select == std::vector<std::string>{"date", "humidity"});
  REQUIRE(q.patterns.size() == 2);
  CHECK(*q.patterns[0].subject.variable == "description");
  CHECK(q.patterns[0].predicate.term == Term::iri("http://schema.org/date"));
  REQUIRE(q.filter.has_value());
  CHECK(*q.filter == FilterExpr::compare({CastType::Float, "humidity", CompareOp::Gt, 30}));
  CHECK_FALSE(q.order_by.has_value());
}

TEST_CASE("minimal query") {
  Query q = parse_query(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d }");
  CHECK(q.patterns.size() == 1);
  CHECK_FALSE(q.filter.has_value());
  CHECK(q.projection() == std::vector<std::string>{"d"});
}

TEST_CASE("time-window query is a three-way conjunction") {
  Query q = parse_query(find_query("temperature-window").text);
  REQUIRE(q.filter.has_value());
  std::vector<FilterExpr> flat;
  std::function<void(const FilterExpr&)> walk = [&](const FilterExpr& f) {
    if (f.kind == FilterExpr::Kind::And) {
      for (const auto& c : f.children) walk(c);
    } else {
      flat.push_back(f);
    }
  };
  CHECK(q.filter->kind == FilterExpr::Kind::And);
  walk(*q.filter);
  REQUIRE(flat.size() == 3);
  CHECK(flat[0].comparison == Comparison{CastType::DateTime, "date", CompareOp::Ge, epoch(2015, 2, 3, 8)});
  CHECK(flat[1].comparison == Comparison{CastType::DateTime, "date", CompareOp::Le, epoch(2015, 2, 4, 23)});
  CHECK(flat[2].comparison == Comparison{CastType::Float, "temperature", CompareOp::Gt, 23});
}

TEST_CASE("parse errors") {
  auto fails = [](const std::string& text) {
    INFO(text);
    CHECK_THROWS_AS(parse_query(text), QueryError);
  };
  fails("SELECT ?d WHERE { ?x ns1:date ?d }");                              // undeclared prefix
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d ");                   // unbalanced
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d } }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d FILTER (xsd:boolean(?d) > 1) }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d FILTER (xsd:float(?z) > 1) }");
  fails(kPrologue + "SELECT ?z WHERE { ?x ns1:date ?d }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d FILTER (xsd:float(?d) > ?x) }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d FILTER (xsd:dateTime(?d) > 3) }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d FILTER (?d > \"abc\") }");
  fails(kPrologue + "SELECT ?d WHERE { }");
  fails(kPrologue + "SELECT ?d WHERE { ?x ns1:date ?d } LIMIT -1");
  fails(kPrologue + "CONSTRUCT { ?x ns1:date ?d } WHERE { ?x ns1:date ?d }");

  try {
    parse_query(kPrologue + "SELECT ?d WHERE { ?x ns2:date ?d }");
  } catch (const QueryError& e) {
    CHECK(e.offset() > kPrologue.size());
  }
}

TEST_CASE("casts") {
  CHECK(cast_literal(Term::literal("26.7", Datatype::Float), CastType::Float)->value == 26.7);
  auto a = cast_literal(Term::literal("2015-02-09T02:38:59", Datatype::DateTime), CastType::DateTime);
  auto b = cast_literal(Term::literal("2015-02-09T02:39:59", Datatype::DateTime), CastType::DateTime);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->value < b->value);
  CHECK_FALSE(cast_literal(Term::literal("abc", Datatype::String), CastType::Float));
  CHECK_FALSE(cast_literal(Term::iri("http://x"), CastType::Float));
  CHECK(cast_literal(Term::literal("1.0", Datatype::Float), CastType::Integer)->value == 1);
  CHECK_FALSE(cast_literal(Term::literal("1.5", Datatype::Float), CastType::Integer));
  CHECK_FALSE(cast_literal(Term::literal("2015-02-09T02:38:59", Datatype::DateTime), CastType::Float));
  CHECK(cast_literal(Term::literal("2015-02-09 02:38:59", Datatype::String), CastType::DateTime));
}

TEST_CASE("empty store yields no rows") {
  rdf::TripleStore empty;
  for (const auto& q : example_queries()) CHECK(evaluate(parse_query(q.text), empty).size() == 0);
}

TEST_CASE("CO2, occupancy and humidity over a hand-built store") {
  std::vector<SensorRecord> recs{rec("1", 1200, 1, 20), rec("2", 1000, 1, 20), rec("3", 1389.6666666667, 1, 27.79),
                                 rec("4", 1500, 0, 20), rec("5", 1500, 1, 11)};
  auto store = rdf::build_store(recs);
  auto rs = evaluate(parse_query(find_query("co2-occupancy-humidity").text), store);
  REQUIRE(rs.size() == 2);
  CHECK(rs.variables == std::vector<std::string>{"date", "CO2", "occupancy", "humidity"});
  CHECK(rs.rows[0][1].value == "1200");
  CHECK(rs.rows[1][1].value == "1389.6666666667");
  CHECK(rs.rows == oracle::naive_select(parse_query(find_query("co2-occupancy-humidity").text), store.triples()));

  CHECK(evaluate(parse_query(find_query("co2-occupancy-humidity-1180").text), store).size() == 2);
}

TEST_CASE("modifiers") {
  std::vector<SensorRecord> recs;
  for (int i = 0; i < 20; ++i) recs.push_back(rec(std::to_string(i), 1000 + 10 * i, i % 2, 20 + i));
  auto store = rdf::build_store(recs);
  const std::string base = kPrologue + "SELECT ?h WHERE { ?x ns1:Humidity ?h }";
  CHECK(evaluate(parse_query(base), store).size() == 20);
  CHECK(evaluate(parse_query(base + " LIMIT 5"), store).size() == 5);
  CHECK(evaluate(parse_query(base + " LIMIT 50"), store).size() == 20);
  CHECK(evaluate(parse_query(base + " OFFSET 25"), store).size() == 0);
  CHECK(evaluate(parse_query(base + " OFFSET 18 LIMIT 5"), store).size() == 2);

  auto desc = evaluate(parse_query(base + " ORDER BY DESC(?h) LIMIT 3"), store);
  REQUIRE(desc.size() == 3);
  CHECK(desc.rows[0][0].value == "39");
  CHECK(desc.rows[2][0].value == "37");
  auto asc = evaluate(parse_query(base + " ORDER BY ?h OFFSET 1 LIMIT 1"), store);
  CHECK(asc.rows[0][0].value == "21");
}

TEST_CASE("ordering ranks numbers, then dates, then other literals, then IRIs") {
  std::vector<Term> terms{Term::iri("http://a"), Term::literal("zzz", Datatype::String),
                          Term::literal("2015-02-01T00:00:00", Datatype::DateTime),
                          Term::literal("100", Datatype::Integer), Term::literal("9.5", Datatype::Float)};
  CHECK(order_compare(terms[4], terms[3]) < 0);  // 9.5 < 100 by value
  CHECK(order_compare(terms[3], terms[2]) < 0);
  CHECK(order_compare(terms[2], terms[1]) < 0);
  CHECK(order_compare(terms[1], terms[0]) < 0);
  CHECK(order_compare(terms[0], terms[0]) == 0);
}

TEST_CASE("evaluator agrees with nested linear scans") {
  std::mt19937_64 rng(20150202);
  for (int i = 0; i < 200; ++i) {
    auto triples = oracle::random_triples(rng, 20 + rng() % 400);
    rdf::TripleStore store;
    store.insert(triples);
    auto rq = oracle::random_query(rng);
    check_against_oracle(rq.text, store, store.triples());
  }
}

TEST_CASE("adding triples never removes rows of a filterless query") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 60; ++i) {
    auto triples = oracle::random_triples(rng, 300);
    rdf::TripleStore small;
    small.insert(std::span(triples).first(150));
    rdf::TripleStore big;
    big.insert(triples);
    Query q;
    do {
      q = parse_query(oracle::random_query(rng, 3, 0).text);
    } while (q.limit || q.offset);
    auto before = oracle::canonical(evaluate(q, small).rows);
    auto after = oracle::canonical(evaluate(q, big).rows);
    CHECK(std::includes(after.begin(), after.end(), before.begin(), before.end()));
  }
}

TEST_CASE("pattern order does not change the result multiset") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 60; ++i) {
    auto triples = oracle::random_triples(rng, 300);
    rdf::TripleStore store;
    store.insert(triples);
    Query q = parse_query(oracle::random_query(rng).text);
    q.limit.reset();
    q.offset.reset();
    Query shuffled = q;
    std::shuffle(shuffled.patterns.begin(), shuffled.patterns.end(), rng);
    CHECK(oracle::canonical(evaluate(q, store).rows) == oracle::canonical(evaluate(shuffled, store).rows));
  }
}

TEST_CASE("dataset clause selects a named store") {
  std::vector<SensorRecord> a{rec("1", 1200, 1, 31)};
  std::vector<SensorRecord> b{rec("1", 1200, 1, 31), rec("2", 1200, 1, 35)};
  auto sa = rdf::build_store(a);
  auto sb = rdf::build_store(b);
  StoreCatalog catalog;
  catalog.add("first", &sa);
  catalog.add("second", &sb);
  catalog.set_default(&sa);
  const std::string body = "SELECT ?h WHERE { ?x ns1:Humidity ?h }";
  CHECK(evaluate(parse_query(kPrologue + body), catalog).size() == 1);
  CHECK(evaluate(parse_query(kPrologue + "SELECT ?h FROM <second> WHERE { ?x ns1:Humidity ?h }"), catalog).size() == 2);
  CHECK_THROWS_AS(evaluate(parse_query(kPrologue + "SELECT ?h FROM <third> WHERE { ?x ns1:Humidity ?h }"), catalog),
                  DataError);
}

TEST_CASE("csv and json output") {
  std::vector<SensorRecord> recs{rec("1", 1200, 1, 31)};
  auto store = rdf::build_store(recs);
  auto rs = evaluate(parse_query(find_query("humidity").text), store);
  CHECK(to_csv(rs) == "date,humidity\n2015-02-12T19:40:00,31\n");
  auto j = nlohmann::json::parse(to_json(rs));
  CHECK(j["head"]["vars"] == nlohmann::json::array({"date", "humidity"}));
  REQUIRE(j["results"]["bindings"].size() == 1);
  CHECK(j["results"]["bindings"][0]["humidity"]["value"] == "31");
}

TEST_CASE("catalog") {
  CHECK(scaling_queries().size() == 6);
  CHECK(throughput_queries().size() == 4);
  for (const auto& q : example_queries()) CHECK_NOTHROW(parse_query(q.text));
  CHECK_THROWS_AS(find_query("nope"), DataError);
}
