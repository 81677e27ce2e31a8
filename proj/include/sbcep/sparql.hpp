#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sbcep/error.hpp"
#include "sbcep/rdf.hpp"

namespace sbcep::sparql {

// Syntax or semantic error in query text; `offset` is the byte position.
class QueryError : public DataError {
 public:
  QueryError(const std::string& what, std::size_t offset)
      : DataError(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A pattern position: a variable name (without '?') or a concrete term.
struct PatternTerm {
  std::optional<std::string> variable;
  rdf::Term term;

  static PatternTerm var(std::string name) { return {std::move(name), {}}; }
  static PatternTerm constant(rdf::Term t) { return {std::nullopt, std::move(t)}; }
  bool is_variable() const { return variable.has_value(); }
  bool operator==(const PatternTerm&) const = default;
};

struct TriplePattern {
  PatternTerm subject, predicate, object;
  bool operator==(const TriplePattern&) const = default;
};

enum class CastType { Float, Integer, DateTime };
enum class CompareOp { Lt, Le, Gt, Ge, Eq, Ne };

std::string_view cast_name(CastType c);
std::string_view op_symbol(CompareOp op);

// cast(?variable) op constant. A dateTime constant is held as epoch seconds.
struct Comparison {
  CastType cast = CastType::Float;
  std::string variable;
  CompareOp op = CompareOp::Gt;
  double constant = 0;

  bool operator==(const Comparison&) const = default;
};

struct FilterExpr {
  enum class Kind { Compare, And, Or };
  Kind kind = Kind::Compare;
  Comparison comparison;           // Kind::Compare
  std::vector<FilterExpr> children;  // Kind::And / Kind::Or

  static FilterExpr compare(Comparison c);
  static FilterExpr all_of(std::vector<FilterExpr> children);
  static FilterExpr any_of(std::vector<FilterExpr> children);

  void collect_variables(std::vector<std::string>& out) const;
  std::string to_string() const;
  bool operator==(const FilterExpr&) const = default;
};

struct OrderKey {
  std::string variable;
  bool descending = false;
  bool operator==(const OrderKey&) const = default;
};

struct Query {
  std::vector<std::pair<std::string, std::string>> prefixes;  // prefix -> IRI
  std::vector<std::string> select;  // projected variables; empty iff wildcard
  bool wildcard = false;
  std::optional<std::string> dataset;
  std::vector<TriplePattern> patterns;
  std::optional<FilterExpr> filter;
  std::optional<OrderKey> order_by;
  std::optional<std::size_t> limit;
  std::optional<std::size_t> offset;

  // Variables in first-appearance order across the patterns.
  std::vector<std::string> pattern_variables() const;
  // Select list with the wildcard expanded.
  std::vector<std::string> projection() const;
  // Adds a conjunct to the filter.
  void add_filter(FilterExpr conjunct);
};

Query parse_query(std::string_view text);

// Typed value of a literal under a cast; dateTime values are epoch seconds.
struct CastValue {
  CastType type;
  double value;
};

// Row-local failure (nullopt) for IRIs and for lexical forms that do not
// parse under the target type.
std::optional<CastValue> cast_literal(const rdf::Term& term, CastType target);

bool compare_values(double lhs, CompareOp op, double rhs);

struct ResultSet {
  std::vector<std::string> variables;
  std::vector<std::vector<rdf::Term>> rows;
  double elapsed_seconds = 0;

  std::size_t size() const { return rows.size(); }
};

// Solution ordering: numeric literals by value, then dateTime literals
// chronologically, then other literals, then IRIs; ties fall back to the
// lexical form so the order is total.
int order_compare(const rdf::Term& a, const rdf::Term& b);

ResultSet evaluate(const Query& query, const rdf::TripleStore& store);

// Named in-memory stores for the dataset clause.
class StoreCatalog {
 public:
  void add(std::string name, const rdf::TripleStore* store);
  void set_default(const rdf::TripleStore* store) { default_ = store; }
  // Throws DataError for an unknown dataset name or a missing default.
  const rdf::TripleStore& resolve(const std::optional<std::string>& name) const;

 private:
  std::map<std::string, const rdf::TripleStore*> stores_;
  const rdf::TripleStore* default_ = nullptr;
};

ResultSet evaluate(const Query& query, const StoreCatalog& catalog);

std::string to_csv(const ResultSet& rs);
std::string to_json(const ResultSet& rs);

// Example-query catalog.
struct CatalogQuery {
  std::string id;
  std::string description;
  std::string text;
  bool complex = false;
};

// Query-scaling set Q1..Q6 (Q1-Q3 humidity/temperature/time-window queries,
// Q4 CO2+occupancy+humidity, Q5 single pattern, Q6 four patterns + three filters).
const std::vector<CatalogQuery>& scaling_queries();
// Per-event occupancy checks gated on temperature, humidity, CO2 and
// humidity ratio (throughput Q1..Q4), most to least complex.
const std::vector<CatalogQuery>& throughput_queries();
// Everything above plus the CO2 > 1180 screenshot variant.
const std::vector<CatalogQuery>& example_queries();
const CatalogQuery& find_query(std::string_view id);

}  // namespace sbcep::sparql
