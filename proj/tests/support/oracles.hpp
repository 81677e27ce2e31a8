#pragma once

// Reference implementations used only by tests. They share data types with
// the library but none of its algorithms.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sbcep/ingest.hpp"
#include "sbcep/rdf.hpp"
#include "sbcep/rules.hpp"
#include "sbcep/sparql.hpp"

namespace oracle {

using Row = std::vector<sbcep::rdf::Term>;

// Nested linear scans over the triple list in insertion order, filter applied
// to complete assignments, then ORDER BY / OFFSET / LIMIT.
std::vector<Row> naive_select(const sbcep::sparql::Query& query, const std::vector<sbcep::rdf::Triple>& triples);

// Canonical multiset form of a row list.
std::vector<std::string> canonical(const std::vector<Row>& rows);

// Random stores over a small vocabulary so joins and filters hit.
std::vector<sbcep::rdf::Triple> random_triples(std::mt19937_64& rng, std::size_t n);

struct RandomQuery {
  std::string text;
  bool ordered = false;
  bool limited = false;
};
// `connected` makes every later pattern reuse an earlier subject.
RandomQuery random_query(std::mt19937_64& rng, std::size_t max_patterns = 4, std::size_t max_filters = 3,
                         bool connected = false);

struct SplitCandidate {
  std::size_t feature;
  double threshold;
  double decrease;  // parent gini - weighted child gini
};

// Every midpoint split of every feature with its exact Gini decrease.
std::vector<SplitCandidate> all_splits(std::span<const sbcep::SensorRecord> records,
                                       std::span<const sbcep::Feature> features);

// Walks the node array directly.
int traverse(const sbcep::rules::DecisionTree& tree, const sbcep::SensorRecord& record);

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long double precision = 0, recall = 0, f1 = 0, accuracy = 0;
};
Confusion confusion(const std::vector<int>& predicted, const std::vector<int>& actual);

}  // namespace oracle
