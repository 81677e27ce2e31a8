#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sbcep/ingest.hpp"

namespace sbcep::rdf {

inline constexpr std::string_view kSchemaNs = "http://schema.org/";
inline constexpr std::string_view kRdfNs = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kXsdNs = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view kRdfType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kDefaultBase = "http://example.org/building";

enum class Datatype { Float, Integer, DateTime, String };

std::string_view datatype_iri(Datatype dt);
std::optional<Datatype> datatype_from_iri(std::string_view iri);
// True when `lexical` parses under `dt`.
bool lexical_valid(std::string_view lexical, Datatype dt);

// An RDF term: an IRI (stored without angle brackets) or a typed literal.
// Literals are not validated on construction; see lexical_valid().
struct Term {
  enum class Kind : std::uint8_t { Iri, Literal };

  Kind kind = Kind::Iri;
  std::string value;  // IRI text or lexical form
  Datatype datatype = Datatype::String;

  static Term iri(std::string value);
  static Term literal(std::string lexical, Datatype dt);

  bool is_iri() const { return kind == Kind::Iri; }
  bool is_literal() const { return kind == Kind::Literal; }

  // Exchange-format rendering: <iri> or "lex"^^<datatype>.
  std::string to_string() const;

  bool operator==(const Term& o) const {
    return kind == o.kind && value == o.value && (kind == Kind::Iri || datatype == o.datatype);
  }
};

// Total order used for canonical sorting; not a value comparison.
std::strong_ordering lexical_compare(const Term& a, const Term& b);

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  bool operator==(const Triple&) const = default;
};

using TermId = std::uint32_t;

struct EncodedTriple {
  TermId s = 0, p = 0, o = 0;
  bool operator==(const EncodedTriple&) const = default;
};

struct EncodedTripleHash {
  std::size_t operator()(const EncodedTriple& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.s) << 32) ^ (static_cast<std::uint64_t>(t.p) << 16) ^ t.o;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
  }
};

// Set of triples with a term dictionary and subject, predicate and object
// indexes. Single writer / multiple readers: insert and erase lock
// internally; readers that may race with a writer hold read_lease() for the
// duration of their access.
class TripleStore {
 public:
  TripleStore();
  TripleStore(const TripleStore& other);
  TripleStore(TripleStore&& other) noexcept;
  TripleStore& operator=(TripleStore other) noexcept;
  ~TripleStore();

  // Returns the number of triples that were not already present.
  std::size_t insert(std::span<const Triple> triples);
  bool insert(const Triple& t);
  std::size_t erase(std::span<const Triple> triples);
  bool erase(const Triple& t);
  bool contains(const Triple& t) const;

  std::size_t size() const { return seq_.size(); }
  bool empty() const { return seq_.empty(); }
  // Distinct objects of rdf:type triples.
  std::size_t class_count() const { return classes_.size(); }
  // Distinct subjects.
  std::size_t entity_count() const { return by_subject_.size(); }

  std::optional<TermId> lookup(const Term& t) const;
  const Term& term(TermId id) const { return terms_[id]; }
  std::size_t dictionary_size() const { return terms_.size(); }

  std::span<const EncodedTriple> with_subject(TermId s) const;
  std::span<const EncodedTriple> with_predicate(TermId p) const;
  std::span<const EncodedTriple> with_object(TermId o) const;
  // Every triple, in insertion order.
  std::vector<EncodedTriple> encoded() const;
  std::vector<Triple> triples() const;
  Triple decode(const EncodedTriple& t) const;

  std::shared_lock<std::shared_mutex> read_lease() const { return std::shared_lock(*mutex_); }

  bool operator==(const TripleStore& other) const;  // same triple set

 private:
  TermId intern(const Term& t);
  bool insert_unlocked(const Triple& t);
  bool erase_unlocked(const Triple& t);

  std::vector<Term> terms_;
  std::unordered_map<Term, TermId, TermHash> ids_;
  std::unordered_map<EncodedTriple, std::uint64_t, EncodedTripleHash> seq_;
  std::uint64_t next_seq_ = 0;
  std::unordered_map<TermId, std::vector<EncodedTriple>> by_subject_;
  std::unordered_map<TermId, std::vector<EncodedTriple>> by_predicate_;
  std::unordered_map<TermId, std::vector<EncodedTriple>> by_object_;
  std::unordered_map<TermId, std::size_t> classes_;  // class -> rdf:type triple count
  std::optional<TermId> type_predicate_;
  std::unique_ptr<std::shared_mutex> mutex_;
};

// Record field -> predicate IRI. Injective.
struct PredicateMap {
  std::vector<std::pair<RecordField, std::string>> entries;

  // ns1:date, ns1:Temperature, ns1:Humidity, ns1:Light, ns1:CO2,
  // ns1:HumidityRatio, ns1:Occupancy with ns1 = http://schema.org/
  static PredicateMap occupancy_default();
  PredicateMap restricted_to(std::span<const RecordField> fields) const;
  void validate() const;
};

std::string observation_subject(std::string_view base, std::string_view row_id);

std::vector<Triple> to_triples(const SensorRecord& record,
                               const PredicateMap& map = PredicateMap::occupancy_default(),
                               std::string_view base = kDefaultBase);

// Inverse of to_triples for one subject's triples. Fields without a triple
// stay empty; row_id is recovered from the subject IRI.
SensorRecord from_triples(std::span<const Triple> triples,
                          const PredicateMap& map = PredicateMap::occupancy_default());

// Converts and inserts a whole dataset.
TripleStore build_store(std::span<const SensorRecord> records,
                        const PredicateMap& map = PredicateMap::occupancy_default(),
                        std::string_view base = kDefaultBase);

// One triple per line, insertion order.
std::string serialize(const TripleStore& store);
std::string serialize(std::span<const Triple> triples);
// Throws DataError naming the first malformed line.
std::vector<Triple> parse_triples(std::string_view text);
TripleStore parse(std::string_view text);

TripleStore load_store(const std::string& path);
void save_store(const TripleStore& store, const std::string& path);

// Deterministic store with exactly the requested triple, class and entity
// counts. Requires n_triples >= n_entities >= n_classes >= 1.
TripleStore generate_synthetic(std::size_t n_triples, std::size_t n_classes,
                               std::size_t n_entities, std::uint64_t seed);

}  // namespace sbcep::rdf
