#include <algorithm>

#include "sbcep/rdf.hpp"

namespace sbcep::rdf {

namespace {

const std::vector<EncodedTriple> kNone;

std::span<const EncodedTriple> bucket(const std::unordered_map<TermId, std::vector<EncodedTriple>>& m,
                                      TermId id) {
  auto it = m.find(id);
  return it == m.end() ? std::span<const EncodedTriple>(kNone) : std::span<const EncodedTriple>(it->second);
}

void unlink(std::unordered_map<TermId, std::vector<EncodedTriple>>& m, TermId id,
            const EncodedTriple& t) {
  auto it = m.find(id);
  if (it == m.end()) return;
  auto& v = it->second;
  auto pos = std::find(v.begin(), v.end(), t);
  if (pos != v.end()) {
    *pos = v.back();
    v.pop_back();
  }
  if (v.empty()) m.erase(it);
}

}  // namespace

TripleStore::TripleStore() : mutex_(std::make_unique<std::shared_mutex>()) {}

TripleStore::TripleStore(const TripleStore& other) : mutex_(std::make_unique<std::shared_mutex>()) {
  auto lease = other.read_lease();
  terms_ = other.terms_;
  ids_ = other.ids_;
  seq_ = other.seq_;
  next_seq_ = other.next_seq_;
  by_subject_ = other.by_subject_;
  by_predicate_ = other.by_predicate_;
  by_object_ = other.by_object_;
  classes_ = other.classes_;
  type_predicate_ = other.type_predicate_;
}

TripleStore::TripleStore(TripleStore&& other) noexcept
    : terms_(std::move(other.terms_)),
      ids_(std::move(other.ids_)),
      seq_(std::move(other.seq_)),
      next_seq_(other.next_seq_),
      by_subject_(std::move(other.by_subject_)),
      by_predicate_(std::move(other.by_predicate_)),
      by_object_(std::move(other.by_object_)),
      classes_(std::move(other.classes_)),
      type_predicate_(other.type_predicate_),
      mutex_(std::make_unique<std::shared_mutex>()) {}

TripleStore& TripleStore::operator=(TripleStore other) noexcept {
  terms_ = std::move(other.terms_);
  ids_ = std::move(other.ids_);
  seq_ = std::move(other.seq_);
  next_seq_ = other.next_seq_;
  by_subject_ = std::move(other.by_subject_);
  by_predicate_ = std::move(other.by_predicate_);
  by_object_ = std::move(other.by_object_);
  classes_ = std::move(other.classes_);
  type_predicate_ = other.type_predicate_;
  return *this;
}

TripleStore::~TripleStore() = default;

TermId TripleStore::intern(const Term& t) {
  if (auto it = ids_.find(t); it != ids_.end()) return it->second;
  const auto id = static_cast<TermId>(terms_.size());
  terms_.push_back(t);
  ids_.emplace(t, id);
  if (t.is_iri() && t.value == kRdfType) type_predicate_ = id;
  return id;
}

std::optional<TermId> TripleStore::lookup(const Term& t) const {
  if (auto it = ids_.find(t); it != ids_.end()) return it->second;
  return std::nullopt;
}

bool TripleStore::insert_unlocked(const Triple& t) {
  const EncodedTriple e{intern(t.subject), intern(t.predicate), intern(t.object)};
  if (!seq_.emplace(e, next_seq_).second) return false;
  ++next_seq_;
  by_subject_[e.s].push_back(e);
  by_predicate_[e.p].push_back(e);
  by_object_[e.o].push_back(e);
  if (type_predicate_ && e.p == *type_predicate_) ++classes_[e.o];
  return true;
}

bool TripleStore::erase_unlocked(const Triple& t) {
  auto s = lookup(t.subject), p = lookup(t.predicate), o = lookup(t.object);
  if (!s || !p || !o) return false;
  const EncodedTriple e{*s, *p, *o};
  if (seq_.erase(e) == 0) return false;
  unlink(by_subject_, e.s, e);
  unlink(by_predicate_, e.p, e);
  unlink(by_object_, e.o, e);
  if (type_predicate_ && e.p == *type_predicate_) {
    if (auto it = classes_.find(e.o); it != classes_.end() && --it->second == 0) classes_.erase(it);
  }
  return true;
}

std::size_t TripleStore::insert(std::span<const Triple> triples) {
  std::unique_lock lock(*mutex_);
  std::size_t added = 0;
  for (const auto& t : triples) added += insert_unlocked(t) ? 1 : 0;
  return added;
}

bool TripleStore::insert(const Triple& t) {
  std::unique_lock lock(*mutex_);
  return insert_unlocked(t);
}

std::size_t TripleStore::erase(std::span<const Triple> triples) {
  std::unique_lock lock(*mutex_);
  std::size_t removed = 0;
  for (const auto& t : triples) removed += erase_unlocked(t) ? 1 : 0;
  return removed;
}

bool TripleStore::erase(const Triple& t) {
  std::unique_lock lock(*mutex_);
  return erase_unlocked(t);
}

bool TripleStore::contains(const Triple& t) const {
  auto s = lookup(t.subject), p = lookup(t.predicate), o = lookup(t.object);
  return s && p && o && seq_.count(EncodedTriple{*s, *p, *o}) > 0;
}

std::span<const EncodedTriple> TripleStore::with_subject(TermId s) const { return bucket(by_subject_, s); }
std::span<const EncodedTriple> TripleStore::with_predicate(TermId p) const {
  return bucket(by_predicate_, p);
}
std::span<const EncodedTriple> TripleStore::with_object(TermId o) const { return bucket(by_object_, o); }

std::vector<EncodedTriple> TripleStore::encoded() const {
  std::vector<std::pair<std::uint64_t, EncodedTriple>> ordered;
  ordered.reserve(seq_.size());
  for (const auto& [t, seq] : seq_) ordered.emplace_back(seq, t);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<EncodedTriple> out;
  out.reserve(ordered.size());
  for (const auto& [seq, t] : ordered) out.push_back(t);
  return out;
}

Triple TripleStore::decode(const EncodedTriple& t) const {
  return Triple{terms_[t.s], terms_[t.p], terms_[t.o]};
}

std::vector<Triple> TripleStore::triples() const {
  std::vector<Triple> out;
  for (const auto& e : encoded()) out.push_back(decode(e));
  return out;
}

bool TripleStore::operator==(const TripleStore& other) const {
  if (size() != other.size()) return false;
  for (const auto& [e, seq] : seq_) {
    if (!other.contains(decode(e))) return false;
  }
  return true;
}

}  // namespace sbcep::rdf
