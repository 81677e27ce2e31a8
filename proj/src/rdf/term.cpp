#include <string>

#include "sbcep/rdf.hpp"
#include "text_util.hpp"

namespace sbcep::rdf {

std::string_view datatype_iri(Datatype dt) {
  switch (dt) {
    case Datatype::Float: return "http://www.w3.org/2001/XMLSchema#float";
    case Datatype::Integer: return "http://www.w3.org/2001/XMLSchema#integer";
    case Datatype::DateTime: return "http://www.w3.org/2001/XMLSchema#dateTime";
    case Datatype::String: return "http://www.w3.org/2001/XMLSchema#string";
  }
  return "";
}

std::optional<Datatype> datatype_from_iri(std::string_view iri) {
  if (!iri.starts_with(kXsdNs)) return std::nullopt;
  auto local = iri.substr(kXsdNs.size());
  if (local == "float" || local == "double" || local == "decimal") return Datatype::Float;
  if (local == "integer" || local == "int" || local == "long") return Datatype::Integer;
  if (local == "dateTime") return Datatype::DateTime;
  if (local == "string") return Datatype::String;
  return std::nullopt;
}

bool lexical_valid(std::string_view lexical, Datatype dt) {
  switch (dt) {
    case Datatype::Float: return detail::parse_double(lexical).has_value();
    case Datatype::Integer: return detail::parse_int(lexical).has_value();
    case Datatype::DateTime:
      return lexical.size() == 19 && lexical[10] == 'T' && DateTime::parse(lexical).has_value();
    case Datatype::String: return true;
  }
  return false;
}

Term Term::iri(std::string value) {
  Term t;
  t.kind = Kind::Iri;
  t.value = std::move(value);
  return t;
}

Term Term::literal(std::string lexical, Datatype dt) {
  Term t;
  t.kind = Kind::Literal;
  t.value = std::move(lexical);
  t.datatype = dt;
  return t;
}

std::string Term::to_string() const {
  if (is_iri()) return "<" + value + ">";
  std::string out = "\"";
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += "\"^^<";
  out += datatype_iri(datatype);
  out += ">";
  return out;
}

std::strong_ordering lexical_compare(const Term& a, const Term& b) {
  if (a.kind != b.kind) return a.kind <=> b.kind;
  if (auto c = a.value.compare(b.value); c != 0) return c <=> 0;
  if (a.is_iri()) return std::strong_ordering::equal;
  return a.datatype <=> b.datatype;
}

std::size_t TermHash::operator()(const Term& t) const noexcept {
  std::size_t h = std::hash<std::string>{}(t.value);
  h ^= static_cast<std::size_t>(t.kind) * 0x9e3779b97f4a7c15ULL;
  if (t.is_literal()) h ^= (static_cast<std::size_t>(t.datatype) + 1) * 0xc2b2ae3d27d4eb4fULL;
  return h;
}

}  // namespace sbcep::rdf
