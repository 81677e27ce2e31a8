#include "sbcep/error.hpp"
#include "sbcep/rdf.hpp"
#include "text_util.hpp"

namespace sbcep::rdf {

std::string serialize(std::span<const Triple> triples) {
  std::string out;
  for (const auto& t : triples) {
    out += t.subject.to_string();
    out += ' ';
    out += t.predicate.to_string();
    out += ' ';
    out += t.object.to_string();
    out += " .\n";
  }
  return out;
}

std::string serialize(const TripleStore& store) {
  auto lease = store.read_lease();
  return serialize(store.triples());
}

namespace {

class LineReader {
 public:
  LineReader(std::string_view line, std::size_t line_no) : s_(line), line_no_(line_no) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("line " + std::to_string(line_no_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

  std::string read_iri() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected '<'");
    auto close = s_.find('>', pos_);
    if (close == std::string_view::npos) fail("unterminated IRI");
    std::string iri(s_.substr(pos_ + 1, close - pos_ - 1));
    if (iri.empty() || iri.find_first_of(" \t") != std::string::npos) fail("invalid IRI");
    pos_ = close + 1;
    return iri;
  }

  Term read_object() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '<') return Term::iri(read_iri());
    if (pos_ >= s_.size() || s_[pos_] != '"') fail("expected IRI or literal");
    ++pos_;
    std::string lex;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated literal");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        char e = s_[pos_++];
        switch (e) {
          case 'n': lex += '\n'; break;
          case 'r': lex += '\r'; break;
          case 't': lex += '\t'; break;
          case '"': lex += '"'; break;
          case '\\': lex += '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        lex += c;
      }
    }
    Datatype dt = Datatype::String;
    if (s_.substr(pos_, 2) == "^^") {
      pos_ += 2;
      const std::string dt_iri = read_iri();
      auto parsed = datatype_from_iri(dt_iri);
      if (!parsed) fail("unsupported datatype <" + dt_iri + ">");
      dt = *parsed;
    }
    if (!lexical_valid(lex, dt)) fail("literal \"" + lex + "\" is not a valid " + std::string(datatype_iri(dt)));
    return Term::literal(std::move(lex), dt);
  }

  void expect_dot() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '.') fail("expected '.'");
    ++pos_;
    if (!at_end() && s_[pos_] != '#') fail("trailing characters");
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_no_;
};

}  // namespace

std::vector<Triple> parse_triples(std::string_view text) {
  std::vector<Triple> out;
  std::size_t line_no = 0;
  for (auto line : detail::lines(text)) {
    ++line_no;
    LineReader r(line, line_no);
    if (r.at_end()) continue;
    if (detail::trim(line).starts_with('#')) continue;
    Triple t;
    t.subject = Term::iri(r.read_iri());
    t.predicate = Term::iri(r.read_iri());
    t.object = r.read_object();
    r.expect_dot();
    out.push_back(std::move(t));
  }
  return out;
}

TripleStore parse(std::string_view text) {
  TripleStore store;
  store.insert(parse_triples(text));
  return store;
}

TripleStore load_store(const std::string& path) { return parse(detail::read_file(path)); }

void save_store(const TripleStore& store, const std::string& path) {
  detail::write_file(path, serialize(store));
}

}  // namespace sbcep::rdf
