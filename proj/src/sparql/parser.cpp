#include <algorithm>
#include <cctype>

#include "sbcep/sparql.hpp"
#include "text_util.hpp"

namespace sbcep::sparql {

namespace {

enum class Tok {
  Iri,       // <...>
  PName,     // prefix:local
  Var,       // ?x
  String,    // "..."
  Number,
  Word,      // keyword or bare identifier
  LBrace, RBrace, LParen, RParen, Dot, Star, Caret2, AndAnd, OrOr,
  Lt, Le, Gt, Ge, Eq, Ne,
  End
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

bool iri_char(char c) {
  return !(std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>' || c == '"' ||
           c == '{' || c == '}' || c == '|' || c == '^' || c == '`' || c == '\\');
}

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    auto push = [&](Tok k, std::size_t len) {
      out.push_back({k, std::string(s.substr(start, len)), start});
      i = start + len;
    };
    if (c == '<') {
      std::size_t j = i + 1;
      while (j < s.size() && iri_char(s[j])) ++j;
      if (j < s.size() && s[j] == '>' && j > i + 1 && s[i + 1] != '=') {
        out.push_back({Tok::Iri, std::string(s.substr(i + 1, j - i - 1)), start});
        i = j + 1;
        continue;
      }
      if (i + 1 < s.size() && s[i + 1] == '=') push(Tok::Le, 2);
      else push(Tok::Lt, 1);
      continue;
    }
    if (c == '>') {
      if (i + 1 < s.size() && s[i + 1] == '=') push(Tok::Ge, 2);
      else push(Tok::Gt, 1);
      continue;
    }
    if (c == '!' && i + 1 < s.size() && s[i + 1] == '=') { push(Tok::Ne, 2); continue; }
    if (c == '=') { push(Tok::Eq, 1); continue; }
    if (c == '&' && i + 1 < s.size() && s[i + 1] == '&') { push(Tok::AndAnd, 2); continue; }
    if (c == '|' && i + 1 < s.size() && s[i + 1] == '|') { push(Tok::OrOr, 2); continue; }
    if (c == '^' && i + 1 < s.size() && s[i + 1] == '^') { push(Tok::Caret2, 2); continue; }
    if (c == '{') { push(Tok::LBrace, 1); continue; }
    if (c == '}') { push(Tok::RBrace, 1); continue; }
    if (c == '(') { push(Tok::LParen, 1); continue; }
    if (c == ')') { push(Tok::RParen, 1); continue; }
    if (c == '*') { push(Tok::Star, 1); continue; }
    if (c == '?' || c == '$') {
      std::size_t j = i + 1;
      while (j < s.size() && name_char(s[j]) && s[j] != '-') ++j;
      if (j == i + 1) throw QueryError("empty variable name", start);
      out.push_back({Tok::Var, std::string(s.substr(i + 1, j - i - 1)), start});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::string lex;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= s.size()) throw QueryError("unterminated string literal", start);
        char d = s[j++];
        if (d == c) break;
        if (d == '\\' && j < s.size()) {
          char e = s[j++];
          switch (e) {
            case 'n': lex += '\n'; break;
            case 't': lex += '\t'; break;
            case 'r': lex += '\r'; break;
            default: lex += e;
          }
        } else {
          lex += d;
        }
      }
      out.push_back({Tok::String, lex, start});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+') && i + 1 < s.size() &&
         (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '.')) ||
        (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i + 1;
      while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                              s[j] == 'e' || s[j] == 'E' ||
                              ((s[j] == '-' || s[j] == '+') && (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
        ++j;
      }
      // A trailing '.' ends the triple rather than the number.
      if (s[j - 1] == '.') --j;
      push(Tok::Number, j - i);
      continue;
    }
    if (c == '.') { push(Tok::Dot, 1); continue; }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
        static_cast<unsigned char>(c) >= 0x80) {
      std::size_t j = i;
      while (j < s.size() && (name_char(s[j]) || s[j] == ':' || s[j] == '.')) ++j;
      while (j > i && s[j - 1] == '.') --j;
      std::string word(s.substr(i, j - i));
      out.push_back({word.find(':') != std::string::npos ? Tok::PName : Tok::Word, word, start});
      i = j;
      continue;
    }
    throw QueryError(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

bool keyword_is(const Token& t, std::string_view kw) {
  if (t.kind != Tok::Word || t.text.size() != kw.size()) return false;
  for (std::size_t i = 0; i < kw.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(t.text[i])) != kw[i]) return false;
  }
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  Query run() {
    Query q;
    while (keyword_is(peek(), "PREFIX")) parse_prefix(q);
    expect_keyword("SELECT");
    if (keyword_is(peek(), "DISTINCT")) {
      throw QueryError("DISTINCT is not supported", peek().offset);
    }
    if (peek().kind == Tok::Star) {
      next();
      q.wildcard = true;
    } else {
      while (peek().kind == Tok::Var) q.select.push_back(next().text);
      if (q.select.empty()) throw QueryError("SELECT needs variables or '*'", peek().offset);
    }
    if (keyword_is(peek(), "FROM")) {
      next();
      const Token& t = peek();
      if (t.kind == Tok::Iri) q.dataset = next().text;
      else if (t.kind == Tok::PName) q.dataset = expand(q, next());
      else if (t.kind == Tok::Word && !keyword_is(t, "WHERE")) q.dataset = next().text;
      else throw QueryError("FROM needs a dataset name", t.offset);
    }
    if (keyword_is(peek(), "WHERE")) next();
    parse_group(q);
    parse_modifiers(q);
    if (peek().kind != Tok::End) throw QueryError("unexpected '" + peek().text + "'", peek().offset);
    validate(q);
    return q;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) {
      if (k == Tok::RBrace && peek().kind == Tok::End) {
        throw QueryError("unbalanced braces: missing '}'", peek().offset);
      }
      throw QueryError(std::string("expected ") + what + ", found '" + peek().text + "'",
                       peek().offset);
    }
    return next();
  }
  void expect_keyword(std::string_view kw) {
    if (!keyword_is(peek(), kw)) {
      throw QueryError("expected " + std::string(kw) + ", found '" + peek().text + "'", peek().offset);
    }
    next();
  }

  void parse_prefix(Query& q) {
    next();
    const Token& name = peek();
    if (name.kind != Tok::PName || name.text.back() != ':' ||
        name.text.find(':') != name.text.size() - 1) {
      throw QueryError("expected prefix name ending in ':'", name.offset);
    }
    next();
    const Token& iri = expect(Tok::Iri, "prefix IRI");
    std::string prefix = name.text.substr(0, name.text.size() - 1);
    auto it = std::find_if(q.prefixes.begin(), q.prefixes.end(),
                           [&](const auto& p) { return p.first == prefix; });
    if (it != q.prefixes.end()) it->second = iri.text;
    else q.prefixes.emplace_back(std::move(prefix), iri.text);
  }

  std::string expand(const Query& q, const Token& t) const {
    const auto colon = t.text.find(':');
    const std::string prefix = t.text.substr(0, colon);
    auto it = std::find_if(q.prefixes.begin(), q.prefixes.end(),
                           [&](const auto& p) { return p.first == prefix; });
    if (it == q.prefixes.end()) throw QueryError("undeclared prefix '" + prefix + ":'", t.offset);
    return it->second + t.text.substr(colon + 1);
  }

  void parse_group(Query& q) {
    const Token& open = peek();
    if (open.kind != Tok::LBrace) throw QueryError("expected '{'", open.offset);
    next();
    for (;;) {
      const Token& t = peek();
      if (t.kind == Tok::RBrace) {
        next();
        return;
      }
      if (t.kind == Tok::End) throw QueryError("unbalanced braces: missing '}'", t.offset);
      if (t.kind == Tok::Dot) {
        next();
        continue;
      }
      if (t.kind == Tok::LBrace) throw QueryError("nested groups are not supported", t.offset);
      if (keyword_is(t, "FILTER")) {
        next();
        FilterExpr f = parse_bracketted_filter(q);
        q.add_filter(std::move(f));
        continue;
      }
      if (keyword_is(t, "OPTIONAL") || keyword_is(t, "UNION") || keyword_is(t, "GRAPH") ||
          keyword_is(t, "BIND") || keyword_is(t, "VALUES") || keyword_is(t, "MINUS")) {
        throw QueryError("unsupported clause '" + t.text + "'", t.offset);
      }
      TriplePattern tp;
      tp.subject = parse_term(q, Position::Subject);
      tp.predicate = parse_term(q, Position::Predicate);
      tp.object = parse_term(q, Position::Object);
      q.patterns.push_back(std::move(tp));
      const Token& after = peek();
      if (after.kind == Tok::Dot) {
        next();
      } else if (after.kind != Tok::RBrace && !keyword_is(after, "FILTER")) {
        if (after.kind == Tok::End) throw QueryError("unbalanced braces: missing '}'", after.offset);
        throw QueryError("expected '.' after triple pattern, found '" + after.text + "'", after.offset);
      }
    }
  }

  enum class Position { Subject, Predicate, Object };

  PatternTerm parse_term(const Query& q, Position pos) {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Var: next(); return PatternTerm::var(t.text);
      case Tok::Iri: next(); return PatternTerm::constant(rdf::Term::iri(t.text));
      case Tok::PName: next(); return PatternTerm::constant(rdf::Term::iri(expand(q, t)));
      case Tok::Word:
        if (pos == Position::Predicate && t.text == "a") {
          next();
          return PatternTerm::constant(rdf::Term::iri(std::string(rdf::kRdfType)));
        }
        break;
      case Tok::String:
      case Tok::Number:
        if (pos != Position::Object) throw QueryError("literal allowed only in object position", t.offset);
        return PatternTerm::constant(parse_literal(q));
      default: break;
    }
    if (t.kind == Tok::End) throw QueryError("unbalanced braces: missing '}'", t.offset);
    throw QueryError("expected a term, found '" + t.text + "'", t.offset);
  }

  rdf::Term parse_literal(const Query& q) {
    const Token& t = next();
    if (t.kind == Tok::Number) {
      const bool integral = t.text.find_first_of(".eE") == std::string::npos;
      return rdf::Term::literal(t.text, integral ? rdf::Datatype::Integer : rdf::Datatype::Float);
    }
    rdf::Datatype dt = rdf::Datatype::String;
    if (peek().kind == Tok::Caret2) {
      next();
      const Token& d = peek();
      std::string iri;
      if (d.kind == Tok::Iri) iri = d.text;
      else if (d.kind == Tok::PName) iri = expand(q, d);
      else throw QueryError("expected datatype IRI", d.offset);
      next();
      auto parsed = rdf::datatype_from_iri(iri);
      if (!parsed) throw QueryError("unsupported datatype <" + iri + ">", d.offset);
      dt = *parsed;
    }
    return rdf::Term::literal(t.text, dt);
  }

  FilterExpr parse_bracketted_filter(const Query& q) {
    expect(Tok::LParen, "'(' after FILTER");
    FilterExpr e = parse_or(q);
    expect(Tok::RParen, "')'");
    return e;
  }

  FilterExpr parse_or(const Query& q) {
    std::vector<FilterExpr> parts;
    parts.push_back(parse_and(q));
    while (peek().kind == Tok::OrOr) {
      next();
      parts.push_back(parse_and(q));
    }
    return parts.size() == 1 ? std::move(parts.front()) : FilterExpr::any_of(std::move(parts));
  }

  FilterExpr parse_and(const Query& q) {
    std::vector<FilterExpr> parts;
    parts.push_back(parse_primary(q));
    while (peek().kind == Tok::AndAnd) {
      next();
      parts.push_back(parse_primary(q));
    }
    return parts.size() == 1 ? std::move(parts.front()) : FilterExpr::all_of(std::move(parts));
  }

  FilterExpr parse_primary(const Query& q) {
    if (peek().kind == Tok::LParen) {
      next();
      FilterExpr e = parse_or(q);
      expect(Tok::RParen, "')'");
      return e;
    }
    const std::size_t at = peek().offset;
    Operand lhs = parse_operand(q);
    CompareOp op;
    switch (peek().kind) {
      case Tok::Lt: op = CompareOp::Lt; break;
      case Tok::Le: op = CompareOp::Le; break;
      case Tok::Gt: op = CompareOp::Gt; break;
      case Tok::Ge: op = CompareOp::Ge; break;
      case Tok::Eq: op = CompareOp::Eq; break;
      case Tok::Ne: op = CompareOp::Ne; break;
      default: throw QueryError("expected comparison operator, found '" + peek().text + "'", peek().offset);
    }
    next();
    Operand rhs = parse_operand(q);
    if (lhs.variable && rhs.variable) throw QueryError("comparisons between two variables are not supported", at);
    if (!lhs.variable && !rhs.variable) throw QueryError("comparison needs a variable", at);
    if (rhs.variable) {
      std::swap(lhs, rhs);
      op = flip(op);
    }
    Comparison c;
    c.variable = *lhs.variable;
    c.op = op;
    // Bare variables take the constant's type.
    c.cast = lhs.cast ? *lhs.cast : (rhs.type == ConstType::DateTime ? CastType::DateTime : CastType::Float);
    if (c.cast == CastType::DateTime) {
      if (rhs.type != ConstType::DateTime) throw QueryError("dateTime cast compared with a non-dateTime constant", at);
    } else if (rhs.type != ConstType::Number) {
      throw QueryError(std::string(cast_name(c.cast)) + " cast compared with a non-numeric constant", at);
    }
    c.constant = rhs.value;
    return FilterExpr::compare(std::move(c));
  }

  enum class ConstType { Number, DateTime };

  struct Operand {
    std::optional<std::string> variable;
    std::optional<CastType> cast;  // for variables
    ConstType type = ConstType::Number;
    double value = 0;
  };

  static CompareOp flip(CompareOp op) {
    switch (op) {
      case CompareOp::Lt: return CompareOp::Gt;
      case CompareOp::Le: return CompareOp::Ge;
      case CompareOp::Gt: return CompareOp::Lt;
      case CompareOp::Ge: return CompareOp::Le;
      default: return op;
    }
  }

  std::optional<CastType> cast_function(const Query& q, const Token& t) const {
    std::string iri;
    if (t.kind == Tok::Iri) iri = t.text;
    else if (t.kind == Tok::PName) iri = expand(q, t);
    else return std::nullopt;
    if (iri == std::string(rdf::kXsdNs) + "float" || iri == std::string(rdf::kXsdNs) + "double" ||
        iri == std::string(rdf::kXsdNs) + "decimal") {
      return CastType::Float;
    }
    if (iri == std::string(rdf::kXsdNs) + "integer" || iri == std::string(rdf::kXsdNs) + "int") {
      return CastType::Integer;
    }
    if (iri == std::string(rdf::kXsdNs) + "dateTime") return CastType::DateTime;
    throw QueryError("unknown cast function '" + t.text + "'", t.offset);
  }

  Operand constant_from_literal(const rdf::Term& lit, std::optional<CastType> cast, std::size_t at) {
    Operand o;
    const CastType target = cast ? *cast
                            : lit.datatype == rdf::Datatype::DateTime ? CastType::DateTime
                                                                      : CastType::Float;
    auto v = cast_literal(lit, target);
    if (!v) throw QueryError("constant \"" + lit.value + "\" is not a valid " + std::string(cast_name(target)), at);
    o.type = target == CastType::DateTime ? ConstType::DateTime : ConstType::Number;
    o.value = v->value;
    return o;
  }

  Operand parse_operand(const Query& q) {
    const Token& t = peek();
    const std::size_t at = t.offset;
    if (t.kind == Tok::Var) {
      next();
      Operand o;
      o.variable = t.text;
      return o;
    }
    if (t.kind == Tok::Number) {
      next();
      auto v = detail::parse_double(t.text);
      if (!v) throw QueryError("bad number '" + t.text + "'", at);
      Operand o;
      o.value = *v;
      return o;
    }
    if (t.kind == Tok::String) {
      rdf::Term lit = parse_literal(q);
      if (lit.datatype == rdf::Datatype::String) {
        throw QueryError("untyped string constants are not comparable; use a cast", at);
      }
      return constant_from_literal(lit, std::nullopt, at);
    }
    if ((t.kind == Tok::PName || t.kind == Tok::Iri) && peek(1).kind == Tok::LParen) {
      const Token& fn = next();
      auto cast = cast_function(q, fn);
      if (!cast) throw QueryError("unknown function '" + fn.text + "'", at);
      next();  // (
      Operand o;
      const Token& arg = peek();
      if (arg.kind == Tok::Var) {
        next();
        o.variable = arg.text;
        o.cast = cast;
      } else if (arg.kind == Tok::String || arg.kind == Tok::Number) {
        rdf::Term lit = parse_literal(q);
        o = constant_from_literal(lit, cast, arg.offset);
      } else {
        throw QueryError("expected variable or literal inside cast", arg.offset);
      }
      expect(Tok::RParen, "')' closing cast");
      return o;
    }
    if (t.kind == Tok::Word && peek(1).kind == Tok::LParen) {
      throw QueryError("unknown cast function '" + t.text + "'", at);
    }
    throw QueryError("expected operand, found '" + t.text + "'", at);
  }

  std::size_t parse_count(const char* what) {
    const Token& t = peek();
    auto v = t.kind == Tok::Number ? detail::parse_int(t.text) : std::nullopt;
    if (!v || *v < 0) throw QueryError(std::string(what) + " needs a non-negative integer", t.offset);
    next();
    return static_cast<std::size_t>(*v);
  }

  void parse_modifiers(Query& q) {
    for (;;) {
      const Token& t = peek();
      if (keyword_is(t, "ORDER")) {
        if (q.order_by) throw QueryError("duplicate ORDER BY", t.offset);
        next();
        expect_keyword("BY");
        OrderKey key;
        if (keyword_is(peek(), "ASC") || keyword_is(peek(), "DESC")) {
          key.descending = keyword_is(peek(), "DESC");
          next();
          expect(Tok::LParen, "'('");
          key.variable = expect(Tok::Var, "variable").text;
          expect(Tok::RParen, "')'");
        } else {
          key.variable = expect(Tok::Var, "variable").text;
        }
        q.order_by = key;
      } else if (keyword_is(t, "LIMIT")) {
        if (q.limit) throw QueryError("duplicate LIMIT", t.offset);
        next();
        q.limit = parse_count("LIMIT");
      } else if (keyword_is(t, "OFFSET")) {
        if (q.offset) throw QueryError("duplicate OFFSET", t.offset);
        next();
        q.offset = parse_count("OFFSET");
      } else {
        return;
      }
    }
  }

  void validate(const Query& q) const {
    if (q.patterns.empty()) throw QueryError("WHERE clause has no triple patterns", 0);
    const auto vars = q.pattern_variables();
    auto bound = [&](const std::string& v) { return std::find(vars.begin(), vars.end(), v) != vars.end(); };
    for (const auto& v : q.select) {
      if (!bound(v)) throw QueryError("selected variable ?" + v + " does not occur in any pattern", 0);
    }
    if (q.filter) {
      std::vector<std::string> fv;
      q.filter->collect_variables(fv);
      for (const auto& v : fv) {
        if (!bound(v)) throw QueryError("filter uses unbound variable ?" + v, 0);
      }
    }
    if (q.order_by && !bound(q.order_by->variable)) {
      throw QueryError("ORDER BY uses unbound variable ?" + q.order_by->variable, 0);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view cast_name(CastType c) {
  switch (c) {
    case CastType::Float: return "xsd:float";
    case CastType::Integer: return "xsd:integer";
    case CastType::DateTime: return "xsd:dateTime";
  }
  return "?";
}

std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

FilterExpr FilterExpr::compare(Comparison c) {
  FilterExpr e;
  e.kind = Kind::Compare;
  e.comparison = std::move(c);
  return e;
}

FilterExpr FilterExpr::all_of(std::vector<FilterExpr> children) {
  FilterExpr e;
  e.kind = Kind::And;
  // Flatten nested conjunctions.
  for (auto& c : children) {
    if (c.kind == Kind::And) {
      for (auto& g : c.children) e.children.push_back(std::move(g));
    } else {
      e.children.push_back(std::move(c));
    }
  }
  return e;
}

FilterExpr FilterExpr::any_of(std::vector<FilterExpr> children) {
  FilterExpr e;
  e.kind = Kind::Or;
  e.children = std::move(children);
  return e;
}

void FilterExpr::collect_variables(std::vector<std::string>& out) const {
  if (kind == Kind::Compare) {
    if (std::find(out.begin(), out.end(), comparison.variable) == out.end()) {
      out.push_back(comparison.variable);
    }
    return;
  }
  for (const auto& c : children) c.collect_variables(out);
}

std::string FilterExpr::to_string() const {
  if (kind == Kind::Compare) {
    std::string constant = comparison.cast == CastType::DateTime
                               ? "\"" + DateTime(static_cast<std::int64_t>(comparison.constant)).iso() + "\"^^xsd:dateTime"
                               : detail::format_double(comparison.constant);
    return std::string(cast_name(comparison.cast)) + "(?" + comparison.variable + ") " +
           std::string(op_symbol(comparison.op)) + " " + constant;
  }
  std::string out = "(";
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) out += kind == Kind::And ? " && " : " || ";
    out += children[i].to_string();
  }
  return out + ")";
}

std::vector<std::string> Query::pattern_variables() const {
  std::vector<std::string> out;
  auto add = [&](const PatternTerm& t) {
    if (t.variable && std::find(out.begin(), out.end(), *t.variable) == out.end()) out.push_back(*t.variable);
  };
  for (const auto& p : patterns) {
    add(p.subject);
    add(p.predicate);
    add(p.object);
  }
  return out;
}

std::vector<std::string> Query::projection() const { return wildcard ? pattern_variables() : select; }

void Query::add_filter(FilterExpr conjunct) {
  if (!filter) {
    filter = std::move(conjunct);
  } else {
    std::vector<FilterExpr> parts;
    parts.push_back(std::move(*filter));
    parts.push_back(std::move(conjunct));
    filter = FilterExpr::all_of(std::move(parts));
  }
}

Query parse_query(std::string_view text) { return Parser(text).run(); }

}  // namespace sbcep::sparql
