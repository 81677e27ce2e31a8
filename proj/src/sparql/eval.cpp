#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "sbcep/sparql.hpp"
#include "text_util.hpp"

namespace sbcep::sparql {

std::optional<CastValue> cast_literal(const rdf::Term& term, CastType target) {
  if (!term.is_literal()) return std::nullopt;
  const std::string& lex = term.value;
  switch (target) {
    case CastType::Float:
      if (term.datatype == rdf::Datatype::DateTime) return std::nullopt;
      if (auto v = detail::parse_double(lex); v && std::isfinite(*v)) return CastValue{target, *v};
      return std::nullopt;
    case CastType::Integer: {
      if (term.datatype == rdf::Datatype::DateTime) return std::nullopt;
      if (auto v = detail::parse_int(lex)) return CastValue{target, static_cast<double>(*v)};
      if (term.datatype == rdf::Datatype::Float) {
        // Integral floats convert; fractional ones are not valid integers.
        if (auto v = detail::parse_double(lex); v && std::isfinite(*v) && *v == std::trunc(*v)) {
          return CastValue{target, *v};
        }
      }
      return std::nullopt;
    }
    case CastType::DateTime:
      if (term.datatype != rdf::Datatype::DateTime && term.datatype != rdf::Datatype::String) {
        return std::nullopt;
      }
      if (auto dt = DateTime::parse(lex)) {
        return CastValue{target, static_cast<double>(dt->epoch_seconds())};
      }
      return std::nullopt;
  }
  return std::nullopt;
}

bool compare_values(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::Lt: return lhs < rhs;
    case CompareOp::Le: return lhs <= rhs;
    case CompareOp::Gt: return lhs > rhs;
    case CompareOp::Ge: return lhs >= rhs;
    case CompareOp::Eq: return lhs == rhs;
    case CompareOp::Ne: return lhs != rhs;
  }
  return false;
}

namespace {

int rank_of(const rdf::Term& t, double& value) {
  if (t.is_iri()) return 3;
  if (t.datatype == rdf::Datatype::Float || t.datatype == rdf::Datatype::Integer) {
    if (auto v = detail::parse_double(t.value); v && !std::isnan(*v)) {
      value = *v;
      return 0;
    }
    return 2;
  }
  if (t.datatype == rdf::Datatype::DateTime) {
    if (auto d = DateTime::parse(t.value)) {
      value = static_cast<double>(d->epoch_seconds());
      return 1;
    }
  }
  return 2;
}

}  // namespace

int order_compare(const rdf::Term& a, const rdf::Term& b) {
  double va = 0, vb = 0;
  const int ra = rank_of(a, va), rb = rank_of(b, vb);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra <= 1 && va != vb) return va < vb ? -1 : 1;
  const auto c = rdf::lexical_compare(a, b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

namespace {

constexpr rdf::TermId kUnbound = std::numeric_limits<rdf::TermId>::max();

// Pattern slot after variable numbering and constant resolution.
struct Slot {
  int var = -1;  // variable index, or -1 for a constant
  rdf::TermId id = kUnbound;
};

struct CompiledPattern {
  Slot s, p, o;
};

struct CompiledComparison {
  int var;
  CastType cast;
  CompareOp op;
  double constant;
};

struct CompiledFilter {
  FilterExpr::Kind kind;
  CompiledComparison cmp{};
  std::vector<CompiledFilter> children;
};

class Evaluator {
 public:
  Evaluator(const Query& q, const rdf::TripleStore& store) : query_(q), store_(store) {}

  ResultSet run() {
    ResultSet rs;
    rs.variables = query_.projection();
    vars_ = query_.pattern_variables();
    if (!compile()) return rs;

    for (const auto& name : rs.variables) projection_.push_back(index_of(name));
    if (query_.order_by) order_var_ = index_of(query_.order_by->variable);

    // Without ORDER BY the first offset+limit solutions are final.
    if (!query_.order_by && query_.limit) {
      stop_after_ = query_.offset.value_or(0) + *query_.limit;
    }
    std::vector<rdf::TermId> binding(vars_.size(), kUnbound);
    const bool nothing_wanted = !query_.order_by && query_.limit && stop_after_ == 0;
    if (!nothing_wanted) search(0, binding);

    if (query_.order_by) sort_solutions();
    const std::size_t offset = std::min(query_.offset.value_or(0), solutions_.size());
    std::size_t end = solutions_.size();
    if (query_.limit) end = std::min(end, offset + *query_.limit);
    rs.rows.reserve(end - offset);
    for (std::size_t i = offset; i < end; ++i) {
      std::vector<rdf::Term> row;
      row.reserve(projection_.size());
      for (std::size_t c = 0; c < projection_.size(); ++c) row.push_back(store_.term(solutions_[i][c]));
      rs.rows.push_back(std::move(row));
    }
    return rs;
  }

 private:
  int index_of(const std::string& name) const {
    return static_cast<int>(std::find(vars_.begin(), vars_.end(), name) - vars_.begin());
  }

  // False when a constant does not occur in the store (no solutions).
  bool compile() {
    auto slot = [&](const PatternTerm& t, bool& ok) {
      Slot s;
      if (t.variable) {
        s.var = index_of(*t.variable);
      } else if (auto id = store_.lookup(t.term)) {
        s.id = *id;
      } else {
        ok = false;
      }
      return s;
    };
    bool ok = true;
    for (const auto& p : query_.patterns) {
      patterns_.push_back({slot(p.subject, ok), slot(p.predicate, ok), slot(p.object, ok)});
    }
    if (!ok) return false;

    // Each top-level conjunct runs right after the step that binds its last variable.
    ready_.assign(patterns_.size(), {});
    if (query_.filter) {
      std::vector<const FilterExpr*> conjuncts;
      if (query_.filter->kind == FilterExpr::Kind::And) {
        for (const auto& c : query_.filter->children) conjuncts.push_back(&c);
      } else {
        conjuncts.push_back(&*query_.filter);
      }
      std::vector<std::size_t> bound_at(vars_.size(), 0);
      {
        std::vector<bool> seen(vars_.size(), false);
        for (std::size_t i = 0; i < patterns_.size(); ++i) {
          for (const Slot* s : {&patterns_[i].s, &patterns_[i].p, &patterns_[i].o}) {
            if (s->var >= 0 && !seen[static_cast<std::size_t>(s->var)]) {
              seen[static_cast<std::size_t>(s->var)] = true;
              bound_at[static_cast<std::size_t>(s->var)] = i;
            }
          }
        }
      }
      for (const FilterExpr* c : conjuncts) {
        std::vector<std::string> names;
        c->collect_variables(names);
        std::size_t step = 0;
        for (const auto& n : names) step = std::max(step, bound_at[static_cast<std::size_t>(index_of(n))]);
        ready_[step].push_back(compile_filter(*c));
      }
    }
    return true;
  }

  CompiledFilter compile_filter(const FilterExpr& e) const {
    CompiledFilter f;
    f.kind = e.kind;
    if (e.kind == FilterExpr::Kind::Compare) {
      f.cmp = {index_of(e.comparison.variable), e.comparison.cast, e.comparison.op, e.comparison.constant};
    } else {
      for (const auto& c : e.children) f.children.push_back(compile_filter(c));
    }
    return f;
  }

  bool test(const CompiledFilter& f, const std::vector<rdf::TermId>& binding) const {
    switch (f.kind) {
      case FilterExpr::Kind::Compare: {
        auto v = cast_literal(store_.term(binding[static_cast<std::size_t>(f.cmp.var)]), f.cmp.cast);
        return v && compare_values(v->value, f.cmp.op, f.cmp.constant);
      }
      case FilterExpr::Kind::And:
        for (const auto& c : f.children) {
          if (!test(c, binding)) return false;
        }
        return true;
      case FilterExpr::Kind::Or:
        for (const auto& c : f.children) {
          if (test(c, binding)) return true;
        }
        return false;
    }
    return false;
  }

  static rdf::TermId resolve(const Slot& s, const std::vector<rdf::TermId>& binding) {
    return s.var >= 0 ? binding[static_cast<std::size_t>(s.var)] : s.id;
  }

  // Returns false once enough solutions have been collected.
  bool search(std::size_t step, std::vector<rdf::TermId>& binding) {
    if (step == patterns_.size()) {
      std::vector<rdf::TermId> row;
      row.reserve(projection_.size() + 1);
      for (int v : projection_) row.push_back(binding[static_cast<std::size_t>(v)]);
      if (order_var_ >= 0) row.push_back(binding[static_cast<std::size_t>(order_var_)]);
      solutions_.push_back(std::move(row));
      return stop_after_ == 0 || solutions_.size() < stop_after_;
    }
    const CompiledPattern& pat = patterns_[step];
    const rdf::TermId s = resolve(pat.s, binding), p = resolve(pat.p, binding), o = resolve(pat.o, binding);

    // Most selective bound position picks the index.
    std::span<const rdf::EncodedTriple> candidates;
    bool have = false;
    auto consider = [&](rdf::TermId id, std::span<const rdf::EncodedTriple> (rdf::TripleStore::*index)(rdf::TermId) const) {
      if (id == kUnbound) return;
      auto c = (store_.*index)(id);
      if (!have || c.size() < candidates.size()) {
        candidates = c;
        have = true;
      }
    };
    consider(s, &rdf::TripleStore::with_subject);
    consider(p, &rdf::TripleStore::with_predicate);
    consider(o, &rdf::TripleStore::with_object);
    std::vector<rdf::EncodedTriple> all;
    if (!have) {
      all = store_.encoded();
      candidates = all;
    }

    for (const auto& t : candidates) {
      if ((s != kUnbound && t.s != s) || (p != kUnbound && t.p != p) || (o != kUnbound && t.o != o)) continue;
      // Bind free slots; a variable repeated within the pattern must agree.
      std::array<std::pair<int, rdf::TermId>, 3> assigned{};
      std::size_t n = 0;
      bool ok = true;
      auto bind = [&](const Slot& slot, rdf::TermId value) {
        if (slot.var < 0 || !ok) return;
        auto& cur = binding[static_cast<std::size_t>(slot.var)];
        if (cur == kUnbound) {
          cur = value;
          assigned[n++] = {slot.var, value};
        } else if (cur != value) {
          ok = false;
        }
      };
      bind(pat.s, t.s);
      bind(pat.p, t.p);
      bind(pat.o, t.o);
      if (ok) {
        for (const auto& f : ready_[step]) {
          if (!test(f, binding)) {
            ok = false;
            break;
          }
        }
      }
      bool keep_going = true;
      if (ok) keep_going = search(step + 1, binding);
      for (std::size_t i = 0; i < n; ++i) binding[static_cast<std::size_t>(assigned[i].first)] = kUnbound;
      if (!keep_going) return false;
    }
    return true;
  }

  void sort_solutions() {
    const bool desc = query_.order_by->descending;
    const std::size_t key = projection_.size();
    std::stable_sort(solutions_.begin(), solutions_.end(), [&](const auto& a, const auto& b) {
      if (a[key] != b[key]) {
        const int c = order_compare(store_.term(a[key]), store_.term(b[key]));
        if (c != 0) return desc ? c > 0 : c < 0;
      }
      for (std::size_t i = 0; i < key; ++i) {
        if (a[i] == b[i]) continue;
        const int c = order_compare(store_.term(a[i]), store_.term(b[i]));
        if (c != 0) return c < 0;
      }
      return false;
    });
  }

  const Query& query_;
  const rdf::TripleStore& store_;
  std::vector<std::string> vars_;
  std::vector<CompiledPattern> patterns_;
  std::vector<std::vector<CompiledFilter>> ready_;
  std::vector<int> projection_;
  int order_var_ = -1;
  std::size_t stop_after_ = 0;
  std::vector<std::vector<rdf::TermId>> solutions_;
};

}  // namespace

ResultSet evaluate(const Query& query, const rdf::TripleStore& store) {
  const auto t0 = std::chrono::steady_clock::now();
  auto lease = store.read_lease();
  ResultSet rs = Evaluator(query, store).run();
  rs.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rs;
}

void StoreCatalog::add(std::string name, const rdf::TripleStore* store) {
  stores_[std::move(name)] = store;
  if (!default_) default_ = store;
}

const rdf::TripleStore& StoreCatalog::resolve(const std::optional<std::string>& name) const {
  if (!name) {
    if (!default_) throw DataError("no default dataset");
    return *default_;
  }
  auto it = stores_.find(*name);
  if (it == stores_.end()) throw DataError("unknown dataset '" + *name + "'");
  return *it->second;
}

ResultSet evaluate(const Query& query, const StoreCatalog& catalog) {
  return evaluate(query, catalog.resolve(query.dataset));
}

namespace {

std::string csv_cell(const std::string& v) {
  if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const ResultSet& rs) {
  std::string out;
  for (std::size_t i = 0; i < rs.variables.size(); ++i) {
    if (i) out += ',';
    out += csv_cell(rs.variables[i]);
  }
  out += '\n';
  for (const auto& row : rs.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i].value);
    }
    out += '\n';
  }
  return out;
}

std::string to_json(const ResultSet& rs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rs.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& t = row[i];
      nlohmann::json cell = {{"type", t.is_iri() ? "uri" : "literal"}, {"value", t.value}};
      if (t.is_literal()) cell["datatype"] = std::string(rdf::datatype_iri(t.datatype));
      obj[rs.variables[i]] = std::move(cell);
    }
    rows.push_back(std::move(obj));
  }
  nlohmann::json doc = {{"head", {{"vars", rs.variables}}}, {"results", {{"bindings", rows}}}};
  return doc.dump(2) + "\n";
}

}  // namespace sbcep::sparql
