#include <algorithm>
#include <limits>
#include <map>

#include "sbcep/error.hpp"
#include "sbcep/rules.hpp"
#include "text_util.hpp"

namespace sbcep::rules {

std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Lt: return "<";
    case Op::Ge: return ">=";
  }
  return "?";
}

bool Condition::holds(double value) const {
  switch (op) {
    case Op::Le: return value <= threshold;
    case Op::Gt: return value > threshold;
    case Op::Lt: return value < threshold;
    case Op::Ge: return value >= threshold;
  }
  return false;
}

bool Rule::feasible() const {
  struct Bound {
    double lo = -std::numeric_limits<double>::infinity();
    bool lo_open = true;
    double hi = std::numeric_limits<double>::infinity();
    bool hi_open = true;
  };
  std::map<Feature, Bound> bounds;
  for (const auto& c : conditions) {
    Bound& b = bounds[c.feature];
    switch (c.op) {
      case Op::Le:
      case Op::Lt: {
        const bool open = c.op == Op::Lt;
        if (c.threshold < b.hi || (c.threshold == b.hi && open)) {
          b.hi = c.threshold;
          b.hi_open = open;
        }
        break;
      }
      case Op::Gt:
      case Op::Ge: {
        const bool open = c.op == Op::Gt;
        if (c.threshold > b.lo || (c.threshold == b.lo && open)) {
          b.lo = c.threshold;
          b.lo_open = open;
        }
        break;
      }
    }
  }
  for (const auto& [f, b] : bounds) {
    if (b.lo > b.hi) return false;
    if (b.lo == b.hi && (b.lo_open || b.hi_open)) return false;
  }
  return true;
}

bool rule_matches(const Rule& rule, const SensorRecord& event) {
  for (const auto& c : rule.conditions) {
    auto v = event.value(c.feature);
    if (!v) {
      throw DataError("rule '" + rule.id + "' needs feature '" + std::string(feature_name(c.feature)) +
                      "' which the event lacks");
    }
    if (!c.holds(*v)) return false;
  }
  return true;
}

RuleSet::RuleSet(std::vector<Rule> rules, int default_label, std::uint64_t version)
    : version_(version), rules_(std::move(rules)), default_label_(default_label) {
  normalize();
}

void RuleSet::normalize() {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    for (std::size_t j = i + 1; j < rules_.size(); ++j) {
      if (rules_[i].id == rules_[j].id) throw DataError("duplicate rule id '" + rules_[i].id + "'");
    }
  }
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const Rule& a, const Rule& b) { return a.priority < b.priority; });
}

const Rule* RuleSet::find(std::string_view id) const {
  for (const auto& r : rules_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

RuleSet RuleSet::with_rule(Rule rule) const {
  if (find(rule.id)) throw DataError("rule '" + rule.id + "' already exists");
  auto rules = rules_;
  rules.push_back(std::move(rule));
  return RuleSet(std::move(rules), default_label_, version_ + 1);
}

RuleSet RuleSet::with_updated(Rule rule) const {
  auto rules = rules_;
  auto it = std::find_if(rules.begin(), rules.end(), [&](const Rule& r) { return r.id == rule.id; });
  if (it == rules.end()) throw DataError("cannot update unknown rule '" + rule.id + "'");
  *it = std::move(rule);
  return RuleSet(std::move(rules), default_label_, version_ + 1);
}

RuleSet RuleSet::without(std::string_view id) const {
  auto rules = rules_;
  auto it = std::find_if(rules.begin(), rules.end(), [&](const Rule& r) { return r.id == id; });
  if (it == rules.end()) throw DataError("cannot delete unknown rule '" + std::string(id) + "'");
  rules.erase(it);
  return RuleSet(std::move(rules), default_label_, version_ + 1);
}

Classification classify(const RuleSet& rules, const SensorRecord& event) {
  Classification out;
  out.label = rules.default_label();
  bool decided = false;
  for (const auto& rule : rules.rules()) {
    bool applicable = true;
    bool match = true;
    for (const auto& c : rule.conditions) {
      auto v = event.value(c.feature);
      if (!v) {
        applicable = false;
        break;
      }
      if (!c.holds(*v)) {
        match = false;
        break;
      }
    }
    if (!applicable || !match) continue;
    if (rule.consequent.is_label()) {
      if (decided) continue;
      decided = true;
      out.label = *rule.consequent.label;
      out.defaulted = false;
      out.fired.insert(out.fired.begin(), rule.id);
    } else {
      out.fired.push_back(rule.id);
      out.tags.emplace_back(rule.id, rule.consequent.tag);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule text format

std::string format_rule(const Rule& rule) {
  std::string out = rule.id + ": IF ";
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    const auto& c = rule.conditions[i];
    if (i) out += " AND ";
    out += detail::lower(std::string(feature_name(c.feature)));
    out += ' ';
    out += op_symbol(c.op);
    out += ' ';
    out += detail::format_double(c.threshold);
  }
  if (rule.conditions.empty()) out += "TRUE";
  out += " THEN ";
  if (rule.consequent.is_label()) out += *rule.consequent.label ? "true" : "false";
  else out += rule.consequent.tag;
  return out;
}

std::string format_rules(const RuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules()) out += format_rule(r) + "\n";
  return out;
}

namespace {

std::vector<std::string> words(std::string_view s) {
  // Operators may be glued to their operands ("humidity<37.593").
  std::string spaced;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '<' || c == '>' || c == '=') {
      spaced += ' ';
      spaced += c;
      if (i + 1 < s.size() && s[i + 1] == '=') spaced += s[++i];
      spaced += ' ';
    } else {
      spaced += c;
    }
  }
  std::vector<std::string> out;
  std::string cur;
  for (char c : spaced) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

Rule parse_rule(std::string_view line, int priority, std::string_view default_id) {
  Rule rule;
  rule.priority = priority;
  std::string body = detail::trim(line);
  const auto if_pos = detail::lower(body).find("if ");
  if (if_pos == std::string::npos) throw DataError("rule needs IF: '" + body + "'");
  std::string head = detail::trim(std::string_view(body).substr(0, if_pos));
  if (!head.empty()) {
    if (head.back() != ':') throw DataError("rule id must end with ':' in '" + body + "'");
    head.pop_back();
    rule.id = detail::trim(head);
  } else {
    rule.id = std::string(default_id);
  }
  if (rule.id.empty()) throw DataError("rule has no id: '" + body + "'");

  const auto w = words(std::string_view(body).substr(if_pos + 3));
  std::size_t i = 0;
  auto is_kw = [&](std::size_t k, std::string_view kw) { return k < w.size() && detail::lower(w[k]) == kw; };
  if (is_kw(i, "true") && is_kw(i + 1, "then")) {
    i = 1;
  } else {
    for (;;) {
      if (i + 3 > w.size()) throw DataError("incomplete condition in rule '" + rule.id + "'");
      auto f = parse_feature(w[i]);
      if (!f) throw DataError("unknown feature '" + w[i] + "' in rule '" + rule.id + "'");
      Op op;
      const std::string& o = w[i + 1];
      if (o == "<=") op = Op::Le;
      else if (o == ">") op = Op::Gt;
      else if (o == "<") op = Op::Lt;
      else if (o == ">=") op = Op::Ge;
      else throw DataError("unknown operator '" + o + "' in rule '" + rule.id + "'");
      auto v = detail::parse_double(w[i + 2]);
      if (!v) throw DataError("bad threshold '" + w[i + 2] + "' in rule '" + rule.id + "'");
      rule.conditions.push_back({*f, op, *v});
      i += 3;
      if (is_kw(i, "and")) {
        ++i;
        continue;
      }
      break;
    }
  }
  if (!is_kw(i, "then") || i + 2 != w.size()) {
    throw DataError("rule '" + rule.id + "' must end with THEN <label>");
  }
  const std::string label = detail::lower(w[i + 1]);
  if (label == "true" || label == "1" || label == "occupied") rule.consequent = Consequent::of_label(1);
  else if (label == "false" || label == "0" || label == "unoccupied") rule.consequent = Consequent::of_label(0);
  else rule.consequent = Consequent::of_tag(w[i + 1]);
  if (!rule.feasible()) throw DataError("rule '" + rule.id + "' has contradictory conditions");
  return rule;
}

RuleSet parse_rules(std::string_view text, int default_label) {
  std::vector<Rule> rules;
  std::size_t line_no = 0;
  for (auto line : detail::lines(text)) {
    ++line_no;
    std::string l = detail::trim(line.substr(0, line.find('#')));
    if (l.empty()) continue;
    try {
      rules.push_back(parse_rule(l, static_cast<int>(rules.size()) + 1, "R" + std::to_string(line_no)));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return RuleSet(std::move(rules), default_label);
}

RuleSet load_rules(const std::string& path, int default_label) {
  return parse_rules(detail::read_file(path), default_label);
}

RuleSet table2_rules() {
  // Rule 6 reads "light <= 365.125 and light CO2 <= 456.333"; the stray
  // "light" is dropped. Rules 5-7 contradict intuition and Rule 8 but are kept.
  return parse_rules(
      "Rule1: IF light <= 365.125 THEN false\n"
      "Rule2: IF humidity <= 37.593 THEN false\n"
      "Rule3: IF light >= 365.128 THEN true\n"
      "Rule4: IF humidity > 37.593 THEN true\n"
      "Rule5: IF co2 <= 456.333 THEN true\n"
      "Rule6: IF light <= 365.125 AND co2 <= 456.333 THEN true\n"
      "Rule7: IF co2 <= 456.333 AND light <= 365.125 THEN true\n"
      "Rule8: IF humidity < 37.593 AND co2 <= 456.333 AND light >= 365.125 THEN false\n",
      0);
}

}  // namespace sbcep::rules

// ---------------------------------------------------------------------------
// Induction

namespace sbcep::rules {

void InductionParams::validate() const {
  if (max_depth < 1) throw UsageError("max_depth must be at least 1");
  if (min_samples_split < 2) throw UsageError("min_samples_split must be at least 2");
  if (!(min_impurity_decrease >= 0)) throw UsageError("min_impurity_decrease must be non-negative");
}

std::size_t TreeNode::samples() const {
  std::size_t n = 0;
  for (auto c : class_counts) n += c;
  return n;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

int DecisionTree::predict(const SensorRecord& record) const {
  if (nodes.empty()) throw DataError("empty decision tree");
  const TreeNode* node = &nodes.front();
  while (!node->leaf) {
    const Feature f = features.at(node->feature);
    auto v = record.value(f);
    if (!v) throw DataError("record lacks feature '" + std::string(feature_name(f)) + "'");
    node = &nodes.at(static_cast<std::size_t>(*v <= node->threshold ? node->left : node->right));
  }
  return node->label;
}

double gini(std::span<const std::size_t> class_counts) {
  double n = 0;
  for (auto c : class_counts) n += static_cast<double>(c);
  if (n == 0) return 0;
  double sum = 0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / n;
    sum += p * p;
  }
  return 1.0 - sum;
}

namespace {

using i128 = __int128;

int majority(const std::vector<std::size_t>& counts) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<int>(best);
}

i128 sum_squares(const std::vector<std::size_t>& counts) {
  i128 s = 0;
  for (auto c : counts) s += static_cast<i128>(c) * static_cast<i128>(c);
  return s;
}

// Split quality as the fraction (A*nr + B*nl) / (nl*nr) where A, B are the
// sums of squared class counts on each side; larger means purer children.
struct Score {
  i128 num = 0;
  i128 den = 1;

  bool better_than(const Score& o) const { return num * o.den > o.num * den; }
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0;
  Score score;
  std::vector<std::size_t> left_counts;
};

class Builder {
 public:
  Builder(std::vector<std::vector<double>> x, std::vector<int> y, std::size_t classes,
          const InductionParams& params, DecisionTree& tree)
      : x_(std::move(x)), y_(std::move(y)), classes_(classes), params_(params), tree_(tree) {}

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    TreeNode node;
    node.depth = depth;
    node.class_counts.assign(classes_, 0);
    for (auto r : rows) ++node.class_counts[static_cast<std::size_t>(y_[r])];
    node.impurity = gini(node.class_counts);
    node.label = majority(node.class_counts);
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(node);

    const bool pure = node.impurity == 0;
    if (pure || depth >= params_.max_depth || rows.size() < params_.min_samples_split) return index;

    Split split = best_split(rows);
    if (!split.found) return index;

    // Weighted decrease as in common CART implementations.
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> right_counts(classes_);
    std::size_t nl = 0;
    for (std::size_t k = 0; k < classes_; ++k) {
      right_counts[k] = node.class_counts[k] - split.left_counts[k];
      nl += split.left_counts[k];
    }
    const double nr = n - static_cast<double>(nl);
    const double child = (static_cast<double>(nl) / n) * gini(split.left_counts) + (nr / n) * gini(right_counts);
    const double decrease = (n / total_) * (node.impurity - child);
    // The parent's own score is sum(c^2)/n; a split must beat it strictly.
    const Score parent{sum_squares(node.class_counts), static_cast<i128>(rows.size())};
    if (!split.score.better_than(parent) || decrease < params_.min_impurity_decrease) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[split.feature][r] <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[static_cast<std::size_t>(index)].leaf = false;
    tree_.nodes[static_cast<std::size_t>(index)].feature = split.feature;
    tree_.nodes[static_cast<std::size_t>(index)].threshold = split.threshold;
    const int l = build(std::move(left), depth + 1);
    const int r = build(std::move(right), depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)].left = l;
    tree_.nodes[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  void set_total(std::size_t n) { total_ = static_cast<double>(n); }

 private:
  Split best_split(const std::vector<std::size_t>& rows) const {
    Split best;
    const std::size_t n = rows.size();
    std::vector<std::size_t> order(rows);
    std::vector<std::size_t> left(classes_), right(classes_);
    for (std::size_t f = 0; f < x_.size(); ++f) {
      const auto& col = x_[f];
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
      std::fill(left.begin(), left.end(), 0);
      std::fill(right.begin(), right.end(), 0);
      for (auto r : order) ++right[static_cast<std::size_t>(y_[r])];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto cls = static_cast<std::size_t>(y_[order[i]]);
        ++left[cls];
        --right[cls];
        const double lo = col[order[i]];
        const double hi = col[order[i + 1]];
        if (!(lo < hi)) continue;
        double t = lo + (hi - lo) / 2;
        if (!(t < hi)) t = lo;
        const i128 nl = static_cast<i128>(i + 1);
        const i128 nr = static_cast<i128>(n - i - 1);
        Score s{sum_squares(left) * nr + sum_squares(right) * nl, nl * nr};
        if (!best.found || s.better_than(best.score)) {
          best.found = true;
          best.feature = f;
          best.threshold = t;
          best.score = s;
          best.left_counts = left;
        }
      }
    }
    return best;
  }

  std::vector<std::vector<double>> x_;
  std::vector<int> y_;
  std::size_t classes_;
  const InductionParams& params_;
  DecisionTree& tree_;
  double total_ = 1;
};

}  // namespace

DecisionTree induce_tree(std::span<const SensorRecord> records, std::span<const Feature> features, Feature label,
                         const InductionParams& params) {
  params.validate();
  if (records.empty()) throw DataError("cannot induce a tree from an empty record list");
  if (features.empty()) throw DataError("no usable feature for induction");
  for (auto f : features) {
    if (f == label) throw DataError("label '" + std::string(feature_name(label)) + "' cannot also be a feature");
  }

  std::vector<std::vector<double>> x(features.size(), std::vector<double>(records.size()));
  std::vector<int> y(records.size());
  int max_label = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < features.size(); ++f) {
      auto v = records[i].value(features[f]);
      if (!v) {
        throw DataError("record " + std::to_string(i) + " lacks feature '" + std::string(feature_name(features[f])) +
                        "'");
      }
      x[f][i] = *v;
    }
    auto lv = records[i].value(label);
    if (!lv || *lv < 0 || *lv != static_cast<int>(*lv)) {
      throw DataError("record " + std::to_string(i) + " has no usable class label");
    }
    y[i] = static_cast<int>(*lv);
    max_label = std::max(max_label, y[i]);
  }

  DecisionTree tree;
  tree.features.assign(features.begin(), features.end());
  tree.label_feature = label;
  // Binary labels always get two count slots so leaves are comparable.
  const std::size_t classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  Builder builder(std::move(x), std::move(y), classes, params, tree);
  builder.set_total(records.size());
  std::vector<std::size_t> rows(records.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  builder.build(std::move(rows), 0);
  return tree;
}

RuleSet extract_rules(const DecisionTree& tree) {
  if (tree.nodes.empty()) throw DataError("empty decision tree");
  std::vector<Rule> rules;
  std::vector<Condition> path;
  auto walk = [&](auto&& self, int index) -> void {
    const TreeNode& node = tree.nodes.at(static_cast<std::size_t>(index));
    if (node.leaf) {
      Rule r;
      r.priority = static_cast<int>(rules.size()) + 1;
      r.id = "tree-L" + std::to_string(r.priority);
      r.conditions = path;
      r.consequent = Consequent::of_label(node.label);
      rules.push_back(std::move(r));
      return;
    }
    const Feature f = tree.features.at(node.feature);
    path.push_back({f, Op::Le, node.threshold});
    self(self, node.left);
    path.back().op = Op::Gt;
    self(self, node.right);
    path.pop_back();
  };
  walk(walk, 0);
  return RuleSet(std::move(rules), tree.root().label);
}

std::string export_tree(const DecisionTree& tree) {
  std::string out;
  auto counts = [](const TreeNode& n) {
    std::string s = "[";
    for (std::size_t k = 0; k < n.class_counts.size(); ++k) {
      if (k) s += ", ";
      s += std::to_string(n.class_counts[k]);
    }
    return s + "]";
  };
  auto walk = [&](auto&& self, int index, const std::string& indent) -> void {
    const TreeNode& node = tree.nodes.at(static_cast<std::size_t>(index));
    if (node.leaf) {
      out += indent + "|--- class: " + std::to_string(node.label) + "  samples=" + std::to_string(node.samples()) +
             " counts=" + counts(node) + "\n";
      return;
    }
    const std::string name = detail::lower(std::string(feature_name(tree.features.at(node.feature))));
    const std::string t = detail::format_double(node.threshold);
    out += indent + "|--- " + name + " <= " + t + "\n";
    self(self, node.left, indent + "|   ");
    out += indent + "|--- " + name + " >  " + t + "\n";
    self(self, node.right, indent + "|   ");
  };
  walk(walk, 0, "");
  return out;
}

}  // namespace sbcep::rules
