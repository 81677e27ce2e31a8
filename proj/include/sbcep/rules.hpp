#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbcep/ingest.hpp"

namespace sbcep::rules {

// Tree edges use <= and >; hand-written rules may also use < and >=.
enum class Op { Le, Gt, Lt, Ge };

std::string_view op_symbol(Op op);

struct Condition {
  Feature feature;
  Op op;
  double threshold;

  bool holds(double value) const;
  bool operator==(const Condition&) const = default;
};

// A class label (occupancy 0/1) or a custom complex-event tag.
struct Consequent {
  std::optional<int> label;
  std::string tag;

  static Consequent of_label(int label) { return {label, {}}; }
  static Consequent of_tag(std::string tag) { return {std::nullopt, std::move(tag)}; }
  bool is_label() const { return label.has_value(); }
  bool operator==(const Consequent&) const = default;
};

struct Rule {
  std::string id;
  std::vector<Condition> conditions;
  Consequent consequent;
  int priority = 0;

  // True when the conditions admit at least one point.
  bool feasible() const;
  bool operator==(const Rule&) const = default;
};

// Throws DataError naming the first referenced feature the event lacks.
bool rule_matches(const Rule& rule, const SensorRecord& event);

// Immutable, versioned rule collection. Mutators return a new version.
class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(std::vector<Rule> rules, int default_label, std::uint64_t version = 1);

  std::uint64_t version() const { return version_; }
  // Sorted by priority, ties in insertion order.
  const std::vector<Rule>& rules() const { return rules_; }
  int default_label() const { return default_label_; }
  const Rule* find(std::string_view id) const;
  std::size_t size() const { return rules_.size(); }

  RuleSet with_rule(Rule rule) const;       // inject; id must be new
  RuleSet with_updated(Rule rule) const;    // update; id must exist
  RuleSet without(std::string_view id) const;  // delete; id must exist

 private:
  void normalize();

  std::uint64_t version_ = 1;
  std::vector<Rule> rules_;
  int default_label_ = 0;
};

struct Classification {
  int label = 0;
  // The determining label rule first (if any), then every matching tag rule.
  std::vector<std::string> fired;
  std::vector<std::pair<std::string, std::string>> tags;  // (rule id, tag)
  bool defaulted = true;
};

// First matching label rule in priority order decides; rules referencing a
// feature the event lacks are skipped.
Classification classify(const RuleSet& rules, const SensorRecord& event);

struct InductionParams {
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 20;
  double min_impurity_decrease = 1e-4;

  void validate() const;
};

struct TreeNode {
  bool leaf = true;
  std::size_t feature = 0;  // index into DecisionTree::features
  double threshold = 0;
  int left = -1;   // value <= threshold
  int right = -1;  // value > threshold
  int label = 0;
  std::vector<std::size_t> class_counts;  // indexed by class label
  double impurity = 0;
  std::size_t depth = 0;

  std::size_t samples() const;
};

struct DecisionTree {
  std::vector<Feature> features;
  Feature label_feature = Feature::Occupancy;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& root() const { return nodes.front(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;
  int predict(const SensorRecord& record) const;
};

double gini(std::span<const std::size_t> class_counts);

DecisionTree induce_tree(std::span<const SensorRecord> records, std::span<const Feature> features,
                         Feature label = Feature::Occupancy, const InductionParams& params = {});

RuleSet extract_rules(const DecisionTree& tree);

// Indented text rendering of the tree.
std::string export_tree(const DecisionTree& tree);

// Rule text: one rule per line, `[id:] IF <feature> <op> <value> [AND ...] THEN <label>`
// where <label> is true/false/1/0 or a tag name. '#' starts a comment.
std::string format_rule(const Rule& rule);
std::string format_rules(const RuleSet& rules);
Rule parse_rule(std::string_view line, int priority = 0, std::string_view default_id = {});
RuleSet parse_rules(std::string_view text, int default_label = 0);
RuleSet load_rules(const std::string& path, int default_label = 0);

// The eight published decision-tree rules, verbatim, priority = table order.
RuleSet table2_rules();

}  // namespace sbcep::rules
