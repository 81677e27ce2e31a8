#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sbcep/broker.hpp"
#include "sbcep/cep.hpp"
#include "sbcep/ingest.hpp"
#include "sbcep/risk.hpp"
#include "sbcep/rules.hpp"

namespace sbcep {

// `key = value` lines grouped under `[section]` headers; '#' and ';' start
// comments. Keys before any header belong to section "".
struct ConfigFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
};

ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::string& path);

struct Settings {
  broker::ClusterConfig cluster;
  cep::ComplexEventThresholds thresholds;
  cep::Window window;
  risk::EstimatorConfig risk;
  rules::InductionParams induction;
  std::vector<Feature> features{Feature::Light, Feature::Humidity, Feature::CO2};
  std::optional<ColumnMapping> columns;
};

// Overlays the file on `base`. Unknown sections or keys and unparsable
// values raise DataError.
Settings apply_config(const ConfigFile& file, Settings base = {});

}  // namespace sbcep
