#include "sbcep/config.hpp"

#include "text_util.hpp"

namespace sbcep {

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

ConfigFile parse_config(std::string_view text) {
  ConfigFile cfg;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : detail::lines(text)) {
    ++line_no;
    std::string line = detail::trim(raw.substr(0, raw.find_first_of("#;")));
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw DataError("config line " + std::to_string(line_no) + ": " + why);
    };
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = detail::lower(detail::trim(line.substr(1, line.size() - 2)));
      cfg.sections[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = detail::lower(detail::trim(line.substr(0, eq)));
    if (key.empty()) fail("empty key");
    cfg.sections[section][key] = detail::trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) { return parse_config(detail::read_file(path)); }

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    auto item = detail::trim(std::string_view(v).substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

struct Reader {
  const std::string& section;
  const std::string& key;
  const std::string& value;

  [[noreturn]] void fail(const std::string& why) const {
    throw DataError("config [" + section + "] " + key + ": " + why);
  }
  double real() const {
    auto v = detail::parse_double(value);
    if (!v) fail("expected a number, got '" + value + "'");
    return *v;
  }
  std::size_t count() const {
    auto v = detail::parse_int(value);
    if (!v || *v < 0) fail("expected a non-negative integer, got '" + value + "'");
    return static_cast<std::size_t>(*v);
  }
  Feature feature(const std::string& name) const {
    auto f = parse_feature(name);
    if (!f) fail("unknown feature '" + name + "'");
    return *f;
  }
  risk::Band band() const {
    auto parts = split_list(value);
    if (parts.size() != 2) fail("expected '<moderate>, <risk>'");
    auto lo = detail::parse_double(parts[0]);
    auto hi = detail::parse_double(parts[1]);
    if (!lo || !hi) fail("band edges must be numbers");
    return {*lo, *hi};
  }
};

std::optional<RecordField> record_field(const std::string& name) {
  const std::string n = detail::lower(name);
  if (n == "id" || n == "row_id") return RecordField::RowId;
  if (n == "date") return RecordField::Date;
  auto f = parse_feature(n);
  if (!f) return std::nullopt;
  switch (*f) {
    case Feature::Temperature: return RecordField::Temperature;
    case Feature::Humidity: return RecordField::Humidity;
    case Feature::Light: return RecordField::Light;
    case Feature::CO2: return RecordField::CO2;
    case Feature::HumidityRatio: return RecordField::HumidityRatio;
    case Feature::Occupancy: return RecordField::Occupancy;
  }
  return std::nullopt;
}

}  // namespace

Settings apply_config(const ConfigFile& file, Settings s) {
  for (const auto& [section, entries] : file.sections) {
    for (const auto& [key, value] : entries) {
      const Reader r{section, key, value};
      if (section == "broker") {
        if (key == "brokers") s.cluster.broker_ids = split_list(value);
        else if (key == "replication_factor") s.cluster.replication_factor = r.count();
        else if (key == "partitions") s.cluster.default_partitions = r.count();
        else r.fail("unknown key");
      } else if (section == "thresholds") {
        if (key == "humidity_high") s.thresholds.humidity_high = r.real();
        else if (key == "temperature_moderate") s.thresholds.temperature_moderate = r.real();
        else if (key == "temperature_high") s.thresholds.temperature_high = r.real();
        else if (key == "co2_poor") s.thresholds.co2_poor = r.real();
        else r.fail("unknown key");
      } else if (section == "bands") {
        s.risk.bands.by_feature[r.feature(key)] = r.band();
      } else if (section == "risk") {
        if (key.rfind("query.", 0) == 0) s.risk.queries[r.feature(key.substr(6))] = value;
        else if (key == "historical_min_rows") s.risk.historical_min_rows = r.count();
        else if (key == "historical_span_hours") s.risk.historical_span_seconds = static_cast<std::int64_t>(r.real() * 3600);
        else if (key == "live_window") s.risk.live_window = r.count();
        else if (key == "realtime_min_rows") s.risk.realtime_min_rows = r.count();
        else r.fail("unknown key");
      } else if (section == "cep") {
        if (key == "window") s.window.length = r.count();
        else r.fail("unknown key");
      } else if (section == "induction") {
        if (key == "max_depth") s.induction.max_depth = r.count();
        else if (key == "min_samples_split") s.induction.min_samples_split = r.count();
        else if (key == "min_impurity_decrease") s.induction.min_impurity_decrease = r.real();
        else if (key == "features") {
          s.features.clear();
          for (const auto& name : split_list(value)) s.features.push_back(r.feature(name));
        } else r.fail("unknown key");
      } else if (section == "columns") {
        if (!s.columns) {
          s.columns = ColumnMapping{};
          s.columns->tolerated_extra_column.reset();
        }
        if (key == "tolerated_extra_column") {
          s.columns->tolerated_extra_column = r.count();
          continue;
        }
        if (key == "date_format") {
          s.columns->date_format = value;
          continue;
        }
        auto field = record_field(key);
        if (!field) r.fail("unknown record field");
        s.columns->columns.push_back({r.count(), *field});
      } else {
        throw DataError("config: unknown section [" + section + "]");
      }
    }
  }
  s.cluster.validate();
  s.thresholds.validate();
  s.risk.bands.validate();
  s.induction.validate();
  if (s.window.length < 1) throw DataError("config [cep] window: must be at least 1");
  if (s.columns) s.columns->validate();
  return s;
}

}  // namespace sbcep
