#include "sbcep/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sbcep/error.hpp"
#include "text_util.hpp"

namespace sbcep {

std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::Temperature: return "Temperature";
    case Feature::Humidity: return "Humidity";
    case Feature::Light: return "Light";
    case Feature::CO2: return "CO2";
    case Feature::HumidityRatio: return "HumidityRatio";
    case Feature::Occupancy: return "Occupancy";
  }
  return "?";
}

std::optional<Feature> parse_feature(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '_' || c == ' ') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (key == "temperature" || key == "temp") return Feature::Temperature;
  if (key == "humidity") return Feature::Humidity;
  if (key == "light") return Feature::Light;
  if (key == "co2" || key == "co₂") return Feature::CO2;
  if (key == "humidityratio") return Feature::HumidityRatio;
  if (key == "occupancy") return Feature::Occupancy;
  return std::nullopt;
}

std::optional<double> SensorRecord::value(Feature f) const {
  switch (f) {
    case Feature::Temperature: return temperature;
    case Feature::Humidity: return humidity;
    case Feature::Light: return light;
    case Feature::CO2: return co2;
    case Feature::HumidityRatio: return humidity_ratio;
    case Feature::Occupancy:
      if (occupancy) return static_cast<double>(*occupancy);
      return std::nullopt;
  }
  return std::nullopt;
}

void SensorRecord::set(Feature f, double v) {
  switch (f) {
    case Feature::Temperature: temperature = v; break;
    case Feature::Humidity: humidity = v; break;
    case Feature::Light: light = v; break;
    case Feature::CO2: co2 = v; break;
    case Feature::HumidityRatio: humidity_ratio = v; break;
    case Feature::Occupancy: occupancy = static_cast<int>(std::lround(v)); break;
  }
}

bool SensorRecord::complete() const {
  return timestamp && temperature && humidity && light && co2 && humidity_ratio && occupancy;
}

bool SensorRecord::valid() const {
  if (!complete()) return false;
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(*temperature) || !finite(*humidity) || !finite(*light) || !finite(*co2) ||
      !finite(*humidity_ratio)) {
    return false;
  }
  return *light >= 0 && *co2 >= 0 && *humidity >= 0 && (*occupancy == 0 || *occupancy == 1) &&
         *humidity_ratio > 0 && *humidity_ratio < 0.1;
}

ColumnMapping ColumnMapping::occupancy_default() {
  ColumnMapping m;
  m.columns = {{0, RecordField::RowId},       {1, RecordField::Date},
               {2, RecordField::Temperature}, {3, RecordField::Humidity},
               {4, RecordField::Light},       {5, RecordField::CO2},
               {6, RecordField::HumidityRatio}, {7, RecordField::Occupancy}};
  return m;
}

ColumnMapping ColumnMapping::from_header(std::span<const std::string> header) {
  ColumnMapping m;
  m.tolerated_extra_column.reset();
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = detail::lower(detail::trim(header[i]));
    if (name.empty() || name == "id" || name == "row_id") {
      m.columns.push_back({i, RecordField::RowId});
    } else if (name == "date" || name == "timestamp") {
      m.columns.push_back({i, RecordField::Date});
    } else if (auto f = parse_feature(name)) {
      static constexpr RecordField kMap[] = {RecordField::Temperature, RecordField::Humidity,
                                             RecordField::Light,       RecordField::CO2,
                                             RecordField::HumidityRatio, RecordField::Occupancy};
      m.columns.push_back({i, kMap[static_cast<int>(*f)]});
    }
  }
  m.validate();
  return m;
}

std::size_t ColumnMapping::width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w = std::max(w, c.index + 1);
  return w;
}

void ColumnMapping::validate() const {
  std::array<int, 8> seen{};
  for (const auto& c : columns) ++seen[static_cast<int>(c.field)];
  static constexpr const char* kNames[] = {"id",    "date", "Temperature",   "Humidity",
                                           "Light", "CO2",  "HumidityRatio", "Occupancy"};
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] != 1) {
      throw DataError(std::string("column mapping must map field '") + kNames[i] +
                      "' exactly once");
    }
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(detail::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(detail::trim(cur));
  return out;
}

namespace {

std::optional<DateTime> parse_date(const std::string& text, const std::string& format) {
  if (format == "%Y-%m-%d %H:%M:%S") return DateTime::parse(text);
  std::tm tm{};
  std::istringstream in(text);
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return std::nullopt;
  return DateTime::from_civil(tm.tm_year + 1900, static_cast<unsigned>(tm.tm_mon + 1),
                              static_cast<unsigned>(tm.tm_mday), static_cast<unsigned>(tm.tm_hour),
                              static_cast<unsigned>(tm.tm_min), static_cast<unsigned>(tm.tm_sec));
}

SensorRecord parse_row(std::vector<std::string> cells, const ColumnMapping& mapping,
                       std::size_t line_no) {
  const std::size_t width = mapping.width();
  if (mapping.tolerated_extra_column && cells.size() == width + 1 &&
      *mapping.tolerated_extra_column < cells.size()) {
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(*mapping.tolerated_extra_column));
  }
  if (cells.size() < width) {
    throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                    " fields, found " + std::to_string(cells.size()));
  }
  SensorRecord rec;
  for (const auto& col : mapping.columns) {
    const std::string& cell = cells[col.index];
    auto numeric = [&](const char* name) -> std::optional<double> {
      if (cell.empty() || cell == "NA" || cell == "NaN") return std::nullopt;
      auto v = detail::parse_double(cell);
      if (!v) {
        throw DataError("row " + std::to_string(line_no) + ": column '" + name +
                        "' is not numeric: '" + cell + "'");
      }
      return v;
    };
    switch (col.field) {
      case RecordField::RowId: rec.row_id = cell; break;
      case RecordField::Date:
        if (!cell.empty()) {
          rec.timestamp = parse_date(cell, mapping.date_format);
          if (!rec.timestamp) {
            throw DataError("row " + std::to_string(line_no) + ": unparseable date '" + cell +
                            "'");
          }
        }
        break;
      case RecordField::Temperature: rec.temperature = numeric("Temperature"); break;
      case RecordField::Humidity: rec.humidity = numeric("Humidity"); break;
      case RecordField::Light: rec.light = numeric("Light"); break;
      case RecordField::CO2: rec.co2 = numeric("CO2"); break;
      case RecordField::HumidityRatio: rec.humidity_ratio = numeric("HumidityRatio"); break;
      case RecordField::Occupancy:
        if (auto v = numeric("Occupancy")) {
          if (*v != std::floor(*v)) {
            throw DataError("row " + std::to_string(line_no) +
                            ": column 'Occupancy' is not an integer: '" + cell + "'");
          }
          rec.occupancy = static_cast<int>(*v);
        }
        break;
    }
  }
  return rec;
}

}  // namespace

std::vector<SensorRecord> parse_csv(std::string_view text, const ColumnMapping& mapping) {
  mapping.validate();
  std::vector<SensorRecord> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : detail::lines(text)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (detail::trim(line).empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    out.push_back(parse_row(split_csv_line(line), mapping, line_no));
  }
  return out;
}

std::vector<SensorRecord> load_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  return parse_csv(detail::read_file(path), mapping);
}

std::string format_csv(std::span<const SensorRecord> records) {
  std::string out = "id,date,Temperature,Humidity,Light,CO2,HumidityRatio,Occupancy\n";
  auto num = [&](const std::optional<double>& v) {
    if (v) out += detail::format_double(*v);
  };
  for (const auto& r : records) {
    out += '"';
    out += r.row_id;
    out += "\",";
    if (r.timestamp) {
      out += '"';
      out += r.timestamp->csv();
      out += '"';
    }
    out += ',';
    num(r.temperature);
    out += ',';
    num(r.humidity);
    out += ',';
    num(r.light);
    out += ',';
    num(r.co2);
    out += ',';
    num(r.humidity_ratio);
    out += ',';
    if (r.occupancy) out += std::to_string(*r.occupancy);
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records) {
  detail::write_file(path, format_csv(records));
}

std::vector<SensorRecord> preprocess(std::span<const SensorRecord> records,
                                     PreprocessReport* report) {
  PreprocessReport rep;
  rep.input = records.size();
  std::vector<SensorRecord> out;
  out.reserve(records.size());
  for (const auto& in : records) {
    SensorRecord rec = in;
    std::size_t filled = 0;
    if (!rec.timestamp) {
      ++rep.dropped;
      continue;
    }
    if (!rec.complete()) {
      if (out.empty()) {
        ++rep.dropped;
        continue;
      }
      const SensorRecord& prev = out.back();
      for (Feature f : kAllFeatures) {
        if (!rec.value(f)) {
          rec.set(f, *prev.value(f));
          ++filled;
        }
      }
    }
    if (!rec.valid()) {
      ++rep.dropped;
      continue;
    }
    rep.filled += filled;
    out.push_back(std::move(rec));
  }
  rep.output = out.size();
  if (report) *report = rep;
  if (out.empty() && !records.empty()) {
    throw DataError("preprocess: all " + std::to_string(records.size()) + " records are invalid");
  }
  return out;
}

}  // namespace sbcep
