#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sbcep/datetime.hpp"

namespace sbcep {

// Numeric telemetry columns, in canonical dataset order.
enum class Feature { Temperature, Humidity, Light, CO2, HumidityRatio, Occupancy };

inline constexpr std::array<Feature, 6> kAllFeatures = {
    Feature::Temperature, Feature::Humidity,      Feature::Light,
    Feature::CO2,         Feature::HumidityRatio, Feature::Occupancy};

std::string_view feature_name(Feature f);
// Case-insensitive; accepts "co2", "CO2", "humidity_ratio", "HumidityRatio", ...
std::optional<Feature> parse_feature(std::string_view name);

// One row of building telemetry. Measurement fields are optional so that
// load_csv can represent empty cells; preprocess() guarantees all are set.
struct SensorRecord {
  std::string row_id;
  std::optional<DateTime> timestamp;
  std::optional<double> temperature;     // degrees Celsius
  std::optional<double> humidity;        // percent relative humidity
  std::optional<double> light;           // lux
  std::optional<double> co2;             // ppm
  std::optional<double> humidity_ratio;  // kg water / kg air
  std::optional<int> occupancy;          // {0, 1}

  std::optional<double> value(Feature f) const;
  void set(Feature f, double v);

  bool complete() const;
  // All fields present and within their physical ranges.
  bool valid() const;

  bool operator==(const SensorRecord&) const = default;
};

// Which CSV column feeds which record field.
enum class RecordField { RowId, Date, Temperature, Humidity, Light, CO2, HumidityRatio, Occupancy };

struct ColumnMapping {
  struct Column {
    std::size_t index;
    RecordField field;
  };
  std::vector<Column> columns;
  std::string date_format = "%Y-%m-%d %H:%M:%S";
  // Rows carrying exactly one field more than the mapping width have the
  // column at this position skipped before mapping (the nine-field row layout).
  std::optional<std::size_t> tolerated_extra_column = 6;

  // id,date,Temperature,Humidity,Light,CO2,HumidityRatio,Occupancy
  static ColumnMapping occupancy_default();
  // Build from a header line by matching column names.
  static ColumnMapping from_header(std::span<const std::string> header);

  std::size_t width() const;
  // Throws DataError if any field is mapped twice or not at all.
  void validate() const;
};

// Splits one CSV line, honouring optional double quotes.
std::vector<std::string> split_csv_line(std::string_view line);

std::vector<SensorRecord> parse_csv(std::string_view text,
                                    const ColumnMapping& mapping = ColumnMapping::occupancy_default());
std::vector<SensorRecord> load_csv(const std::filesystem::path& path,
                                   const ColumnMapping& mapping = ColumnMapping::occupancy_default());

// Writes the default header followed by one row per record.
std::string format_csv(std::span<const SensorRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const SensorRecord> records);

struct PreprocessReport {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t filled = 0;   // individual field values forward-filled
  std::size_t dropped = 0;  // records removed
};

// Forward-fills missing fields from the previous kept record and drops
// records that cannot be filled or that violate a physical invariant.
// Throws DataError when nothing survives a non-empty input.
std::vector<SensorRecord> preprocess(std::span<const SensorRecord> records,
                                     PreprocessReport* report = nullptr);

}  // namespace sbcep
