#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbcep/datetime.hpp"
#include "sbcep/ingest.hpp"

namespace sbcep {

// Parameters of the synthetic office-occupancy telemetry generator. The
// generator simulates an occupant schedule and first-order room dynamics
// (CO2 accumulation with ventilation, thermal drift, psychrometric humidity
// ratio) so the output has the same column layout and value ranges as the
// public occupancy-detection recordings from February 2015.
struct SurrogateParams {
  std::size_t rows = 8143;
  DateTime start = DateTime::from_civil(2015, 2, 2, 14, 19, 0);
  int step_seconds = 180;
  std::uint64_t seed = 2015;
  // Crowded sessions that push CO2 into the Risk band.
  bool crowded_sessions = true;
};

std::vector<SensorRecord> synthesize_occupancy(const SurrogateParams& params = {});

// Humidity ratio (kg/kg) from dry-bulb temperature (C) and relative humidity
// (%) at sea-level pressure.
double humidity_ratio(double temperature_c, double relative_humidity);

struct ReferenceDataset {
  std::vector<SensorRecord> records;  // preprocessed
  std::string origin;                 // file list or "surrogate(seed=...)"
  bool surrogate = true;
};

// Loads the files listed in SBCEP_OCCUPANCY_CSV (comma or colon separated)
// when set, otherwise synthesizes the surrogate with the given seed.
ReferenceDataset load_reference_dataset(std::uint64_t seed = 2015);

}  // namespace sbcep
