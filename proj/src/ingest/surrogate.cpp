#include "sbcep/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "text_util.hpp"

namespace sbcep {

double humidity_ratio(double temperature_c, double relative_humidity) {
  const double p_ws = 610.78 * std::exp(17.27 * temperature_c / (temperature_c + 237.3));
  const double p_w = relative_humidity / 100.0 * p_ws;
  return 0.621945 * p_w / (101325.0 - p_w);
}

namespace {

constexpr double kOutdoorCo2 = 440.0;
constexpr double kVentilationPerMinute = 0.03;
constexpr double kCo2PerPersonPerMinute = 5.64;  // equilibrium +188 ppm per occupant

struct DayPlan {
  bool workday = false;
  double arrive = 0;  // hours
  double leave = 0;
  double lunch_start = -1;
  double lunch_end = -1;
  int occupants = 0;
  double crowded_from = -1;  // hours; crowded session window
  double crowded_to = -1;
  double sunshine = 0;  // peak daylight lux through the window
};

// Rounds to a multiple of 1/scale; dividing keeps decimal steps exact.
double round_to(double v, double scale) { return std::round(v * scale) / scale; }

}  // namespace

std::vector<SensorRecord> synthesize_occupancy(const SurrogateParams& params) {
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::int64_t first_day = params.start.epoch_seconds() / 86400;
  std::vector<DayPlan> plans;
  auto plan_for = [&](std::int64_t day) -> const DayPlan& {
    while (static_cast<std::int64_t>(plans.size()) <= day - first_day) {
      const std::int64_t d = first_day + static_cast<std::int64_t>(plans.size());
      DayPlan p;
      // 1970-01-01 was a Thursday; 0 = Monday.
      const int weekday = static_cast<int>(((d % 7) + 7 + 3) % 7);
      p.workday = weekday < 5;
      p.arrive = 7.8 + 1.2 * unit(rng);
      p.leave = 17.0 + 1.4 * unit(rng);
      if (unit(rng) < 0.5) {
        p.lunch_start = 12.2 + 0.6 * unit(rng);
        p.lunch_end = p.lunch_start + 0.5 + 0.4 * unit(rng);
      }
      p.occupants = 1 + static_cast<int>(unit(rng) * 3.0);
      p.sunshine = unit(rng) < 0.3 ? 300.0 + 160.0 * unit(rng) : 60.0 + 180.0 * unit(rng);
      if (params.crowded_sessions) {
        const DateTime date(d * 86400);
        const std::string iso = date.iso().substr(0, 10);
        if (iso == "2015-02-03") {
          p.crowded_from = 14.0;
          p.crowded_to = 17.55;
          p.leave = std::max(p.leave, 17.55);
        } else if (iso == "2015-02-12") {
          p.crowded_from = 17.4;
          p.crowded_to = 20.4;
          p.leave = 20.4;
        }
      }
      plans.push_back(p);
    }
    return plans[static_cast<std::size_t>(day - first_day)];
  };

  // Room state.
  double co2 = 455.0;
  double temperature = 20.6;
  double humidity_walk = 0.0;
  bool lights_off_spell = false;
  int lights_off_left = 0;

  std::vector<SensorRecord> out;
  out.reserve(params.rows);
  const double dt_min = params.step_seconds / 60.0;
  for (std::size_t i = 0; i < params.rows; ++i) {
    std::int64_t t = params.start.epoch_seconds() + static_cast<std::int64_t>(i) * params.step_seconds;
    // Logger clocks drift by a second now and then.
    const std::int64_t stamp = t - (unit(rng) < 0.35 ? 1 : 0);
    const std::int64_t day = t / 86400;
    const double hour = static_cast<double>(t % 86400) / 3600.0;
    const DayPlan& plan = plan_for(day);

    int occupants = 0;
    if (plan.workday && hour >= plan.arrive && hour < plan.leave &&
        !(hour >= plan.lunch_start && hour < plan.lunch_end)) {
      occupants = plan.occupants;
    }
    if (hour >= plan.crowded_from && hour < plan.crowded_to) occupants = 5;
    const bool occupied = occupants > 0;

    // Occasional spells where people sit with the lights off.
    if (occupied && !lights_off_spell && unit(rng) < 0.003) {
      lights_off_spell = true;
      lights_off_left = 3 + static_cast<int>(unit(rng) * 6);
    }
    if (lights_off_spell && (--lights_off_left <= 0 || !occupied)) lights_off_spell = false;

    // Daylight: a sine bump between 07:30 and 17:30.
    double daylight = 0.0;
    if (hour > 7.5 && hour < 17.5) {
      daylight = plan.sunshine * std::sin(M_PI * (hour - 7.5) / 10.0);
      daylight *= 0.85 + 0.3 * unit(rng);
    }
    double light = daylight;
    if (occupied && !lights_off_spell) light = 420.0 + 90.0 * unit(rng) + 0.35 * daylight;
    light = std::max(0.0, round_to(light, 4));

    co2 += dt_min * (kCo2PerPersonPerMinute * occupants - kVentilationPerMinute * (co2 - kOutdoorCo2));
    co2 = std::max(kOutdoorCo2 - 30.0, co2);
    const double co2_reading = std::max(0.0, round_to(co2 + 4.0 * gauss(rng), 4));

    double target_temp = 19.6 + 0.004 * daylight;
    if (occupied) target_temp = 20.6 + 0.45 * occupants + 0.004 * daylight;
    temperature += (target_temp - temperature) * std::min(1.0, dt_min / 70.0);
    const double temp_reading = round_to(temperature + 0.03 * gauss(rng), 1000);

    humidity_walk = std::clamp(humidity_walk + 0.25 * gauss(rng) * std::sqrt(dt_min / 3.0), -6.0, 6.0);
    const double days_since = static_cast<double>(t - params.start.epoch_seconds()) / 86400.0;
    double humidity = 26.5 + 5.5 * std::sin(2.0 * M_PI * days_since / 6.5 + 0.8) + humidity_walk +
                      0.6 * occupants;
    humidity = std::clamp(humidity, 16.8, 39.0);
    const double hum_reading = round_to(humidity + 0.05 * gauss(rng), 1000);

    SensorRecord rec;
    rec.row_id = std::to_string(i + 1);
    rec.timestamp = DateTime(stamp);
    rec.temperature = temp_reading;
    rec.humidity = hum_reading;
    rec.light = light;
    rec.co2 = co2_reading;
    rec.humidity_ratio = humidity_ratio(temp_reading, hum_reading);
    rec.occupancy = occupied ? 1 : 0;
    out.push_back(std::move(rec));
  }
  return out;
}

ReferenceDataset load_reference_dataset(std::uint64_t seed) {
  ReferenceDataset ds;
  if (const char* env = std::getenv("SBCEP_OCCUPANCY_CSV"); env && *env) {
    std::string list = env;
    std::vector<SensorRecord> raw;
    std::size_t start = 0;
    while (start <= list.size()) {
      auto end = list.find_first_of(",:", start);
      if (end == std::string::npos) end = list.size();
      const std::string path = detail::trim(std::string_view(list).substr(start, end - start));
      if (!path.empty()) {
        auto part = load_csv(path);
        raw.insert(raw.end(), part.begin(), part.end());
        if (!ds.origin.empty()) ds.origin += ",";
        ds.origin += path;
      }
      start = end + 1;
    }
    ds.records = preprocess(raw);
    ds.surrogate = false;
    return ds;
  }
  SurrogateParams p;
  p.seed = seed;
  ds.records = preprocess(synthesize_occupancy(p));
  ds.origin = "surrogate(seed=" + std::to_string(seed) + ", rows=" + std::to_string(p.rows) + ")";
  return ds;
}

}  // namespace sbcep
