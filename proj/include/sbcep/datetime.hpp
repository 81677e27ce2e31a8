#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sbcep {

// Calendar date-time at second resolution without a timezone, stored as
// seconds since 1970-01-01T00:00:00.
class DateTime {
 public:
  constexpr DateTime() = default;
  constexpr explicit DateTime(std::int64_t epoch_seconds) : seconds_(epoch_seconds) {}

  static DateTime from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                             unsigned minute = 0, unsigned second = 0);

  // Accepts "YYYY-MM-DD HH:MM:SS" and "YYYY-MM-DDTHH:MM:SS".
  static std::optional<DateTime> parse(std::string_view text);

  constexpr std::int64_t epoch_seconds() const { return seconds_; }

  // "YYYY-MM-DDTHH:MM:SS"
  std::string iso() const;
  // "YYYY-MM-DD HH:MM:SS"
  std::string csv() const;

  constexpr DateTime operator+(std::int64_t seconds) const { return DateTime(seconds_ + seconds); }
  constexpr DateTime operator-(std::int64_t seconds) const { return DateTime(seconds_ - seconds); }

  constexpr auto operator<=>(const DateTime&) const = default;

 private:
  std::int64_t seconds_ = 0;
};

}  // namespace sbcep
