#include "sbcep/datetime.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace sbcep {

namespace {

bool read_fixed(std::string_view text, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

DateTime DateTime::from_civil(int year, unsigned month, unsigned day, unsigned hour,
                              unsigned minute, unsigned second) {
  using namespace std::chrono;
  const sys_days days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return DateTime(days.time_since_epoch().count() * 86400LL + hour * 3600LL + minute * 60LL +
                  second);
}

std::optional<DateTime> DateTime::parse(std::string_view text) {
  // YYYY-MM-DD?HH:MM:SS
  if (text.size() != 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[13] != ':' || text[16] != ':') return std::nullopt;
  if (text[10] != ' ' && text[10] != 'T') return std::nullopt;
  unsigned y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_fixed(text, 0, 4, y) || !read_fixed(text, 5, 2, mo) || !read_fixed(text, 8, 2, d) ||
      !read_fixed(text, 11, 2, h) || !read_fixed(text, 14, 2, mi) || !read_fixed(text, 17, 2, s)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)},
                                        std::chrono::month{mo}, std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return from_civil(static_cast<int>(y), mo, d, h, mi, s);
}

namespace {

std::string format_with(std::int64_t seconds, char sep) {
  using namespace std::chrono;
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), sep,
                static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace

std::string DateTime::iso() const { return format_with(seconds_, 'T'); }
std::string DateTime::csv() const { return format_with(seconds_, ' '); }

}  // namespace sbcep
