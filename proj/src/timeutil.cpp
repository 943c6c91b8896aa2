#include "portcast/timeutil.hpp"

#include <cstdio>
#include <stdexcept>

namespace portcast {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

unsigned days_in_month(int year, unsigned month) {
  static constexpr unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12) return 0;
  if (month == 2) {
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29u : 28u;
  }
  return lengths[month - 1];
}

bool is_valid_civil(const CivilDateTime& c) {
  if (c.date.month < 1 || c.date.month > 12) return false;
  if (c.date.day < 1 || c.date.day > days_in_month(c.date.year, c.date.month)) return false;
  if (c.hour < 0 || c.hour > 23) return false;
  if (c.minute < 0 || c.minute > 59) return false;
  if (c.second < 0 || c.second > 59) return false;
  return true;
}

Timestamp timestamp_from_civil_utc(const CivilDateTime& c) {
  const std::int64_t days = days_from_civil(c.date.year, c.date.month, c.date.day);
  return days * 86400 + c.hour * 3600 + c.minute * 60 + c.second;
}

CivilDateTime civil_from_timestamp_utc(Timestamp t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  CivilDateTime out;
  out.date = civil_from_days(days);
  out.hour = static_cast<int>(rem / 3600);
  out.minute = static_cast<int>((rem / 60) % 60);
  out.second = static_cast<int>(rem % 60);
  return out;
}

int weekday_from_days(std::int64_t days) {
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  return static_cast<int>(((days % 7) + 7 + 3) % 7);
}

const std::array<const char*, 7> kWeekdayNames = {"Mon", "Tue", "Wed", "Thu",
                                                  "Fri", "Sat", "Sun"};

namespace {

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

}  // namespace

std::optional<Timestamp> parse_iso8601_utc(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SSZ or YYYY-MM-DDTHH:MMZ
  if (s.size() != 20 && s.size() != 17) return std::nullopt;
  unsigned y, mo, d, h, mi, se = 0;
  if (!parse_fixed_uint(s, 0, 4, y)) return std::nullopt;
  if (s[4] != '-' || !parse_fixed_uint(s, 5, 2, mo)) return std::nullopt;
  if (s[7] != '-' || !parse_fixed_uint(s, 8, 2, d)) return std::nullopt;
  if (s[10] != 'T') return std::nullopt;
  if (!parse_fixed_uint(s, 11, 2, h)) return std::nullopt;
  if (s[13] != ':' || !parse_fixed_uint(s, 14, 2, mi)) return std::nullopt;
  if (s.size() == 20) {
    if (s[16] != ':' || !parse_fixed_uint(s, 17, 2, se)) return std::nullopt;
  }
  if (s.back() != 'Z') return std::nullopt;
  CivilDateTime c{CivilDate{static_cast<int>(y), mo, d}, static_cast<int>(h),
                  static_cast<int>(mi), static_cast<int>(se)};
  if (!is_valid_civil(c)) return std::nullopt;
  return timestamp_from_civil_utc(c);
}

std::string format_iso8601_utc(Timestamp t) {
  const CivilDateTime c = civil_from_timestamp_utc(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", c.date.year, c.date.month,
                c.date.day, c.hour, c.minute, c.second);
  return buf;
}

std::optional<std::int64_t> parse_iso_date(std::string_view s) {
  if (s.size() != 10) return std::nullopt;
  unsigned y, mo, d;
  if (!parse_fixed_uint(s, 0, 4, y)) return std::nullopt;
  if (s[4] != '-' || !parse_fixed_uint(s, 5, 2, mo)) return std::nullopt;
  if (s[7] != '-' || !parse_fixed_uint(s, 8, 2, d)) return std::nullopt;
  CivilDateTime c{CivilDate{static_cast<int>(y), mo, d}, 0, 0, 0};
  if (!is_valid_civil(c)) return std::nullopt;
  return days_from_civil(c.date.year, c.date.month, c.date.day);
}

std::string format_iso_date(std::int64_t days) {
  const CivilDate d = civil_from_days(days);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

// ---------------------------------------------------------------------------
// Timezone

Timezone Timezone::utc() { return Timezone{}; }

Timezone Timezone::fixed_offset(int offset_minutes) {
  Timezone tz;
  tz.std_offset_s_ = offset_minutes * 60;
  tz.dst_offset_s_ = tz.std_offset_s_;
  const int a = offset_minutes < 0 ? -offset_minutes : offset_minutes;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%02d:%02d", offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  tz.name_ = buf;
  return tz;
}

Timezone Timezone::from_name(const std::string& name) {
  if (name == "UTC" || name == "utc" || name == "Z") return utc();
  if (name == "Europe/Paris") {
    Timezone tz;
    tz.name_ = name;
    tz.std_offset_s_ = 3600;
    tz.dst_offset_s_ = 7200;
    tz.eu_dst_ = true;
    return tz;
  }
  // +HH:MM / -HH:MM
  if (name.size() == 6 && (name[0] == '+' || name[0] == '-') && name[3] == ':') {
    unsigned h, m;
    if (parse_fixed_uint(name, 1, 2, h) && parse_fixed_uint(name, 4, 2, m) && h <= 14 && m <= 59) {
      const int sign = name[0] == '-' ? -1 : 1;
      return fixed_offset(sign * static_cast<int>(h * 60 + m));
    }
  }
  throw std::runtime_error("unknown timezone: " + name);
}

namespace {

// Day count of the last Sunday of the given month.
std::int64_t last_sunday(int year, unsigned month) {
  std::int64_t z = days_from_civil(year, month, days_in_month(year, month));
  z -= (weekday_from_days(z) + 1) % 7;
  return z;
}

}  // namespace

int Timezone::offset_seconds_at(Timestamp t) const {
  if (!eu_dst_) return std_offset_s_;
  const int year = civil_from_timestamp_utc(t).date.year;
  const Timestamp dst_start = last_sunday(year, 3) * 86400 + 3600;
  const Timestamp dst_end = last_sunday(year, 10) * 86400 + 3600;
  return (t >= dst_start && t < dst_end) ? dst_offset_s_ : std_offset_s_;
}

CivilDateTime Timezone::to_local(Timestamp t) const {
  return civil_from_timestamp_utc(t + offset_seconds_at(t));
}

std::int64_t Timezone::local_days_at(Timestamp t) const {
  const Timestamp shifted = t + offset_seconds_at(t);
  std::int64_t days = shifted / 86400;
  if (shifted % 86400 < 0) days -= 1;
  return days;
}

}  // namespace portcast
