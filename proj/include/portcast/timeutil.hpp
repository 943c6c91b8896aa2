#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace portcast {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

struct CivilDate {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;    // 1..31
  bool operator==(const CivilDate&) const = default;
};

struct CivilDateTime {
  CivilDate date;
  int hour = 0;
  int minute = 0;
  int second = 0;
  bool operator==(const CivilDateTime&) const = default;
};

// Proleptic Gregorian day count relative to 1970-01-01 (Howard Hinnant's
// algorithms).
std::int64_t days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(std::int64_t days);

unsigned days_in_month(int year, unsigned month);
bool is_valid_civil(const CivilDateTime& cdt);

Timestamp timestamp_from_civil_utc(const CivilDateTime& cdt);
CivilDateTime civil_from_timestamp_utc(Timestamp t);

// 0 = Monday .. 6 = Sunday.
int weekday_from_days(std::int64_t days);
extern const std::array<const char*, 7> kWeekdayNames;

// "YYYY-MM-DDTHH:MM:SSZ" (seconds may be omitted on input).
std::optional<Timestamp> parse_iso8601_utc(std::string_view s);
std::string format_iso8601_utc(Timestamp t);

// "YYYY-MM-DD" as a civil day count.
std::optional<std::int64_t> parse_iso_date(std::string_view s);
std::string format_iso_date(std::int64_t days);

// Self-contained timezone: UTC, fixed offsets, and Europe/Paris via the EU
// daylight-saving rule (last Sunday of March 01:00 UTC to last Sunday of
// October 01:00 UTC). Enough for the feature pipeline without a tzdb.
class Timezone {
 public:
  Timezone() = default;

  static Timezone utc();
  static Timezone fixed_offset(int offset_minutes);
  // Accepts "UTC", "Europe/Paris", or "+HH:MM"/"-HH:MM". Throws on anything else.
  static Timezone from_name(const std::string& name);

  int offset_seconds_at(Timestamp t) const;
  CivilDateTime to_local(Timestamp t) const;
  std::int64_t local_days_at(Timestamp t) const;
  const std::string& name() const { return name_; }

 private:
  std::string name_ = "UTC";
  int std_offset_s_ = 0;
  int dst_offset_s_ = 0;
  bool eu_dst_ = false;
};

}  // namespace portcast
