#include <doctest.h>

#include <stdexcept>

#include "portcast/rng.hpp"
#include "portcast/timeutil.hpp"

using namespace portcast;

TEST_SUITE("timeutil") {

TEST_CASE("civil day anchors") {
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(1970, 1, 2) == 1);
  CHECK(days_from_civil(1969, 12, 31) == -1);
  CHECK(days_from_civil(2000, 1, 1) == 10957);
  CHECK(days_from_civil(2017, 3, 12) == 17237);
}

TEST_CASE("civil round trip across two centuries") {
  for (std::int64_t d = days_from_civil(1950, 1, 1); d <= days_from_civil(2150, 1, 1); d += 13) {
    const CivilDate c = civil_from_days(d);
    CHECK(days_from_civil(c.year, c.month, c.day) == d);
    CHECK(is_valid_civil(CivilDateTime{c, 0, 0, 0}));
  }
}

TEST_CASE("days_in_month and leap years") {
  CHECK(days_in_month(2016, 2) == 29);
  CHECK(days_in_month(2017, 2) == 28);
  CHECK(days_in_month(2000, 2) == 29);  // divisible by 400
  CHECK(days_in_month(1900, 2) == 28);  // divisible by 100 only
  CHECK(days_in_month(2017, 4) == 30);
  CHECK(days_in_month(2017, 12) == 31);
}

TEST_CASE("weekday") {
  CHECK(weekday_from_days(0) == 3);  // 1970-01-01 was a Thursday
  CHECK(kWeekdayNames[3] == std::string("Thu"));
  CHECK(weekday_from_days(days_from_civil(2017, 3, 12)) == 6);  // Sunday
  CHECK(weekday_from_days(days_from_civil(2017, 3, 13)) == 0);  // Monday
  CHECK(kWeekdayNames[0] == std::string("Mon"));
  CHECK(kWeekdayNames[6] == std::string("Sun"));
  CHECK(weekday_from_days(-3) == 0);  // 1969-12-29 was a Monday
}

TEST_CASE("iso8601 parse anchors") {
  CHECK(parse_iso8601_utc("1970-01-01T00:00:00Z") == Timestamp{0});
  CHECK(parse_iso8601_utc("2017-03-12T08:30:00Z") == Timestamp{1489307400});
  CHECK(parse_iso8601_utc("2017-03-12T08:30Z") == Timestamp{1489307400});  // seconds optional
  CHECK(parse_iso8601_utc("1969-12-31T23:59:59Z") == Timestamp{-1});
}

TEST_CASE("iso8601 rejects malformed input") {
  CHECK(!parse_iso8601_utc(""));
  CHECK(!parse_iso8601_utc("2017-03-12"));
  CHECK(!parse_iso8601_utc("2017-03-12T08:30:00"));       // missing Z
  CHECK(!parse_iso8601_utc("2017-03-12 08:30:00Z"));      // space separator
  CHECK(!parse_iso8601_utc("2017-13-12T08:30:00Z"));      // month 13
  CHECK(!parse_iso8601_utc("2017-00-12T08:30:00Z"));      // month 0
  CHECK(!parse_iso8601_utc("2017-02-30T08:30:00Z"));      // Feb 30
  CHECK(!parse_iso8601_utc("1900-02-29T00:00:00Z"));      // not a leap year
  CHECK(!parse_iso8601_utc("2017-03-12T24:00:00Z"));      // hour 24
  CHECK(!parse_iso8601_utc("2017-03-12T08:60:00Z"));      // minute 60
  CHECK(!parse_iso8601_utc("2017-03-12T08:30:60Z"));      // second 60
  CHECK(!parse_iso8601_utc("2017-3-12T08:30:00Z"));       // unpadded
  CHECK(!parse_iso8601_utc("2017-03-12T08:30:00Zx"));     // trailing junk
}

TEST_CASE("iso8601 format/parse round trip") {
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const Timestamp t = rng.uniform_int(-2208988800LL, 4102444800LL);  // 1900..2100
    const std::string s = format_iso8601_utc(t);
    CHECK(s.size() == 20);
    CHECK(parse_iso8601_utc(s) == t);
  }
  CHECK(format_iso8601_utc(1489307400) == "2017-03-12T08:30:00Z");
}

TEST_CASE("iso dates") {
  CHECK(parse_iso_date("1970-01-01") == std::int64_t{0});
  CHECK(parse_iso_date("2017-03-12") == std::int64_t{17237});
  CHECK(!parse_iso_date("2017-03-32"));
  CHECK(!parse_iso_date("2017-03-12T"));
  CHECK(format_iso_date(17237) == "2017-03-12");
}

TEST_CASE("utc timezone is identity") {
  const Timezone tz = Timezone::utc();
  CHECK(tz.offset_seconds_at(0) == 0);
  CHECK(tz.offset_seconds_at(1489307400) == 0);
  const CivilDateTime c = tz.to_local(1489307400);
  CHECK(c.date == CivilDate{2017, 3, 12});
  CHECK(c.hour == 8);
  CHECK(c.minute == 30);
}

TEST_CASE("fixed offsets") {
  const Timezone plus = Timezone::fixed_offset(90);
  CHECK(plus.name() == "+01:30");
  CHECK(plus.offset_seconds_at(0) == 5400);
  CHECK(plus.to_local(0).hour == 1);
  CHECK(plus.to_local(0).minute == 30);

  const Timezone minus = Timezone::fixed_offset(-300);
  CHECK(minus.name() == "-05:00");
  CHECK(minus.to_local(0).date == CivilDate{1969, 12, 31});
  CHECK(minus.to_local(0).hour == 19);
}

TEST_CASE("paris winter and summer offsets") {
  const Timezone paris = Timezone::from_name("Europe/Paris");
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-01-15T12:00:00Z")) == 3600);
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-07-15T12:00:00Z")) == 7200);
  CHECK(paris.to_local(*parse_iso8601_utc("2017-01-15T12:00:00Z")).hour == 13);
  CHECK(paris.to_local(*parse_iso8601_utc("2017-07-15T12:00:00Z")).hour == 14);
}

TEST_CASE("paris daylight-saving boundaries 2017") {
  const Timezone paris = Timezone::from_name("Europe/Paris");
  // Spring: last Sunday of March (the 26th), 01:00 UTC.
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-03-26T00:59:59Z")) == 3600);
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-03-26T01:00:00Z")) == 7200);
  // Fall: last Sunday of October (the 29th), 01:00 UTC.
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-10-29T00:59:59Z")) == 7200);
  CHECK(paris.offset_seconds_at(*parse_iso8601_utc("2017-10-29T01:00:00Z")) == 3600);
}

TEST_CASE("paris year boundary shifts the local day") {
  const Timezone paris = Timezone::from_name("Europe/Paris");
  const Timestamp t = *parse_iso8601_utc("2016-12-31T23:30:00Z");
  const CivilDateTime local = paris.to_local(t);
  CHECK(local.date == CivilDate{2017, 1, 1});
  CHECK(local.hour == 0);
  CHECK(local.minute == 30);
  CHECK(paris.local_days_at(t) == days_from_civil(2017, 1, 1));
}

TEST_CASE("timezone names") {
  CHECK(Timezone::from_name("UTC").name() == "UTC");
  CHECK(Timezone::from_name("+02:00").offset_seconds_at(0) == 7200);
  CHECK(Timezone::from_name("-05:30").offset_seconds_at(0) == -19800);
  CHECK_THROWS_WITH_AS(Timezone::from_name("Mars/Olympus"),
                       "unknown timezone: Mars/Olympus", std::runtime_error);
}

TEST_CASE("timestamp civil conversions agree with parse") {
  const CivilDateTime c{{2017, 3, 12}, 8, 30, 0};
  CHECK(timestamp_from_civil_utc(c) == 1489307400);
  CHECK(civil_from_timestamp_utc(1489307400) == c);
  CHECK(civil_from_timestamp_utc(-1) == CivilDateTime{{1969, 12, 31}, 23, 59, 59});
}

}  // TEST_SUITE
