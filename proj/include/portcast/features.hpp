#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "portcast/portcall.hpp"
#include "portcast/timeutil.hpp"

namespace portcast {

enum class ColumnKind { numeric, categorical, boolean };

struct ColumnDesc {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  bool operator==(const ColumnDesc&) const = default;
};

struct FeatureSchema {
  std::vector<ColumnDesc> columns;
  std::string target_name = "turnaround_hours";

  int index_of(std::string_view name) const;  // -1 when absent
  bool operator==(const FeatureSchema&) const = default;
};

// Cell value: monostate marks a missing value; numeric and boolean columns
// hold doubles (booleans as 0/1); categorical columns hold labels.
using FeatureValue = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const FeatureValue& v) {
  return std::holds_alternative<std::monostate>(v);
}
inline double value_number(const FeatureValue& v) { return std::get<double>(v); }
inline const std::string& value_label(const FeatureValue& v) { return std::get<std::string>(v); }

struct FeatureMatrix {
  FeatureSchema schema;
  std::vector<std::vector<FeatureValue>> rows;
  std::vector<double> target;         // turnaround hours
  std::vector<std::string> call_ids;  // aligned with rows
  std::vector<int> years;             // local arrival year, aligned with rows

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return schema.columns.size(); }
};

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& rows);

// ---------------------------------------------------------------------------
// External data sources

struct HolidayCalendar {
  std::set<std::int64_t> days;  // local civil dates as day counts

  bool contains(std::int64_t day) const { return days.count(day) != 0; }
  // One ISO date (YYYY-MM-DD) per line; blank lines and #-comments ignored.
  static HolidayCalendar load(const std::string& path);
};

struct TideSample {
  Timestamp t = 0;
  double water_height_m = 0.0;
};

// Water-height series per sensor; samples strictly increasing in time.
struct TideSeries {
  std::map<std::string, std::vector<TideSample>> by_sensor;

  // CSV: timestamp,sensor_id,water_height_m
  static TideSeries load(const std::string& path);
};

struct WeatherSample {
  double temperature_c = 0.0;
  double wind_speed_ms = 0.0;
  double precipitation_mm = 0.0;
};

// Hourly observations keyed by hour-aligned timestamps.
struct WeatherSeries {
  std::map<Timestamp, WeatherSample> by_hour;

  // CSV: hour,temperature_c,wind_speed_ms,precipitation_mm
  static WeatherSeries load(const std::string& path);
};

// ---------------------------------------------------------------------------
// Feature construction

struct FeatureToggles {
  bool tidal = false;
  bool weather = false;
  bool congestion = false;
};

struct FeatureOptions {
  Timezone tz = Timezone::from_name("Europe/Paris");
  FeatureToggles toggles;
  std::string tide_sensor;       // sensor feeding the tidal features
  int congestion_last_n = 20;    // trailing same-type turnarounds to average
  int congestion_window_days = 30;
};

// Column list implied by the toggles; base columns always come first.
FeatureSchema build_schema(const FeatureToggles& toggles);
extern const std::size_t kBaseFeatureCount;

// Per-call base features: cargo descriptors for both sides, local day of
// week, local hour of entry rounded down to 4 hours, and holiday flags for
// the arrival date and +/- 3 days around it. Requires arrival.
std::vector<FeatureValue> base_features(const PortCall& call, const HolidayCalendar& holidays,
                                        const Timezone& tz);

// Water height at arrival (linear interpolation) plus hours since the last
// high- and low-water extremum. All missing when the series does not cover
// the arrival.
std::vector<FeatureValue> tidal_features(Timestamp arrival, const TideSeries& tides,
                                         const std::string& sensor);

// Observation at the arrival hour plus aggregates over the following 48
// hours (precipitation sum, mean wind, mean temperature). Aggregates are
// missing unless the whole window is present.
std::vector<FeatureValue> weather_features(Timestamp arrival, const WeatherSeries& weather);

// Port congestion at arrival: vessels in port, vessels with a matching cargo
// type in port, and the average turnaround of the last N same-type calls
// departed within the trailing window. Context must be sorted by arrival.
std::vector<FeatureValue> congestion_features(const PortCall& call, const Dataset& context,
                                              int last_n, int window_days);

// Featurizes every call of a cleaned dataset. Throws on calls without both
// timestamps. Row order follows the dataset.
FeatureMatrix assemble_matrix(const Dataset& ds, const HolidayCalendar& holidays,
                              const FeatureOptions& options, const TideSeries* tides = nullptr,
                              const WeatherSeries* weather = nullptr);

// CSV export: call_id, year, features, target. Missing values are empty
// cells. A JSON schema sidecar is written next to the CSV.
void save_matrix_csv(const FeatureMatrix& m, const std::string& path);

}  // namespace portcast
