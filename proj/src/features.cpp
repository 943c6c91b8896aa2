#include "portcast/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "portcast/csv.hpp"

namespace portcast {

int FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  FeatureMatrix out;
  out.schema = m.schema;
  out.rows.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= m.n_rows()) throw std::runtime_error("select_rows: index out of range");
    out.rows.push_back(m.rows[r]);
    out.target.push_back(m.target[r]);
    out.call_ids.push_back(m.call_ids[r]);
    out.years.push_back(m.years[r]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Data sources

HolidayCalendar HolidayCalendar::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  HolidayCalendar cal;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    std::string t = line.substr(b, e - b + 1);
    if (t[0] == '#') continue;
    const auto day = parse_iso_date(t);
    if (!day) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad date '" + t + "'");
    }
    cal.days.insert(*day);
  }
  return cal;
}

namespace {

double parse_strict_double(const std::string& raw, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size() || !std::isfinite(v)) {
    throw std::runtime_error(where + ": bad number '" + raw + "'");
  }
  return v;
}

Timestamp parse_ts_field(const std::string& raw, const std::string& where) {
  const auto ts = parse_iso8601_utc(raw);
  if (!ts) throw std::runtime_error(where + ": bad timestamp '" + raw + "'");
  return *ts;
}

std::string loc(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

}  // namespace

TideSeries TideSeries::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || csv_join(fields) != "timestamp,sensor_id,water_height_m") {
    throw std::runtime_error(path + ": expected header 'timestamp,sensor_id,water_height_m'");
  }
  TideSeries series;
  while (reader.next(fields)) {
    const std::string where = loc(path, reader.record_line());
    if (fields.size() != 3) throw std::runtime_error(where + ": expected 3 columns");
    TideSample s;
    s.t = parse_ts_field(fields[0], where);
    s.water_height_m = parse_strict_double(fields[2], where);
    if (fields[1].empty()) throw std::runtime_error(where + ": empty sensor_id");
    auto& vec = series.by_sensor[fields[1]];
    if (!vec.empty() && s.t <= vec.back().t) {
      throw std::runtime_error(where + ": timestamps not strictly increasing for sensor " +
                               fields[1]);
    }
    vec.push_back(s);
  }
  return series;
}

WeatherSeries WeatherSeries::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) ||
      csv_join(fields) != "hour,temperature_c,wind_speed_ms,precipitation_mm") {
    throw std::runtime_error(path +
                             ": expected header 'hour,temperature_c,wind_speed_ms,precipitation_mm'");
  }
  WeatherSeries series;
  while (reader.next(fields)) {
    const std::string where = loc(path, reader.record_line());
    if (fields.size() != 4) throw std::runtime_error(where + ": expected 4 columns");
    const Timestamp t = parse_ts_field(fields[0], where);
    if (t % 3600 != 0) throw std::runtime_error(where + ": timestamp not hour-aligned");
    WeatherSample s;
    s.temperature_c = parse_strict_double(fields[1], where);
    s.wind_speed_ms = parse_strict_double(fields[2], where);
    s.precipitation_mm = parse_strict_double(fields[3], where);
    if (s.precipitation_mm < 0) throw std::runtime_error(where + ": negative precipitation");
    if (!series.by_hour.emplace(t, s).second) {
      throw std::runtime_error(where + ": duplicate hour");
    }
  }
  return series;
}

// ---------------------------------------------------------------------------
// Schema

const std::size_t kBaseFeatureCount = 17;

FeatureSchema build_schema(const FeatureToggles& toggles) {
  FeatureSchema schema;
  auto add = [&](const char* name, ColumnKind kind) {
    schema.columns.push_back(ColumnDesc{name, kind});
  };
  add("cargo_type_u", ColumnKind::categorical);
  add("fiscal_cargo_type_u", ColumnKind::categorical);
  add("tonnage_u", ColumnKind::numeric);
  add("berth_u", ColumnKind::categorical);
  add("cargo_type_l", ColumnKind::categorical);
  add("fiscal_cargo_type_l", ColumnKind::categorical);
  add("tonnage_l", ColumnKind::numeric);
  add("berth_l", ColumnKind::categorical);
  add("day_of_entry", ColumnKind::categorical);
  add("hour_of_entry_round4", ColumnKind::categorical);
  add("holiday_m3", ColumnKind::boolean);
  add("holiday_m2", ColumnKind::boolean);
  add("holiday_m1", ColumnKind::boolean);
  add("holiday_on_entry", ColumnKind::boolean);
  add("holiday_p1", ColumnKind::boolean);
  add("holiday_p2", ColumnKind::boolean);
  add("holiday_p3", ColumnKind::boolean);
  if (toggles.tidal) {
    add("water_height_at_arrival", ColumnKind::numeric);
    add("hours_since_last_high_water", ColumnKind::numeric);
    add("hours_since_last_low_water", ColumnKind::numeric);
  }
  if (toggles.weather) {
    add("temperature_at_arrival", ColumnKind::numeric);
    add("wind_at_arrival", ColumnKind::numeric);
    add("precip_at_arrival", ColumnKind::numeric);
    add("precip_sum_48h", ColumnKind::numeric);
    add("wind_mean_48h", ColumnKind::numeric);
    add("temperature_mean_48h", ColumnKind::numeric);
  }
  if (toggles.congestion) {
    add("vessels_in_port", ColumnKind::numeric);
    add("same_cargo_in_port", ColumnKind::numeric);
    add("avg_turnaround_last_n", ColumnKind::numeric);
  }
  return schema;
}

// ---------------------------------------------------------------------------
// Base features

namespace {

// Absent cargo fields become the sentinel "NONE"; absent tonnage becomes 0.
void push_operation_features(std::vector<FeatureValue>& row,
                             const std::optional<CargoOperation>& op) {
  auto label = [&](const std::optional<std::string>& s) -> FeatureValue {
    if (s) return *s;
    return std::string("NONE");
  };
  if (!op) {
    row.push_back(std::string("NONE"));
    row.push_back(std::string("NONE"));
    row.push_back(0.0);
    row.push_back(std::string("NONE"));
    return;
  }
  row.push_back(label(op->cargo_type));
  row.push_back(label(op->fiscal_cargo_type));
  row.push_back(op->tonnage ? *op->tonnage : 0.0);
  row.push_back(label(op->berth));
}

}  // namespace

std::vector<FeatureValue> base_features(const PortCall& call, const HolidayCalendar& holidays,
                                        const Timezone& tz) {
  if (!call.arrival) {
    throw std::runtime_error("call " + call.call_id + ": features need an arrival time");
  }
  std::vector<FeatureValue> row;
  row.reserve(kBaseFeatureCount);
  push_operation_features(row, call.unload);
  push_operation_features(row, call.load);

  const Timestamp arr = *call.arrival;
  const std::int64_t local_day = tz.local_days_at(arr);
  row.push_back(std::string(kWeekdayNames[static_cast<std::size_t>(weekday_from_days(local_day))]));
  const int local_hour = tz.to_local(arr).hour;
  row.push_back(std::to_string((local_hour / 4) * 4));
  for (int offset = -3; offset <= 3; ++offset) {
    row.push_back(holidays.contains(local_day + offset) ? 1.0 : 0.0);
  }
  return row;
}

// ---------------------------------------------------------------------------
// Tidal features

std::vector<FeatureValue> tidal_features(Timestamp arrival, const TideSeries& tides,
                                         const std::string& sensor) {
  std::vector<FeatureValue> out(3, FeatureValue{std::monostate{}});
  const auto it = tides.by_sensor.find(sensor);
  if (it == tides.by_sensor.end()) {
    throw std::runtime_error("tide sensor '" + sensor + "' not in series");
  }
  const std::vector<TideSample>& s = it->second;
  if (s.size() < 2 || arrival < s.front().t || arrival > s.back().t) return out;

  // Height at arrival by linear interpolation between bracketing samples.
  const auto upper = std::lower_bound(
      s.begin(), s.end(), arrival,
      [](const TideSample& sample, Timestamp t) { return sample.t < t; });
  if (upper->t == arrival) {
    out[0] = upper->water_height_m;
  } else {
    const auto lower = upper - 1;
    const double f = static_cast<double>(arrival - lower->t) /
                     static_cast<double>(upper->t - lower->t);
    out[0] = lower->water_height_m + f * (upper->water_height_m - lower->water_height_m);
  }

  // Local extrema over runs of equal heights; an extremum is stamped with the
  // first sample of its run.
  std::vector<std::pair<Timestamp, double>> runs;
  for (const TideSample& sample : s) {
    if (runs.empty() || runs.back().second != sample.water_height_m) {
      runs.emplace_back(sample.t, sample.water_height_m);
    }
  }
  std::optional<Timestamp> last_high, last_low;
  for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
    if (runs[i].first > arrival) break;
    const bool high = runs[i].second > runs[i - 1].second && runs[i].second > runs[i + 1].second;
    const bool low = runs[i].second < runs[i - 1].second && runs[i].second < runs[i + 1].second;
    if (high) last_high = runs[i].first;
    if (low) last_low = runs[i].first;
  }
  if (last_high) out[1] = static_cast<double>(arrival - *last_high) / 3600.0;
  if (last_low) out[2] = static_cast<double>(arrival - *last_low) / 3600.0;
  return out;
}

// ---------------------------------------------------------------------------
// Weather features

std::vector<FeatureValue> weather_features(Timestamp arrival, const WeatherSeries& weather) {
  std::vector<FeatureValue> out(6, FeatureValue{std::monostate{}});
  const Timestamp h0 = (arrival / 3600) * 3600 - (arrival % 3600 < 0 ? 3600 : 0);
  const auto at = weather.by_hour.find(h0);
  if (at != weather.by_hour.end()) {
    out[0] = at->second.temperature_c;
    out[1] = at->second.wind_speed_ms;
    out[2] = at->second.precipitation_mm;
  }
  double precip = 0, wind = 0, temp = 0;
  for (int k = 0; k < 48; ++k) {
    const auto it = weather.by_hour.find(h0 + k * 3600);
    if (it == weather.by_hour.end()) return out;  // incomplete window
    precip += it->second.precipitation_mm;
    wind += it->second.wind_speed_ms;
    temp += it->second.temperature_c;
  }
  out[3] = precip;
  out[4] = wind / 48.0;
  out[5] = temp / 48.0;
  return out;
}

// ---------------------------------------------------------------------------
// Congestion features

namespace {

bool has_cargo_type(const PortCall& call, const std::string& type) {
  for (const auto* op : {&call.unload, &call.load}) {
    if (*op && (*op)->cargo_type && *(*op)->cargo_type == type) return true;
  }
  return false;
}

std::vector<std::string> call_types(const PortCall& call) {
  std::vector<std::string> types;
  for (const auto* op : {&call.unload, &call.load}) {
    if (*op && (*op)->cargo_type) types.push_back(*(*op)->cargo_type);
  }
  return types;
}

}  // namespace

std::vector<FeatureValue> congestion_features(const PortCall& call, const Dataset& context,
                                              int last_n, int window_days) {
  if (!call.arrival) {
    throw std::runtime_error("call " + call.call_id + ": congestion needs an arrival time");
  }
  if (last_n <= 0 || window_days <= 0) {
    throw std::runtime_error("congestion: last_n and window_days must be positive");
  }
  const Timestamp arr = *call.arrival;

  double in_port = 0, same_type = 0;
  const std::vector<std::string> types = call_types(call);
  std::vector<std::pair<Timestamp, double>> recent;  // (departure, turnaround) of same-type calls

  Timestamp prev_arrival = std::numeric_limits<Timestamp>::min();
  for (const PortCall& other : context.calls) {
    if (!other.arrival) continue;
    if (*other.arrival < prev_arrival) {
      throw std::runtime_error("congestion: context not sorted by arrival");
    }
    prev_arrival = *other.arrival;
    if (other.call_id == call.call_id) continue;

    // Vessels already moored when this one arrives.
    if (*other.arrival < arr && other.departure && *other.departure > arr) {
      in_port += 1;
      for (const std::string& t : types) {
        if (has_cargo_type(other, t)) {
          same_type += 1;
          break;
        }
      }
    }
    // Completed same-type calls in the trailing window.
    if (other.departure && *other.departure <= arr &&
        *other.departure >= arr - static_cast<Timestamp>(window_days) * 86400) {
      for (const std::string& t : types) {
        if (has_cargo_type(other, t)) {
          recent.emplace_back(*other.departure, turnaround_hours(other).value);
          break;
        }
      }
    }
  }

  std::vector<FeatureValue> out(3, FeatureValue{std::monostate{}});
  out[0] = in_port;
  out[1] = same_type;
  if (!recent.empty()) {
    std::sort(recent.begin(), recent.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::size_t n = std::min<std::size_t>(recent.size(), static_cast<std::size_t>(last_n));
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += recent[i].second;
    out[2] = sum / static_cast<double>(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix assembly

FeatureMatrix assemble_matrix(const Dataset& ds, const HolidayCalendar& holidays,
                              const FeatureOptions& options, const TideSeries* tides,
                              const WeatherSeries* weather) {
  FeatureMatrix m;
  m.schema = build_schema(options.toggles);
  if (options.toggles.tidal) {
    if (!tides) throw std::runtime_error("assemble_matrix: tidal features need a tide series");
    if (tides->by_sensor.find(options.tide_sensor) == tides->by_sensor.end()) {
      throw std::runtime_error("assemble_matrix: tide sensor '" + options.tide_sensor +
                               "' not in series");
    }
  }
  if (options.toggles.weather && !weather) {
    throw std::runtime_error("assemble_matrix: weather features need a weather series");
  }

  Dataset sorted;
  if (options.toggles.congestion) {
    sorted.calls = ds.calls;
    std::stable_sort(sorted.calls.begin(), sorted.calls.end(),
                     [](const PortCall& a, const PortCall& b) {
                       if (!a.arrival || !b.arrival) return false;
                       return *a.arrival < *b.arrival;
                     });
  }

  m.rows.reserve(ds.calls.size());
  for (const PortCall& call : ds.calls) {
    const double target = turnaround_hours(call).value;  // validates both timestamps
    std::vector<FeatureValue> row = base_features(call, holidays, options.tz);
    if (options.toggles.tidal) {
      const auto t = tidal_features(*call.arrival, *tides, options.tide_sensor);
      row.insert(row.end(), t.begin(), t.end());
    }
    if (options.toggles.weather) {
      const auto w = weather_features(*call.arrival, *weather);
      row.insert(row.end(), w.begin(), w.end());
    }
    if (options.toggles.congestion) {
      const auto c = congestion_features(call, sorted, options.congestion_last_n,
                                         options.congestion_window_days);
      row.insert(row.end(), c.begin(), c.end());
    }
    if (row.size() != m.schema.columns.size()) {
      throw std::runtime_error("assemble_matrix: row width mismatch");
    }
    m.rows.push_back(std::move(row));
    m.target.push_back(target);
    m.call_ids.push_back(call.call_id);
    m.years.push_back(options.tz.to_local(*call.arrival).date.year);
  }
  return m;
}

void save_matrix_csv(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::vector<std::string> row{"call_id", "year"};
  for (const ColumnDesc& c : m.schema.columns) row.push_back(c.name);
  row.push_back(m.schema.target_name);
  out << csv_join(row) << '\n';
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    row.clear();
    row.push_back(m.call_ids[i]);
    row.push_back(std::to_string(m.years[i]));
    for (const FeatureValue& v : m.rows[i]) {
      if (is_missing(v)) {
        row.emplace_back();
      } else if (std::holds_alternative<double>(v)) {
        row.push_back(format_double(value_number(v)));
      } else {
        row.push_back(value_label(v));
      }
    }
    row.push_back(format_double(m.target[i]));
    out << csv_join(row) << '\n';
  }

  nlohmann::json schema;
  schema["target"] = m.schema.target_name;
  auto cols = nlohmann::json::array();
  for (const ColumnDesc& c : m.schema.columns) {
    const char* kind = c.kind == ColumnKind::numeric
                           ? "numeric"
                           : (c.kind == ColumnKind::categorical ? "categorical" : "boolean");
    cols.push_back({{"name", c.name}, {"kind", kind}});
  }
  schema["columns"] = cols;
  std::ofstream sidecar(path + ".schema.json", std::ios::binary);
  if (!sidecar) throw std::runtime_error("cannot write " + path + ".schema.json");
  sidecar << schema.dump(2) << '\n';
}

}  // namespace portcast
