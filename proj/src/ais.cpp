#include "portcast/ais.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "portcast/csv.hpp"

namespace portcast {

namespace {

double parse_double_field(const std::string& raw, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
  if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size() || !std::isfinite(v)) {
    throw std::runtime_error(where + ": bad number '" + raw + "'");
  }
  return v;
}

}  // namespace

std::vector<PositionReport> load_ais_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || csv_join(fields) != "mmsi,timestamp,lat,lon,sog_knots") {
    throw std::runtime_error(path + ": expected header 'mmsi,timestamp,lat,lon,sog_knots'");
  }
  std::vector<PositionReport> out;
  while (reader.next(fields)) {
    const std::string where = path + ":" + std::to_string(reader.record_line());
    if (fields.size() != 5) throw std::runtime_error(where + ": expected 5 columns");
    PositionReport p;
    p.vessel_id = fields[0];
    if (p.vessel_id.empty()) throw std::runtime_error(where + ": empty mmsi");
    const auto ts = parse_iso8601_utc(fields[1]);
    if (!ts) throw std::runtime_error(where + ": bad timestamp '" + fields[1] + "'");
    p.t = *ts;
    p.lat = parse_double_field(fields[2], where);
    p.lon = parse_double_field(fields[3], where);
    p.sog_knots = parse_double_field(fields[4], where);
    if (p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180) {
      throw std::runtime_error(where + ": coordinates out of range");
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geofence

namespace {

// Is q on the closed segment [a, b]?
bool on_segment(const std::array<double, 2>& a, const std::array<double, 2>& b, double qx,
                double qy) {
  const double cross = (b[0] - a[0]) * (qy - a[1]) - (b[1] - a[1]) * (qx - a[0]);
  if (cross != 0.0) return false;
  return qx >= std::min(a[0], b[0]) && qx <= std::max(a[0], b[0]) && qy >= std::min(a[1], b[1]) &&
         qy <= std::max(a[1], b[1]);
}

int orientation(const std::array<double, 2>& a, const std::array<double, 2>& b,
                const std::array<double, 2>& c) {
  const double v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

// Proper crossing of two open segments (shared endpoints do not count).
bool segments_cross(const std::array<double, 2>& a, const std::array<double, 2>& b,
                    const std::array<double, 2>& c, const std::array<double, 2>& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace

bool Geofence::contains(double lon, double lat) const {
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(polygon[j], polygon[i], lon, lat)) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& pi = polygon[i];
    const auto& pj = polygon[j];
    if ((pi[1] > lat) != (pj[1] > lat) &&
        lon < (pj[0] - pi[0]) * (lat - pi[1]) / (pj[1] - pi[1]) + pi[0]) {
      inside = !inside;
    }
  }
  return inside;
}

void Geofence::validate() const {
  const std::size_t n = polygon.size();
  if (n < 3) throw std::runtime_error("geofence '" + name + "': needs at least 3 vertices");
  for (const auto& v : polygon) {
    if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
      throw std::runtime_error("geofence '" + name + "': non-finite vertex");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = polygon[i];
    const auto& b = polygon[(i + 1) % n];
    if (a == b) throw std::runtime_error("geofence '" + name + "': zero-length edge");
    for (std::size_t k = i + 1; k < n; ++k) {
      if (k == i || (k + 1) % n == i || (i + 1) % n == k) continue;  // adjacent edges
      const auto& c = polygon[k];
      const auto& d = polygon[(k + 1) % n];
      if (segments_cross(a, b, c, d)) {
        throw std::runtime_error("geofence '" + name + "': self-intersecting polygon");
      }
    }
  }
}

Geofence Geofence::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  Geofence fence;
  try {
    fence.name = j.at("name").get<std::string>();
    for (const auto& v : j.at("polygon")) {
      fence.polygon.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": malformed geofence: " + e.what());
  }
  fence.validate();
  return fence;
}

// ---------------------------------------------------------------------------
// Visit detection

std::vector<PortVisit> detect_visits(std::span<const PositionReport> track, const Geofence& fence,
                                     const VisitParams& params) {
  fence.validate();
  if (params.min_dwell_minutes < 0 || params.max_gap_minutes <= 0) {
    throw std::runtime_error("detect_visits: bad parameters");
  }
  const auto min_dwell = static_cast<Timestamp>(params.min_dwell_minutes * 60.0);
  const auto max_gap = static_cast<Timestamp>(params.max_gap_minutes * 60.0);

  std::vector<PortVisit> raw;
  PortVisit open;
  bool is_open = false;
  Timestamp last_inside = 0;
  const std::string* vessel = nullptr;
  Timestamp prev_t = std::numeric_limits<Timestamp>::min();

  for (const PositionReport& p : track) {
    if (!vessel) {
      vessel = &p.vessel_id;
    } else if (p.vessel_id != *vessel) {
      throw std::runtime_error("detect_visits: track mixes vessels '" + *vessel + "' and '" +
                               p.vessel_id + "'");
    }
    if (p.t < prev_t) throw std::runtime_error("detect_visits: track not sorted by time");
    prev_t = p.t;

    const bool inside = fence.contains(p.lon, p.lat);
    if (is_open && p.t - last_inside > max_gap) {
      // Silence while inside: close the visit at the last confirmed fix.
      open.exit = last_inside;
      raw.push_back(open);
      is_open = false;
    }
    if (inside) {
      if (!is_open) {
        open = PortVisit{p.vessel_id, p.t, std::nullopt, 0};
        is_open = true;
      }
      open.fix_count += 1;
      last_inside = p.t;
    } else if (is_open) {
      // Exit is the last inside fix, not the first outside one.
      open.exit = last_inside;
      raw.push_back(open);
      is_open = false;
    }
  }
  if (is_open) raw.push_back(open);  // track ends inside; exit unknown

  // Merge visits separated by less than the dwell minimum, then drop closed
  // visits shorter than it.
  std::vector<PortVisit> merged;
  for (const PortVisit& v : raw) {
    if (!merged.empty() && merged.back().exit && v.entry - *merged.back().exit < min_dwell) {
      merged.back().exit = v.exit;
      merged.back().fix_count += v.fix_count;
    } else {
      merged.push_back(v);
    }
  }
  std::vector<PortVisit> out;
  for (const PortVisit& v : merged) {
    if (v.exit && (*v.exit <= v.entry || *v.exit - v.entry < min_dwell)) continue;
    out.push_back(v);
  }
  return out;
}

void save_visits_csv(std::span<const PortVisit> visits, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "vessel_id,entry,exit,fix_count\n";
  for (const PortVisit& v : visits) {
    out << csv_join({v.vessel_id, format_iso8601_utc(v.entry),
                     v.exit ? format_iso8601_utc(*v.exit) : "", std::to_string(v.fix_count)})
        << '\n';
  }
}

std::vector<PortVisit> load_visits_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || csv_join(fields) != "vessel_id,entry,exit,fix_count") {
    throw std::runtime_error(path + ": expected header 'vessel_id,entry,exit,fix_count'");
  }
  std::vector<PortVisit> out;
  while (reader.next(fields)) {
    const std::string where = path + ":" + std::to_string(reader.record_line());
    if (fields.size() != 4) throw std::runtime_error(where + ": expected 4 columns");
    PortVisit v;
    v.vessel_id = fields[0];
    const auto entry = parse_iso8601_utc(fields[1]);
    if (!entry) throw std::runtime_error(where + ": bad entry timestamp");
    v.entry = *entry;
    if (!fields[2].empty()) {
      const auto exit = parse_iso8601_utc(fields[2]);
      if (!exit) throw std::runtime_error(where + ": bad exit timestamp");
      v.exit = *exit;
    }
    v.fix_count = static_cast<std::size_t>(parse_double_field(fields[3], where));
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconciliation

ReconcileResult reconcile(const Dataset& ds, std::span<const PortVisit> visits,
                          const ReconcileParams& params) {
  if (params.tolerance_hours < 0) throw std::runtime_error("reconcile: negative tolerance");
  const auto tol = static_cast<Timestamp>(params.tolerance_hours * 3600.0);

  ReconcileResult result;
  result.dataset = ds;

  auto visit_vessel = [&](const PortVisit& v) -> std::string {
    const auto it = params.visit_vessel_alias.find(v.vessel_id);
    return it == params.visit_vessel_alias.end() ? v.vessel_id : it->second;
  };

  for (PortCall& call : result.dataset.calls) {
    const bool miss_arrival = !call.arrival;
    const bool miss_departure = !call.departure;
    if (!miss_arrival && !miss_departure) continue;
    result.report.calls_missing_before += 1;

    if (miss_arrival && miss_departure) {
      result.report.calls_missing_after += 1;
      result.report.issues.push_back(
          ReconcileIssue{call.call_id, "no declared timestamp to anchor a match", 0});
      continue;
    }

    const Timestamp anchor_lo = (call.arrival ? *call.arrival : *call.departure) - tol;
    const Timestamp anchor_hi = (call.departure ? *call.departure : *call.arrival) + tol;

    const PortVisit* match = nullptr;
    std::size_t candidates = 0;
    for (const PortVisit& v : visits) {
      if (visit_vessel(v) != call.vessel_id) continue;
      const Timestamp v_end = v.exit ? *v.exit : std::numeric_limits<Timestamp>::max();
      if (v.entry <= anchor_hi && v_end >= anchor_lo) {
        candidates += 1;
        match = &v;
      }
    }

    if (candidates != 1) {
      result.report.calls_missing_after += 1;
      result.report.issues.push_back(ReconcileIssue{
          call.call_id,
          candidates == 0 ? "no visit in the tolerance window" : "multiple candidate visits",
          candidates});
      continue;
    }

    PortCall updated = call;
    bool issue = false;
    if (miss_arrival) updated.arrival = match->entry;
    if (miss_departure) {
      if (match->exit) {
        updated.departure = *match->exit;
      } else {
        issue = true;
        result.report.issues.push_back(
            ReconcileIssue{call.call_id, "matching visit is still open", 1});
      }
    }
    if (!issue && updated.arrival && updated.departure && *updated.departure <= *updated.arrival) {
      issue = true;
      result.report.issues.push_back(
          ReconcileIssue{call.call_id, "fill would put departure before arrival", 1});
    }
    if (issue) {
      result.report.calls_missing_after += 1;
      continue;
    }
    if (miss_arrival) {
      result.report.filled.push_back(FilledField{call.call_id, "arrival", *updated.arrival, "ais"});
    }
    if (miss_departure) {
      result.report.filled.push_back(
          FilledField{call.call_id, "departure", *updated.departure, "ais"});
    }
    if (!updated.arrival || !updated.departure) result.report.calls_missing_after += 1;
    call = updated;
  }
  return result;
}

std::string reconcile_report_to_json(const ReconcileReport& report) {
  nlohmann::json j;
  j["calls_missing_before"] = report.calls_missing_before;
  j["calls_missing_after"] = report.calls_missing_after;
  auto filled = nlohmann::json::array();
  for (const FilledField& f : report.filled) {
    filled.push_back({{"call_id", f.call_id},
                      {"field", f.field},
                      {"value", format_iso8601_utc(f.value)},
                      {"source", f.source}});
  }
  j["filled"] = filled;
  auto issues = nlohmann::json::array();
  for (const ReconcileIssue& i : report.issues) {
    issues.push_back({{"call_id", i.call_id}, {"reason", i.reason}, {"candidates", i.candidates}});
  }
  j["issues"] = issues;
  return j.dump(2);
}

}  // namespace portcast
