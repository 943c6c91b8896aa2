#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "portcast/portcall.hpp"

namespace portcast {

struct PositionReport {
  std::string vessel_id;
  Timestamp t = 0;
  double lat = 0.0;
  double lon = 0.0;
  double sog_knots = 0.0;
};

// CSV: mmsi,timestamp,lat,lon,sog_knots
std::vector<PositionReport> load_ais_csv(const std::string& path);

struct Geofence {
  std::string name;
  std::vector<std::array<double, 2>> polygon;  // (lon, lat) vertices

  // Even-odd rule; points on the boundary count as inside.
  bool contains(double lon, double lat) const;
  void validate() const;  // >= 3 vertices, no self-intersection
  static Geofence load(const std::string& path);  // {"name":..., "polygon":[[lon,lat],...]}
};

struct PortVisit {
  std::string vessel_id;
  Timestamp entry = 0;
  std::optional<Timestamp> exit;  // absent while the track ends inside
  std::size_t fix_count = 0;
};

struct VisitParams {
  double min_dwell_minutes = 30.0;  // shorter closed visits are dropped
  double max_gap_minutes = 120.0;   // a longer silence inside the fence closes the visit
};

// Track must belong to one vessel and be sorted by time. Entry is the first
// fix inside the fence, exit the first fix outside (or the gap timeout).
// Visits separated by less than the dwell minimum are merged first; closed
// visits shorter than the dwell minimum are then discarded.
std::vector<PortVisit> detect_visits(std::span<const PositionReport> track, const Geofence& fence,
                                     const VisitParams& params = {});

void save_visits_csv(std::span<const PortVisit> visits, const std::string& path);
std::vector<PortVisit> load_visits_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Reconciliation of declared calls against detected visits

struct ReconcileParams {
  double tolerance_hours = 12.0;  // overlap window around the declared times
  std::unordered_map<std::string, std::string> visit_vessel_alias;  // AIS id -> call vessel id
};

struct FilledField {
  std::string call_id;
  std::string field;  // "arrival" or "departure"
  Timestamp value = 0;
  std::string source = "ais";
};

struct ReconcileIssue {
  std::string call_id;
  std::string reason;
  std::size_t candidates = 0;
};

struct ReconcileReport {
  std::vector<FilledField> filled;
  std::vector<ReconcileIssue> issues;
  std::size_t calls_missing_before = 0;
  std::size_t calls_missing_after = 0;
};

struct ReconcileResult {
  Dataset dataset;
  ReconcileReport report;
};

// Fills missing arrival/departure from a uniquely matching visit of the same
// vessel within the tolerance window. Existing timestamps are never altered;
// zero or multiple candidates produce an issue instead of a fill.
ReconcileResult reconcile(const Dataset& ds, std::span<const PortVisit> visits,
                          const ReconcileParams& params = {});

std::string reconcile_report_to_json(const ReconcileReport& report);

}  // namespace portcast
