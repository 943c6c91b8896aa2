#include <doctest.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <portcast/ais.hpp>

using namespace portcast;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/portcast_ais_" + name; }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

Geofence square_fence() {
  Geofence f;
  f.name = "basin";
  f.polygon = {{0.0, 0.0}, {4.0, 0.0}, {4.0, 4.0}, {0.0, 4.0}};
  return f;
}

PositionReport fix_at(const std::string& id, Timestamp t, double lon, double lat) {
  PositionReport p;
  p.vessel_id = id;
  p.t = t;
  p.lat = lat;
  p.lon = lon;
  p.sog_knots = 0.5;
  return p;
}

PortCall call_at(const std::string& id, const std::string& vessel, std::optional<Timestamp> arrival,
                 std::optional<Timestamp> departure) {
  PortCall c;
  c.call_id = id;
  c.vessel_id = vessel;
  c.arrival = arrival;
  c.departure = departure;
  return c;
}

constexpr Timestamp kBase = 100000;

}  // namespace

TEST_SUITE("ais") {

// -------------------------------------------------------------------------
// Geofence

TEST_CASE("point in polygon with boundary inclusion") {
  const Geofence f = square_fence();
  CHECK(f.contains(2.0, 2.0));
  CHECK_FALSE(f.contains(5.0, 2.0));
  CHECK_FALSE(f.contains(2.0, -0.5));
  CHECK(f.contains(0.0, 2.0));   // on an edge
  CHECK(f.contains(0.0, 0.0));   // on a vertex
  CHECK(f.contains(4.0, 4.0));
  CHECK_FALSE(f.contains(-1e-9, 2.0));

  Geofence notch;
  notch.name = "L";
  notch.polygon = {{0.0, 0.0}, {4.0, 0.0}, {4.0, 2.0}, {2.0, 2.0}, {2.0, 4.0}, {0.0, 4.0}};
  CHECK(notch.contains(1.0, 3.0));
  CHECK(notch.contains(3.0, 1.0));
  CHECK_FALSE(notch.contains(3.0, 3.0));
}

TEST_CASE("geofence validation") {
  CHECK_NOTHROW(square_fence().validate());

  Geofence two;
  two.name = "f";
  two.polygon = {{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_WITH(two.validate(), "geofence 'f': needs at least 3 vertices");

  Geofence bowtie;
  bowtie.name = "f";
  bowtie.polygon = {{0.0, 0.0}, {4.0, 4.0}, {4.0, 0.0}, {0.0, 4.0}};
  CHECK_THROWS_WITH(bowtie.validate(), "geofence 'f': self-intersecting polygon");

  Geofence doubled;
  doubled.name = "f";
  doubled.polygon = {{0.0, 0.0}, {0.0, 0.0}, {4.0, 0.0}, {4.0, 4.0}};
  CHECK_THROWS_WITH(doubled.validate(), "geofence 'f': zero-length edge");

  Geofence nan_vertex;
  nan_vertex.name = "f";
  nan_vertex.polygon = {{0.0, 0.0}, {4.0, std::numeric_limits<double>::quiet_NaN()}, {4.0, 4.0}};
  CHECK_THROWS_WITH(nan_vertex.validate(), "geofence 'f': non-finite vertex");
}

TEST_CASE("geofence files") {
  const std::string path = tmp_path("fence.json");
  write_file(path, R"({"name": "basin", "polygon": [[0,0],[4,0],[4,4],[0,4]]})");
  const Geofence f = Geofence::load(path);
  CHECK(f.name == "basin");
  REQUIRE(f.polygon.size() == 4);
  CHECK(f.contains(2.0, 2.0));

  const std::string bad_json = tmp_path("fence_bad.json");
  write_file(bad_json, "{nope");
  CHECK_THROWS_WITH(Geofence::load(bad_json), doctest::Contains("invalid JSON"));

  const std::string no_polygon = tmp_path("fence_nopoly.json");
  write_file(no_polygon, R"({"name": "basin"})");
  CHECK_THROWS_WITH(Geofence::load(no_polygon), doctest::Contains("malformed geofence"));

  const std::string crossed = tmp_path("fence_crossed.json");
  write_file(crossed, R"({"name": "x", "polygon": [[0,0],[4,4],[4,0],[0,4]]})");
  CHECK_THROWS_WITH(Geofence::load(crossed), "geofence 'x': self-intersecting polygon");

  CHECK_THROWS_WITH(Geofence::load(tmp_path("fence_missing.json")),
                    doctest::Contains("cannot open"));
}

// -------------------------------------------------------------------------
// Visit detection

TEST_CASE("entry is the first inside fix, exit the last") {
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 10.0, 2.0),         fix_at("V1", kBase + 2000, 2.0, 2.0),
      fix_at("V1", kBase + 3000, 2.5, 2.0),   fix_at("V1", kBase + 4000, 2.0, 2.5),
      fix_at("V1", kBase + 5000, 10.0, 2.0),
  };
  const std::vector<PortVisit> visits = detect_visits(track, square_fence());
  REQUIRE(visits.size() == 1);
  CHECK(visits[0].vessel_id == "V1");
  CHECK(visits[0].entry == kBase + 2000);
  REQUIRE(visits[0].exit.has_value());
  CHECK(*visits[0].exit == kBase + 4000);
  CHECK(visits[0].fix_count == 3);
}

TEST_CASE("a track that ends inside leaves the visit open") {
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 2.0, 2.0),
      fix_at("V1", kBase + 600, 2.0, 2.1),
  };
  const std::vector<PortVisit> visits = detect_visits(track, square_fence());
  REQUIRE(visits.size() == 1);
  CHECK(visits[0].entry == kBase);
  CHECK_FALSE(visits[0].exit.has_value());
  CHECK(visits[0].fix_count == 2);
}

TEST_CASE("a long silence splits the visit") {
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 2.0, 2.0),          fix_at("V1", kBase + 1800, 2.0, 2.0),
      fix_at("V1", kBase + 3600, 2.0, 2.0),   fix_at("V1", kBase + 12000, 2.0, 2.0),
      fix_at("V1", kBase + 13800, 2.0, 2.0),  fix_at("V1", kBase + 15600, 2.0, 2.0),
      fix_at("V1", kBase + 16000, 10.0, 2.0),
  };
  const std::vector<PortVisit> visits = detect_visits(track, square_fence());
  REQUIRE(visits.size() == 2);
  CHECK(visits[0].entry == kBase);
  CHECK(*visits[0].exit == kBase + 3600);
  CHECK(visits[0].fix_count == 3);
  CHECK(visits[1].entry == kBase + 12000);
  CHECK(*visits[1].exit == kBase + 15600);
  CHECK(visits[1].fix_count == 3);
}

TEST_CASE("short visits merge before the dwell filter") {
  // Both halves are under the 30-minute dwell on their own; the 600 s gap
  // between them is too small to keep them apart.
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 2.0, 2.0),          fix_at("V1", kBase + 900, 2.0, 2.0),
      fix_at("V1", kBase + 1000, 10.0, 2.0),  fix_at("V1", kBase + 1500, 2.0, 2.0),
      fix_at("V1", kBase + 2700, 2.0, 2.0),   fix_at("V1", kBase + 3000, 10.0, 2.0),
  };
  const std::vector<PortVisit> visits = detect_visits(track, square_fence());
  REQUIRE(visits.size() == 1);
  CHECK(visits[0].entry == kBase);
  CHECK(*visits[0].exit == kBase + 2700);
  CHECK(visits[0].fix_count == 4);
}

TEST_CASE("an isolated short visit is dropped") {
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 2.0, 2.0),
      fix_at("V1", kBase + 600, 2.0, 2.0),
      fix_at("V1", kBase + 1200, 10.0, 2.0),
  };
  CHECK(detect_visits(track, square_fence()).empty());
}

TEST_CASE("zero-length visits never survive") {
  VisitParams params;
  params.min_dwell_minutes = 0.0;
  const std::vector<PositionReport> single = {
      fix_at("V1", kBase, 2.0, 2.0),
      fix_at("V1", kBase + 100, 10.0, 2.0),
  };
  CHECK(detect_visits(single, square_fence(), params).empty());

  const std::vector<PositionReport> pair = {
      fix_at("V1", kBase, 2.0, 2.0),
      fix_at("V1", kBase + 100, 2.0, 2.0),
      fix_at("V1", kBase + 200, 10.0, 2.0),
  };
  const std::vector<PortVisit> visits = detect_visits(pair, square_fence(), params);
  REQUIRE(visits.size() == 1);
  CHECK(visits[0].entry == kBase);
  CHECK(*visits[0].exit == kBase + 100);
}

TEST_CASE("a duplicated fix does not move the visit boundaries") {
  std::vector<PositionReport> track = {
      fix_at("V1", kBase, 10.0, 2.0),
      fix_at("V1", kBase + 2000, 2.0, 2.0),
      fix_at("V1", kBase + 4000, 2.0, 2.0),
      fix_at("V1", kBase + 5000, 10.0, 2.0),
  };
  const std::vector<PortVisit> before = detect_visits(track, square_fence());
  track.insert(track.begin() + 2, fix_at("V1", kBase + 2000, 2.0, 2.0));
  const std::vector<PortVisit> after = detect_visits(track, square_fence());
  REQUIRE(before.size() == 1);
  REQUIRE(after.size() == 1);
  CHECK(after[0].entry == before[0].entry);
  CHECK(*after[0].exit == *before[0].exit);
  CHECK(after[0].fix_count == before[0].fix_count + 1);
}

TEST_CASE("a fix on the fence boundary counts as inside") {
  const std::vector<PositionReport> track = {
      fix_at("V1", kBase, 0.0, 2.0),
      fix_at("V1", kBase + 2000, 0.0, 2.5),
      fix_at("V1", kBase + 3000, -1.0, 2.0),
  };
  const std::vector<PortVisit> visits = detect_visits(track, square_fence());
  REQUIRE(visits.size() == 1);
  CHECK(visits[0].entry == kBase);
  CHECK(*visits[0].exit == kBase + 2000);
}

TEST_CASE("visit detection input errors") {
  const std::vector<PositionReport> mixed = {
      fix_at("A", kBase, 2.0, 2.0),
      fix_at("B", kBase + 100, 2.0, 2.0),
  };
  CHECK_THROWS_WITH(detect_visits(mixed, square_fence()),
                    "detect_visits: track mixes vessels 'A' and 'B'");

  const std::vector<PositionReport> unsorted = {
      fix_at("A", kBase + 100, 2.0, 2.0),
      fix_at("A", kBase, 2.0, 2.0),
  };
  CHECK_THROWS_WITH(detect_visits(unsorted, square_fence()),
                    "detect_visits: track not sorted by time");

  const std::vector<PositionReport> track = {fix_at("A", kBase, 2.0, 2.0)};
  VisitParams bad;
  bad.min_dwell_minutes = -1.0;
  CHECK_THROWS_WITH(detect_visits(track, square_fence(), bad), "detect_visits: bad parameters");
  bad.min_dwell_minutes = 30.0;
  bad.max_gap_minutes = 0.0;
  CHECK_THROWS_WITH(detect_visits(track, square_fence(), bad), "detect_visits: bad parameters");

  Geofence degenerate;
  degenerate.name = "f";
  degenerate.polygon = {{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_WITH(detect_visits(track, degenerate), "geofence 'f': needs at least 3 vertices");
}

// -------------------------------------------------------------------------
// Visit CSV

TEST_CASE("visits survive the csv round trip") {
  const Timestamp t1 = *parse_iso8601_utc("2016-03-10T04:00:00Z");
  std::vector<PortVisit> visits;
  visits.push_back(PortVisit{"227001000", t1, t1 + 7200, 12});
  visits.push_back(PortVisit{"227002000", t1 + 86400, std::nullopt, 3});

  const std::string path = tmp_path("visits.csv");
  save_visits_csv(visits, path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "vessel_id,entry,exit,fix_count");

  const std::vector<PortVisit> loaded = load_visits_csv(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].vessel_id == "227001000");
  CHECK(loaded[0].entry == t1);
  REQUIRE(loaded[0].exit.has_value());
  CHECK(*loaded[0].exit == t1 + 7200);
  CHECK(loaded[0].fix_count == 12);
  CHECK(loaded[1].vessel_id == "227002000");
  CHECK(loaded[1].entry == t1 + 86400);
  CHECK_FALSE(loaded[1].exit.has_value());
  CHECK(loaded[1].fix_count == 3);
}

TEST_CASE("visit csv errors") {
  const std::string wrong_header = tmp_path("visits_header.csv");
  write_file(wrong_header, "vessel,entry,exit,fixes\n");
  CHECK_THROWS_WITH(load_visits_csv(wrong_header),
                    doctest::Contains("expected header 'vessel_id,entry,exit,fix_count'"));

  const std::string bad_entry = tmp_path("visits_badentry.csv");
  write_file(bad_entry, "vessel_id,entry,exit,fix_count\nV1,yesterday,,3\n");
  CHECK_THROWS_WITH(load_visits_csv(bad_entry), doctest::Contains("bad entry timestamp"));

  const std::string short_row = tmp_path("visits_short.csv");
  write_file(short_row, "vessel_id,entry,exit,fix_count\nV1,2016-03-10T04:00:00Z,\n");
  CHECK_THROWS_WITH(load_visits_csv(short_row), doctest::Contains("expected 4 columns"));

  CHECK_THROWS_WITH(load_visits_csv(tmp_path("visits_missing.csv")),
                    doctest::Contains("cannot open"));
}

// -------------------------------------------------------------------------
// AIS CSV

TEST_CASE("position reports load from csv") {
  const std::string path = tmp_path("track.csv");
  write_file(path,
             "mmsi,timestamp,lat,lon,sog_knots\n"
             "227001000,2016-03-10T04:00:00Z,44.85,-0.55,0.3\n"
             "227001000,2016-03-10T04:10:00Z,44.86,-0.56,1.5\n");
  const std::vector<PositionReport> track = load_ais_csv(path);
  REQUIRE(track.size() == 2);
  CHECK(track[0].vessel_id == "227001000");
  CHECK(track[0].t == *parse_iso8601_utc("2016-03-10T04:00:00Z"));
  CHECK(track[0].lat == 44.85);
  CHECK(track[0].lon == -0.55);
  CHECK(track[0].sog_knots == 0.3);
  CHECK(track[1].t == track[0].t + 600);
}

TEST_CASE("position csv errors") {
  const std::string wrong_header = tmp_path("track_header.csv");
  write_file(wrong_header, "id,time,lat,lon,speed\n");
  CHECK_THROWS_WITH(load_ais_csv(wrong_header),
                    doctest::Contains("expected header 'mmsi,timestamp,lat,lon,sog_knots'"));

  const std::string bad_time = tmp_path("track_badtime.csv");
  write_file(bad_time, "mmsi,timestamp,lat,lon,sog_knots\nV1,noonish,44.85,-0.55,0.3\n");
  CHECK_THROWS_WITH(load_ais_csv(bad_time), doctest::Contains("bad timestamp 'noonish'"));

  const std::string bad_number = tmp_path("track_badnum.csv");
  write_file(bad_number, "mmsi,timestamp,lat,lon,sog_knots\nV1,2016-03-10T04:00:00Z,44.85,east,0.3\n");
  CHECK_THROWS_WITH(load_ais_csv(bad_number), doctest::Contains("bad number 'east'"));

  const std::string out_of_range = tmp_path("track_range.csv");
  write_file(out_of_range, "mmsi,timestamp,lat,lon,sog_knots\nV1,2016-03-10T04:00:00Z,95.0,-0.55,0.3\n");
  CHECK_THROWS_WITH(load_ais_csv(out_of_range), doctest::Contains("coordinates out of range"));

  const std::string no_mmsi = tmp_path("track_noid.csv");
  write_file(no_mmsi, "mmsi,timestamp,lat,lon,sog_knots\n,2016-03-10T04:00:00Z,44.85,-0.55,0.3\n");
  CHECK_THROWS_WITH(load_ais_csv(no_mmsi), doctest::Contains("empty mmsi"));

  const std::string short_row = tmp_path("track_short.csv");
  write_file(short_row, "mmsi,timestamp,lat,lon,sog_knots\nV1,2016-03-10T04:00:00Z,44.85,-0.55\n");
  CHECK_THROWS_WITH(load_ais_csv(short_row), doctest::Contains("expected 5 columns"));
}

// -------------------------------------------------------------------------
// Reconciliation

TEST_CASE("only the uniquely matchable calls are filled") {
  Dataset ds;
  ds.calls = {
      call_at("C1", "V1", kBase, std::nullopt),
      call_at("C2", "V2", std::nullopt, kBase + 100000),
      call_at("C3", "V3", std::nullopt, std::nullopt),
      call_at("C4", "V4", std::nullopt, kBase + 200000),
      call_at("C5", "V5", std::nullopt, kBase + 400000),
      call_at("C6", "V6", kBase + 490000, std::nullopt),
      call_at("C7", "V7", std::nullopt, kBase + 600000),
      call_at("C8", "V8", kBase + 700000, kBase + 750000),
      call_at("C9", "V9", std::nullopt, kBase + 800000),
      call_at("C10", "V10", kBase + 900000, std::nullopt),
  };
  const std::vector<PortVisit> visits = {
      PortVisit{"V1", kBase - 7200, kBase + 36000, 10},
      PortVisit{"V2", kBase + 90000, kBase + 98000, 10},
      PortVisit{"V4", kBase + 300000, kBase + 310000, 10},
      PortVisit{"V5", kBase + 380000, kBase + 390000, 10},
      PortVisit{"V5", kBase + 395000, kBase + 405000, 10},
      PortVisit{"V6", kBase + 489000, std::nullopt, 10},
      PortVisit{"V7", kBase + 603600, kBase + 650000, 10},
      PortVisit{"V9", kBase + 700000, kBase + 756800, 10},  // exit exactly at the window edge
      PortVisit{"MMSI-123", kBase + 899000, kBase + 940000, 10},
  };
  ReconcileParams params;
  params.visit_vessel_alias = {{"MMSI-123", "V10"}};
  const ReconcileResult result = reconcile(ds, visits, params);

  CHECK(result.report.calls_missing_before == 9);
  CHECK(result.report.calls_missing_after == 5);

  REQUIRE(result.report.filled.size() == 4);
  CHECK(result.report.filled[0].call_id == "C1");
  CHECK(result.report.filled[0].field == "departure");
  CHECK(result.report.filled[0].value == kBase + 36000);
  CHECK(result.report.filled[0].source == "ais");
  CHECK(result.report.filled[1].call_id == "C2");
  CHECK(result.report.filled[1].field == "arrival");
  CHECK(result.report.filled[1].value == kBase + 90000);
  CHECK(result.report.filled[2].call_id == "C9");
  CHECK(result.report.filled[2].field == "arrival");
  CHECK(result.report.filled[2].value == kBase + 700000);
  CHECK(result.report.filled[3].call_id == "C10");
  CHECK(result.report.filled[3].field == "departure");
  CHECK(result.report.filled[3].value == kBase + 940000);

  REQUIRE(result.report.issues.size() == 5);
  CHECK(result.report.issues[0].call_id == "C3");
  CHECK(result.report.issues[0].reason == "no declared timestamp to anchor a match");
  CHECK(result.report.issues[0].candidates == 0);
  CHECK(result.report.issues[1].call_id == "C4");
  CHECK(result.report.issues[1].reason == "no visit in the tolerance window");
  CHECK(result.report.issues[1].candidates == 0);
  CHECK(result.report.issues[2].call_id == "C5");
  CHECK(result.report.issues[2].reason == "multiple candidate visits");
  CHECK(result.report.issues[2].candidates == 2);
  CHECK(result.report.issues[3].call_id == "C6");
  CHECK(result.report.issues[3].reason == "matching visit is still open");
  CHECK(result.report.issues[3].candidates == 1);
  CHECK(result.report.issues[4].call_id == "C7");
  CHECK(result.report.issues[4].reason == "fill would put departure before arrival");
  CHECK(result.report.issues[4].candidates == 1);

  // Declared timestamps are never altered, and untouched calls stay equal.
  for (std::size_t i = 0; i < ds.calls.size(); ++i) {
    const PortCall& before = ds.calls[i];
    const PortCall& after = result.dataset.calls[i];
    if (before.arrival) CHECK(*after.arrival == *before.arrival);
    if (before.departure) CHECK(*after.departure == *before.departure);
  }
  CHECK(result.dataset.calls[7] == ds.calls[7]);
  CHECK(*result.dataset.calls[0].departure == kBase + 36000);
  CHECK(*result.dataset.calls[1].arrival == kBase + 90000);
  CHECK_FALSE(result.dataset.calls[2].arrival.has_value());
  CHECK_FALSE(result.dataset.calls[4].arrival.has_value());
  CHECK_FALSE(result.dataset.calls[6].arrival.has_value());
}

TEST_CASE("aliases map ais identifiers onto call vessels") {
  Dataset ds;
  ds.calls = {call_at("C1", "HERON", kBase, std::nullopt)};
  const std::vector<PortVisit> visits = {PortVisit{"227005000", kBase - 3600, kBase + 30000, 4}};

  const ReconcileResult unmapped = reconcile(ds, visits, ReconcileParams{});
  REQUIRE(unmapped.report.issues.size() == 1);
  CHECK(unmapped.report.issues[0].reason == "no visit in the tolerance window");

  ReconcileParams params;
  params.visit_vessel_alias = {{"227005000", "HERON"}};
  const ReconcileResult mapped = reconcile(ds, visits, params);
  CHECK(mapped.report.issues.empty());
  REQUIRE(mapped.report.filled.size() == 1);
  CHECK(*mapped.dataset.calls[0].departure == kBase + 30000);
}

TEST_CASE("reconcile parameter validation") {
  Dataset ds;
  ds.calls = {call_at("C1", "V1", kBase, std::nullopt)};
  ReconcileParams params;
  params.tolerance_hours = -1.0;
  CHECK_THROWS_WITH(reconcile(ds, {}, params), "reconcile: negative tolerance");
}

TEST_CASE("reconcile report serialization") {
  Dataset ds;
  ds.calls = {
      call_at("C1", "V1", kBase, std::nullopt),
      call_at("C2", "V2", std::nullopt, std::nullopt),
  };
  const std::vector<PortVisit> visits = {PortVisit{"V1", kBase - 7200, kBase + 36000, 10}};
  const ReconcileResult result = reconcile(ds, visits, ReconcileParams{});

  const nlohmann::json j = nlohmann::json::parse(reconcile_report_to_json(result.report));
  CHECK(j.at("calls_missing_before") == 2);
  CHECK(j.at("calls_missing_after") == 1);
  REQUIRE(j.at("filled").size() == 1);
  CHECK(j.at("filled")[0].at("call_id") == "C1");
  CHECK(j.at("filled")[0].at("field") == "departure");
  CHECK(j.at("filled")[0].at("value") == format_iso8601_utc(kBase + 36000));
  CHECK(j.at("filled")[0].at("source") == "ais");
  REQUIRE(j.at("issues").size() == 1);
  CHECK(j.at("issues")[0].at("call_id") == "C2");
  CHECK(j.at("issues")[0].at("reason") == "no declared timestamp to anchor a match");
  CHECK(j.at("issues")[0].at("candidates") == 0);
}

}  // TEST_SUITE
