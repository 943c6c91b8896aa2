#include "portcast/portcall.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "portcast/csv.hpp"

namespace portcast {

const char* const kPortCallCsvHeader =
    "call_id,vessel_id,arrival,departure,"
    "unload_cargo_type,unload_fiscal_cargo_type,unload_tonnage,unload_berth,"
    "load_cargo_type,load_fiscal_cargo_type,load_tonnage,load_berth";

TurnaroundHours turnaround_hours(const PortCall& call) {
  if (!call.arrival || !call.departure) {
    throw std::runtime_error("call " + call.call_id + ": turnaround needs arrival and departure");
  }
  const double hours = static_cast<double>(*call.departure - *call.arrival) / 3600.0;
  if (hours <= 0.0) {
    throw std::runtime_error("call " + call.call_id + ": departure not after arrival");
  }
  return TurnaroundHours{hours};
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
  return s.substr(b, e - b);
}

std::optional<std::string> opt_label(const std::string& raw) {
  std::string t = trim(raw);
  if (t.empty()) return std::nullopt;
  return t;
}

bool parse_tonnage(const std::string& raw, std::optional<double>& out, std::string& err) {
  const std::string t = trim(raw);
  if (t.empty()) {
    out = std::nullopt;
    return true;
  }
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    err = "malformed tonnage '" + t + "'";
    return false;
  }
  if (v < 0.0) {
    err = "negative tonnage";
    return false;
  }
  out = v;
  return true;
}

std::optional<CargoOperation> make_operation(std::optional<std::string> type,
                                             std::optional<std::string> fiscal,
                                             std::optional<double> tonnage,
                                             std::optional<std::string> berth) {
  CargoOperation op{std::move(type), std::move(fiscal), tonnage, std::move(berth)};
  if (op.empty()) return std::nullopt;
  return op;
}

}  // namespace

ParseResult parse_dataset(std::istream& in, const std::string& origin, ParseMode mode) {
  ParseResult result;
  result.dataset.provenance = origin;

  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw std::runtime_error(origin + ": empty input");
  if (csv_join(fields) != kPortCallCsvHeader) {
    throw std::runtime_error(origin + ": unexpected header, want '" +
                             std::string(kPortCallCsvHeader) + "'");
  }

  std::unordered_set<std::string> seen_ids;
  auto fail = [&](std::size_t line, const std::string& call_id, const std::string& msg) {
    if (mode == ParseMode::strict) {
      throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
    }
    result.errors.push_back(RowError{line, call_id, msg});
  };

  while (reader.next(fields)) {
    const std::size_t line = reader.record_line();
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    if (fields.size() != 12) {
      fail(line, "", "expected 12 columns, got " + std::to_string(fields.size()));
      continue;
    }

    PortCall call;
    call.call_id = trim(fields[0]);
    call.vessel_id = trim(fields[1]);
    if (call.call_id.empty()) {
      fail(line, "", "missing call_id");
      continue;
    }
    if (call.vessel_id.empty()) {
      fail(line, call.call_id, "missing vessel_id");
      continue;
    }
    if (!seen_ids.insert(call.call_id).second) {
      fail(line, call.call_id, "duplicate call_id '" + call.call_id + "'");
      continue;
    }

    bool ok = true;
    for (int side = 0; side < 2 && ok; ++side) {
      const std::string raw = trim(fields[side == 0 ? 2 : 3]);
      if (raw.empty()) continue;
      const auto ts = parse_iso8601_utc(raw);
      if (!ts) {
        fail(line, call.call_id, std::string("malformed ") + (side == 0 ? "arrival" : "departure") +
                                     " timestamp '" + raw + "'");
        ok = false;
        break;
      }
      (side == 0 ? call.arrival : call.departure) = *ts;
    }
    if (!ok) {
      seen_ids.erase(call.call_id);
      continue;
    }

    if (call.arrival && call.departure && *call.departure <= *call.arrival) {
      fail(line, call.call_id, "departure not after arrival");
      seen_ids.erase(call.call_id);
      continue;
    }

    std::optional<double> unload_t, load_t;
    std::string terr;
    if (!parse_tonnage(fields[6], unload_t, terr) || !parse_tonnage(fields[10], load_t, terr)) {
      fail(line, call.call_id, terr);
      seen_ids.erase(call.call_id);
      continue;
    }

    call.unload = make_operation(opt_label(fields[4]), opt_label(fields[5]), unload_t,
                                 opt_label(fields[7]));
    call.load = make_operation(opt_label(fields[8]), opt_label(fields[9]), load_t,
                               opt_label(fields[11]));
    result.dataset.calls.push_back(std::move(call));
  }
  return result;
}

ParseResult parse_dataset_file(const std::string& path, ParseMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_dataset(in, path, mode);
}

namespace {

void push_operation(std::vector<std::string>& row, const std::optional<CargoOperation>& op) {
  if (!op) {
    row.insert(row.end(), {"", "", "", ""});
    return;
  }
  row.push_back(op->cargo_type.value_or(""));
  row.push_back(op->fiscal_cargo_type.value_or(""));
  row.push_back(op->tonnage ? format_double(*op->tonnage) : "");
  row.push_back(op->berth.value_or(""));
}

}  // namespace

void serialize_dataset(const Dataset& ds, std::ostream& out) {
  out << kPortCallCsvHeader << '\n';
  std::vector<std::string> row;
  for (const PortCall& call : ds.calls) {
    row.clear();
    row.push_back(call.call_id);
    row.push_back(call.vessel_id);
    row.push_back(call.arrival ? format_iso8601_utc(*call.arrival) : "");
    row.push_back(call.departure ? format_iso8601_utc(*call.departure) : "");
    push_operation(row, call.unload);
    push_operation(row, call.load);
    out << csv_join(row) << '\n';
  }
}

void save_dataset_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  serialize_dataset(ds, out);
}

}  // namespace portcast
