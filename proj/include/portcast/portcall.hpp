#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "portcast/timeutil.hpp"

namespace portcast {

// One side of a call: cargo moved off the vessel (unload) or onto it (load).
struct CargoOperation {
  std::optional<std::string> cargo_type;
  std::optional<std::string> fiscal_cargo_type;
  std::optional<double> tonnage;  // metric tons, >= 0
  std::optional<std::string> berth;

  bool empty() const {
    return !cargo_type && !fiscal_cargo_type && !tonnage && !berth;
  }
  bool operator==(const CargoOperation&) const = default;
};

struct PortCall {
  std::string call_id;
  std::string vessel_id;
  std::optional<Timestamp> arrival;    // UTC; may be filled by reconciliation
  std::optional<Timestamp> departure;  // UTC; absent while the call is open
  std::optional<CargoOperation> unload;
  std::optional<CargoOperation> load;

  bool operator==(const PortCall&) const = default;
};

struct Dataset {
  std::vector<PortCall> calls;
  std::string provenance;  // free-form source note, not serialized
};

// Turnaround is the only quantity the models predict; keep the unit visible.
struct TurnaroundHours {
  double value = 0.0;
};

// Hours between arrival and departure. Throws if either side is absent or the
// interval is not positive.
TurnaroundHours turnaround_hours(const PortCall& call);

extern const char* const kPortCallCsvHeader;

enum class ParseMode { strict, lenient };

struct RowError {
  std::size_t line = 0;
  std::string call_id;
  std::string message;
};

struct ParseResult {
  Dataset dataset;
  std::vector<RowError> errors;
};

// CSV with the exact column set of kPortCallCsvHeader. Empty cells mean
// absent. In strict mode the first bad row throws (message includes the line
// number); in lenient mode bad rows are skipped and reported.
ParseResult parse_dataset(std::istream& in, const std::string& origin, ParseMode mode);
ParseResult parse_dataset_file(const std::string& path, ParseMode mode);

void serialize_dataset(const Dataset& ds, std::ostream& out);
void save_dataset_file(const Dataset& ds, const std::string& path);

}  // namespace portcast
