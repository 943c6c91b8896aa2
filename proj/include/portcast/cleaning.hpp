#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "portcast/portcall.hpp"

namespace portcast {

struct CleaningRules {
  double min_turnaround_hours = 1.0;
  double outlier_sigma = 2.0;       // drop above median + sigma * std
  std::size_t min_combo_count = 5;  // minimum (unload, load) type pair frequency
  bool drop_empty_cargo = true;
  bool drop_short_stays = true;
  bool drop_outliers = true;
  bool drop_rare_combos = true;
};

CleaningRules load_cleaning_rules(const std::string& path);

struct TypeStats {
  std::size_t count = 0;
  double median = 0.0;  // lower-interpolation median
  double stddev = 0.0;  // population standard deviation
};

// Turnaround statistics keyed by cargo type. A call contributes one sample
// per operation that carries a cargo type, so a call with both sides typed
// contributes twice.
std::map<std::string, TypeStats> cargo_type_stats(const Dataset& ds);

enum class CleaningRule : int {
  empty_cargo = 1,
  short_stay = 2,
  outlier = 3,
  rare_combo = 4,
};

const char* cleaning_rule_name(CleaningRule rule);

struct Removal {
  std::string call_id;
  CleaningRule rule;
};

struct CleaningReport {
  std::size_t input_size = 0;
  std::size_t output_size = 0;
  std::array<std::size_t, 4> removed_by_rule{};  // indexed by rule - 1
  std::vector<Removal> removals;
};

struct CleaningResult {
  Dataset dataset;
  CleaningReport report;
};

// Applies the four filters in a fixed order:
//   1. no cargo moved (total tonnage zero or no operations),
//   2. turnaround below the minimum,
//   3. turnaround above median + sigma * std for any of the call's cargo
//      types, statistics computed over the survivors of rules 1-2,
//   4. (unload type, load type) pair rarer than the minimum count, absent
//      sides counted under "NONE".
// Throws on an empty input, on calls without computable turnaround, and when
// nothing survives.
CleaningResult apply_filters(const Dataset& ds, const CleaningRules& rules);

}  // namespace portcast
