#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "portcast/portcall.hpp"

namespace portcast {

// Synthetic port-call generator. Real traffic data cannot ship with the
// repository, so tests and benchmarks run on generated datasets with known
// structure.
struct CargoProfile {
  std::string name;
  std::string fiscal_type;            // defaults to "FISC_" + name
  double base_hours = 24.0;           // intercept of the turnaround model
  double rate_hours_per_ton = 0.0;    // slope against tonnage
  double noise_sigma_hours = 0.0;     // gaussian noise on the turnaround
  double mean_tonnage = 10000.0;      // tonnage drawn ~N(mean, sigma), whole tons
  double tonnage_sigma = 2000.0;
  double weight = 1.0;                // relative sampling frequency
};

struct GeneratorConfig {
  int year_from = 2008;
  int year_to = 2018;
  int calls_per_year = 500;
  int vessel_pool = 200;
  double load_fraction = 0.3;  // calls whose only operation is a load
  double dual_fraction = 0.1;  // calls with both operations
  std::vector<std::string> berths = {"B1", "B2", "B3"};
  std::vector<double> berth_offset_hours;             // aligned with berths; empty = zeros
  std::array<double, 7> day_of_week_offset_hours{};   // Mon..Sun, by UTC arrival weekday
  std::vector<CargoProfile> cargo_types;

  void validate() const;  // throws on empty cargo list, empty year range, ...
};

GeneratorConfig default_generator_config();
GeneratorConfig load_generator_config(const std::string& path);

// Deterministic for a given (config, seed). Turnaround of a call is
//   base + sum(rate * tonnage over its operations) + day-of-week offset
//   + berth offset + N(0, sigma)
// using the profile of the primary side (unload when present, else load),
// clamped to stay above one hour, rounded to whole seconds. Calls are sorted
// by arrival and numbered C000001, C000002, ...
Dataset synthesize_dataset(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace portcast
