#include "portcast/synthesize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "portcast/rng.hpp"

namespace portcast {

void GeneratorConfig::validate() const {
  if (cargo_types.empty()) throw std::runtime_error("generator: cargo type list is empty");
  if (year_to < year_from) throw std::runtime_error("generator: year range is empty");
  if (calls_per_year <= 0) throw std::runtime_error("generator: calls_per_year must be positive");
  if (vessel_pool <= 0) throw std::runtime_error("generator: vessel_pool must be positive");
  if (berths.empty()) throw std::runtime_error("generator: berth list is empty");
  if (!berth_offset_hours.empty() && berth_offset_hours.size() != berths.size()) {
    throw std::runtime_error("generator: berth_offset_hours must match berths");
  }
  if (load_fraction < 0 || dual_fraction < 0 || load_fraction + dual_fraction > 1.0) {
    throw std::runtime_error("generator: load/dual fractions must be in [0,1] and sum <= 1");
  }
  double total_weight = 0;
  for (const CargoProfile& p : cargo_types) {
    if (p.name.empty()) throw std::runtime_error("generator: cargo profile without a name");
    if (p.weight <= 0) throw std::runtime_error("generator: cargo weight must be positive");
    if (p.mean_tonnage < 0 || p.tonnage_sigma < 0 || p.noise_sigma_hours < 0) {
      throw std::runtime_error("generator: negative sigma or tonnage in profile " + p.name);
    }
    total_weight += p.weight;
  }
  if (total_weight <= 0) throw std::runtime_error("generator: cargo weights sum to zero");
}

GeneratorConfig default_generator_config() {
  GeneratorConfig cfg;
  cfg.berths = {"B1", "B2", "B3", "B4"};
  cfg.berth_offset_hours = {0.0, 2.0, 4.0, 6.0};
  cfg.day_of_week_offset_hours = {0.0, 0.0, 0.0, 0.0, 0.0, 6.0, 10.0};
  auto add = [&](const char* name, const char* fiscal, double base, double rate, double noise,
                 double ton, double ton_sigma, double weight) {
    cfg.cargo_types.push_back(
        CargoProfile{name, fiscal, base, rate, noise, ton, ton_sigma, weight});
  };
  add("CEREALS", "AGRI", 40.0, 0.0020, 6.0, 14000, 4000, 10.0);
  add("OIL_SEEDS", "AGRI", 34.0, 0.0015, 5.0, 9000, 2500, 7.0);
  add("CRUDE_OIL", "HYDROCARBON", 18.0, 0.0004, 3.0, 30000, 6000, 6.0);
  add("REFINED_FUEL", "HYDROCARBON", 14.0, 0.0006, 3.0, 12000, 3000, 6.0);
  add("CONTAINERS", "GENERAL", 10.0, 0.0008, 2.0, 8000, 2000, 5.0);
  add("FERTILIZER", "CHEMICAL", 28.0, 0.0018, 5.0, 7000, 2000, 4.0);
  add("CHEMICALS", "CHEMICAL", 24.0, 0.0010, 4.0, 5000, 1500, 3.0);
  add("TIMBER", "FOREST", 46.0, 0.0030, 8.0, 6000, 2000, 3.0);
  add("GRAVEL", "BULK", 22.0, 0.0012, 4.0, 16000, 5000, 2.5);
  add("SCRAP_METAL", "BULK", 36.0, 0.0025, 7.0, 8000, 2500, 2.0);
  add("WINE", "AGRI", 20.0, 0.0016, 4.0, 3000, 800, 1.5);
  add("PAPER_PULP", "FOREST", 30.0, 0.0014, 5.0, 7000, 1800, 1.0);
  return cfg;
}

namespace {

double json_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<double>();
}

}  // namespace

GeneratorConfig load_generator_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  GeneratorConfig cfg = default_generator_config();
  if (j.contains("cargo_types")) cfg.cargo_types.clear();
  cfg.year_from = static_cast<int>(json_number(j, "year_from", cfg.year_from));
  cfg.year_to = static_cast<int>(json_number(j, "year_to", cfg.year_to));
  cfg.calls_per_year = static_cast<int>(json_number(j, "calls_per_year", cfg.calls_per_year));
  cfg.vessel_pool = static_cast<int>(json_number(j, "vessel_pool", cfg.vessel_pool));
  cfg.load_fraction = json_number(j, "load_fraction", cfg.load_fraction);
  cfg.dual_fraction = json_number(j, "dual_fraction", cfg.dual_fraction);
  if (j.contains("berths")) {
    cfg.berths = j.at("berths").get<std::vector<std::string>>();
    cfg.berth_offset_hours.clear();
  }
  if (j.contains("berth_offset_hours")) {
    cfg.berth_offset_hours = j.at("berth_offset_hours").get<std::vector<double>>();
  }
  if (j.contains("day_of_week_offset_hours")) {
    const auto v = j.at("day_of_week_offset_hours").get<std::vector<double>>();
    if (v.size() != 7) throw std::runtime_error(path + ": day_of_week_offset_hours needs 7 values");
    std::copy(v.begin(), v.end(), cfg.day_of_week_offset_hours.begin());
  }
  for (const auto& pj : j.value("cargo_types", nlohmann::json::array())) {
    CargoProfile p;
    p.name = pj.at("name").get<std::string>();
    p.fiscal_type = pj.value("fiscal_type", std::string{});
    p.base_hours = json_number(pj, "base_hours", p.base_hours);
    p.rate_hours_per_ton = json_number(pj, "rate_hours_per_ton", p.rate_hours_per_ton);
    p.noise_sigma_hours = json_number(pj, "noise_sigma_hours", p.noise_sigma_hours);
    p.mean_tonnage = json_number(pj, "mean_tonnage", p.mean_tonnage);
    p.tonnage_sigma = json_number(pj, "tonnage_sigma", p.tonnage_sigma);
    p.weight = json_number(pj, "weight", p.weight);
    cfg.cargo_types.push_back(std::move(p));
  }
  cfg.validate();
  return cfg;
}

namespace {

struct SideDraw {
  const CargoProfile* profile = nullptr;
  double tonnage = 0.0;
  std::size_t berth = 0;
};

std::size_t pick_profile(const GeneratorConfig& cfg, Rng& rng, double total_weight) {
  double r = rng.next_double() * total_weight;
  for (std::size_t i = 0; i < cfg.cargo_types.size(); ++i) {
    r -= cfg.cargo_types[i].weight;
    if (r < 0) return i;
  }
  return cfg.cargo_types.size() - 1;
}

SideDraw draw_side(const GeneratorConfig& cfg, Rng& rng, double total_weight) {
  SideDraw s;
  s.profile = &cfg.cargo_types[pick_profile(cfg, rng, total_weight)];
  double t = rng.normal(s.profile->mean_tonnage, s.profile->tonnage_sigma);
  s.tonnage = std::max(0.0, static_cast<double>(std::llround(t)));
  s.berth = rng.index(cfg.berths.size());
  return s;
}

CargoOperation to_operation(const GeneratorConfig& cfg, const SideDraw& s) {
  CargoOperation op;
  op.cargo_type = s.profile->name;
  op.fiscal_cargo_type =
      s.profile->fiscal_type.empty() ? "FISC_" + s.profile->name : s.profile->fiscal_type;
  op.tonnage = s.tonnage;
  op.berth = cfg.berths[s.berth];
  return op;
}

}  // namespace

Dataset synthesize_dataset(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  double total_weight = 0;
  for (const CargoProfile& p : cfg.cargo_types) total_weight += p.weight;

  Dataset ds;
  ds.provenance = "synthetic";
  // Arrivals keep half a day clear of year boundaries so the local calendar
  // year matches the generation year for any reasonable timezone.
  constexpr std::int64_t margin = 12 * 3600;

  for (int year = cfg.year_from; year <= cfg.year_to; ++year) {
    const Timestamp year_start = days_from_civil(year, 1, 1) * 86400;
    const Timestamp year_end = days_from_civil(year + 1, 1, 1) * 86400;
    for (int k = 0; k < cfg.calls_per_year; ++k) {
      PortCall call;
      call.vessel_id = [&] {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "V%04d",
                      static_cast<int>(rng.index(static_cast<std::size_t>(cfg.vessel_pool))));
        return std::string(buf);
      }();
      call.arrival = rng.uniform_int(year_start + margin, year_end - margin - 1);

      const double mode = rng.next_double();
      const bool dual = mode < cfg.dual_fraction;
      const bool load_only = !dual && mode < cfg.dual_fraction + cfg.load_fraction;

      SideDraw primary = draw_side(cfg, rng, total_weight);
      double hours = primary.profile->base_hours +
                     primary.profile->rate_hours_per_ton * primary.tonnage;
      if (dual) {
        SideDraw secondary = draw_side(cfg, rng, total_weight);
        hours += secondary.profile->rate_hours_per_ton * secondary.tonnage;
        call.unload = to_operation(cfg, primary);
        call.load = to_operation(cfg, secondary);
      } else if (load_only) {
        call.load = to_operation(cfg, primary);
      } else {
        call.unload = to_operation(cfg, primary);
      }

      const int wd = weekday_from_days(*call.arrival / 86400);
      hours += cfg.day_of_week_offset_hours[static_cast<std::size_t>(wd)];
      if (!cfg.berth_offset_hours.empty()) hours += cfg.berth_offset_hours[primary.berth];
      hours += rng.normal(0.0, primary.profile->noise_sigma_hours);
      if (hours < 1.01) hours = 1.01;
      call.departure = *call.arrival + std::llround(hours * 3600.0);
      ds.calls.push_back(std::move(call));
    }
  }

  std::sort(ds.calls.begin(), ds.calls.end(), [](const PortCall& a, const PortCall& b) {
    return std::tie(*a.arrival, *a.departure, a.vessel_id) <
           std::tie(*b.arrival, *b.departure, b.vessel_id);
  });
  for (std::size_t i = 0; i < ds.calls.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "C%06zu", i + 1);
    ds.calls[i].call_id = buf;
  }
  return ds;
}

}  // namespace portcast
