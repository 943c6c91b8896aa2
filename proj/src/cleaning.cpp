#include "portcast/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace portcast {

CleaningRules load_cleaning_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  CleaningRules r;
  r.min_turnaround_hours = j.value("min_turnaround_hours", r.min_turnaround_hours);
  r.outlier_sigma = j.value("outlier_sigma", r.outlier_sigma);
  r.min_combo_count = j.value("min_combo_count", r.min_combo_count);
  r.drop_empty_cargo = j.value("drop_empty_cargo", r.drop_empty_cargo);
  r.drop_short_stays = j.value("drop_short_stays", r.drop_short_stays);
  r.drop_outliers = j.value("drop_outliers", r.drop_outliers);
  r.drop_rare_combos = j.value("drop_rare_combos", r.drop_rare_combos);
  if (r.min_turnaround_hours < 0 || r.outlier_sigma < 0) {
    throw std::runtime_error(path + ": thresholds must be non-negative");
  }
  return r;
}

const char* cleaning_rule_name(CleaningRule rule) {
  switch (rule) {
    case CleaningRule::empty_cargo: return "empty_cargo";
    case CleaningRule::short_stay: return "short_stay";
    case CleaningRule::outlier: return "outlier";
    case CleaningRule::rare_combo: return "rare_combo";
  }
  return "unknown";
}

namespace {

double lower_median(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

double population_std(const std::vector<double>& values) {
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ssq = 0;
  for (double v : values) ssq += (v - mean) * (v - mean);
  return std::sqrt(ssq / static_cast<double>(values.size()));
}

std::map<std::string, std::vector<double>> samples_by_type(const Dataset& ds) {
  std::map<std::string, std::vector<double>> samples;
  for (const PortCall& call : ds.calls) {
    const double t = turnaround_hours(call).value;
    for (const auto* op : {&call.unload, &call.load}) {
      if (*op && (*op)->cargo_type) samples[*(*op)->cargo_type].push_back(t);
    }
  }
  return samples;
}

double total_tonnage(const PortCall& call) {
  double total = 0;
  for (const auto* op : {&call.unload, &call.load}) {
    if (*op && (*op)->tonnage) total += *(*op)->tonnage;
  }
  return total;
}

std::pair<std::string, std::string> combo_key(const PortCall& call) {
  auto side = [](const std::optional<CargoOperation>& op) {
    return (op && op->cargo_type) ? *op->cargo_type : std::string("NONE");
  };
  return {side(call.unload), side(call.load)};
}

}  // namespace

std::map<std::string, TypeStats> cargo_type_stats(const Dataset& ds) {
  if (ds.calls.empty()) throw std::runtime_error("cargo_type_stats: empty dataset");
  std::map<std::string, TypeStats> stats;
  for (auto& [type, values] : samples_by_type(ds)) {
    TypeStats s;
    s.count = values.size();
    s.stddev = population_std(values);
    s.median = lower_median(values);
    stats.emplace(type, s);
  }
  return stats;
}

CleaningResult apply_filters(const Dataset& ds, const CleaningRules& rules) {
  if (ds.calls.empty()) throw std::runtime_error("apply_filters: empty dataset");
  for (const PortCall& call : ds.calls) turnaround_hours(call);  // validate upfront

  CleaningResult result;
  result.report.input_size = ds.calls.size();
  std::vector<const PortCall*> alive;
  alive.reserve(ds.calls.size());
  for (const PortCall& call : ds.calls) alive.push_back(&call);

  auto run_rule = [&](CleaningRule rule, auto&& drop) {
    std::vector<const PortCall*> kept;
    kept.reserve(alive.size());
    for (const PortCall* call : alive) {
      if (drop(*call)) {
        result.report.removals.push_back(Removal{call->call_id, rule});
        ++result.report.removed_by_rule[static_cast<int>(rule) - 1];
      } else {
        kept.push_back(call);
      }
    }
    alive = std::move(kept);
  };

  if (rules.drop_empty_cargo) {
    run_rule(CleaningRule::empty_cargo, [](const PortCall& call) {
      return (!call.unload && !call.load) || total_tonnage(call) == 0.0;
    });
  }

  if (rules.drop_short_stays) {
    run_rule(CleaningRule::short_stay, [&](const PortCall& call) {
      return turnaround_hours(call).value < rules.min_turnaround_hours;
    });
  }

  if (rules.drop_outliers && !alive.empty()) {
    Dataset survivors;
    for (const PortCall* call : alive) survivors.calls.push_back(*call);
    const auto stats = cargo_type_stats(survivors);
    run_rule(CleaningRule::outlier, [&](const PortCall& call) {
      const double t = turnaround_hours(call).value;
      for (const auto* op : {&call.unload, &call.load}) {
        if (!*op || !(*op)->cargo_type) continue;
        const auto it = stats.find(*(*op)->cargo_type);
        if (it != stats.end() && t > it->second.median + rules.outlier_sigma * it->second.stddev) {
          return true;
        }
      }
      return false;
    });
  }

  if (rules.drop_rare_combos && !alive.empty()) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const PortCall* call : alive) ++counts[combo_key(*call)];
    run_rule(CleaningRule::rare_combo, [&](const PortCall& call) {
      return counts.at(combo_key(call)) < rules.min_combo_count;
    });
  }

  if (alive.empty()) throw std::runtime_error("apply_filters: no calls survived cleaning");
  result.dataset.provenance = ds.provenance;
  for (const PortCall* call : alive) result.dataset.calls.push_back(*call);
  result.report.output_size = result.dataset.calls.size();
  return result;
}

}  // namespace portcast
