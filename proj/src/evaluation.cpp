#include "portcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "portcast/linreg.hpp"
#include "portcast/rng.hpp"

namespace portcast {

Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::runtime_error("compute_metrics: length mismatch");
  }
  if (truth.empty()) throw std::runtime_error("compute_metrics: empty input");
  Metrics m;
  m.n = truth.size();
  double abs_sum = 0, sq_sum = 0, pct_sum = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!(truth[i] > 0)) {
      throw std::runtime_error("compute_metrics: truth must be strictly positive");
    }
    const double d = truth[i] - predicted[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    pct_sum += std::abs(d) / truth[i];
  }
  const double n = static_cast<double>(m.n);
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  m.mape = 100.0 * pct_sum / n;
  return m;
}

// ---------------------------------------------------------------------------
// Folds

FoldPlan leave_one_year_out(const FeatureMatrix& m) {
  if (m.years.size() != m.n_rows()) throw std::runtime_error("fold plan: years not aligned");
  std::set<int> years(m.years.begin(), m.years.end());
  if (years.size() < 2) {
    throw std::runtime_error("fold plan: need at least two distinct years, got " +
                             std::to_string(years.size()));
  }
  FoldPlan plan;
  for (const int year : years) {
    Fold fold;
    fold.year = year;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
      (m.years[r] == year ? fold.test_rows : fold.train_rows).push_back(r);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Cross-validation

namespace {

class GbdtRegressor : public Regressor {
 public:
  explicit GbdtRegressor(GbdtModel model) : model_(std::move(model)) {}
  std::vector<double> predict_batch(const FeatureMatrix& m) const override {
    return model_.predict_batch(m);
  }

 private:
  GbdtModel model_;
};

class LinearRegressor : public Regressor {
 public:
  explicit LinearRegressor(LinearModel model) : model_(std::move(model)) {}
  std::vector<double> predict_batch(const FeatureMatrix& m) const override {
    return model_.predict_batch(m);
  }

 private:
  LinearModel model_;
};

// Cargo type of each row on one side, read from the categorical column. The
// "NONE" sentinel marks an absent operation and is excluded from the tables.
std::vector<std::optional<std::string>> side_types(const FeatureMatrix& m, const char* column) {
  const int idx = m.schema.index_of(column);
  std::vector<std::optional<std::string>> out(m.n_rows());
  if (idx < 0) return out;
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    const FeatureValue& v = m.rows[r][static_cast<std::size_t>(idx)];
    if (!is_missing(v) && std::holds_alternative<std::string>(v) && value_label(v) != "NONE") {
      out[r] = value_label(v);
    }
  }
  return out;
}

Metrics metrics_for_rows(const std::vector<std::size_t>& rows, const FeatureMatrix& m,
                         const std::vector<double>& pred) {
  std::vector<double> t, p;
  t.reserve(rows.size());
  p.reserve(rows.size());
  for (const std::size_t r : rows) {
    t.push_back(m.target[r]);
    p.push_back(pred[r]);
  }
  return compute_metrics(t, p);
}

SideReport build_side_report(char side, const FeatureMatrix& m,
                             const std::map<std::string, std::vector<double>>& oof,
                             const std::vector<std::string>& model_names, std::size_t top_k) {
  const std::vector<std::optional<std::string>> types =
      side_types(m, side == 'U' ? "cargo_type_u" : "cargo_type_l");

  std::map<std::string, std::vector<std::size_t>> rows_by_type;
  std::vector<std::size_t> all_rows;
  for (std::size_t r = 0; r < m.n_rows(); ++r) {
    if (!types[r]) continue;
    rows_by_type[*types[r]].push_back(r);
    all_rows.push_back(r);
  }

  SideReport report;
  report.side = side;
  if (all_rows.empty()) return report;

  // Top K types by frequency; ties by name.
  std::vector<std::pair<std::string, std::size_t>> freq;
  for (const auto& [type, rows] : rows_by_type) freq.emplace_back(type, rows.size());
  std::sort(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (freq.size() > top_k) freq.resize(top_k);

  std::vector<std::size_t> top_rows;
  for (const auto& [type, count] : freq) {
    TypeRow row;
    row.label = type;
    row.n = count;
    const auto& rows = rows_by_type.at(type);
    for (const std::string& name : model_names) {
      row.by_model[name] = metrics_for_rows(rows, m, oof.at(name));
    }
    report.types.push_back(std::move(row));
    top_rows.insert(top_rows.end(), rows.begin(), rows.end());
  }
  std::sort(report.types.begin(), report.types.end(), [&](const TypeRow& a, const TypeRow& b) {
    const double ma = a.by_model.at(model_names[0]).mae;
    const double mb = b.by_model.at(model_names[0]).mae;
    if (ma != mb) return ma < mb;
    return a.label < b.label;
  });

  report.top_k_total.label = "Top " + std::to_string(report.types.size()) + " cargo types";
  report.top_k_total.n = top_rows.size();
  report.all_total.label = "All cargo types";
  report.all_total.n = all_rows.size();
  for (const std::string& name : model_names) {
    report.top_k_total.by_model[name] = metrics_for_rows(top_rows, m, oof.at(name));
    report.all_total.by_model[name] = metrics_for_rows(all_rows, m, oof.at(name));
  }
  return report;
}

void collect_unseen_type_warnings(const FeatureMatrix& m, const FoldPlan& plan,
                                  std::vector<std::string>& warnings) {
  for (const char* column : {"cargo_type_u", "cargo_type_l"}) {
    const auto types = side_types(m, column);
    const char side = column[11] == 'u' ? 'U' : 'L';
    for (const Fold& fold : plan.folds) {
      std::set<std::string> train_types;
      for (const std::size_t r : fold.train_rows) {
        if (types[r]) train_types.insert(*types[r]);
      }
      std::set<std::string> flagged;
      for (const std::size_t r : fold.test_rows) {
        if (types[r] && !train_types.count(*types[r]) && flagged.insert(*types[r]).second) {
          warnings.push_back("cargo type '" + *types[r] + "' (" + side + ") in year " +
                             std::to_string(fold.year) + " never appears in its training years");
        }
      }
    }
  }
}

}  // namespace

CrossValidationResult cross_validate(const FeatureMatrix& m, const std::vector<NamedModel>& models,
                                     const CvOptions& options) {
  if (models.empty()) throw std::runtime_error("cross_validate: no models");
  CrossValidationResult result;
  result.plan = leave_one_year_out(m);

  for (const NamedModel& nm : models) {
    result.out_of_fold[nm.name].assign(m.n_rows(), std::numeric_limits<double>::quiet_NaN());
  }

  for (const Fold& fold : result.plan.folds) {
    const FeatureMatrix train = select_rows(m, fold.train_rows);
    const FeatureMatrix test = select_rows(m, fold.test_rows);
    const std::uint64_t fold_seed =
        derive_seed(options.master_seed, static_cast<std::uint64_t>(fold.year));
    for (const NamedModel& nm : models) {
      const std::unique_ptr<Regressor> model = nm.factory(train, fold_seed);
      const std::vector<double> pred = model->predict_batch(test);
      if (pred.size() != fold.test_rows.size()) {
        throw std::runtime_error("cross_validate: prediction length mismatch");
      }
      std::vector<double>& oof = result.out_of_fold.at(nm.name);
      for (std::size_t i = 0; i < fold.test_rows.size(); ++i) {
        oof[fold.test_rows[i]] = pred[i];
      }
    }
  }

  EvalReport& report = result.report;
  for (const NamedModel& nm : models) report.model_names.push_back(nm.name);
  for (const auto& [name, pred] : result.out_of_fold) {
    for (const double p : pred) {
      if (std::isnan(p)) throw std::runtime_error("cross_validate: uncovered row for " + name);
    }
    report.overall[name] = compute_metrics(m.target, pred);
  }
  report.unloading = build_side_report('U', m, result.out_of_fold, report.model_names, options.top_k);
  report.loading = build_side_report('L', m, result.out_of_fold, report.model_names, options.top_k);
  for (const Fold& fold : result.plan.folds) {
    FoldRow row;
    row.year = fold.year;
    row.n = fold.test_rows.size();
    for (const std::string& name : report.model_names) {
      row.by_model[name] = metrics_for_rows(fold.test_rows, m, result.out_of_fold.at(name));
    }
    report.folds.push_back(std::move(row));
  }
  collect_unseen_type_warnings(m, result.plan, report.warnings);
  return result;
}

ModelFactory gbdt_factory(TrainConfig config, int n_threads) {
  return [config, n_threads](const FeatureMatrix& train, std::uint64_t seed) {
    TrainConfig fold_config = config;
    fold_config.permutation_seed = seed;
    return std::make_unique<GbdtRegressor>(train_gbdt(train, fold_config, n_threads));
  };
}

ModelFactory linear_factory(double ridge_lambda) {
  return [ridge_lambda](const FeatureMatrix& train, std::uint64_t) {
    return std::make_unique<LinearRegressor>(fit_linear(train, ridge_lambda));
  };
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

using nlohmann::json;

json metrics_to_json(const Metrics& m) {
  return json{{"mae", m.mae}, {"rmse", m.rmse}, {"mape", m.mape}, {"n", m.n}};
}

json type_row_to_json(const TypeRow& row) {
  json by_model;
  for (const auto& [name, metrics] : row.by_model) by_model[name] = metrics_to_json(metrics);
  return json{{"label", row.label}, {"n", row.n}, {"models", by_model}};
}

json side_to_json(const SideReport& side) {
  json types = json::array();
  for (const TypeRow& row : side.types) types.push_back(type_row_to_json(row));
  return json{{"side", std::string(1, side.side)},
              {"types", types},
              {"top_k_total", type_row_to_json(side.top_k_total)},
              {"all_total", type_row_to_json(side.all_total)}};
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void markdown_side(std::ostringstream& out, const SideReport& side,
                   const std::vector<std::string>& names) {
  const char* caption = side.side == 'U' ? "Unloading" : "Loading";
  out << "### " << caption << " cargo types\n\n";
  out << "| Cargo type (" << side.side << ") | n |";
  for (const std::string& n : names) out << " MAE " << n << " [h] |";
  for (const std::string& n : names) out << " RMSE " << n << " [h] |";
  for (const std::string& n : names) out << " MAPE " << n << " [%] |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < names.size() * 3; ++i) out << "---|";
  out << "\n";
  auto print_row = [&](const TypeRow& row, const char* suffix) {
    out << "| " << row.label << suffix << " | " << row.n << " |";
    for (const std::string& n : names) out << " " << fmt2(row.by_model.at(n).mae) << " |";
    for (const std::string& n : names) out << " " << fmt2(row.by_model.at(n).rmse) << " |";
    for (const std::string& n : names) out << " " << fmt2(row.by_model.at(n).mape) << " |";
    out << "\n";
  };
  for (const TypeRow& row : side.types) print_row(row, "");
  const std::string tag = std::string(" (") + side.side + ")";
  if (side.top_k_total.n > 0) print_row(side.top_k_total, tag.c_str());
  if (side.all_total.n > 0) print_row(side.all_total, tag.c_str());
  out << "\n";
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json j;
  j["model_names"] = report.model_names;
  json overall;
  for (const auto& [name, metrics] : report.overall) overall[name] = metrics_to_json(metrics);
  j["overall"] = overall;
  j["unloading"] = side_to_json(report.unloading);
  j["loading"] = side_to_json(report.loading);
  json folds = json::array();
  for (const FoldRow& row : report.folds) {
    json by_model;
    for (const auto& [name, metrics] : row.by_model) by_model[name] = metrics_to_json(metrics);
    folds.push_back(json{{"year", row.year}, {"n", row.n}, {"models", by_model}});
  }
  j["folds"] = folds;
  j["warnings"] = report.warnings;
  return j.dump(2);
}

std::string report_to_markdown(const EvalReport& report) {
  std::ostringstream out;
  out << "## Turnaround prediction, leave-one-year-out\n\n";
  out << "| Model | MAE [h] | RMSE [h] | MAPE [%] | n |\n|---|---|---|---|---|\n";
  for (const std::string& name : report.model_names) {
    const Metrics& m = report.overall.at(name);
    out << "| " << name << " | " << fmt2(m.mae) << " | " << fmt2(m.rmse) << " | " << fmt2(m.mape)
        << " | " << m.n << " |\n";
  }
  out << "\n";
  markdown_side(out, report.unloading, report.model_names);
  markdown_side(out, report.loading, report.model_names);
  out << "### Per-fold breakdown\n\n";
  out << "| Year | n |";
  for (const std::string& n : report.model_names) out << " MAE " << n << " [h] |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < report.model_names.size(); ++i) out << "---|";
  out << "\n";
  for (const FoldRow& row : report.folds) {
    out << "| " << row.year << " | " << row.n << " |";
    for (const std::string& n : report.model_names) {
      out << " " << fmt2(row.by_model.at(n).mae) << " |";
    }
    out << "\n";
  }
  if (!report.warnings.empty()) {
    out << "\n### Warnings\n\n";
    for (const std::string& w : report.warnings) out << "- " << w << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Grid search

GridAxes GridAxes::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("grid axes: invalid JSON: ") + e.what());
  }
  GridAxes axes;
  axes.n_trees = j.value("n_trees", axes.n_trees);
  axes.learning_rate = j.value("learning_rate", axes.learning_rate);
  axes.max_depth = j.value("max_depth", axes.max_depth);
  axes.min_samples_leaf = j.value("min_samples_leaf", axes.min_samples_leaf);
  axes.l2_leaf_reg = j.value("l2_leaf_reg", axes.l2_leaf_reg);
  axes.ots_smoothing = j.value("ots_smoothing", axes.ots_smoothing);
  return axes;
}

GridAxes GridAxes::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::vector<TrainConfig> GridAxes::enumerate(const TrainConfig& defaults) const {
  const std::vector<int> trees = n_trees.empty() ? std::vector<int>{defaults.n_trees} : n_trees;
  const std::vector<double> lr =
      learning_rate.empty() ? std::vector<double>{defaults.learning_rate} : learning_rate;
  const std::vector<int> depth =
      max_depth.empty() ? std::vector<int>{defaults.max_depth} : max_depth;
  const std::vector<int> min_leaf =
      min_samples_leaf.empty() ? std::vector<int>{defaults.min_samples_leaf} : min_samples_leaf;
  const std::vector<double> l2 =
      l2_leaf_reg.empty() ? std::vector<double>{defaults.l2_leaf_reg} : l2_leaf_reg;
  const std::vector<double> smoothing =
      ots_smoothing.empty() ? std::vector<double>{defaults.ots_smoothing} : ots_smoothing;

  std::vector<TrainConfig> configs;
  for (const int t : trees) {
    for (const double r : lr) {
      for (const int d : depth) {
        for (const int ml : min_leaf) {
          for (const double reg : l2) {
            for (const double a : smoothing) {
              TrainConfig c = defaults;
              c.n_trees = t;
              c.learning_rate = r;
              c.max_depth = d;
              c.min_samples_leaf = ml;
              c.l2_leaf_reg = reg;
              c.ots_smoothing = a;
              c.validate();
              configs.push_back(c);
            }
          }
        }
      }
    }
  }
  return configs;
}

GridSearchResult grid_search(const FeatureMatrix& m, const GridAxes& axes,
                             const TrainConfig& defaults, const CvOptions& options,
                             int n_threads) {
  const std::vector<TrainConfig> configs = axes.enumerate(defaults);
  if (configs.empty()) throw std::runtime_error("grid_search: empty grid");

  GridSearchResult result;
  for (const TrainConfig& config : configs) {
    const std::vector<NamedModel> models{{"gbdt", gbdt_factory(config, n_threads)}};
    const CrossValidationResult cv = cross_validate(m, models, options);
    result.leaderboard.push_back(GridEntry{config, cv.report.overall.at("gbdt")});
  }
  std::sort(result.leaderboard.begin(), result.leaderboard.end(),
            [](const GridEntry& a, const GridEntry& b) {
              if (a.metrics.mae != b.metrics.mae) return a.metrics.mae < b.metrics.mae;
              if (a.metrics.rmse != b.metrics.rmse) return a.metrics.rmse < b.metrics.rmse;
              return a.config < b.config;
            });
  result.best = result.leaderboard.front();
  return result;
}

// ---------------------------------------------------------------------------
// Paired comparison with port declarations

namespace {

PairedRow paired_row(const std::string& label, const std::vector<std::size_t>& rows,
                     std::span<const double> truth, std::span<const double> model_pred,
                     std::span<const double> port_pred) {
  std::vector<double> t, mp, pp;
  for (const std::size_t r : rows) {
    t.push_back(truth[r]);
    mp.push_back(model_pred[r]);
    pp.push_back(port_pred[r]);
  }
  PairedRow row;
  row.label = label;
  row.n = rows.size();
  row.model = compute_metrics(t, mp);
  row.port = compute_metrics(t, pp);
  return row;
}

PairedSideReport paired_side(char side, std::span<const double> truth,
                             std::span<const double> model_pred, std::span<const double> port_pred,
                             std::span<const std::optional<std::string>> types,
                             std::size_t min_count) {
  PairedSideReport report;
  report.side = side;
  std::map<std::string, std::vector<std::size_t>> rows_by_type;
  std::vector<std::size_t> all_rows;
  for (std::size_t r = 0; r < types.size(); ++r) {
    if (!types[r]) continue;
    rows_by_type[*types[r]].push_back(r);
    all_rows.push_back(r);
  }
  for (const auto& [type, rows] : rows_by_type) {
    if (rows.size() < min_count) continue;
    report.types.push_back(paired_row(type, rows, truth, model_pred, port_pred));
  }
  std::sort(report.types.begin(), report.types.end(), [](const PairedRow& a, const PairedRow& b) {
    if (a.model.mae != b.model.mae) return a.model.mae < b.model.mae;
    return a.label < b.label;
  });
  if (!all_rows.empty()) {
    report.combined = paired_row("Combined", all_rows, truth, model_pred, port_pred);
  }
  return report;
}

}  // namespace

PairedReport compare_with_port(std::span<const double> truth, std::span<const double> model_pred,
                               std::span<const double> port_pred,
                               std::span<const std::optional<std::string>> unload_types,
                               std::span<const std::optional<std::string>> load_types,
                               std::size_t min_count) {
  const std::size_t n = truth.size();
  if (model_pred.size() != n || port_pred.size() != n || unload_types.size() != n ||
      load_types.size() != n) {
    throw std::runtime_error("compare_with_port: length mismatch");
  }
  if (n == 0) throw std::runtime_error("compare_with_port: empty input");
  PairedReport report;
  report.n_calls = n;
  report.unloading = paired_side('U', truth, model_pred, port_pred, unload_types, min_count);
  report.loading = paired_side('L', truth, model_pred, port_pred, load_types, min_count);
  return report;
}

std::string paired_report_to_json(const PairedReport& report) {
  auto row_json = [](const PairedRow& row) {
    return json{{"label", row.label},
                {"n", row.n},
                {"model", metrics_to_json(row.model)},
                {"port", metrics_to_json(row.port)}};
  };
  auto side_json = [&](const PairedSideReport& side) {
    json types = json::array();
    for (const PairedRow& row : side.types) types.push_back(row_json(row));
    return json{{"side", std::string(1, side.side)},
                {"types", types},
                {"combined", row_json(side.combined)}};
  };
  return json{{"n_calls", report.n_calls},
              {"unloading", side_json(report.unloading)},
              {"loading", side_json(report.loading)}}
      .dump(2);
}

std::string paired_report_to_markdown(const PairedReport& report) {
  std::ostringstream out;
  out << "## Model vs port declarations\n\n";
  for (const PairedSideReport* side : {&report.unloading, &report.loading}) {
    out << "### " << (side->side == 'U' ? "Unloading" : "Loading") << "\n\n";
    out << "| Cargo type (" << side->side
        << ") | n | MAE model [h] | MAE port [h] | MAPE model [%] | MAPE port [%] |\n";
    out << "|---|---|---|---|---|---|\n";
    auto print = [&](const PairedRow& row) {
      out << "| " << row.label << " | " << row.n << " | " << fmt2(row.model.mae) << " | "
          << fmt2(row.port.mae) << " | " << fmt2(row.model.mape) << " | " << fmt2(row.port.mape)
          << " |\n";
    };
    for (const PairedRow& row : side->types) print(row);
    if (side->combined.n > 0) print(side->combined);
    out << "\n";
  }
  return out.str();
}

}  // namespace portcast
