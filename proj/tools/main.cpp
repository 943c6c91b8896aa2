#include <algorithm>
#include <cstdio>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "portcast/ais.hpp"
#include "portcast/cleaning.hpp"
#include "portcast/csv.hpp"
#include "portcast/evaluation.hpp"
#include "portcast/features.hpp"
#include "portcast/gbdt.hpp"
#include "portcast/linreg.hpp"
#include "portcast/model_io.hpp"
#include "portcast/portcall.hpp"
#include "portcast/service.hpp"
#include "portcast/synthesize.hpp"

using nlohmann::json;
using namespace portcast;

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared feature options

struct FeatureCli {
  std::string tz_name = "Europe/Paris";
  std::string holidays_path;
  std::string tides_path;
  std::string tide_sensor;
  std::string weather_path;
  bool congestion = false;
  int last_n = 20;
  int window_days = 30;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tz", tz_name, "Timezone for local-time features")
        ->capture_default_str();
    cmd->add_option("--holidays", holidays_path, "Holiday calendar, one ISO date per line");
    cmd->add_option("--tides", tides_path, "Tide gauge CSV; enables the tidal features")
        ->needs(cmd->add_option("--tide-sensor", tide_sensor, "Sensor id within the tide CSV"));
    cmd->add_option("--weather", weather_path, "Hourly weather CSV; enables the weather features");
    cmd->add_flag("--congestion", congestion, "Enable the port congestion features");
    cmd->add_option("--congestion-last-n", last_n, "Trailing same-type calls to average")
        ->capture_default_str();
    cmd->add_option("--congestion-window-days", window_days, "Trailing window in days")
        ->capture_default_str();
  }
};

struct FeatureInputs {
  FeatureOptions options;
  HolidayCalendar holidays;
  std::optional<TideSeries> tides;
  std::optional<WeatherSeries> weather;
};

FeatureInputs load_feature_inputs(const FeatureCli& cli) {
  FeatureInputs in;
  in.options.tz = Timezone::from_name(cli.tz_name);
  in.options.congestion_last_n = cli.last_n;
  in.options.congestion_window_days = cli.window_days;
  in.options.toggles.congestion = cli.congestion;
  if (!cli.holidays_path.empty()) in.holidays = HolidayCalendar::load(cli.holidays_path);
  if (!cli.tides_path.empty()) {
    if (cli.tide_sensor.empty()) throw std::runtime_error("--tides requires --tide-sensor");
    in.tides = TideSeries::load(cli.tides_path);
    in.options.toggles.tidal = true;
    in.options.tide_sensor = cli.tide_sensor;
  }
  if (!cli.weather_path.empty()) {
    in.weather = WeatherSeries::load(cli.weather_path);
    in.options.toggles.weather = true;
  }
  return in;
}

FeatureMatrix featurize(const Dataset& ds, const FeatureInputs& in) {
  return assemble_matrix(ds, in.holidays, in.options, in.tides ? &*in.tides : nullptr,
                         in.weather ? &*in.weather : nullptr);
}

Dataset load_calls_strict(const std::string& path) {
  return parse_dataset_file(path, ParseMode::strict).dataset;
}

// ---------------------------------------------------------------------------
// Verbs

struct SynthesizeArgs {
  std::string output;
  std::string config_path;
  std::uint64_t seed = 42;
};

void run_synthesize(const SynthesizeArgs& a) {
  GeneratorConfig config =
      a.config_path.empty() ? default_generator_config() : load_generator_config(a.config_path);
  Dataset ds = synthesize_dataset(config, a.seed);
  save_dataset_file(ds, a.output);
  std::cout << "wrote " << ds.calls.size() << " calls to " << a.output << '\n';
}

struct IngestArgs {
  std::string input;
  std::string output;
  std::string errors_path;
  bool lenient = false;
};

void run_ingest(const IngestArgs& a) {
  ParseResult result =
      parse_dataset_file(a.input, a.lenient ? ParseMode::lenient : ParseMode::strict);
  save_dataset_file(result.dataset, a.output);
  if (!a.errors_path.empty()) {
    json errs = json::array();
    for (const RowError& e : result.errors) {
      errs.push_back({{"line", e.line}, {"call_id", e.call_id}, {"message", e.message}});
    }
    write_text_file(a.errors_path, errs.dump(2));
  }
  std::cout << "parsed " << result.dataset.calls.size() << " calls";
  if (!result.errors.empty()) std::cout << ", skipped " << result.errors.size() << " rows";
  std::cout << '\n';
}

struct CleanArgs {
  std::string input;
  std::string output;
  std::string rules_path;
  std::string report_path;
};

void run_clean(const CleanArgs& a) {
  Dataset ds = load_calls_strict(a.input);
  CleaningRules rules = a.rules_path.empty() ? CleaningRules{} : load_cleaning_rules(a.rules_path);
  CleaningResult result = apply_filters(ds, rules);
  save_dataset_file(result.dataset, a.output);
  if (!a.report_path.empty()) {
    json by_rule;
    for (int r = 1; r <= 4; ++r) {
      by_rule[cleaning_rule_name(static_cast<CleaningRule>(r))] =
          result.report.removed_by_rule[r - 1];
    }
    json removals = json::array();
    for (const Removal& rm : result.report.removals) {
      removals.push_back({{"call_id", rm.call_id}, {"rule", cleaning_rule_name(rm.rule)}});
    }
    json report = {{"input_size", result.report.input_size},
                   {"output_size", result.report.output_size},
                   {"removed_by_rule", by_rule},
                   {"removals", removals}};
    write_text_file(a.report_path, report.dump(2));
  }
  std::cout << result.report.input_size << " calls in, " << result.report.output_size
            << " out\n";
  for (int r = 1; r <= 4; ++r) {
    std::cout << "  " << cleaning_rule_name(static_cast<CleaningRule>(r)) << ": removed "
              << result.report.removed_by_rule[r - 1] << '\n';
  }
}

struct FeaturesArgs {
  std::string input;
  std::string output;
  FeatureCli features;
};

void run_features(const FeaturesArgs& a) {
  Dataset ds = load_calls_strict(a.input);
  FeatureInputs in = load_feature_inputs(a.features);
  FeatureMatrix m = featurize(ds, in);
  save_matrix_csv(m, a.output);
  std::cout << "wrote " << m.n_rows() << " rows x " << m.n_cols() << " features to " << a.output
            << '\n';
}

struct TrainArgs {
  std::string input;
  std::string model_path;
  std::string linear_path;
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool importance = false;
  FeatureCli features;
};

void run_train(const TrainArgs& a) {
  Dataset ds = load_calls_strict(a.input);
  FeatureInputs in = load_feature_inputs(a.features);
  FeatureMatrix m = featurize(ds, in);

  TrainConfig config = a.config_path.empty() ? TrainConfig{} : load_train_config(a.config_path);
  if (a.seed_given) config.permutation_seed = a.seed;

  TrainLog log;
  GbdtModel model = train_gbdt(m, config, a.threads, &log);
  save_gbdt_model(model, a.model_path);
  std::cout << "trained " << model.trees.size() << " trees on " << m.n_rows()
            << " calls, final training RMSE " << fmt4(log.rmse.back()) << '\n';
  std::cout << "model written to " << a.model_path << '\n';

  if (!a.linear_path.empty()) {
    LinearModel linear = fit_linear(m);
    save_linear_model(linear, a.linear_path);
    std::cout << "linear baseline written to " << a.linear_path << '\n';
  }
  if (a.importance) {
    for (const auto& [name, pct] : model.feature_importance()) {
      std::cout << "  " << name << ": " << fmt2(pct) << "%\n";
    }
  }
}

struct EvaluateArgs {
  std::string input;
  std::vector<std::string> reports;
  std::string folds = "year";
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  std::size_t top_k = 10;
  double ridge_lambda = 1e-6;
  FeatureCli features;
};

void run_evaluate(const EvaluateArgs& a) {
  if (a.folds != "year") {
    throw std::runtime_error("unsupported fold strategy '" + a.folds + "', only 'year'");
  }
  Dataset ds = load_calls_strict(a.input);
  FeatureInputs in = load_feature_inputs(a.features);
  FeatureMatrix m = featurize(ds, in);

  TrainConfig config = a.config_path.empty() ? TrainConfig{} : load_train_config(a.config_path);
  std::vector<NamedModel> models;
  models.push_back({"gbdt", gbdt_factory(config, a.threads)});
  models.push_back({"linear", linear_factory(a.ridge_lambda)});

  CvOptions options;
  options.master_seed = a.seed;
  options.top_k = a.top_k;
  CrossValidationResult result = cross_validate(m, models, options);

  for (const std::string& path : a.reports) {
    if (path.size() >= 3 && path.compare(path.size() - 3, 3, ".md") == 0) {
      write_text_file(path, report_to_markdown(result.report));
    } else {
      write_text_file(path, report_to_json(result.report));
    }
  }

  std::cout << result.plan.folds.size() << "-fold cross-validation over " << m.n_rows()
            << " calls\n";
  for (const std::string& name : result.report.model_names) {
    const Metrics& met = result.report.overall.at(name);
    std::cout << "  " << name << ": MAE " << fmt2(met.mae) << "h, RMSE " << fmt2(met.rmse)
              << "h, MAPE " << fmt2(met.mape) << "%\n";
  }
  for (const std::string& w : result.report.warnings) std::cout << "  warning: " << w << '\n';
}

struct GridSearchArgs {
  std::string input;
  std::string grid_path;
  std::string output;
  std::string config_path;
  std::uint64_t seed = 0;
  int threads = 1;
  FeatureCli features;
};

void run_grid_search(const GridSearchArgs& a) {
  Dataset ds = load_calls_strict(a.input);
  FeatureInputs in = load_feature_inputs(a.features);
  FeatureMatrix m = featurize(ds, in);

  GridAxes axes = GridAxes::load(a.grid_path);
  TrainConfig defaults =
      a.config_path.empty() ? TrainConfig{} : load_train_config(a.config_path);
  CvOptions options;
  options.master_seed = a.seed;
  GridSearchResult result = grid_search(m, axes, defaults, options, a.threads);

  if (!a.output.empty()) {
    json board = json::array();
    for (const GridEntry& e : result.leaderboard) {
      board.push_back({{"n_trees", e.config.n_trees},
                       {"learning_rate", e.config.learning_rate},
                       {"max_depth", e.config.max_depth},
                       {"min_samples_leaf", e.config.min_samples_leaf},
                       {"l2_leaf_reg", e.config.l2_leaf_reg},
                       {"ots_smoothing", e.config.ots_smoothing},
                       {"mae", e.metrics.mae},
                       {"rmse", e.metrics.rmse},
                       {"mape", e.metrics.mape}});
    }
    write_text_file(a.output, board.dump(2));
  }

  const TrainConfig& b = result.best.config;
  std::cout << "evaluated " << result.leaderboard.size() << " configurations\n";
  std::cout << "best: n_trees=" << b.n_trees << " learning_rate=" << b.learning_rate
            << " max_depth=" << b.max_depth << " min_samples_leaf=" << b.min_samples_leaf
            << " l2_leaf_reg=" << b.l2_leaf_reg << " ots_smoothing=" << b.ots_smoothing << '\n';
  std::cout << "  MAE " << fmt2(result.best.metrics.mae) << "h, RMSE "
            << fmt2(result.best.metrics.rmse) << "h\n";
}

struct AisVisitsArgs {
  std::string ais_path;
  std::string geofence_path;
  std::string output;
  double min_dwell = 30.0;
  double max_gap = 120.0;
};

void run_ais_visits(const AisVisitsArgs& a) {
  std::vector<PositionReport> reports = load_ais_csv(a.ais_path);
  Geofence fence = Geofence::load(a.geofence_path);
  VisitParams params;
  params.min_dwell_minutes = a.min_dwell;
  params.max_gap_minutes = a.max_gap;

  std::map<std::string, std::vector<PositionReport>> by_vessel;
  for (PositionReport& p : reports) by_vessel[p.vessel_id].push_back(std::move(p));

  std::vector<PortVisit> all;
  for (auto& [vessel, track] : by_vessel) {
    std::stable_sort(track.begin(), track.end(),
                     [](const PositionReport& x, const PositionReport& y) { return x.t < y.t; });
    std::vector<PortVisit> visits = detect_visits(track, fence, params);
    all.insert(all.end(), visits.begin(), visits.end());
  }
  save_visits_csv(all, a.output);
  std::cout << all.size() << " visits across " << by_vessel.size() << " vessels, written to "
            << a.output << '\n';
}

struct ReconcileArgs {
  std::string input;
  std::string visits_path;
  std::string output;
  std::string report_path;
  double tolerance_hours = 12.0;
};

void run_reconcile(const ReconcileArgs& a) {
  Dataset ds = load_calls_strict(a.input);
  std::vector<PortVisit> visits = load_visits_csv(a.visits_path);
  ReconcileParams params;
  params.tolerance_hours = a.tolerance_hours;
  ReconcileResult result = reconcile(ds, visits, params);
  save_dataset_file(result.dataset, a.output);
  if (!a.report_path.empty()) {
    write_text_file(a.report_path, reconcile_report_to_json(result.report));
  }
  std::cout << "filled " << result.report.filled.size() << " fields, "
            << result.report.issues.size() << " unresolved; missing calls "
            << result.report.calls_missing_before << " -> " << result.report.calls_missing_after
            << '\n';
}

struct PredictArgs {
  std::string model_path;
  std::string input;
  std::string output;
  std::string calendar_path;
  std::string tz_name = "Europe/Paris";
};

// Batch prediction over a port-call CSV. Departures are ignored; rows are
// featurized exactly as the service does it.
void run_predict(const PredictArgs& a) {
  const GbdtModel model = load_gbdt_model(a.model_path);
  HolidayCalendar holidays;
  if (!a.calendar_path.empty()) holidays = HolidayCalendar::load(a.calendar_path);
  const Timezone tz = Timezone::from_name(a.tz_name);
  const Dataset ds = parse_dataset_file(a.input, ParseMode::strict).dataset;

  std::ofstream out(a.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + a.output);
  out << "call_id,vessel_id,arrival,predicted_turnaround_hours,etd\n";
  for (const PortCall& call : ds.calls) {
    if (!call.arrival) {
      throw std::runtime_error("call " + call.call_id + ": prediction needs an arrival time");
    }
    const std::vector<FeatureValue> row = base_features(call, holidays, tz);
    const double hours = model.predict(row).value;
    const Timestamp etd = *call.arrival + std::llround(hours * 3600.0);
    out << csv_join({call.call_id, call.vessel_id, format_iso8601_utc(*call.arrival),
                     format_double(hours), format_iso8601_utc(etd)})
        << '\n';
  }
  std::cout << "predicted " << ds.calls.size() << " calls into " << a.output << '\n';
}

PredictionService* g_serving = nullptr;

void handle_signal(int) {
  if (g_serving != nullptr) g_serving->stop();
}

struct ServeArgs {
  std::string model_path;
  std::string calendar_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string tz_name = "Europe/Paris";
};

void run_serve(const ServeArgs& a) {
  PredictionService service(Timezone::from_name(a.tz_name));
  if (!a.model_path.empty()) {
    service.load_model(a.model_path, a.calendar_path);
    std::cout << "model " << service.model_version() << " loaded\n";
  } else {
    std::cout << "starting without a model; predictions return 503 until one is loaded\n";
  }
  g_serving = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on " << a.host << ':' << a.port << '\n';
  service.serve_http(a.host, a.port);
  g_serving = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vessel turnaround prediction toolkit"};
  app.require_subcommand(1);

  SynthesizeArgs syn;
  CLI::App* c = app.add_subcommand("synthesize", "Generate a synthetic port-call dataset");
  c->add_option("--output", syn.output, "Destination CSV")->required();
  c->add_option("--config", syn.config_path, "Generator configuration JSON");
  c->add_option("--seed", syn.seed, "Generator seed")->capture_default_str();
  c->callback([&syn] { run_synthesize(syn); });

  IngestArgs ing;
  c = app.add_subcommand("ingest", "Parse and normalize a port-call CSV");
  c->add_option("--input", ing.input, "Source CSV")->required();
  c->add_option("--output", ing.output, "Normalized CSV")->required();
  c->add_flag("--lenient", ing.lenient, "Skip bad rows instead of aborting");
  c->add_option("--errors", ing.errors_path, "Write skipped-row report JSON here");
  c->callback([&ing] { run_ingest(ing); });

  CleanArgs cln;
  c = app.add_subcommand("clean", "Filter a port-call dataset");
  c->add_option("--input", cln.input, "Source CSV")->required();
  c->add_option("--output", cln.output, "Filtered CSV")->required();
  c->add_option("--rules", cln.rules_path, "Cleaning rules JSON");
  c->add_option("--report", cln.report_path, "Write removal report JSON here");
  c->callback([&cln] { run_clean(cln); });

  FeaturesArgs fea;
  c = app.add_subcommand("features", "Export the feature matrix as CSV");
  c->add_option("--input", fea.input, "Cleaned port-call CSV")->required();
  c->add_option("--output", fea.output, "Feature matrix CSV")->required();
  fea.features.attach(c);
  c->callback([&fea] { run_features(fea); });

  TrainArgs trn;
  c = app.add_subcommand("train", "Train a boosted-tree model");
  c->add_option("--input", trn.input, "Cleaned port-call CSV")->required();
  c->add_option("--model", trn.model_path, "Output model file")->required();
  c->add_option("--linear", trn.linear_path, "Also fit and save the linear baseline here");
  c->add_option("--config", trn.config_path, "Training configuration JSON");
  CLI::Option* seed_opt = c->add_option("--seed", trn.seed, "Permutation seed override");
  c->add_option("--threads", trn.threads, "Worker threads for split search")
      ->capture_default_str();
  c->add_flag("--importance", trn.importance, "Print feature importance after training");
  trn.features.attach(c);
  c->callback([&trn, seed_opt] {
    trn.seed_given = seed_opt->count() > 0;
    run_train(trn);
  });

  EvaluateArgs evl;
  c = app.add_subcommand("evaluate", "Cross-validate by leaving one year out");
  c->add_option("--input", evl.input, "Cleaned port-call CSV")->required();
  c->add_option("--report", evl.reports, "Report path; .md gets tables, anything else JSON");
  c->add_option("--folds", evl.folds, "Fold strategy")->capture_default_str();
  c->add_option("--config", evl.config_path, "Training configuration JSON");
  c->add_option("--seed", evl.seed, "Master seed for per-fold seeds")->capture_default_str();
  c->add_option("--threads", evl.threads, "Worker threads for split search")
      ->capture_default_str();
  c->add_option("--top-k", evl.top_k, "Cargo types listed per side")->capture_default_str();
  c->add_option("--ridge-lambda", evl.ridge_lambda, "Baseline ridge penalty")
      ->capture_default_str();
  evl.features.attach(c);
  c->callback([&evl] { run_evaluate(evl); });

  GridSearchArgs grd;
  c = app.add_subcommand("grid-search", "Rank training configurations by cross-validation");
  c->add_option("--input", grd.input, "Cleaned port-call CSV")->required();
  c->add_option("--grid", grd.grid_path, "Grid axes JSON")->required();
  c->add_option("--output", grd.output, "Write the leaderboard JSON here");
  c->add_option("--config", grd.config_path, "Defaults for axes the grid leaves out");
  c->add_option("--seed", grd.seed, "Master seed for per-fold seeds")->capture_default_str();
  c->add_option("--threads", grd.threads, "Worker threads for split search")
      ->capture_default_str();
  grd.features.attach(c);
  c->callback([&grd] { run_grid_search(grd); });

  AisVisitsArgs ais;
  c = app.add_subcommand("ais-visits", "Detect port visits from AIS position reports");
  c->add_option("--track", ais.ais_path, "Position report CSV")->required();
  c->add_option("--fence", ais.geofence_path, "Port polygon JSON")->required();
  c->add_option("--out", ais.output, "Visits CSV")->required();
  c->add_option("--min-dwell", ais.min_dwell, "Minimum visit length in minutes")
      ->capture_default_str();
  c->add_option("--max-gap", ais.max_gap, "Silence that closes a visit, in minutes")
      ->capture_default_str();
  c->callback([&ais] { run_ais_visits(ais); });

  ReconcileArgs rec;
  c = app.add_subcommand("reconcile", "Fill missing call timestamps from detected visits");
  c->add_option("--input", rec.input, "Port-call CSV, possibly with gaps")->required();
  c->add_option("--visits", rec.visits_path, "Visits CSV from ais-visits")->required();
  c->add_option("--output", rec.output, "Filled CSV")->required();
  c->add_option("--report", rec.report_path, "Write fill report JSON here");
  c->add_option("--tolerance-hours", rec.tolerance_hours, "Match window around declared times")
      ->capture_default_str();
  c->callback([&rec] { run_reconcile(rec); });

  PredictArgs prd;
  c = app.add_subcommand("predict", "Predict turnaround and ETD for a batch of calls");
  c->add_option("--model", prd.model_path, "Model file")->required();
  c->add_option("--input", prd.input, "Port-call CSV; departures are ignored")->required();
  c->add_option("--output", prd.output, "Prediction CSV")->required();
  c->add_option("--calendar", prd.calendar_path, "Holiday calendar");
  c->add_option("--tz", prd.tz_name, "Timezone for local-time features")->capture_default_str();
  c->callback([&prd] { run_predict(prd); });

  ServeArgs srv;
  c = app.add_subcommand("serve", "Serve predictions over HTTP");
  c->add_option("--model", srv.model_path, "Model file loaded at startup");
  c->add_option("--calendar", srv.calendar_path, "Holiday calendar");
  c->add_option("--host", srv.host, "Bind address")->capture_default_str();
  c->add_option("--port", srv.port, "Bind port")->capture_default_str();
  c->add_option("--tz", srv.tz_name, "Timezone for local-time features")->capture_default_str();
  c->callback([&srv] { run_serve(srv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
