#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "portcast/features.hpp"
#include "portcast/gbdt.hpp"

namespace portcast {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent; requires strictly positive truth
  std::size_t n = 0;
};

Metrics compute_metrics(std::span<const double> truth, std::span<const double> predicted);

// ---------------------------------------------------------------------------
// Leave-one-year-out cross-validation

struct Fold {
  int year = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

struct FoldPlan {
  std::vector<Fold> folds;  // ascending by year
};

// One fold per distinct year in the matrix; throws with fewer than two years.
FoldPlan leave_one_year_out(const FeatureMatrix& m);

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::vector<double> predict_batch(const FeatureMatrix& m) const = 0;
};

// Builds a fitted model from a training matrix. The seed is re-drawn per fold
// from the master seed; factories that need no randomness may ignore it.
using ModelFactory =
    std::function<std::unique_ptr<Regressor>(const FeatureMatrix& train, std::uint64_t seed)>;

struct NamedModel {
  std::string name;
  ModelFactory factory;
};

struct CvOptions {
  std::uint64_t master_seed = 0;
  std::size_t top_k = 10;  // most frequent cargo types listed per side
};

struct TypeRow {
  std::string label;  // cargo type or an aggregate caption
  std::size_t n = 0;
  std::map<std::string, Metrics> by_model;
};

struct SideReport {
  char side = 'U';
  std::vector<TypeRow> types;  // top-K by frequency, ordered by first model's MAE
  TypeRow top_k_total;         // pooled over the listed types
  TypeRow all_total;           // pooled over every call with this side present
};

struct FoldRow {
  int year = 0;
  std::size_t n = 0;
  std::map<std::string, Metrics> by_model;
};

struct EvalReport {
  std::vector<std::string> model_names;
  std::map<std::string, Metrics> overall;  // pooled out-of-fold over all rows
  SideReport unloading;
  SideReport loading;
  std::vector<FoldRow> folds;
  std::vector<std::string> warnings;  // e.g. cargo types unseen in a training fold
};

struct CrossValidationResult {
  FoldPlan plan;
  std::map<std::string, std::vector<double>> out_of_fold;  // per model, aligned with rows
  EvalReport report;
};

// Trains every model on each fold's training years and predicts the held-out
// year; each row is predicted exactly once. Cargo types for the per-type
// tables come from the cargo_type_u / cargo_type_l columns.
CrossValidationResult cross_validate(const FeatureMatrix& m, const std::vector<NamedModel>& models,
                                     const CvOptions& options);

// Serialized JSON text (stable key order, no timestamps).
std::string report_to_json(const EvalReport& report);
std::string report_to_markdown(const EvalReport& report);

// Ready-made factories for the two reference models.
ModelFactory gbdt_factory(TrainConfig config, int n_threads = 1);
ModelFactory linear_factory(double ridge_lambda = 1e-6);

// ---------------------------------------------------------------------------
// Grid search

struct GridAxes {
  std::vector<int> n_trees;
  std::vector<double> learning_rate;
  std::vector<int> max_depth;
  std::vector<int> min_samples_leaf;
  std::vector<double> l2_leaf_reg;
  std::vector<double> ots_smoothing;

  // Missing axes fall back to the given default's value.
  static GridAxes from_json_text(const std::string& text);
  static GridAxes load(const std::string& path);
  std::vector<TrainConfig> enumerate(const TrainConfig& defaults) const;
};

struct GridEntry {
  TrainConfig config;
  Metrics metrics;  // pooled out-of-fold
};

struct GridSearchResult {
  GridEntry best;
  std::vector<GridEntry> leaderboard;  // sorted by (MAE, RMSE, config)
};

GridSearchResult grid_search(const FeatureMatrix& m, const GridAxes& axes,
                             const TrainConfig& defaults, const CvOptions& options,
                             int n_threads = 1);

// ---------------------------------------------------------------------------
// Comparison against the port's own declarations

struct PairedRow {
  std::string label;
  std::size_t n = 0;
  Metrics model;
  Metrics port;
};

struct PairedSideReport {
  char side = 'U';
  std::vector<PairedRow> types;  // types with at least min_count calls
  PairedRow combined;            // pooled over all calls with this side present
};

struct PairedReport {
  PairedSideReport unloading;
  PairedSideReport loading;
  std::size_t n_calls = 0;
};

// Model predictions and port declarations over the same calls. Spans must
// have equal length; cargo types may be absent for a side.
PairedReport compare_with_port(std::span<const double> truth, std::span<const double> model_pred,
                               std::span<const double> port_pred,
                               std::span<const std::optional<std::string>> unload_types,
                               std::span<const std::optional<std::string>> load_types,
                               std::size_t min_count = 3);

std::string paired_report_to_json(const PairedReport& report);
std::string paired_report_to_markdown(const PairedReport& report);

}  // namespace portcast
