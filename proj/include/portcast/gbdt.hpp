#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "portcast/features.hpp"

namespace portcast {

struct TrainConfig {
  int n_trees = 500;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 5;
  double l2_leaf_reg = 3.0;      // lambda in the leaf value sum/(n + lambda)
  double ots_smoothing = 1.0;    // a in the ordered target statistic
  std::uint64_t permutation_seed = 0;

  void validate() const;  // throws on out-of-range values

  // Lexicographic over (n_trees, learning_rate, max_depth, min_samples_leaf,
  // l2_leaf_reg, ots_smoothing); used to break grid-search ties.
  bool operator<(const TrainConfig& other) const;
  bool operator==(const TrainConfig& other) const;
};

// ---------------------------------------------------------------------------
// Ordered target statistics for categorical columns.
//
// Training rows are encoded through a random permutation: row i sees only the
// rows placed before it, giving (sum_before + a * prior) / (count_before + a).
// Inference uses the statistic over the full training set; unseen labels fall
// back to the prior. One permutation is shared by all trees of a model.

struct CategoryStats {
  double target_sum = 0.0;
  std::int64_t count = 0;
};

struct OtsEncoder {
  double prior = 0.0;      // mean training target
  double smoothing = 1.0;  // a
  std::vector<std::uint32_t> permutation;               // processing order of training rows
  std::map<int, std::map<std::string, CategoryStats>> columns;  // schema index -> label stats

  double encode(int column, const std::string& label) const;
};

// Label rows get while the encoder has no statistics for them.
extern const char* const kMissingCategory;

// Column-level primitive: encodes `labels` against `targets` in permutation
// order and optionally reports the full-data statistics.
std::vector<double> ots_encode_column(const std::vector<std::string>& labels,
                                      const std::vector<double>& targets,
                                      const std::vector<std::uint32_t>& permutation, double prior,
                                      double smoothing,
                                      std::map<std::string, CategoryStats>* full_stats = nullptr);

// ---------------------------------------------------------------------------
// Regression trees

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  bool missing_left = false;  // where NaN rows go
  double gain = 0.0;          // SSE reduction of this split
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before the learning rate

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> encoded_row) const;
  int depth() const;
};

// Fits one tree to residuals. `columns` is column-major; NaN marks a missing
// value. Split search is exact: thresholds are midpoints of consecutive
// distinct values, gain is the SSE reduction, ties resolved toward the lowest
// feature index then the lowest threshold. Missing rows follow the child with
// more training rows (ties go left).
RegressionTree fit_tree(const std::vector<std::vector<double>>& columns,
                        const std::vector<double>& residuals, const TrainConfig& config,
                        int n_threads = 1);

// ---------------------------------------------------------------------------
// Boosted model

struct TrainLog {
  std::vector<double> rmse;  // training RMSE after each tree
};

struct GbdtModel {
  FeatureSchema schema;
  TrainConfig config;
  double base_score = 0.0;  // mean training target
  OtsEncoder encoder;
  std::vector<RegressionTree> trees;
  std::vector<double> split_gain;  // accumulated per schema column

  // Prediction is base + learning_rate * sum of tree outputs, floored at one
  // hour. The row must match the schema.
  TurnaroundHours predict(std::span<const FeatureValue> row) const;
  std::vector<double> predict_batch(const FeatureMatrix& m) const;

  // Percentage of total split gain per feature; sums to 100 when any split
  // exists, empty otherwise.
  std::map<std::string, double> feature_importance() const;

  std::vector<double> encode_row(std::span<const FeatureValue> row) const;
};

GbdtModel train_gbdt(const FeatureMatrix& m, const TrainConfig& config, int n_threads = 1,
                     TrainLog* log = nullptr);

}  // namespace portcast
