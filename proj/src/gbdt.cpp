#include "portcast/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "portcast/rng.hpp"

namespace portcast {

const char* const kMissingCategory = "__missing__";

void TrainConfig::validate() const {
  if (n_trees < 1) throw std::runtime_error("config: n_trees must be >= 1");
  if (!(learning_rate > 0.0) || learning_rate > 1.0) {
    throw std::runtime_error("config: learning_rate must be in (0, 1]");
  }
  if (max_depth < 1) throw std::runtime_error("config: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::runtime_error("config: min_samples_leaf must be >= 1");
  if (l2_leaf_reg < 0.0) throw std::runtime_error("config: l2_leaf_reg must be >= 0");
  if (!(ots_smoothing > 0.0)) throw std::runtime_error("config: ots_smoothing must be > 0");
}

bool TrainConfig::operator<(const TrainConfig& o) const {
  return std::tie(n_trees, learning_rate, max_depth, min_samples_leaf, l2_leaf_reg,
                  ots_smoothing) < std::tie(o.n_trees, o.learning_rate, o.max_depth,
                                            o.min_samples_leaf, o.l2_leaf_reg, o.ots_smoothing);
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return n_trees == o.n_trees && learning_rate == o.learning_rate && max_depth == o.max_depth &&
         min_samples_leaf == o.min_samples_leaf && l2_leaf_reg == o.l2_leaf_reg &&
         ots_smoothing == o.ots_smoothing && permutation_seed == o.permutation_seed;
}

// ---------------------------------------------------------------------------
// Ordered target statistics

double OtsEncoder::encode(int column, const std::string& label) const {
  const auto col = columns.find(column);
  if (col == columns.end()) throw std::runtime_error("encoder: column has no statistics");
  const auto it = col->second.find(label);
  if (it == col->second.end()) return prior;
  return (it->second.target_sum + smoothing * prior) /
         (static_cast<double>(it->second.count) + smoothing);
}

std::vector<double> ots_encode_column(const std::vector<std::string>& labels,
                                      const std::vector<double>& targets,
                                      const std::vector<std::uint32_t>& permutation, double prior,
                                      double smoothing,
                                      std::map<std::string, CategoryStats>* full_stats) {
  const std::size_t n = labels.size();
  if (n == 0) throw std::runtime_error("ots_encode_column: empty column");
  if (targets.size() != n || permutation.size() != n) {
    throw std::runtime_error("ots_encode_column: length mismatch");
  }
  std::vector<double> encoded(n, 0.0);
  std::map<std::string, CategoryStats> running;
  for (std::uint32_t pos = 0; pos < n; ++pos) {
    const std::uint32_t row = permutation[pos];
    CategoryStats& s = running[labels[row]];
    encoded[row] =
        (s.target_sum + smoothing * prior) / (static_cast<double>(s.count) + smoothing);
    s.target_sum += targets[row];
    s.count += 1;
  }
  if (full_stats) *full_stats = std::move(running);
  return encoded;
}

// ---------------------------------------------------------------------------
// Tree prediction

double RegressionTree::predict(std::span<const double> row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
    const double x = row[static_cast<std::size_t>(nd.feature)];
    if (std::isnan(x)) {
      i = nd.missing_left ? nd.left : nd.right;
    } else {
      i = x <= nd.threshold ? nd.left : nd.right;
    }
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::depth() const {
  std::vector<int> depths(nodes.size(), 0);
  int max = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    depths[static_cast<std::size_t>(nodes[i].left)] = depths[i] + 1;
    depths[static_cast<std::size_t>(nodes[i].right)] = depths[i] + 1;
    max = std::max(max, depths[i] + 1);
  }
  return max;
}

// ---------------------------------------------------------------------------
// Tree fitting
//
// Level-wise exact greedy search over presorted feature orders. Per level and
// feature the full row set is scanned twice: once to total each node's
// non-missing rows, once to walk the candidate thresholds. Work per tree is
// O(features * rows * depth) and independent of the thread count.

namespace {

struct SortedFeature {
  std::vector<std::uint32_t> order;    // non-missing rows, ascending by value then row
  std::vector<std::uint32_t> missing;  // rows with NaN
};

std::vector<SortedFeature> presort_features(const std::vector<std::vector<double>>& columns) {
  std::vector<SortedFeature> sorted(columns.size());
  for (std::size_t f = 0; f < columns.size(); ++f) {
    const std::vector<double>& col = columns[f];
    SortedFeature& sf = sorted[f];
    for (std::uint32_t r = 0; r < col.size(); ++r) {
      (std::isnan(col[r]) ? sf.missing : sf.order).push_back(r);
    }
    std::stable_sort(sf.order.begin(), sf.order.end(),
                     [&col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
  return sorted;
}

struct Agg {
  std::int64_t n = 0;
  double sum = 0.0;
  double ssq = 0.0;

  void add(double v) {
    n += 1;
    sum += v;
    ssq += v * v;
  }
  double sse() const { return n == 0 ? 0.0 : ssq - sum * sum / static_cast<double>(n); }
};

struct BestSplit {
  double gain = 0.0;
  double threshold = 0.0;
  bool missing_left = false;
  bool found = false;
};

// Candidate threshold strictly below the upper value so that `x <= threshold`
// reproduces the scanned prefix even when the midpoint rounds up.
double split_point(double lower, double upper) {
  const double mid = lower + (upper - lower) / 2.0;
  return mid < upper ? mid : lower;
}

void run_parallel(int n_threads, std::size_t n_items, const std::function<void(std::size_t)>& fn) {
  if (n_threads <= 1 || n_items <= 1) {
    for (std::size_t i = 0; i < n_items; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n_items);
  for (std::size_t w = 0; w < k; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < n_items; i += k) fn(i);
    });
  }
  for (auto& t : workers) t.join();
}

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::vector<double>>& columns,
             const std::vector<SortedFeature>& sorted, const std::vector<double>& residuals,
             const TrainConfig& config, int n_threads)
      : cols_(columns),
        sorted_(sorted),
        res_(residuals),
        config_(config),
        n_threads_(n_threads),
        n_rows_(residuals.size()) {}

  RegressionTree grow(std::vector<std::uint32_t>* row_leaf) {
    RegressionTree tree;
    tree.nodes.push_back(TreeNode{});
    node_of_.assign(n_rows_, 0);
    std::vector<std::pair<int, int>> active{{0, 0}};  // (node id, depth)

    while (!active.empty()) {
      const std::size_t n_active = active.size();
      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < n_active; ++s) slot_of[static_cast<std::size_t>(active[s].first)] = static_cast<int>(s);

      // Node totals over residuals.
      std::vector<Agg> all(n_active);
      for (std::size_t r = 0; r < n_rows_; ++r) {
        const int slot = slot_of[node_of_[r]];
        if (slot >= 0) all[static_cast<std::size_t>(slot)].add(res_[r]);
      }

      // Best candidate per (feature, node slot). The scan is skipped when no
      // active node can split (typically the final level).
      bool scan_needed = false;
      for (std::size_t s = 0; s < n_active; ++s) {
        if (active[s].second < config_.max_depth &&
            all[s].n >= 2 * static_cast<std::int64_t>(config_.min_samples_leaf)) {
          scan_needed = true;
          break;
        }
      }
      const std::size_t n_features = cols_.size();
      std::vector<std::vector<BestSplit>> best(n_features, std::vector<BestSplit>(n_active));
      if (scan_needed) {
        run_parallel(n_threads_, n_features, [&](std::size_t f) {
          scan_feature(f, active, slot_of, all, best[f]);
        });
      }

      // Reduce over features in index order; strict > keeps the lowest
      // feature index and the lowest threshold on ties.
      std::vector<BestSplit> chosen(n_active);
      std::vector<int> chosen_feature(n_active, -1);
      for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t s = 0; s < n_active; ++s) {
          if (best[f][s].found && (!chosen[s].found || best[f][s].gain > chosen[s].gain)) {
            chosen[s] = best[f][s];
            chosen_feature[s] = static_cast<int>(f);
          }
        }
      }

      std::vector<std::pair<int, int>> next;
      for (std::size_t s = 0; s < n_active; ++s) {
        const auto [node_id, depth] = active[s];
        TreeNode& nd = tree.nodes[static_cast<std::size_t>(node_id)];
        const Agg& agg = all[s];
        const bool splittable = depth < config_.max_depth &&
                                agg.n >= 2 * static_cast<std::int64_t>(config_.min_samples_leaf) &&
                                chosen[s].found && chosen[s].gain > 0.0;
        if (!splittable) {
          nd.value = agg.sum / (static_cast<double>(agg.n) + config_.l2_leaf_reg);
          continue;
        }
        nd.feature = chosen_feature[s];
        nd.threshold = chosen[s].threshold;
        nd.missing_left = chosen[s].missing_left;
        nd.gain = chosen[s].gain;
        nd.left = static_cast<int>(tree.nodes.size());
        nd.right = nd.left + 1;
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        next.emplace_back(nd.left, depth + 1);
        next.emplace_back(nd.right, depth + 1);
      }

      // Route rows of split nodes to their children.
      for (std::size_t r = 0; r < n_rows_; ++r) {
        const std::uint32_t nid = node_of_[r];
        if (nid >= slot_of.size()) continue;
        const int slot = slot_of[nid];
        if (slot < 0) continue;
        const TreeNode& nd = tree.nodes[nid];
        if (nd.is_leaf()) continue;
        const double x = cols_[static_cast<std::size_t>(nd.feature)][r];
        const bool left = std::isnan(x) ? nd.missing_left : x <= nd.threshold;
        node_of_[r] = static_cast<std::uint32_t>(left ? nd.left : nd.right);
      }
      active = std::move(next);
    }

    if (row_leaf) *row_leaf = node_of_;
    return tree;
  }

 private:
  // Two passes over sorted_[f]: totals of non-missing rows per node, then the
  // threshold walk. Candidates sit between consecutive distinct values.
  void scan_feature(std::size_t f, const std::vector<std::pair<int, int>>& active,
                    const std::vector<int>& slot_of, const std::vector<Agg>& all,
                    std::vector<BestSplit>& best) {
    const std::size_t n_active = active.size();
    const std::vector<double>& col = cols_[f];
    std::vector<Agg> present(n_active);
    for (const std::uint32_t r : sorted_[f].order) {
      const int slot = slot_of[node_of_[r]];
      if (slot >= 0) present[static_cast<std::size_t>(slot)].add(res_[r]);
    }

    std::vector<Agg> left(n_active);
    std::vector<double> prev(n_active, 0.0);
    std::vector<bool> started(n_active, false);
    const std::int64_t min_leaf = config_.min_samples_leaf;

    for (const std::uint32_t r : sorted_[f].order) {
      const int slot_i = slot_of[node_of_[r]];
      if (slot_i < 0) continue;
      const std::size_t slot = static_cast<std::size_t>(slot_i);
      const double x = col[r];
      if (started[slot] && x != prev[slot] && left[slot].n > 0 &&
          left[slot].n < present[slot].n) {
        evaluate(split_point(prev[slot], x), left[slot], present[slot], all[slot], min_leaf,
                 best[slot]);
      }
      left[slot].add(res_[r]);
      prev[slot] = x;
      started[slot] = true;
    }
  }

  void evaluate(double threshold, const Agg& left_present, const Agg& present, const Agg& all,
                std::int64_t min_leaf, BestSplit& best) {
    Agg l = left_present;
    Agg r;
    r.n = present.n - l.n;
    r.sum = present.sum - l.sum;
    r.ssq = present.ssq - l.ssq;
    // Missing rows follow the child with more non-missing rows; ties go left.
    const bool missing_left = l.n >= r.n;
    Agg miss;
    miss.n = all.n - present.n;
    miss.sum = all.sum - present.sum;
    miss.ssq = all.ssq - present.ssq;
    Agg& target = missing_left ? l : r;
    target.n += miss.n;
    target.sum += miss.sum;
    target.ssq += miss.ssq;
    if (l.n < min_leaf || r.n < min_leaf) return;
    const double gain = all.sse() - l.sse() - r.sse();
    if (!best.found || gain > best.gain) {
      best.found = true;
      best.gain = gain;
      best.threshold = threshold;
      best.missing_left = missing_left;
    }
  }

  const std::vector<std::vector<double>>& cols_;
  const std::vector<SortedFeature>& sorted_;
  const std::vector<double>& res_;
  const TrainConfig& config_;
  const int n_threads_;
  const std::size_t n_rows_;
  std::vector<std::uint32_t> node_of_;
};

}  // namespace

RegressionTree fit_tree(const std::vector<std::vector<double>>& columns,
                        const std::vector<double>& residuals, const TrainConfig& config,
                        int n_threads) {
  config.validate();
  if (columns.empty()) throw std::runtime_error("fit_tree: no feature columns");
  for (const auto& col : columns) {
    if (col.size() != residuals.size()) throw std::runtime_error("fit_tree: column length mismatch");
  }
  if (residuals.empty()) throw std::runtime_error("fit_tree: no rows");
  const auto sorted = presort_features(columns);
  TreeGrower grower(columns, sorted, residuals, config, n_threads);
  return grower.grow(nullptr);
}

// ---------------------------------------------------------------------------
// Boosting

namespace {

double encode_cell(const FeatureValue& v, const ColumnDesc& desc, int column,
                   const OtsEncoder& encoder) {
  switch (desc.kind) {
    case ColumnKind::numeric:
    case ColumnKind::boolean:
      if (is_missing(v)) return std::numeric_limits<double>::quiet_NaN();
      if (!std::holds_alternative<double>(v)) {
        throw std::runtime_error("column " + desc.name + ": expected a number");
      }
      return value_number(v);
    case ColumnKind::categorical: {
      if (is_missing(v)) return encoder.encode(column, kMissingCategory);
      if (!std::holds_alternative<std::string>(v)) {
        throw std::runtime_error("column " + desc.name + ": expected a label");
      }
      return encoder.encode(column, value_label(v));
    }
  }
  throw std::runtime_error("column " + desc.name + ": unknown kind");
}

void check_matrix(const FeatureMatrix& m) {
  if (m.rows.empty()) throw std::runtime_error("train: empty matrix");
  if (m.target.size() != m.rows.size()) throw std::runtime_error("train: target length mismatch");
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (m.rows[i].size() != m.schema.columns.size()) {
      throw std::runtime_error("train: row width mismatch at row " + std::to_string(i));
    }
    if (!std::isfinite(m.target[i])) {
      throw std::runtime_error("train: non-finite target at row " +
                               (i < m.call_ids.size() ? m.call_ids[i] : std::to_string(i)));
    }
  }
}

}  // namespace

GbdtModel train_gbdt(const FeatureMatrix& m, const TrainConfig& config, int n_threads,
                     TrainLog* log) {
  config.validate();
  check_matrix(m);
  const std::size_t n = m.n_rows();
  const std::size_t n_features = m.schema.columns.size();

  GbdtModel model;
  model.schema = m.schema;
  model.config = config;
  model.encoder.smoothing = config.ots_smoothing;

  double mean = 0;
  for (double y : m.target) mean += y;
  mean /= static_cast<double>(n);
  model.base_score = mean;
  model.encoder.prior = mean;

  Rng rng(config.permutation_seed);
  model.encoder.permutation = rng.permutation(static_cast<std::uint32_t>(n));

  // Encode the matrix column-major: categorical columns through the ordered
  // statistic, numeric and boolean columns as-is with NaN for missing.
  std::vector<std::vector<double>> columns(n_features, std::vector<double>(n));
  std::vector<std::string> labels(n);
  for (std::size_t f = 0; f < n_features; ++f) {
    const ColumnDesc& desc = m.schema.columns[f];
    if (desc.kind == ColumnKind::categorical) {
      for (std::size_t r = 0; r < n; ++r) {
        const FeatureValue& v = m.rows[r][f];
        if (is_missing(v)) {
          labels[r] = kMissingCategory;
        } else if (std::holds_alternative<std::string>(v)) {
          labels[r] = value_label(v);
        } else {
          throw std::runtime_error("column " + desc.name + ": expected a label");
        }
      }
      columns[f] = ots_encode_column(labels, m.target, model.encoder.permutation,
                                     model.encoder.prior, model.encoder.smoothing,
                                     &model.encoder.columns[static_cast<int>(f)]);
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        const FeatureValue& v = m.rows[r][f];
        if (is_missing(v)) {
          columns[f][r] = std::numeric_limits<double>::quiet_NaN();
        } else if (std::holds_alternative<double>(v)) {
          columns[f][r] = value_number(v);
        } else {
          throw std::runtime_error("column " + desc.name + ": expected a number");
        }
      }
    }
  }

  const auto sorted = presort_features(columns);
  model.split_gain.assign(n_features, 0.0);

  std::vector<double> score(n, model.base_score);
  std::vector<double> residuals(n);
  std::vector<std::uint32_t> row_leaf;
  model.trees.reserve(static_cast<std::size_t>(config.n_trees));
  if (log) log->rmse.clear();

  for (int t = 0; t < config.n_trees; ++t) {
    for (std::size_t r = 0; r < n; ++r) residuals[r] = m.target[r] - score[r];
    TreeGrower grower(columns, sorted, residuals, config, n_threads);
    RegressionTree tree = grower.grow(&row_leaf);
    for (std::size_t r = 0; r < n; ++r) {
      score[r] += config.learning_rate * tree.nodes[row_leaf[r]].value;
    }
    for (const TreeNode& nd : tree.nodes) {
      if (!nd.is_leaf()) model.split_gain[static_cast<std::size_t>(nd.feature)] += nd.gain;
    }
    model.trees.push_back(std::move(tree));
    if (log) {
      double sse = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = m.target[r] - score[r];
        sse += d * d;
      }
      log->rmse.push_back(std::sqrt(sse / static_cast<double>(n)));
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Model prediction

std::vector<double> GbdtModel::encode_row(std::span<const FeatureValue> row) const {
  if (row.size() != schema.columns.size()) {
    throw std::runtime_error("predict: row has " + std::to_string(row.size()) +
                             " values, schema needs " + std::to_string(schema.columns.size()));
  }
  std::vector<double> encoded(row.size());
  for (std::size_t f = 0; f < row.size(); ++f) {
    encoded[f] = encode_cell(row[f], schema.columns[f], static_cast<int>(f), encoder);
  }
  return encoded;
}

TurnaroundHours GbdtModel::predict(std::span<const FeatureValue> row) const {
  const std::vector<double> encoded = encode_row(row);
  double score = base_score;
  for (const RegressionTree& tree : trees) {
    score += config.learning_rate * tree.predict(encoded);
  }
  return TurnaroundHours{std::max(score, 1.0)};
}

std::vector<double> GbdtModel::predict_batch(const FeatureMatrix& m) const {
  if (m.schema.columns != schema.columns) {
    for (std::size_t i = 0; i < std::min(m.schema.columns.size(), schema.columns.size()); ++i) {
      if (!(m.schema.columns[i] == schema.columns[i])) {
        throw std::runtime_error("schema mismatch at column '" + m.schema.columns[i].name +
                                 "', model expects '" + schema.columns[i].name + "'");
      }
    }
    throw std::runtime_error("schema mismatch: matrix has " +
                             std::to_string(m.schema.columns.size()) + " columns, model has " +
                             std::to_string(schema.columns.size()));
  }
  std::vector<double> out;
  out.reserve(m.n_rows());
  for (const auto& row : m.rows) out.push_back(predict(row).value);
  return out;
}

std::map<std::string, double> GbdtModel::feature_importance() const {
  double total = 0;
  for (double g : split_gain) total += g;
  std::map<std::string, double> out;
  if (total <= 0) return out;
  for (std::size_t f = 0; f < split_gain.size(); ++f) {
    out[schema.columns[f].name] = 100.0 * split_gain[f] / total;
  }
  return out;
}

}  // namespace portcast
