#include "portcast/linreg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "portcast/gbdt.hpp"  // kMissingCategory

namespace portcast {

namespace {

std::string cell_label(const FeatureValue& v, const ColumnDesc& desc) {
  if (is_missing(v)) return kMissingCategory;
  if (!std::holds_alternative<std::string>(v)) {
    throw std::runtime_error("column " + desc.name + ": expected a label");
  }
  return value_label(v);
}

double cell_number(const FeatureValue& v, const ColumnDesc& desc, bool& present) {
  if (is_missing(v)) {
    present = false;
    return 0.0;
  }
  if (!std::holds_alternative<double>(v)) {
    throw std::runtime_error("column " + desc.name + ": expected a number");
  }
  present = true;
  return value_number(v);
}

}  // namespace

std::size_t LinearModel::design_width() const {
  std::size_t p = 0;
  for (std::size_t f = 0; f < schema.columns.size(); ++f) {
    if (schema.columns[f].kind == ColumnKind::categorical) {
      p += vocab[f].size();
    } else if (numeric[f].retained) {
      p += 1;
    }
  }
  return p;
}

namespace {

// Writes the design row for `row` into `out` (size = design_width).
void build_design_row(const LinearModel& model, std::span<const FeatureValue> row,
                      double* out) {
  std::size_t j = 0;
  for (std::size_t f = 0; f < model.schema.columns.size(); ++f) {
    const ColumnDesc& desc = model.schema.columns[f];
    if (desc.kind == ColumnKind::categorical) {
      const std::vector<std::string>& labels = model.vocab[f];
      for (std::size_t k = 0; k < labels.size(); ++k) out[j + k] = 0.0;
      const std::string label = cell_label(row[f], desc);
      const auto it = std::lower_bound(labels.begin(), labels.end(), label);
      if (it != labels.end() && *it == label) {
        out[j + static_cast<std::size_t>(it - labels.begin())] = 1.0;
      }
      j += labels.size();
    } else if (model.numeric[f].retained) {
      bool present = false;
      const double v = cell_number(row[f], desc, present);
      out[j] = present ? (v - model.numeric[f].mean) / model.numeric[f].stddev : 0.0;
      j += 1;
    }
  }
}

}  // namespace

LinearModel fit_linear(const FeatureMatrix& m, double ridge_lambda) {
  if (m.n_rows() < 2) throw std::runtime_error("fit_linear: need at least 2 rows");
  if (ridge_lambda < 0) throw std::runtime_error("fit_linear: ridge_lambda must be >= 0");
  for (const auto& row : m.rows) {
    if (row.size() != m.schema.columns.size()) {
      throw std::runtime_error("fit_linear: row width mismatch");
    }
  }

  LinearModel model;
  model.schema = m.schema;
  model.ridge_lambda = ridge_lambda;
  model.numeric.resize(m.schema.columns.size());
  model.vocab.resize(m.schema.columns.size());

  const std::size_t n = m.n_rows();
  for (std::size_t f = 0; f < m.schema.columns.size(); ++f) {
    const ColumnDesc& desc = m.schema.columns[f];
    if (desc.kind == ColumnKind::categorical) {
      std::set<std::string> labels;
      for (const auto& row : m.rows) labels.insert(cell_label(row[f], desc));
      model.vocab[f].assign(labels.begin(), labels.end());
      continue;
    }
    double sum = 0;
    std::size_t cnt = 0;
    for (const auto& row : m.rows) {
      bool present = false;
      const double v = cell_number(row[f], desc, present);
      if (present) {
        sum += v;
        ++cnt;
      }
    }
    LinearModel::NumericColumn& nc = model.numeric[f];
    if (cnt == 0) {
      nc.retained = false;
      continue;
    }
    nc.mean = sum / static_cast<double>(cnt);
    double ssq = 0;
    for (const auto& row : m.rows) {
      bool present = false;
      const double v = cell_number(row[f], desc, present);
      if (present) ssq += (v - nc.mean) * (v - nc.mean);
    }
    nc.stddev = std::sqrt(ssq / static_cast<double>(cnt));
    if (nc.stddev == 0.0) {
      nc.retained = false;
      nc.stddev = 1.0;
    }
  }

  const std::size_t p = model.design_width();
  if (p == 0) throw std::runtime_error("fit_linear: design has no usable columns");

  // Ridge as an augmented least-squares problem; the intercept column is not
  // penalized.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + p),
                                            static_cast<Eigen::Index>(p + 1));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + p));
  std::vector<double> design(p);
  for (std::size_t r = 0; r < n; ++r) {
    build_design_row(model, m.rows[r], design.data());
    for (std::size_t j = 0; j < p; ++j) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = design[j];
    A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = 1.0;
    b(static_cast<Eigen::Index>(r)) = m.target[r];
  }
  const double root = std::sqrt(ridge_lambda);
  for (std::size_t j = 0; j < p; ++j) {
    A(static_cast<Eigen::Index>(n + j), static_cast<Eigen::Index>(j)) = root;
  }

  // One-hot blocks plus the intercept make the design exactly collinear at
  // zero ridge; the rank-revealing solve must treat the tiny pivots as zero
  // or the coefficients blow up in cancelling pairs.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(A);
  const Eigen::VectorXd coef = cod.solve(b);
  model.weights.assign(coef.data(), coef.data() + p);
  model.intercept = coef(static_cast<Eigen::Index>(p));
  return model;
}

TurnaroundHours LinearModel::predict(std::span<const FeatureValue> row) const {
  if (row.size() != schema.columns.size()) {
    throw std::runtime_error("predict: row has " + std::to_string(row.size()) +
                             " values, schema needs " + std::to_string(schema.columns.size()));
  }
  std::vector<double> design(design_width());
  build_design_row(*this, row, design.data());
  double y = intercept;
  for (std::size_t j = 0; j < design.size(); ++j) y += weights[j] * design[j];
  return TurnaroundHours{std::max(y, 1.0)};
}

std::vector<double> LinearModel::predict_batch(const FeatureMatrix& m) const {
  if (m.schema.columns != schema.columns) {
    for (std::size_t i = 0; i < std::min(m.schema.columns.size(), schema.columns.size()); ++i) {
      if (!(m.schema.columns[i] == schema.columns[i])) {
        throw std::runtime_error("schema mismatch at column '" + m.schema.columns[i].name +
                                 "', model expects '" + schema.columns[i].name + "'");
      }
    }
    throw std::runtime_error("schema mismatch: matrix and model disagree on column count");
  }
  std::vector<double> out;
  out.reserve(m.n_rows());
  for (const auto& row : m.rows) out.push_back(predict(row).value);
  return out;
}

}  // namespace portcast
