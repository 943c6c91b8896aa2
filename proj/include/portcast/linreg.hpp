#pragma once

#include <span>
#include <string>
#include <vector>

#include "portcast/features.hpp"

namespace portcast {

// Ridge-regularized linear baseline. Numeric columns are z-scored with
// missing values imputed at the training mean; categorical columns are
// one-hot encoded over the training vocabulary with unseen labels mapping to
// the all-zero block. Solved by a rank-revealing orthogonal decomposition of
// the regularized augmented system; the intercept is not penalized.
struct LinearModel {
  struct NumericColumn {
    double mean = 0.0;
    double stddev = 1.0;
    bool retained = true;  // zero-variance columns are dropped
  };

  FeatureSchema schema;
  double ridge_lambda = 1e-6;
  double intercept = 0.0;
  std::vector<double> weights;                   // one per design column
  std::vector<NumericColumn> numeric;            // per schema column (unused slots for categorical)
  std::vector<std::vector<std::string>> vocab;   // per schema column, sorted labels

  TurnaroundHours predict(std::span<const FeatureValue> row) const;  // floored at one hour
  std::vector<double> predict_batch(const FeatureMatrix& m) const;
  std::size_t design_width() const;
};

LinearModel fit_linear(const FeatureMatrix& m, double ridge_lambda = 1e-6);

}  // namespace portcast
