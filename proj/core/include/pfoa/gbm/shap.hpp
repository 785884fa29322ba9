#pragma once

#include <vector>

#include "pfoa/gbm/gbm.hpp"

namespace pfoa::gbm {

struct ShapValues {
    std::vector<double> phi;  // one attribution per model feature, margin units
    double base_value = 0.0;  // v(empty) = mean background margin
};

/// Exact Shapley attributions by subset enumeration (<= 12 features).
/// v(S) is the interventional expectation: the mean margin over background
/// rows with the features in S overridden by x. Satisfies efficiency:
/// sum(phi) + base_value == margin(x).
ShapValues exact_shap(const GbmModel& model, const std::vector<double>& x_row,
                      const FeatureMatrix& background);

/// Mean absolute Shapley value per feature over the rows of X; descending
/// order is the global importance ranking.
std::vector<double> mean_abs_shap(const GbmModel& model, const FeatureMatrix& X,
                                  const FeatureMatrix& background);

/// Feature indices of the model schema sorted by descending importance.
std::vector<std::size_t> importance_ranking(const std::vector<double>& mean_abs);

}  // namespace pfoa::gbm
