#pragma once

#include <utility>
#include <vector>

#include "pfoa/stats/metrics.hpp"

namespace pfoa::stats {

/// Per-observation structural components of one model's AUC.
/// v10[i]: placement of positive i among the negatives; mean(v10) == AUC.
/// v01[j]: placement of negative j among the positives; mean(v01) == AUC.
struct DeLongComponents {
    double auc = 0.0;
    std::vector<double> v10;
    std::vector<double> v01;
};

/// Midrank computation of the structural components (equivalent to the
/// direct pairwise definition, O(n log n) instead of O(mn)).
DeLongComponents delong_components(const std::vector<double>& scores,
                                   const std::vector<int>& labels);

struct DeLongResult {
    double auc_a = 0.0;
    double auc_b = 0.0;
    double var_a = 0.0;   // covariance matrix of (AUC_a, AUC_b)
    double var_b = 0.0;
    double cov_ab = 0.0;
    double z = 0.0;
    double p_value = 1.0;  // two-sided
};

/// DeLong's test for two correlated AUCs measured on the same knees.
/// Degenerate zero variance with equal AUCs yields z = 0, p = 1.
DeLongResult delong_test(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b,
                         const std::vector<int>& labels);

/// Single-model AUC variance from the structural components
/// (sample covariances, S10/m + S01/n).
double delong_variance(const ScoredSet& s);

/// Wald interval AUC +- z * sqrt(var), clipped to [0,1].
std::pair<double, double> delong_ci(const ScoredSet& s, double level = 0.95);

/// Standard normal CDF and quantile (Acklam's approximation polished with
/// one Halley step against erfc; accurate to ~1e-15).
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace pfoa::stats
