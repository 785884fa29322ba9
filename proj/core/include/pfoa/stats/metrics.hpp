#pragma once

#include <string>
#include <vector>

namespace pfoa::stats {

/// Scores and binary labels for one model over one set of knees.
struct ScoredSet {
    std::vector<double> scores;
    std::vector<int> labels;        // 0/1
    std::vector<std::string> ids;   // optional, parallel to scores when present

    std::size_t size() const { return scores.size(); }
};

struct RocPoint {
    double threshold;  // +inf for the (0,0) anchor
    double fpr;
    double tpr;
};

struct PrPoint {
    double threshold;
    double recall;
    double precision;
};

/// Mann-Whitney AUC with midrank tie handling: the mean over all
/// (positive, negative) pairs of 1 / 0.5 / 0 for win / tie / loss.
/// Equals the trapezoidal area under roc_points().
double auc(const ScoredSet& s);

/// ROC operating points at every distinct score threshold, descending,
/// anchored at (0,0); the lowest threshold yields (1,1). Tied scores
/// collapse into a single point.
std::vector<RocPoint> roc_points(const ScoredSet& s);

/// Precision-recall operating points at every distinct threshold, descending.
std::vector<PrPoint> pr_points(const ScoredSet& s);

/// Step-wise average precision: sum over thresholds of (R_k - R_{k-1}) * P_k.
/// No interpolation.
double average_precision(const ScoredSet& s);

/// Mean squared error of probabilistic scores against labels.
/// Scores must lie in [0,1].
double brier(const ScoredSet& s);

/// Trapezoidal area under an ROC polyline (used as the cross-check route
/// against the pair-count AUC).
double trapezoid_auc(const std::vector<RocPoint>& points);

}  // namespace pfoa::stats
