#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfoa/gbm/dataset.hpp"

namespace pfoa::gbm {

enum class Growth { kLeafWise, kDepthWise };

struct GbmConfig {
    int n_trees = 200;
    double learning_rate = 0.05;
    int max_leaves = 15;
    int min_samples_leaf = 20;
    int n_bins = 64;
    double lambda_l2 = 1.0;
    std::uint64_t seed = 0;
    Growth growth = Growth::kLeafWise;

    void validate() const;
};

struct TreeNode {
    int feature = -1;          // -1 marks a leaf
    double threshold = 0.0;    // go left when x <= threshold
    bool default_left = true;  // direction for missing values
    int left = -1;
    int right = -1;
    double value = 0.0;        // leaf output (already shrunk)
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict_row(const std::vector<double>& row) const;
};

/// Additive ensemble of regression trees over binary logistic loss.
struct GbmModel {
    double base_score = 0.0;  // log-odds of the training prevalence
    std::vector<Tree> trees;
    std::vector<std::string> feature_names;
    GbmConfig config;

    /// base_score + sum of tree outputs for each row of X. X must contain
    /// every training feature (matched by name; extra columns are ignored).
    std::vector<double> predict_margin(const FeatureMatrix& X) const;
    std::vector<double> predict_proba(const FeatureMatrix& X) const;

    /// Margin for a single row already laid out in training feature order.
    double margin_for_row(const std::vector<double>& row) const;
};

/// Fits a boosted ensemble: quantile-binned histograms, best-first growth,
/// gain 0.5*[GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)], leaf value -G/(H+l)
/// scaled by the learning rate. Deterministic for fixed (X, y, cfg).
GbmModel fit_gbm(const FeatureMatrix& X, const std::vector<int>& y, const GbmConfig& cfg);

/// Exhaustive single-split search on raw feature values. Reference route for
/// validating the histogram split finder on small data sets.
struct ExactSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    bool missing_left = true;
    double gain = 0.0;
};
ExactSplit best_exact_split(const FeatureMatrix& X, const std::vector<double>& grad,
                            const std::vector<double>& hess,
                            const std::vector<std::size_t>& rows, double lambda_l2,
                            int min_samples_leaf);

/// Same contract as best_exact_split but through the histogram path used by
/// fit_gbm (exposed so the equivalence is testable on its own).
ExactSplit best_histogram_split(const FeatureMatrix& X, const std::vector<double>& grad,
                                const std::vector<double>& hess,
                                const std::vector<std::size_t>& rows, const GbmConfig& cfg);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace pfoa::gbm
