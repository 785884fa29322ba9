#include "pfoa/gbm/shap.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "pfoa/common/error.hpp"
#include "pfoa/common/parallel.hpp"

namespace pfoa::gbm {

namespace {

constexpr std::size_t kMaxExactFeatures = 12;

/// Subset weight |S|! (n-|S|-1)! / n! for each |S|; exact in double for n <= 12.
std::vector<double> subset_weights(std::size_t n) {
    std::vector<double> fact(n + 1, 1.0);
    for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> w(n);
    for (std::size_t s = 0; s < n; ++s) w[s] = fact[s] * fact[n - s - 1] / fact[n];
    return w;
}

}  // namespace

ShapValues exact_shap(const GbmModel& model, const std::vector<double>& x_row,
                      const FeatureMatrix& background) {
    const std::size_t n = model.feature_names.size();
    if (n > kMaxExactFeatures)
        throw ValidationError("exact Shapley enumeration supports at most 12 features, got " +
                              std::to_string(n) + "; explain a smaller feature subset");
    if (x_row.size() != n)
        throw SchemaError("row has " + std::to_string(x_row.size()) +
                          " features, model expects " + std::to_string(n));
    const FeatureMatrix bg = background.select(model.feature_names);
    if (bg.n_rows() == 0) throw ValidationError("empty background set");

    // v[mask]: mean margin over background rows with mask features set to x.
    const std::size_t n_masks = std::size_t{1} << n;
    std::vector<double> v(n_masks, 0.0);
    std::vector<double> row(n);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double acc = 0.0;
        for (std::size_t b = 0; b < bg.n_rows(); ++b) {
            for (std::size_t f = 0; f < n; ++f)
                row[f] = (mask >> f) & 1u ? x_row[f] : bg.at(b, f);
            acc += model.margin_for_row(row);
        }
        v[mask] = acc / static_cast<double>(bg.n_rows());
    }

    const auto w = subset_weights(n);
    ShapValues out;
    out.base_value = v[0];
    out.phi.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto size_s = static_cast<std::size_t>(std::popcount(mask));
            out.phi[j] += w[size_s] * (v[mask | bit] - v[mask]);
        }
    }
    return out;
}

std::vector<double> mean_abs_shap(const GbmModel& model, const FeatureMatrix& X,
                                  const FeatureMatrix& background) {
    const FeatureMatrix rows = X.select(model.feature_names);
    const std::size_t n = model.feature_names.size();
    if (rows.n_rows() == 0) throw ValidationError("no rows to explain");

    std::vector<std::vector<double>> per_row(rows.n_rows());
    parallel_for(rows.n_rows(), [&](std::size_t i) {
        per_row[i] = exact_shap(model, rows.row(i), background).phi;
    });

    std::vector<double> mean(n, 0.0);
    for (const auto& phi : per_row)
        for (std::size_t j = 0; j < n; ++j) mean[j] += std::abs(phi[j]);
    for (double& m : mean) m /= static_cast<double>(rows.n_rows());
    return mean;
}

std::vector<std::size_t> importance_ranking(const std::vector<double>& mean_abs) {
    std::vector<std::size_t> order(mean_abs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return mean_abs[a] > mean_abs[b];
    });
    return order;
}

}  // namespace pfoa::gbm
