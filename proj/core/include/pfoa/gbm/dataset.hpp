#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace pfoa::gbm {

/// Sentinel for a missing feature value.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Column-major tabular features with named columns.
/// Rows are knees; columns are clinical variables or base-model predictions.
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    /// Appends a named column. All columns must have equal length.
    void add_column(std::string name, std::vector<double> values);

    std::size_t n_rows() const { return columns_.empty() ? 0 : columns_[0].size(); }
    std::size_t n_features() const { return columns_.size(); }
    const std::vector<std::string>& feature_names() const { return names_; }

    /// Index of a named column, -1 when absent.
    int column_index(const std::string& name) const;

    const std::vector<double>& column(std::size_t j) const { return columns_[j]; }
    double at(std::size_t row, std::size_t col) const { return columns_[col][row]; }

    /// Gathers one row in column order.
    std::vector<double> row(std::size_t i) const;

    /// Projection onto a subset of named columns (copying), preserving the
    /// requested order. Throws SchemaError for unknown names.
    FeatureMatrix select(const std::vector<std::string>& names) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

}  // namespace pfoa::gbm
