#include "pfoa/gbm/dataset.hpp"

#include <algorithm>

#include "pfoa/common/error.hpp"

namespace pfoa::gbm {

void FeatureMatrix::add_column(std::string name, std::vector<double> values) {
    if (std::find(names_.begin(), names_.end(), name) != names_.end())
        throw ValidationError("duplicate feature column: " + name);
    if (!columns_.empty() && values.size() != columns_[0].size())
        throw ValidationError("column '" + name + "' has " +
                              std::to_string(values.size()) + " rows, expected " +
                              std::to_string(columns_[0].size()));
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

int FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t j = 0; j < names_.size(); ++j)
        if (names_[j] == name) return static_cast<int>(j);
    return -1;
}

std::vector<double> FeatureMatrix::row(std::size_t i) const {
    std::vector<double> out(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = columns_[j][i];
    return out;
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::string>& names) const {
    FeatureMatrix out;
    for (const auto& name : names) {
        const int j = column_index(name);
        if (j < 0) throw SchemaError("unknown feature column: " + name);
        out.add_column(name, columns_[static_cast<std::size_t>(j)]);
    }
    return out;
}

}  // namespace pfoa::gbm
