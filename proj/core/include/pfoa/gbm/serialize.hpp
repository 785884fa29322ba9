#pragma once

#include <filesystem>
#include <string>

#include "pfoa/gbm/gbm.hpp"

namespace pfoa::gbm {

/// JSON model format: base score, feature schema, config, and the tree list
/// with real-valued thresholds. Stable field order, round-trips exactly.
std::string gbm_to_json(const GbmModel& model);
GbmModel gbm_from_json(const std::string& text);

void save_gbm(const GbmModel& model, const std::filesystem::path& path);
GbmModel load_gbm(const std::filesystem::path& path);

}  // namespace pfoa::gbm
