#pragma once

#include <filesystem>

#include "pfoa/roi/pipeline.hpp"

namespace pfoa::io {

/// Writes <base>.bin (raw little-endian f32, row-major) plus <base>.json
/// sidecar: dtype, shape, side, box, rotation_applied, lesion_boxes.
void save_roi(const std::filesystem::path& base, const roi::RoiImage& roi);

roi::RoiImage load_roi(const std::filesystem::path& base);

}  // namespace pfoa::io
