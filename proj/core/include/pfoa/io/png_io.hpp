#pragma once

#include <filesystem>

#include "pfoa/common/image.hpp"

namespace pfoa::io {

/// Writes values clamped to [0,1] as 16-bit grayscale PNG.
void write_png16(const std::filesystem::path& path, const ImageF64& img);

/// Writes values clamped to [0,1] as 8-bit grayscale PNG (previews).
void write_png8(const std::filesystem::path& path, const ImageF64& img);

/// Reads an 8- or 16-bit grayscale PNG into [0,1] doubles.
/// Color images are rejected.
ImageF64 read_png(const std::filesystem::path& path);

}  // namespace pfoa::io
