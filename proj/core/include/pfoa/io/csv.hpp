#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pfoa::io {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index for a header name, throws SchemaError when absent.
    std::size_t col(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Shortest-round-trip decimal formatting, locale independent.
std::string format_double(double v);

}  // namespace pfoa::io
