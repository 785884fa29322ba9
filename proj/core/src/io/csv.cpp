#include "pfoa/io/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("missing CSV column: " + name);
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}
}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open CSV: " + path.string());
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size())
                throw IoError("CSV row with " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(t.header.size()) + " in " +
                              path.string());
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw IoError("empty CSV: " + path.string());
    return t;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path, std::ios::binary);  // binary: stable newlines
    if (!f) throw IoError("cannot open for write: " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
        f << '\n';
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace pfoa::io
