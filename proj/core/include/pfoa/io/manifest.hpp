#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace pfoa::io {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

/// Provenance record dropped next to every artifact-writing command's output.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config_snapshot;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;  // path -> sha256
    std::string timestamp;                            // ISO-8601 UTC
};

std::string current_timestamp_utc();

/// Writes <dir>/manifest.json. The timestamp field is informational; all
/// other fields are deterministic functions of the inputs.
void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

}  // namespace pfoa::io
