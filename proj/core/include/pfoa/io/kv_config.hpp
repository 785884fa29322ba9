#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace pfoa::io {

/// Plain-text `key = value` configuration. '#' starts a comment; keys are
/// dotted paths (synth.n_subjects, train.epochs, gbm.n_trees, ...).
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text);
    static KvConfig parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace pfoa::io
