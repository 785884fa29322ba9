#include "pfoa/io/kv_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}
}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
    KvConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not 'key = value': " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("empty key on config line " + std::to_string(lineno));
        cfg.entries_[key] = value;
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse(text);
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

void KvConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not a number: " + it->second);
    }
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
    }
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' is not an unsigned integer: " + it->second);
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

}  // namespace pfoa::io
