#include "pfoa/io/manifest.hpp"

#include <openssl/evp.h>

#include <ctime>
#include <fstream>

#include <json.hpp>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(data, len, digest, &digest_len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(const std::string& data) { return sha256_hex(data.data(), data.size()); }

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for hashing: " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw IoError("sha256 context allocation failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_DigestFinal_ex(ctx, digest, &digest_len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * digest_len);
    for (unsigned i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string current_timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_run_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    j["config"] = manifest.config_snapshot;
    j["inputs"] = manifest.input_hashes;
    j["timestamp"] = manifest.timestamp;
    std::filesystem::create_directories(dir);
    const auto path = dir / "manifest.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f << j.dump(2) << '\n';
}

}  // namespace pfoa::io
