#include "pfoa/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

using nlohmann::ordered_json;

namespace {
constexpr char kMagic[8] = {'P', 'F', 'O', 'A', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const std::filesystem::path& base,
                     const std::vector<const nn::Parameter*>& params,
                     const std::string& meta_json) {
    const auto bin_path = std::filesystem::path(base.string() + ".bin");
    const auto json_path = std::filesystem::path(base.string() + ".json");

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open for write: " + bin_path.string());
    bin.write(kMagic, sizeof(kMagic));

    ordered_json manifest;
    manifest["format"] = "pfoa-checkpoint";
    manifest["version"] = 1;
    ordered_json tensors = ordered_json::array();
    std::size_t offset = 0;
    for (const nn::Parameter* p : params) {
        const auto& v = p->tensor.values();
        std::vector<float> f32(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) f32[i] = static_cast<float>(v[i]);
        bin.write(reinterpret_cast<const char*>(f32.data()),
                  static_cast<std::streamsize>(f32.size() * sizeof(float)));
        tensors.push_back({{"name", p->name},
                           {"shape", p->tensor.shape()},
                           {"offset", offset},
                           {"numel", v.size()}});
        offset += v.size() * sizeof(float);
    }
    manifest["tensors"] = std::move(tensors);
    if (!meta_json.empty()) {
        try {
            manifest["meta"] = ordered_json::parse(meta_json);
        } catch (const std::exception& e) {
            throw ValidationError(std::string("meta_json is not valid JSON: ") + e.what());
        }
    }

    std::ofstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot open for write: " + json_path.string());
    js << manifest.dump(2) << '\n';
}

const LoadedTensor* LoadedCheckpoint::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& base) {
    const auto bin_path = std::filesystem::path(base.string() + ".bin");
    const auto json_path = std::filesystem::path(base.string() + ".json");

    std::ifstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot open checkpoint manifest: " + json_path.string());
    ordered_json manifest;
    try {
        js >> manifest;
    } catch (const std::exception& e) {
        throw IoError("invalid checkpoint manifest " + json_path.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "pfoa-checkpoint" || manifest.value("version", 0) != 1)
        throw IoError("unsupported checkpoint format in " + json_path.string());

    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open checkpoint data: " + bin_path.string());
    char magic[8];
    bin.read(magic, sizeof(magic));
    if (bin.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("bad checkpoint magic in " + bin_path.string());

    LoadedCheckpoint out;
    if (manifest.contains("meta")) out.meta_json = manifest["meta"].dump();
    for (const auto& jt : manifest.at("tensors")) {
        LoadedTensor t;
        t.name = jt.at("name").get<std::string>();
        t.shape = jt.at("shape").get<nn::Shape>();
        const auto numel = jt.at("numel").get<std::size_t>();
        const auto offset = jt.at("offset").get<std::size_t>();
        if (numel != nn::shape_numel(t.shape))
            throw IoError("numel/shape mismatch for tensor " + t.name);
        bin.seekg(static_cast<std::streamoff>(sizeof(kMagic) + offset));
        std::vector<float> f32(numel);
        bin.read(reinterpret_cast<char*>(f32.data()),
                 static_cast<std::streamsize>(numel * sizeof(float)));
        if (bin.gcount() != static_cast<std::streamsize>(numel * sizeof(float)))
            throw IoError("short read for tensor " + t.name + " in " + bin_path.string());
        t.values.assign(f32.begin(), f32.end());
        out.tensors.push_back(std::move(t));
    }
    return out;
}

}  // namespace pfoa::io
