#include "pfoa/io/array_io.hpp"

#include <fstream>

#include <json.hpp>

#include "pfoa/common/error.hpp"

namespace pfoa::io {

using nlohmann::ordered_json;

void save_roi(const std::filesystem::path& base, const roi::RoiImage& roi) {
    const auto bin_path = std::filesystem::path(base.string() + ".bin");
    const auto json_path = std::filesystem::path(base.string() + ".json");

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open for write: " + bin_path.string());
    std::vector<float> f32(roi.pixels.size());
    for (std::size_t i = 0; i < f32.size(); ++i)
        f32[i] = static_cast<float>(roi.pixels.data()[i]);
    bin.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * sizeof(float)));

    ordered_json j;
    j["dtype"] = "f32";
    j["shape"] = {roi.pixels.height(), roi.pixels.width()};
    j["side"] = roi.source_side == roi::Side::kLeft ? "left" : "right";
    j["box"] = {{"x", roi.box.x}, {"y", roi.box.y}, {"side", roi.box.side}};
    j["rotation_applied"] = roi.rotation_applied;
    ordered_json boxes = ordered_json::array();
    for (const Rect& r : roi.lesion_boxes) boxes.push_back({r.x0, r.y0, r.x1, r.y1});
    j["lesion_boxes"] = std::move(boxes);

    std::ofstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot open for write: " + json_path.string());
    js << j.dump(2) << '\n';
}

roi::RoiImage load_roi(const std::filesystem::path& base) {
    const auto bin_path = std::filesystem::path(base.string() + ".bin");
    const auto json_path = std::filesystem::path(base.string() + ".json");

    std::ifstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot open ROI sidecar: " + json_path.string());
    ordered_json j;
    try {
        js >> j;
    } catch (const std::exception& e) {
        throw IoError("invalid ROI sidecar " + json_path.string() + ": " + e.what());
    }
    if (j.value("dtype", "") != "f32")
        throw IoError("unsupported ROI dtype in " + json_path.string());

    roi::RoiImage out;
    const int h = j.at("shape").at(0).get<int>();
    const int w = j.at("shape").at(1).get<int>();
    out.source_side =
        j.value("side", "left") == "right" ? roi::Side::kRight : roi::Side::kLeft;
    out.box.x = j.at("box").at("x").get<int>();
    out.box.y = j.at("box").at("y").get<int>();
    out.box.side = j.at("box").at("side").get<int>();
    out.rotation_applied = j.at("rotation_applied").get<double>();
    for (const auto& b : j.at("lesion_boxes"))
        out.lesion_boxes.push_back(
            {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
             b.at(3).get<double>()});

    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw IoError("cannot open ROI data: " + bin_path.string());
    std::vector<float> f32(static_cast<std::size_t>(h) * w);
    bin.read(reinterpret_cast<char*>(f32.data()),
             static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (bin.gcount() != static_cast<std::streamsize>(f32.size() * sizeof(float)))
        throw IoError("short read in " + bin_path.string());

    out.pixels = ImageF64(h, w);
    for (std::size_t i = 0; i < f32.size(); ++i) out.pixels.data()[i] = f32[i];
    return out;
}

}  // namespace pfoa::io
