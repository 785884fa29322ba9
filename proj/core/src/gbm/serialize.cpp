#include "pfoa/gbm/serialize.hpp"

#include <fstream>

#include <json.hpp>

#include "pfoa/common/error.hpp"

namespace pfoa::gbm {

using nlohmann::ordered_json;

std::string gbm_to_json(const GbmModel& model) {
    ordered_json j;
    j["format"] = "pfoa-gbm";
    j["version"] = 1;
    j["base_score"] = model.base_score;
    j["features"] = model.feature_names;
    j["config"] = {
        {"n_trees", model.config.n_trees},
        {"learning_rate", model.config.learning_rate},
        {"max_leaves", model.config.max_leaves},
        {"min_samples_leaf", model.config.min_samples_leaf},
        {"n_bins", model.config.n_bins},
        {"lambda_l2", model.config.lambda_l2},
        {"seed", model.config.seed},
        {"growth", model.config.growth == Growth::kLeafWise ? "leaf_wise" : "depth_wise"},
    };
    ordered_json trees = ordered_json::array();
    for (const Tree& t : model.trees) {
        ordered_json nodes = ordered_json::array();
        for (const TreeNode& n : t.nodes) {
            nodes.push_back({
                {"feature", n.feature},
                {"threshold", n.threshold},
                {"default_left", n.default_left},
                {"left", n.left},
                {"right", n.right},
                {"value", n.value},
            });
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j.dump(2);
}

GbmModel gbm_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(std::string("invalid GBM model JSON: ") + e.what());
    }
    if (j.value("format", "") != "pfoa-gbm")
        throw IoError("not a pfoa-gbm model file");
    if (j.value("version", 0) != 1)
        throw IoError("unsupported pfoa-gbm version: " + j["version"].dump());

    GbmModel model;
    model.base_score = j.at("base_score").get<double>();
    model.feature_names = j.at("features").get<std::vector<std::string>>();
    const auto& cfg = j.at("config");
    model.config.n_trees = cfg.at("n_trees").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.max_leaves = cfg.at("max_leaves").get<int>();
    model.config.min_samples_leaf = cfg.at("min_samples_leaf").get<int>();
    model.config.n_bins = cfg.at("n_bins").get<int>();
    model.config.lambda_l2 = cfg.at("lambda_l2").get<double>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.config.growth =
        cfg.at("growth").get<std::string>() == "depth_wise" ? Growth::kDepthWise : Growth::kLeafWise;

    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt) {
            TreeNode n;
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.default_left = jn.at("default_left").get<bool>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            n.value = jn.at("value").get<double>();
            t.nodes.push_back(n);
        }
        model.trees.push_back(std::move(t));
    }
    return model;
}

void save_gbm(const GbmModel& model, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path.string());
    f << gbm_to_json(model) << '\n';
}

GbmModel load_gbm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return gbm_from_json(text);
}

}  // namespace pfoa::gbm
