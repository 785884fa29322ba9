#include "pfoa/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/io/checkpoint.hpp"
#include "pfoa/nn/init.hpp"
#include "pfoa/nn/ops.hpp"

namespace pfoa::nn {

using nlohmann::ordered_json;

BackboneConfig BackboneConfig::full() { return BackboneConfig{}; }

BackboneConfig BackboneConfig::desk() {
    BackboneConfig cfg;
    cfg.block_channels = {16, 32, 64, 96, 96};
    cfg.convs_per_block = {1, 1, 1, 1, 1};
    cfg.input_size = 64;
    cfg.attention_taps = {2, 3};
    return cfg;
}

void BackboneConfig::validate() const {
    if (block_channels.empty())
        throw ConfigError("block_channels must not be empty");
    if (convs_per_block.size() != block_channels.size())
        throw ConfigError("convs_per_block length " + std::to_string(convs_per_block.size()) +
                          " != block count " + std::to_string(block_channels.size()));
    for (int c : block_channels)
        if (c <= 0) throw ConfigError("block channel counts must be positive");
    for (int c : convs_per_block)
        if (c <= 0) throw ConfigError("convs_per_block entries must be positive");
    const int pooled = input_size >> n_blocks();
    if (input_size <= 0 || (input_size % (1 << n_blocks())) != 0 || pooled < 1)
        throw ConfigError("input_size " + std::to_string(input_size) + " is not divisible by 2^" +
                          std::to_string(n_blocks()));
    for (int t : attention_taps)
        if (t < 0 || t > n_blocks() - 2)
            throw ConfigError("attention tap " + std::to_string(t) +
                              " must index a block strictly before the last one");
    if (classifier_hidden < 0) throw ConfigError("classifier_hidden must be >= 0");
}

AttentionOut spatial_attention(const Tensor& feature, const Tensor& global_feature,
                               const AttentionBlockParams& block) {
    const Tensor local = conv2d(feature, block.wl_weight.tensor, block.wl_bias.tensor, 1, 0);
    const Tensor gvec = linear(global_feature, block.wg_weight.tensor, block.wg_bias.tensor);
    const Shape& ls = local.shape();
    const Tensor spread = broadcast_spatial(gvec, ls[2], ls[3]);
    const Tensor pre = relu(add(local, spread));
    AttentionOut out;
    out.attention_map = sigmoid(conv2d(pre, block.w_weight.tensor, block.w_bias.tensor, 1, 0));
    out.attended = mul(out.attention_map, feature);
    return out;
}

AttentionNet::AttentionNet(BackboneConfig cfg, bool with_attention, std::uint64_t seed)
    : cfg_(std::move(cfg)), with_attention_(with_attention) {
    cfg_.validate();
    std::uint64_t param_idx = 0;
    auto next_seed = [&] { return mix_seed(seed, param_idx++); };

    int in_ch = 1;
    for (int b = 0; b < cfg_.n_blocks(); ++b) {
        std::vector<ConvLayer> block;
        for (int l = 0; l < cfg_.convs_per_block[static_cast<std::size_t>(b)]; ++l) {
            const int out_ch = cfg_.block_channels[static_cast<std::size_t>(b)];
            const std::string base =
                "backbone.b" + std::to_string(b) + ".c" + std::to_string(l);
            const Shape wshape{out_ch, in_ch, 3, 3};
            block.emplace_back(ConvLayer{
                Parameter(base + ".weight", wshape, he_init(wshape, in_ch * 9, next_seed())),
                Parameter(base + ".bias", {out_ch}, std::vector<double>(out_ch, 0.0))});
            in_ch = out_ch;
        }
        blocks_.push_back(std::move(block));
    }

    const int dg = cfg_.block_channels.back();
    if (with_attention_) {
        for (std::size_t t = 0; t < cfg_.attention_taps.size(); ++t) {
            const int tap = cfg_.attention_taps[t];
            const int cf = cfg_.block_channels[static_cast<std::size_t>(tap)];
            const int d = cf;  // hidden width follows the tapped block
            const std::string base = "attn" + std::to_string(t);
            AttentionBlockParams p;
            p.hidden = d;
            const Shape wl{d, cf, 1, 1};
            p.wl_weight = Parameter(base + ".wl.weight", wl, he_init(wl, cf, next_seed()));
            p.wl_bias = Parameter(base + ".wl.bias", {d}, std::vector<double>(d, 0.0));
            const Shape wg{d, dg};
            p.wg_weight = Parameter(base + ".wg.weight", wg, he_init(wg, dg, next_seed()));
            p.wg_bias = Parameter(base + ".wg.bias", {d}, std::vector<double>(d, 0.0));
            const Shape w{1, d, 1, 1};
            p.w_weight = Parameter(base + ".w.weight", w, he_init(w, d, next_seed()));
            p.w_bias = Parameter(base + ".w.bias", {1}, std::vector<double>(1, 0.0));
            attention_.push_back(std::move(p));
        }
    }

    int feat_dim = dg;
    if (with_attention_)
        for (int tap : cfg_.attention_taps)
            feat_dim += cfg_.block_channels[static_cast<std::size_t>(tap)];

    if (cfg_.classifier_hidden > 0) {
        const int hdim = cfg_.classifier_hidden;
        const Shape hshape{hdim, feat_dim};
        hidden_weight_ =
            Parameter("head.hidden.weight", hshape, he_init(hshape, feat_dim, next_seed()));
        hidden_bias_ = Parameter("head.hidden.bias", {hdim}, std::vector<double>(hdim, 0.0));
        feat_dim = hdim;
    }
    const Shape head{1, feat_dim};
    head_weight_ = Parameter("head.weight", head, he_init(head, feat_dim, next_seed()));
    head_bias_ = Parameter("head.bias", {1}, std::vector<double>(1, 0.0));
}

AttentionNet::ForwardResult AttentionNet::forward(const Tensor& batch) {
    const Shape& s = batch.shape();
    if (s.size() != 4 || s[1] != 1 || s[2] != cfg_.input_size || s[3] != cfg_.input_size)
        throw ShapeError("expected batch N x 1 x " + std::to_string(cfg_.input_size) + " x " +
                         std::to_string(cfg_.input_size) + ", got " + shape_str(s));

    Tensor x = batch;
    std::vector<Tensor> taps(cfg_.attention_taps.size());
    for (int b = 0; b < cfg_.n_blocks(); ++b) {
        for (auto& layer : blocks_[static_cast<std::size_t>(b)])
            x = relu(conv2d(x, layer.weight.tensor, layer.bias.tensor, 1, 1));
        x = maxpool2(x);
        for (std::size_t t = 0; t < cfg_.attention_taps.size(); ++t)
            if (cfg_.attention_taps[t] == b) taps[t] = x;
    }

    ForwardResult out;
    out.global_feature = gap(x);

    Tensor feature;
    if (with_attention_) {
        std::vector<Tensor> parts;
        for (std::size_t t = 0; t < attention_.size(); ++t) {
            AttentionOut att = spatial_attention(taps[t], out.global_feature, attention_[t]);
            out.attention_maps.push_back(att.attention_map);
            parts.push_back(gap(att.attended));
        }
        parts.push_back(out.global_feature);
        feature = concat_features(parts);
    } else {
        feature = out.global_feature;
    }

    if (cfg_.classifier_hidden > 0)
        feature = relu(linear(feature, hidden_weight_.tensor, hidden_bias_.tensor));
    const Tensor logits2d = linear(feature, head_weight_.tensor, head_bias_.tensor);
    out.logits = reshape(logits2d, {s[0]});
    return out;
}

std::vector<Parameter*> AttentionNet::parameters() {
    std::vector<Parameter*> out;
    for (auto& block : blocks_)
        for (auto& layer : block) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
    for (auto& a : attention_) {
        out.push_back(&a.wl_weight);
        out.push_back(&a.wl_bias);
        out.push_back(&a.wg_weight);
        out.push_back(&a.wg_bias);
        out.push_back(&a.w_weight);
        out.push_back(&a.w_bias);
    }
    if (cfg_.classifier_hidden > 0) {
        out.push_back(&hidden_weight_);
        out.push_back(&hidden_bias_);
    }
    out.push_back(&head_weight_);
    out.push_back(&head_bias_);
    return out;
}

std::vector<const Parameter*> AttentionNet::parameters() const {
    auto mut = const_cast<AttentionNet*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

std::size_t AttentionNet::parameter_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->numel();
    return n;
}

void AttentionNet::zero_grad() {
    for (Parameter* p : parameters()) p->tensor.zero_grad();
}

void AttentionNet::save(const std::filesystem::path& base) const {
    ordered_json meta;
    meta["arch"] = {
        {"block_channels", cfg_.block_channels},
        {"convs_per_block", cfg_.convs_per_block},
        {"input_size", cfg_.input_size},
        {"attention_taps", cfg_.attention_taps},
        {"classifier_hidden", cfg_.classifier_hidden},
    };
    meta["with_attention"] = with_attention_;
    io::save_checkpoint(base, parameters(), meta.dump());
}

AttentionNet AttentionNet::load(const std::filesystem::path& base) {
    const io::LoadedCheckpoint ckpt = io::load_checkpoint(base);
    if (ckpt.meta_json.empty())
        throw IoError("checkpoint has no model metadata: " + base.string());
    ordered_json meta;
    try {
        meta = ordered_json::parse(ckpt.meta_json);
    } catch (const std::exception& e) {
        throw IoError(std::string("invalid checkpoint metadata: ") + e.what());
    }
    BackboneConfig cfg;
    const auto& arch = meta.at("arch");
    cfg.block_channels = arch.at("block_channels").get<std::vector<int>>();
    cfg.convs_per_block = arch.at("convs_per_block").get<std::vector<int>>();
    cfg.input_size = arch.at("input_size").get<int>();
    cfg.attention_taps = arch.at("attention_taps").get<std::vector<int>>();
    cfg.classifier_hidden = arch.at("classifier_hidden").get<int>();

    AttentionNet net(cfg, meta.at("with_attention").get<bool>(), /*seed=*/0);
    for (Parameter* p : net.parameters()) {
        const io::LoadedTensor* t = ckpt.find(p->name);
        if (!t)
            throw IoError("checkpoint/config mismatch: missing tensor " + p->name + " in " +
                          base.string());
        if (t->shape != p->tensor.shape())
            throw IoError("checkpoint/config mismatch: tensor " + p->name + " has shape " +
                          shape_str(t->shape) + ", model expects " +
                          shape_str(p->tensor.shape()));
        p->tensor.mutable_values() = t->values;
    }
    return net;
}

AttentionMass attention_mass_fraction(const ImageF64& map, const std::vector<Rect>& boxes) {
    AttentionMass out;
    double total = 0.0, inside = 0.0;
    std::size_t inside_px = 0;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            const double v = map.at(y, x);
            total += v;
            bool in = false;
            for (const Rect& r : boxes)
                if (r.contains(x, y)) {
                    in = true;
                    break;
                }
            if (in) {
                inside += v;
                ++inside_px;
            }
        }
    out.mass_fraction = total > 0.0 ? inside / total : 0.0;
    out.area_fraction = static_cast<double>(inside_px) / static_cast<double>(map.size());
    return out;
}

ImageF64 upsample_attention(const std::vector<double>& map_values, int map_h, int map_w,
                            int out_size) {
    if (map_h <= 0 || map_w <= 0 ||
        static_cast<std::size_t>(map_h) * static_cast<std::size_t>(map_w) != map_values.size())
        throw ShapeError("attention map size mismatch");
    ImageF64 small(map_h, map_w);
    small.data() = map_values;
    ImageF64 up = resize_bilinear(small, out_size, out_size);
    double lo = up.data()[0], hi = up.data()[0];
    for (double v : up.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-15) {
        std::fill(up.data().begin(), up.data().end(), 0.0);
        return up;
    }
    for (double& v : up.data()) v = (v - lo) / (hi - lo);
    return up;
}

}  // namespace pfoa::nn
