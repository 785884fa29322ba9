#pragma once

#include <filesystem>
#include <vector>

#include "pfoa/common/image.hpp"
#include "pfoa/nn/tensor.hpp"

namespace pfoa::nn {

struct BackboneConfig {
    std::vector<int> block_channels{64, 128, 256, 512, 512};
    std::vector<int> convs_per_block{2, 2, 3, 3, 3};
    int input_size = 224;
    std::vector<int> attention_taps{2, 3};  // 0-based block indices
    int classifier_hidden = 0;              // 0 = single linear layer to the logit

    /// Full-fidelity VGG-16 style preset (224 x 224 inputs).
    static BackboneConfig full();
    /// Thin preset for 64 x 64 inputs; the configuration exercised by tests.
    static BackboneConfig desk();

    void validate() const;
    int n_blocks() const { return static_cast<int>(block_channels.size()); }
};

/// One trainable spatial attention block:
///   A = sigmoid(W (*) relu((W_L (*) F) (+) broadcast(W_G G)))
///   F_hat = A (.) F
/// W_L is a 1x1 conv C_F -> d, W_G a linear Dg -> d, W a 1x1 conv d -> 1.
struct AttentionBlockParams {
    Parameter wl_weight, wl_bias;
    Parameter wg_weight, wg_bias;
    Parameter w_weight, w_bias;
    int hidden = 0;  // d, defaults to the tapped block's channel count
};

struct AttentionOut {
    Tensor attention_map;  // N x 1 x H x W, values in (0,1)
    Tensor attended;       // N x C x H x W
};

AttentionOut spatial_attention(const Tensor& feature, const Tensor& global_feature,
                               const AttentionBlockParams& block);

/// VGG-style backbone with two spatial attention taps and a penultimate
/// global feature; the classifier consumes concat(gap(F_hat_i)..., G).
class AttentionNet {
public:
    AttentionNet(BackboneConfig cfg, bool with_attention, std::uint64_t seed);

    struct ForwardResult {
        Tensor logits;                       // N
        std::vector<Tensor> attention_maps;  // one per tap (empty when ablated)
        Tensor global_feature;               // N x C_last
    };

    /// batch: N x 1 x input_size x input_size.
    ForwardResult forward(const Tensor& batch);

    /// Stable-ordered parameter list (matches the checkpoint manifest order).
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::size_t parameter_count() const;
    void zero_grad();

    const BackboneConfig& config() const { return cfg_; }
    bool with_attention() const { return with_attention_; }

    void save(const std::filesystem::path& base) const;
    static AttentionNet load(const std::filesystem::path& base);

private:
    BackboneConfig cfg_;
    bool with_attention_ = true;

    struct ConvLayer {
        Parameter weight, bias;
    };
    std::vector<std::vector<ConvLayer>> blocks_;
    std::vector<AttentionBlockParams> attention_;
    Parameter hidden_weight_, hidden_bias_;  // present when classifier_hidden > 0
    Parameter head_weight_, head_bias_;
};

/// Mass of the (min-max scaled) map inside the union of boxes vs. the
/// uniform-attention expectation (the union's area fraction).
struct AttentionMass {
    double mass_fraction = 0.0;
    double area_fraction = 0.0;
};
AttentionMass attention_mass_fraction(const ImageF64& map, const std::vector<Rect>& boxes);

/// Tap attention map for one ROI-sized input, upsampled bilinearly to
/// (out_size x out_size) and min-max scaled to [0,1].
ImageF64 upsample_attention(const std::vector<double>& map_values, int map_h, int map_w,
                            int out_size);

}  // namespace pfoa::nn
