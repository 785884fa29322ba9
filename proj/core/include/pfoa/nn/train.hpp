#pragma once

#include <string>
#include <vector>

#include "pfoa/nn/model.hpp"
#include "pfoa/roi/pipeline.hpp"

namespace pfoa::nn {

struct TrainConfig {
    int batch_size = 32;
    int epochs = 45;
    double lr0 = 0.001;
    double lr_decay = 0.1;  // multiplier applied every lr_step_epochs
    int lr_step_epochs = 10;
    double momentum = 0.9;
    double focal_gamma = 2.0;
    double focal_alpha = 1.0;  // 1 disables class weighting
    std::uint64_t seed = 0;

    void validate() const;
    double lr_for_epoch(int epoch) const;  // lr0 * decay^(epoch / step)
};

struct LabeledRoi {
    roi::RoiImage roi;
    int label = 0;
    std::string knee_id;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_auc = 0.0;  // NaN when no validation set was given
};

struct TrainResult {
    std::vector<EpochStats> history;
};

/// Focal-loss SGD training: per-epoch shuffled minibatches from the seed,
/// random train-time crops, step-decayed learning rate. Deterministic for a
/// fixed seed (the conv reductions are thread-count invariant).
TrainResult train_model(AttentionNet& model, const std::vector<LabeledRoi>& train_set,
                        const std::vector<LabeledRoi>& val_set,
                        const roi::PreprocessConfig& crop_cfg, const TrainConfig& cfg);

/// Center-crop (eval mode) probabilities, batched; deterministic.
std::vector<double> predict_proba(AttentionNet& model, const std::vector<LabeledRoi>& samples,
                                  const roi::PreprocessConfig& crop_cfg, int batch_size = 32);

/// Stacks eval-mode crops into an N x 1 x C x C input tensor.
Tensor make_input_batch(const std::vector<const roi::RoiImage*>& rois,
                        const roi::PreprocessConfig& crop_cfg, roi::CropMode mode,
                        std::uint64_t seed_base, std::uint64_t stream_offset);

struct OverlayResult {
    ImageF64 heatmap;               // ROI resolution, min-max scaled to [0,1]
    std::vector<double> raw_map;    // tap-resolution attention values
    int map_h = 0, map_w = 0;
};

/// Attention map of the selected tap (default: the deeper one) for a single
/// ROI, upsampled to the ROI resolution.
OverlayResult export_attention_overlay(AttentionNet& model, const roi::RoiImage& roi,
                                       const roi::PreprocessConfig& crop_cfg, int tap_index);

/// Training history CSV: epoch, lr, train_loss, val_auc.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history);

}  // namespace pfoa::nn
