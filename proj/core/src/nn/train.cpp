#include "pfoa/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/io/csv.hpp"
#include "pfoa/nn/ops.hpp"
#include "pfoa/stats/metrics.hpp"

namespace pfoa::nn {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (lr0 <= 0.0) throw ConfigError("lr0 must be positive");
    if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be positive");
    if (lr_step_epochs < 1) throw ConfigError("lr_step_epochs must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0,1)");
    if (focal_gamma < 0.0) throw ConfigError("focal_gamma must be >= 0");
    if (!(focal_alpha > 0.0 && focal_alpha <= 1.0))
        throw ConfigError("focal_alpha must lie in (0,1]");
}

double TrainConfig::lr_for_epoch(int epoch) const {
    return lr0 * std::pow(lr_decay, epoch / lr_step_epochs);
}

Tensor make_input_batch(const std::vector<const roi::RoiImage*>& rois,
                        const roi::PreprocessConfig& crop_cfg, roi::CropMode mode,
                        std::uint64_t seed_base, std::uint64_t stream_offset) {
    const int n = static_cast<int>(rois.size());
    const int c = crop_cfg.crop_to;
    std::vector<double> values(static_cast<std::size_t>(n) * c * c);
    for (int i = 0; i < n; ++i) {
        const roi::CropResult crop = roi::resize_and_crop(
            *rois[static_cast<std::size_t>(i)], crop_cfg, mode,
            mix_seed(seed_base, stream_offset + static_cast<std::uint64_t>(i)));
        std::copy(crop.pixels.data().begin(), crop.pixels.data().end(),
                  values.begin() + static_cast<std::size_t>(i) * c * c);
    }
    return Tensor::from_values({n, 1, c, c}, std::move(values));
}

TrainResult train_model(AttentionNet& model, const std::vector<LabeledRoi>& train_set,
                        const std::vector<LabeledRoi>& val_set,
                        const roi::PreprocessConfig& crop_cfg, const TrainConfig& cfg) {
    cfg.validate();
    crop_cfg.validate();
    if (train_set.empty()) throw ValidationError("empty training set");
    std::size_t n_pos = 0;
    for (const auto& s : train_set) {
        if (s.label != 0 && s.label != 1)
            throw ValidationError("label outside {0,1}: " + std::to_string(s.label));
        n_pos += static_cast<std::size_t>(s.label);
    }
    if (n_pos == 0 || n_pos == train_set.size())
        throw ValidationError("single-class training set: " + std::to_string(n_pos) + "/" +
                              std::to_string(train_set.size()) + " positives");
    if (crop_cfg.crop_to != model.config().input_size)
        throw ConfigError("crop_to " + std::to_string(crop_cfg.crop_to) +
                          " does not match model input size " +
                          std::to_string(model.config().input_size));

    auto params = model.parameters();
    TrainResult result;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_for_epoch(epoch);
        Rng shuffle_rng(cfg.seed, 0x5u + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<const roi::RoiImage*> rois;
            std::vector<int> labels;
            rois.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                rois.push_back(&train_set[order[i]].roi);
                labels.push_back(train_set[order[i]].label);
            }
            // crop seed namespaced by (epoch, position) so every epoch sees
            // fresh augmentation, independent of the shuffle
            const std::uint64_t crop_stream =
                (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(start);
            const Tensor batch =
                make_input_batch(rois, crop_cfg, roi::CropMode::kTrain, cfg.seed, crop_stream);

            model.zero_grad();
            auto fwd = model.forward(batch);
            const Tensor loss = focal_loss(fwd.logits, labels, cfg.focal_gamma, cfg.focal_alpha);
            backward(loss);
            sgd_momentum_step(params, lr, cfg.momentum);

            loss_sum += loss.item() * static_cast<double>(end - start);
            seen += end - start;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_sum / static_cast<double>(seen);
        if (!val_set.empty()) {
            const auto probs = predict_proba(model, val_set, crop_cfg, cfg.batch_size);
            stats::ScoredSet scored;
            scored.scores = probs;
            for (const auto& s : val_set) scored.labels.push_back(s.label);
            stats.val_auc = stats::auc(scored);
        } else {
            stats.val_auc = std::numeric_limits<double>::quiet_NaN();
        }
        result.history.push_back(stats);
    }
    return result;
}

std::vector<double> predict_proba(AttentionNet& model, const std::vector<LabeledRoi>& samples,
                                  const roi::PreprocessConfig& crop_cfg, int batch_size) {
    crop_cfg.validate();
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    std::vector<double> out;
    out.reserve(samples.size());
    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<const roi::RoiImage*> rois;
        for (std::size_t i = start; i < end; ++i) rois.push_back(&samples[i].roi);
        const Tensor batch = make_input_batch(rois, crop_cfg, roi::CropMode::kEval, 0, 0);
        auto fwd = model.forward(batch);
        for (double z : fwd.logits.values()) out.push_back(1.0 / (1.0 + std::exp(-z)));
    }
    return out;
}

OverlayResult export_attention_overlay(AttentionNet& model, const roi::RoiImage& roi,
                                       const roi::PreprocessConfig& crop_cfg, int tap_index) {
    if (!model.with_attention())
        throw ValidationError("model was trained without attention; no maps to export");
    const int n_taps = static_cast<int>(model.config().attention_taps.size());
    if (tap_index < 0 || tap_index >= n_taps)
        throw ValidationError("attention tap index " + std::to_string(tap_index) +
                              " outside [0," + std::to_string(n_taps - 1) + "]");

    const Tensor batch = make_input_batch({&roi}, crop_cfg, roi::CropMode::kEval, 0, 0);
    auto fwd = model.forward(batch);
    const Tensor& map = fwd.attention_maps[static_cast<std::size_t>(tap_index)];
    OverlayResult out;
    out.map_h = map.shape()[2];
    out.map_w = map.shape()[3];
    out.raw_map = map.values();
    out.heatmap = upsample_attention(out.raw_map, out.map_h, out.map_w, roi.pixels.width());
    return out;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(history.size());
    for (const auto& h : history)
        rows.push_back({std::to_string(h.epoch), io::format_double(h.lr),
                        io::format_double(h.train_loss), io::format_double(h.val_auc)});
    io::write_csv(path, {"epoch", "lr", "train_loss", "val_auc"}, rows);
}

}  // namespace pfoa::nn
