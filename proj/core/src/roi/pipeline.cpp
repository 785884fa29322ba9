#include "pfoa/roi/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"

namespace pfoa::roi {

void PreprocessConfig::validate() const {
    if (margin_px < 0) throw ConfigError("margin_px must be >= 0");
    if (!(0.0 <= p_low && p_low < p_high && p_high <= 100.0))
        throw ConfigError("percentiles must satisfy 0 <= p_low < p_high <= 100, got " +
                          std::to_string(p_low) + ", " + std::to_string(p_high));
    if (crop_to > resize_to)
        throw ConfigError("crop_to " + std::to_string(crop_to) + " exceeds resize_to " +
                          std::to_string(resize_to));
    if (crop_to <= 0) throw ConfigError("crop_to must be positive");
}

AlignResult align_rotation(const ImageF64& image, const LandmarkSet& landmarks) {
    for (const Point& p : landmarks.points) {
        if (p.x < 0.0 || p.x > image.width() - 1.0 || p.y < 0.0 || p.y > image.height() - 1.0)
            throw GeometryError("landmark outside image bounds: (" + std::to_string(p.x) + ", " +
                                std::to_string(p.y) + ")");
    }
    const double angle = patellar_axis_angle(landmarks);
    const Point c = centroid(landmarks);
    AlignResult out;
    out.rotation_applied = -angle;
    if (angle == 0.0) {
        out.image = image;  // identity rotation keeps pixels bit-exact
        out.landmarks = landmarks;
        return out;
    }
    out.image = rotate_image(image, -angle, c);
    out.landmarks = rotate_landmarks(landmarks, -angle, c);
    return out;
}

RoiBox compute_roi_box(const LandmarkSet& aligned_landmarks, const PreprocessConfig& cfg) {
    cfg.validate();
    if (aligned_landmarks.points.empty()) throw GeometryError("empty landmark set");
    double min_x = aligned_landmarks.points[0].x, min_y = aligned_landmarks.points[0].y;
    double max_y = min_y;
    for (const Point& p : aligned_landmarks.points) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double height = max_y - min_y;
    RoiBox box;
    box.side = static_cast<int>(std::lround(height)) + 2 * cfg.margin_px;
    if (box.side < 32)
        throw GeometryError("ROI side " + std::to_string(box.side) + " px is below 32 px");
    box.x = static_cast<int>(std::lround(min_x)) - cfg.margin_px;
    box.y = static_cast<int>(std::lround(min_y)) - cfg.margin_px;
    return box;
}

ImageF64 flip_horizontal(const ImageF64& img) {
    ImageF64 out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(y, img.width() - 1 - x);
    return out;
}

RoiImage extract_roi(const ImageF64& image, const RoiBox& box, Side side,
                     const std::vector<Rect>& lesion_boxes) {
    if (box.side <= 0) throw GeometryError("empty ROI box");
    RoiImage out;
    out.source_side = side;
    out.box = box;
    out.pixels = ImageF64(box.side, box.side);
    const int h = image.height(), w = image.width();
    for (int y = 0; y < box.side; ++y) {
        const int sy = std::clamp(box.y + y, 0, h - 1);  // edge-replicate
        for (int x = 0; x < box.side; ++x) {
            const int sx = std::clamp(box.x + x, 0, w - 1);
            out.pixels.at(y, x) = image.at(sy, sx);
        }
    }
    if (side == Side::kRight) out.pixels = flip_horizontal(out.pixels);

    const double last = static_cast<double>(box.side - 1);
    for (const Rect& r : lesion_boxes) {
        Rect t{r.x0 - box.x, r.y0 - box.y, r.x1 - box.x, r.y1 - box.y};
        if (side == Side::kRight) {
            const double nx0 = last - t.x1;
            const double nx1 = last - t.x0;
            t.x0 = nx0;
            t.x1 = nx1;
        }
        out.lesion_boxes.push_back(t);
    }
    return out;
}

double percentile(const std::vector<double>& values, double p) {
    if (values.empty()) throw ValidationError("percentile of empty array");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void normalize_intensity(ImageF64& pixels, const PreprocessConfig& cfg) {
    cfg.validate();
    if (pixels.empty()) throw ValidationError("normalize_intensity on empty image");
    auto& v = pixels.data();
    const double lo = percentile(v, cfg.p_low);
    const double hi = percentile(v, cfg.p_high);
    for (double& x : v) x = std::clamp(x, lo, hi);

    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double stddev = std::sqrt(var);
    if (stddev < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    for (double& x : v) x = (x - mean) / stddev;
}

CropResult resize_and_crop(const RoiImage& roi, const PreprocessConfig& cfg, CropMode mode,
                           std::uint64_t seed) {
    cfg.validate();
    CropResult out;
    const int src = roi.pixels.width();
    ImageF64 resized = (src == cfg.resize_to) ? roi.pixels
                                              : resize_bilinear(roi.pixels, cfg.resize_to,
                                                                cfg.resize_to);
    const int play = cfg.resize_to - cfg.crop_to;
    if (mode == CropMode::kTrain) {
        Rng rng(seed);
        out.offset_x = static_cast<int>(rng.uniform_int(0, play));
        out.offset_y = static_cast<int>(rng.uniform_int(0, play));
    } else {
        out.offset_x = play / 2;
        out.offset_y = play / 2;
    }
    out.pixels = ImageF64(cfg.crop_to, cfg.crop_to);
    for (int y = 0; y < cfg.crop_to; ++y)
        for (int x = 0; x < cfg.crop_to; ++x)
            out.pixels.at(y, x) = resized.at(y + out.offset_y, x + out.offset_x);

    out.scale = src > 1 ? static_cast<double>(cfg.resize_to - 1) / (src - 1) : 1.0;
    for (const Rect& r : roi.lesion_boxes) {
        Rect t{r.x0 * out.scale - out.offset_x, r.y0 * out.scale - out.offset_y,
               r.x1 * out.scale - out.offset_x, r.y1 * out.scale - out.offset_y};
        t.x0 = std::clamp(t.x0, 0.0, static_cast<double>(cfg.crop_to - 1));
        t.x1 = std::clamp(t.x1, 0.0, static_cast<double>(cfg.crop_to - 1));
        t.y0 = std::clamp(t.y0, 0.0, static_cast<double>(cfg.crop_to - 1));
        t.y1 = std::clamp(t.y1, 0.0, static_cast<double>(cfg.crop_to - 1));
        out.lesion_boxes.push_back(t);
    }
    return out;
}

RoiImage preprocess_knee(const ImageF64& image, const LandmarkSet& landmarks, Side side,
                         const PreprocessConfig& cfg, const std::vector<Rect>& lesion_boxes) {
    cfg.validate();
    AlignResult aligned = align_rotation(image, landmarks);
    std::vector<Rect> boxes;
    boxes.reserve(lesion_boxes.size());
    const Point c = centroid(landmarks);
    for (const Rect& r : lesion_boxes)
        boxes.push_back(rotate_rect_aabb(r, aligned.rotation_applied, c));

    const RoiBox box = compute_roi_box(aligned.landmarks, cfg);
    RoiImage roi = extract_roi(aligned.image, box, side, boxes);
    roi.rotation_applied = aligned.rotation_applied;
    normalize_intensity(roi.pixels, cfg);
    return roi;
}

}  // namespace pfoa::roi
