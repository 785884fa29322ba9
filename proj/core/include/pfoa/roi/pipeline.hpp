#pragma once

#include <cstdint>
#include <vector>

#include "pfoa/common/image.hpp"
#include "pfoa/roi/landmarks.hpp"

namespace pfoa::roi {

enum class Side { kLeft, kRight };

struct PreprocessConfig {
    int margin_px = 20;    // half of the total padding added to the patellar height
    double p_low = 5.0;    // clamp percentiles
    double p_high = 99.0;
    int resize_to = 256;
    int crop_to = 224;

    void validate() const;
};

/// Integer square crop window in source pixel coordinates.
struct RoiBox {
    int x = 0;
    int y = 0;
    int side = 0;
};

/// Aligned, normalized, square patellofemoral crop (canonical left
/// orientation: the femur faces right regardless of the source side).
struct RoiImage {
    ImageF64 pixels;
    Side source_side = Side::kLeft;
    RoiBox box;
    double rotation_applied = 0.0;   // degrees applied to the source image
    std::vector<Rect> lesion_boxes;  // synthetic ground truth, crop coordinates
};

struct AlignResult {
    ImageF64 image;
    LandmarkSet landmarks;
    double rotation_applied = 0.0;
};

/// Rotates the image by -patellar_axis_angle about the landmark centroid so
/// the patella's principal axis ends up vertical; landmarks follow the same
/// rigid motion.
AlignResult align_rotation(const ImageF64& image, const LandmarkSet& landmarks);

/// Square box around the patella: side = round(height) + 2*margin, centered
/// vertically, anchored at the anterior patellar edge minus margin and
/// extended toward the femur.
RoiBox compute_roi_box(const LandmarkSet& aligned_landmarks, const PreprocessConfig& cfg);

/// Crops (edge-replicating out-of-bounds pixels) and mirrors right knees so
/// every ROI has the femur on the same side. Lesion boxes are carried through
/// the same crop/mirror transform.
RoiImage extract_roi(const ImageF64& image, const RoiBox& box, Side side,
                     const std::vector<Rect>& lesion_boxes = {});

/// Clamp to the [p_low, p_high] percentiles (linear-interpolated order
/// statistics), then shift/scale to zero mean, unit variance. Constant input
/// maps to all zeros.
void normalize_intensity(ImageF64& pixels, const PreprocessConfig& cfg);

/// Percentile with linear interpolation between order statistics.
double percentile(const std::vector<double>& values, double p);

ImageF64 flip_horizontal(const ImageF64& img);

enum class CropMode { kTrain, kEval };

struct CropResult {
    ImageF64 pixels;  // crop_to x crop_to
    int offset_x = 0;
    int offset_y = 0;
    double scale = 1.0;              // resize factor applied before cropping
    std::vector<Rect> lesion_boxes;  // boxes mapped into crop coordinates
};

/// Bilinear resize to resize_to, then crop crop_to: random offset in
/// [0, resize_to-crop_to]^2 for kTrain (seeded), center offset for kEval.
CropResult resize_and_crop(const RoiImage& roi, const PreprocessConfig& cfg, CropMode mode,
                           std::uint64_t seed);

/// Full preprocessing chain: align -> box -> extract -> normalize.
RoiImage preprocess_knee(const ImageF64& image, const LandmarkSet& landmarks, Side side,
                         const PreprocessConfig& cfg,
                         const std::vector<Rect>& lesion_boxes = {});

}  // namespace pfoa::roi
