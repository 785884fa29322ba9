#pragma once

#include <vector>

#include "pfoa/common/image.hpp"

namespace pfoa::roi {

/// Anatomical landmark points outlining the patella, in source pixel coords.
struct LandmarkSet {
    std::vector<Point> points;
};

/// Signed angle in degrees, in (-90, 90], between the principal axis of the
/// landmark cloud and the vertical image axis. Errors on < 3 points or when
/// no dominant axis exists (eigenvalue ratio <= 1.01).
double patellar_axis_angle(const LandmarkSet& landmarks);

Point centroid(const LandmarkSet& landmarks);

LandmarkSet rotate_landmarks(const LandmarkSet& landmarks, double theta_deg,
                             const Point& center);

}  // namespace pfoa::roi
