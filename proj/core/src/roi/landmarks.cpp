#include "pfoa/roi/landmarks.hpp"

#include <cmath>

#include "pfoa/common/error.hpp"

namespace pfoa::roi {

Point centroid(const LandmarkSet& landmarks) {
    double sx = 0.0, sy = 0.0;
    for (const Point& p : landmarks.points) {
        sx += p.x;
        sy += p.y;
    }
    const double n = static_cast<double>(landmarks.points.size());
    return {sx / n, sy / n};
}

double patellar_axis_angle(const LandmarkSet& landmarks) {
    const std::size_t n = landmarks.points.size();
    if (n < 3)
        throw GeometryError("patellar axis needs >= 3 landmarks, got " + std::to_string(n));

    const Point c = centroid(landmarks);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const Point& p : landmarks.points) {
        const double dx = p.x - c.x, dy = p.y - c.y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    sxx /= static_cast<double>(n);
    sxy /= static_cast<double>(n);
    syy /= static_cast<double>(n);

    const double tr_half = 0.5 * (sxx + syy);
    const double det_root = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
    const double lam1 = tr_half + det_root;
    const double lam2 = tr_half - det_root;
    if (lam1 <= 0.0)
        throw GeometryError("degenerate landmark set: all points coincide");
    if (lam2 > 0.0 && lam1 / lam2 <= 1.01)
        throw GeometryError("landmark principal axis ill-defined (eigenvalue ratio " +
                            std::to_string(lam1 / lam2) + " <= 1.01)");

    // eigenvector for lam1; pick the better-conditioned expression
    double vx, vy;
    if (std::fabs(sxy) > 1e-300) {
        vx = sxy;
        vy = lam1 - sxx;
        if (std::fabs(vy) < std::fabs(lam1 - syy)) {
            vx = lam1 - syy;
            vy = sxy;
        }
    } else if (sxx >= syy) {
        vx = 1.0;
        vy = 0.0;
    } else {
        vx = 0.0;
        vy = 1.0;
    }
    if (vy < 0.0 || (vy == 0.0 && vx < 0.0)) {
        vx = -vx;
        vy = -vy;
    }
    double angle = std::atan2(vx, vy) * 180.0 / 3.14159265358979323846;
    if (angle <= -90.0) angle += 180.0;
    if (angle > 90.0) angle -= 180.0;
    return angle;
}

LandmarkSet rotate_landmarks(const LandmarkSet& landmarks, double theta_deg,
                             const Point& center) {
    LandmarkSet out;
    out.points.reserve(landmarks.points.size());
    for (const Point& p : landmarks.points)
        out.points.push_back(rotate_point(p, theta_deg, center));
    return out;
}

}  // namespace pfoa::roi
