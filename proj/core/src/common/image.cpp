#include "pfoa/common/image.hpp"

#include <cmath>

namespace pfoa {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

Point rotate_point(const Point& p, double theta_deg, const Point& center) {
    const double t = theta_deg * kDegToRad;
    const double c = std::cos(t), s = std::sin(t);
    const double dx = p.x - center.x, dy = p.y - center.y;
    return {center.x + c * dx + s * dy, center.y - s * dx + c * dy};
}

double bilinear_sample(const ImageF64& img, double x, double y) {
    const int w = img.width(), h = img.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
    const double bot = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

ImageF64 rotate_image(const ImageF64& img, double theta_deg, const Point& center) {
    ImageF64 out(img.height(), img.width());
    // inverse mapping: sample the source at the back-rotated location
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const Point src = rotate_point({static_cast<double>(x), static_cast<double>(y)},
                                           -theta_deg, center);
            out.at(y, x) = bilinear_sample(img, src.x, src.y);
        }
    }
    return out;
}

ImageF64 resize_bilinear(const ImageF64& img, int out_height, int out_width) {
    ImageF64 out(out_height, out_width);
    const double sy = out_height > 1
                          ? static_cast<double>(img.height() - 1) / (out_height - 1)
                          : 0.0;
    const double sx = out_width > 1 ? static_cast<double>(img.width() - 1) / (out_width - 1) : 0.0;
    for (int y = 0; y < out_height; ++y)
        for (int x = 0; x < out_width; ++x)
            out.at(y, x) = bilinear_sample(img, x * sx, y * sy);
    return out;
}

Rect rotate_rect_aabb(const Rect& r, double theta_deg, const Point& center) {
    const Point corners[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x0, r.y1}, {r.x1, r.y1}};
    Rect out;
    bool first = true;
    for (const Point& c : corners) {
        const Point p = rotate_point(c, theta_deg, center);
        if (first) {
            out = {p.x, p.y, p.x, p.y};
            first = false;
        } else {
            out.x0 = std::min(out.x0, p.x);
            out.y0 = std::min(out.y0, p.y);
            out.x1 = std::max(out.x1, p.x);
            out.y1 = std::max(out.y1, p.y);
        }
    }
    return out;
}

}  // namespace pfoa
