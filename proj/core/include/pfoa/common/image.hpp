#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace pfoa {

/// Row-major 2-D array; images index as (y, x).
template <typename T>
class Array2D {
public:
    Array2D() = default;
    Array2D(int height, int width, T fill = T{})
        : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Array2D&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using ImageF64 = Array2D<double>;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle, half-open semantics are NOT implied; x1/y1 are
/// inclusive bounds in pixel coordinates.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

/// Rotation convention used across the library: rotate_point(p, theta, c)
/// maps a vertical offset (0, r) from the center to (r sin theta, r cos theta),
/// i.e. the principal-axis angle reported by the landmark code equals theta.
Point rotate_point(const Point& p, double theta_deg, const Point& center);

/// Bilinear sample with edge-replicate clamping outside the image.
double bilinear_sample(const ImageF64& img, double x, double y);

/// Rotates image content by theta about the given center (inverse mapping,
/// bilinear resampling, edge-replicate padding). A feature at p moves to
/// rotate_point(p, theta, center).
ImageF64 rotate_image(const ImageF64& img, double theta_deg, const Point& center);

/// Bilinear resize to the requested size.
ImageF64 resize_bilinear(const ImageF64& img, int out_height, int out_width);

/// Axis-aligned bounding box of the rotated rectangle corners.
Rect rotate_rect_aabb(const Rect& r, double theta_deg, const Point& center);

}  // namespace pfoa
