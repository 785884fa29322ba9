#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/synth/cohort.hpp"

namespace pfoa::synth {

namespace {

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

struct Geometry {
    double cx, cy;      // patella center
    double a, b;        // ellipse semi-axes (b vertical, b > a)
    double gap0;        // joint-space width at the equator
    double theta;       // global rotation, degrees
};

void add_blob(ImageF64& img, double cx, double cy, double sigma, double amp) {
    const int x0 = std::max(0, static_cast<int>(cx - 4 * sigma));
    const int x1 = std::min(img.width() - 1, static_cast<int>(cx + 4 * sigma));
    const int y0 = std::max(0, static_cast<int>(cy - 4 * sigma));
    const int y1 = std::min(img.height() - 1, static_cast<int>(cy + 4 * sigma));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            img.at(y, x) += amp * std::exp(-(dx * dx + dy * dy) * inv);
        }
}

}  // namespace

RenderedKnee render_knee_image(const CohortRecord& record, const SynthConfig& config,
                               double rotation_deg) {
    config.validate();
    const int S = config.image_size;
    Rng geo_rng(record.render_seed, 1);

    Geometry g;
    g.cx = 0.38 * S;
    g.cy = 0.50 * S;
    g.b = 0.16 * S * (1.0 + 0.08 * geo_rng.uniform(-1.0, 1.0));
    g.a = 0.55 * g.b * (1.0 + 0.05 * geo_rng.uniform(-1.0, 1.0));
    g.theta = rotation_deg;
    // JSN grade shrinks the joint space toward the femur
    g.gap0 = 0.16 * g.b * (1.0 - 0.22 * record.latent.jsn);

    ImageF64 img(S, S);
    for (int y = 0; y < S; ++y) {
        const double grad = 0.05 * static_cast<double>(y) / S;
        for (int x = 0; x < S; ++x) img.at(y, x) = 0.10 + grad;
    }

    // femoral trochlea: bright bone mass behind the joint space
    for (int y = 0; y < S; ++y) {
        const double t = (y - g.cy) / g.b;
        const double gap = g.gap0 * (1.0 + 0.6 * t * t);
        const double edge_x = g.cx + g.a + gap;
        for (int x = 0; x < S; ++x) {
            if (x + 3.0 < edge_x) continue;
            const double cover = smoothstep01((x - edge_x) / 1.5 + 0.5);
            img.at(y, x) += 0.38 * cover;
        }
    }

    // patellar ellipse with a brighter cortical rim
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const double ex = (x - g.cx) / g.a;
            const double ey = (y - g.cy) / g.b;
            const double r = std::sqrt(ex * ex + ey * ey);
            const double signed_dist = (1.0 - r) * std::min(g.a, g.b);
            const double cover = smoothstep01(signed_dist / 1.5 + 0.5);
            if (cover <= 0.0) continue;
            double v = 0.42;
            if (std::fabs(r - 0.90) < 0.10) v += 0.12;  // rim
            img.at(y, x) += v * cover;
        }

    RenderedKnee out;

    // joint-space band box (always present: the normal-width band is the
    // baseline "lesion" region of interest)
    const double band_gap_max = g.gap0 * 1.6;
    out.lesion_boxes.push_back(
        {g.cx + g.a - 2.0, g.cy - g.b, g.cx + g.a + band_gap_max + 2.0, g.cy + g.b});

    // osteophyte blobs at the inferior/superior patellar poles
    const int ost = record.latent.osteophyte;
    if (ost >= 1) {
        const double grade = static_cast<double>(ost);
        const double sigma_inf = (0.010 + 0.007 * grade) * S;
        const double amp = config.lesion_contrast * (0.45 + 0.18 * grade);
        const double bx = g.cx + 0.35 * g.a;
        const double by_inf = g.cy + g.b + 0.6 * sigma_inf;
        add_blob(img, bx, by_inf, sigma_inf, amp);
        out.lesion_boxes.push_back({bx - 2.2 * sigma_inf, by_inf - 2.2 * sigma_inf,
                                    bx + 2.2 * sigma_inf, by_inf + 2.2 * sigma_inf});

        const double sigma_sup = 0.7 * sigma_inf;
        const double by_sup = g.cy - g.b - 0.6 * sigma_sup;
        add_blob(img, bx, by_sup, sigma_sup, 0.8 * amp);
        out.lesion_boxes.push_back({bx - 2.2 * sigma_sup, by_sup - 2.2 * sigma_sup,
                                    bx + 2.2 * sigma_sup, by_sup + 2.2 * sigma_sup});
    }

    // landmark points on the patellar outline, superior pole first
    out.landmarks.points.reserve(static_cast<std::size_t>(config.n_landmarks));
    for (int k = 0; k < config.n_landmarks; ++k) {
        const double phi = 2.0 * 3.14159265358979323846 * k / config.n_landmarks;
        out.landmarks.points.push_back(
            {g.cx + g.a * std::sin(phi), g.cy - g.b * std::cos(phi)});
    }

    // global rotation about the patella center
    const Point center{g.cx, g.cy};
    if (g.theta != 0.0) {
        img = rotate_image(img, g.theta, center);
        out.landmarks = roi::rotate_landmarks(out.landmarks, g.theta, center);
        for (Rect& r : out.lesion_boxes) r = rotate_rect_aabb(r, g.theta, center);
    }

    // pixel noise after rotation, then clamp to [0,1]
    Rng noise_rng(record.render_seed, 2);
    for (double& v : img.data()) {
        v += noise_rng.normal(0.0, config.pixel_noise);
        v = std::clamp(v, 0.0, 1.0);
    }

    // right knees are imaged mirrored
    if (record.side == roi::Side::kRight) {
        img = roi::flip_horizontal(img);
        const double last = static_cast<double>(S - 1);
        for (Point& p : out.landmarks.points) p.x = last - p.x;
        for (Rect& r : out.lesion_boxes) {
            const double nx0 = last - r.x1, nx1 = last - r.x0;
            r.x0 = nx0;
            r.x1 = nx1;
        }
    }

    out.image = std::move(img);
    return out;
}

RenderedKnee render_knee_image(const CohortRecord& record, const SynthConfig& config) {
    Rng rng(record.render_seed, 3);
    return render_knee_image(record, config, rng.uniform(-15.0, 15.0));
}

}  // namespace pfoa::synth
