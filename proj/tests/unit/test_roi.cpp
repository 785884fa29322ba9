#include <doctest.h>

#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/roi/pipeline.hpp"
#include "pfoa/synth/cohort.hpp"
#include "support/oracles.hpp"

using namespace pfoa;
using roi::LandmarkSet;
using roi::PreprocessConfig;

namespace {

LandmarkSet vertical_segment() {
    LandmarkSet lm;
    for (int i = 0; i <= 6; ++i) lm.points.push_back({50.0, 20.0 + 10.0 * i});
    return lm;
}

LandmarkSet rotated(const LandmarkSet& lm, double deg, const Point& c) {
    return roi::rotate_landmarks(lm, deg, c);
}

}  // namespace

TEST_CASE("axis angle: vertical segment is 0 degrees") {
    CHECK(roi::patellar_axis_angle(vertical_segment()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("axis angle: rotating the segment by +10 degrees reads back 10") {
    const auto lm = rotated(vertical_segment(), 10.0, {50.0, 50.0});
    CHECK(roi::patellar_axis_angle(lm) == doctest::Approx(10.0).epsilon(1e-6));
    const auto lm_neg = rotated(vertical_segment(), -37.5, {10.0, 90.0});
    CHECK(roi::patellar_axis_angle(lm_neg) == doctest::Approx(-37.5).epsilon(1e-6));
}

TEST_CASE("axis angle: degenerate landmark sets are rejected") {
    LandmarkSet same;
    for (int i = 0; i < 5; ++i) same.points.push_back({33.0, 44.0});
    CHECK_THROWS_AS(roi::patellar_axis_angle(same), GeometryError);

    LandmarkSet two;
    two.points = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(roi::patellar_axis_angle(two), GeometryError);

    LandmarkSet isotropic;  // perfect circle: no dominant axis
    for (int i = 0; i < 16; ++i) {
        const double t = 2.0 * M_PI * i / 16.0;
        isotropic.points.push_back({50 + 10 * std::cos(t), 50 + 10 * std::sin(t)});
    }
    CHECK_THROWS_AS(roi::patellar_axis_angle(isotropic), GeometryError);
}

TEST_CASE("align_rotation: zero angle is pixel-identical; rotated input realigns") {
    ImageF64 img(100, 100);
    Rng rng(1);
    for (double& v : img.data()) v = rng.uniform();

    const LandmarkSet lm = vertical_segment();
    const auto aligned = roi::align_rotation(img, lm);
    CHECK(aligned.image == img);
    CHECK(aligned.rotation_applied == 0.0);

    const auto lm10 = rotated(lm, 10.0, {50.0, 50.0});
    const auto re = roi::align_rotation(img, lm10);
    CHECK(std::fabs(roi::patellar_axis_angle(re.landmarks)) < 0.01);

    // second alignment is a near-identity rotation
    const auto re2 = roi::align_rotation(re.image, re.landmarks);
    CHECK(std::fabs(re2.rotation_applied) < 0.01);
}

TEST_CASE("align_rotation rejects out-of-bounds landmarks") {
    ImageF64 img(40, 40);
    LandmarkSet lm = vertical_segment();  // y up to 80 > 39
    CHECK_THROWS_AS(roi::align_rotation(img, lm), GeometryError);
}

TEST_CASE("compute_roi_box: side = h + 2*margin, anchored with margin") {
    LandmarkSet lm;
    lm.points = {{60.0, 40.0}, {50.0, 90.0}, {55.0, 140.0}, {70.0, 90.0}};  // h = 100
    PreprocessConfig cfg;
    cfg.margin_px = 20;
    const auto box = roi::compute_roi_box(lm, cfg);
    CHECK(box.side == 140);
    CHECK(box.x == 50 - 20);
    CHECK(box.y == 40 - 20);

    // doubling the patella height scales the box side proportionally
    for (auto& p : lm.points) p.y = 40.0 + (p.y - 40.0) * 2.0;
    const auto box2 = roi::compute_roi_box(lm, cfg);
    CHECK(box2.side == 240);
}

TEST_CASE("compute_roi_box on randomized landmark sets keeps side = round(h) + 2*margin") {
    Rng rng(2);
    PreprocessConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        cfg.margin_px = static_cast<int>(rng.uniform_int(0, 40));
        LandmarkSet lm;
        const int n = 4 + static_cast<int>(rng.uniform_int(0, 12));
        for (int i = 0; i < n; ++i)
            lm.points.push_back({rng.uniform(10, 200), rng.uniform(10, 200)});
        double min_y = lm.points[0].y, max_y = lm.points[0].y;
        for (const auto& p : lm.points) {
            min_y = std::min(min_y, p.y);
            max_y = std::max(max_y, p.y);
        }
        const int expected = static_cast<int>(std::lround(max_y - min_y)) + 2 * cfg.margin_px;
        if (expected < 32) {
            CHECK_THROWS_AS(roi::compute_roi_box(lm, cfg), GeometryError);
        } else {
            CHECK(roi::compute_roi_box(lm, cfg).side == expected);
        }
    }
}

TEST_CASE("extract_roi: left crop equals raw subimage; border requests stay square") {
    ImageF64 img(60, 60);
    Rng rng(3);
    for (double& v : img.data()) v = rng.uniform();

    const roi::RoiBox box{10, 5, 40};
    const auto left = roi::extract_roi(img, box, roi::Side::kLeft);
    CHECK(left.pixels.width() == 40);
    CHECK(left.pixels.height() == 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) CHECK(left.pixels.at(y, x) == img.at(5 + y, 10 + x));

    // box hanging past the border: replicated edges, still square
    const roi::RoiBox edge_box{-12, 40, 40};
    const auto edge = roi::extract_roi(img, edge_box, roi::Side::kLeft);
    CHECK(edge.pixels.width() == 40);
    CHECK(edge.pixels.at(0, 0) == img.at(40, 0));    // x clamped
    CHECK(edge.pixels.at(39, 0) == img.at(59, 0));   // y clamped
}

TEST_CASE("extract_roi: right knees mirror columns; flip is an involution") {
    ImageF64 img(50, 50);
    Rng rng(4);
    for (double& v : img.data()) v = rng.uniform();
    const roi::RoiBox box{5, 5, 30};

    const auto left = roi::extract_roi(img, box, roi::Side::kLeft);
    const auto right = roi::extract_roi(img, box, roi::Side::kRight);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            CHECK(right.pixels.at(y, x) == left.pixels.at(y, 29 - x));

    CHECK(roi::flip_horizontal(roi::flip_horizontal(left.pixels)) == left.pixels);
}

TEST_CASE("extract_roi transforms lesion boxes with the crop and mirror") {
    ImageF64 img(50, 50, 0.5);
    const roi::RoiBox box{10, 10, 20};
    const std::vector<Rect> boxes{{12.0, 14.0, 16.0, 18.0}};
    const auto left = roi::extract_roi(img, box, roi::Side::kLeft, boxes);
    CHECK(left.lesion_boxes[0].x0 == doctest::Approx(2.0));
    CHECK(left.lesion_boxes[0].y0 == doctest::Approx(4.0));

    const auto right = roi::extract_roi(img, box, roi::Side::kRight, boxes);
    CHECK(right.lesion_boxes[0].x0 == doctest::Approx(19.0 - 6.0));
    CHECK(right.lesion_boxes[0].x1 == doctest::Approx(19.0 - 2.0));
    CHECK(right.lesion_boxes[0].y0 == doctest::Approx(4.0));
}

TEST_CASE("normalize_intensity: constant input maps to zeros") {
    ImageF64 img(8, 8, 3.7);
    roi::normalize_intensity(img, PreprocessConfig{});
    for (double v : img.data()) CHECK(v == 0.0);
}

TEST_CASE("normalize_intensity: clamp to [P5, P99], then exact zero mean unit std") {
    ImageF64 img(10, 10);
    for (int i = 0; i < 100; ++i) img.data()[static_cast<std::size_t>(i)] = i;  // 0..99 uniform
    const double p5 = oracles::sorted_percentile(img.data(), 5.0);
    const double p99 = oracles::sorted_percentile(img.data(), 99.0);
    CHECK(p5 == doctest::Approx(4.95));
    CHECK(p99 == doctest::Approx(98.01));

    roi::normalize_intensity(img, PreprocessConfig{});
    double mean = 0.0;
    for (double v : img.data()) mean += v;
    mean /= 100.0;
    double var = 0.0;
    for (double v : img.data()) var += (v - mean) * (v - mean);
    var /= 100.0;
    CHECK(std::fabs(mean) < 1e-9);
    CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
}

TEST_CASE("normalize_intensity clamps a huge outlier to P99") {
    ImageF64 img(10, 10);
    Rng rng(5);
    for (double& v : img.data()) v = rng.uniform(0.0, 1.0);
    img.at(0, 0) = 1e6;
    roi::normalize_intensity(img, PreprocessConfig{});
    double hi = -1e300;
    for (double v : img.data()) hi = std::max(hi, v);
    CHECK(hi < 5.0);
}

TEST_CASE("percentile matches the sort-based oracle on random arrays") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 9999));
        std::vector<double> v(static_cast<std::size_t>(n));
        for (double& x : v) x = std::round(rng.normal() * 50.0) / 10.0;  // with ties
        const double p = rng.uniform(0.0, 100.0);
        CHECK(roi::percentile(v, p) == oracles::sorted_percentile(v, p));
    }
}

TEST_CASE("resize_and_crop: eval is deterministic, train is seed-reproducible") {
    roi::RoiImage r;
    r.pixels = ImageF64(81, 81);
    Rng rng(7);
    for (double& v : r.pixels.data()) v = rng.uniform();
    PreprocessConfig cfg;
    cfg.resize_to = 72;
    cfg.crop_to = 64;

    const auto e1 = roi::resize_and_crop(r, cfg, roi::CropMode::kEval, 1);
    const auto e2 = roi::resize_and_crop(r, cfg, roi::CropMode::kEval, 999);
    CHECK(e1.pixels == e2.pixels);
    CHECK(e1.offset_x == (72 - 64) / 2);

    const auto t1 = roi::resize_and_crop(r, cfg, roi::CropMode::kTrain, 42);
    const auto t2 = roi::resize_and_crop(r, cfg, roi::CropMode::kTrain, 42);
    CHECK(t1.pixels == t2.pixels);
    CHECK(t1.offset_x == t2.offset_x);
}

TEST_CASE("resize_and_crop preserves constant fields") {
    roi::RoiImage r;
    r.pixels = ImageF64(100, 100, 0.37);
    PreprocessConfig cfg;
    const auto c = roi::resize_and_crop(r, cfg, roi::CropMode::kTrain, 5);
    CHECK(c.pixels.width() == cfg.crop_to);
    for (double v : c.pixels.data()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("train crops cover the documented offset range") {
    roi::RoiImage r;
    r.pixels = ImageF64(256, 256, 0.0);
    PreprocessConfig cfg;  // 256 -> 224, play = 32
    int lo = 1000, hi = -1;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto c = roi::resize_and_crop(r, cfg, roi::CropMode::kTrain, seed);
        lo = std::min(lo, c.offset_x);
        hi = std::max(hi, c.offset_x);
        CHECK(c.offset_x >= 0);
        CHECK(c.offset_x <= 32);
    }
    CHECK(lo == 0);
    CHECK(hi == 32);
}

TEST_CASE("end-to-end pipeline is equivariant to input rotation") {
    // render one knee, rotate the whole scene, run the pipeline on both
    synth::SynthConfig cfg;
    cfg.image_size = 160;
    cfg.pixel_noise = 0.0;  // noise would differ pixelwise after rotation
    synth::CohortRecord rec;
    rec.subject_id = "S0";
    rec.render_seed = 77;
    rec.latent.osteophyte = 2;
    rec.latent.jsn = 1;

    const auto base = synth::render_knee_image(rec, cfg, 0.0);
    PreprocessConfig pp;
    pp.resize_to = 72;
    pp.crop_to = 64;
    const auto roi_base =
        roi::preprocess_knee(base.image, base.landmarks, roi::Side::kLeft, pp);

    for (double theta : {-15.0, -7.0, 8.0, 15.0}) {
        const auto turned = synth::render_knee_image(rec, cfg, theta);
        const auto roi_turned =
            roi::preprocess_knee(turned.image, turned.landmarks, roi::Side::kLeft, pp);
        REQUIRE(roi_turned.pixels.width() == roi_base.pixels.width());
        double mad = 0.0;
        for (std::size_t i = 0; i < roi_base.pixels.size(); ++i)
            mad += std::fabs(roi_base.pixels.data()[i] - roi_turned.pixels.data()[i]);
        mad /= static_cast<double>(roi_base.pixels.size());
        CHECK(mad < 0.05);
    }
}
