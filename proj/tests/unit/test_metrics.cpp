#include <doctest.h>

#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/stats/metrics.hpp"
#include "support/oracles.hpp"

using namespace pfoa;
using stats::ScoredSet;

TEST_CASE("auc hand case: pos {0.8,0.4} vs neg {0.6,0.2} = 0.75") {
    ScoredSet s{{0.8, 0.4, 0.6, 0.2}, {1, 1, 0, 0}, {}};
    CHECK(stats::auc(s) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc: perfectly separated scores give 1.0, all-equal give 0.5") {
    ScoredSet sep{{0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, {}};
    CHECK(stats::auc(sep) == doctest::Approx(1.0));
    ScoredSet tied{{0.5, 0.5, 0.5, 0.5}, {1, 1, 0, 0}, {}};
    CHECK(stats::auc(tied) == doctest::Approx(0.5));
}

TEST_CASE("auc rejects single-class input") {
    ScoredSet s{{0.3, 0.4}, {1, 1}, {}};
    CHECK_THROWS_AS(stats::auc(s), MetricError);
}

TEST_CASE("auc equals pairwise oracle and trapezoid area on tied random sets") {
    Rng rng(12345);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 4 + static_cast<int>(rng.uniform_int(0, 46));
        ScoredSet s;
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < n; ++i) {
            // quantized scores force plenty of ties
            s.scores.push_back(std::round(rng.uniform(0.0, 1.0) * 8.0) / 8.0);
            const int y = rng.bernoulli(0.4) ? 1 : 0;
            s.labels.push_back(y);
            (y ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        const double a = stats::auc(s);
        CHECK(std::fabs(a - oracles::pairwise_auc(s.scores, s.labels)) < 1e-12);
        CHECK(std::fabs(a - stats::trapezoid_auc(stats::roc_points(s))) < 1e-12);
    }
}

TEST_CASE("roc anchors at (0,0), reaches (1,1), perfect classifier passes (0,1)") {
    ScoredSet s{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, {}};
    const auto pts = stats::roc_points(s);
    CHECK(pts.front().fpr == 0.0);
    CHECK(pts.front().tpr == 0.0);
    CHECK(pts.back().fpr == 1.0);
    CHECK(pts.back().tpr == 1.0);
    bool hits_corner = false;
    for (const auto& p : pts) hits_corner |= (p.fpr == 0.0 && p.tpr == 1.0);
    CHECK(hits_corner);
}

TEST_CASE("roc of label-independent scores lands near 0.5") {
    Rng rng(99);
    ScoredSet s;
    for (int i = 0; i < 1000; ++i) {
        s.scores.push_back(rng.uniform());
        s.labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
    }
    const double a = stats::trapezoid_auc(stats::roc_points(s));
    CHECK(a > 0.45);
    CHECK(a < 0.55);
}

TEST_CASE("average precision: step-sum hand case (1 + 2/3)/2") {
    ScoredSet s{{0.9, 0.8, 0.7}, {1, 0, 1}, {}};
    CHECK(stats::average_precision(s) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("average precision: perfect ranking gives 1.0") {
    ScoredSet s{{0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, {}};
    CHECK(stats::average_precision(s) == doctest::Approx(1.0));
}

TEST_CASE("average precision of a random classifier approximates prevalence") {
    Rng rng(7);
    ScoredSet s;
    int pos = 0;
    for (int i = 0; i < 4000; ++i) {
        s.scores.push_back(rng.uniform());
        const int y = rng.bernoulli(0.12) ? 1 : 0;
        pos += y;
        s.labels.push_back(y);
    }
    const double prevalence = static_cast<double>(pos) / 4000.0;
    CHECK(stats::average_precision(s) == doctest::Approx(prevalence).epsilon(0.25));
}

TEST_CASE("pr curve endpoint at the all-positive threshold has precision = prevalence") {
    ScoredSet s{{0.9, 0.7, 0.5, 0.3}, {1, 0, 0, 1}, {}};
    const auto pts = stats::pr_points(s);
    CHECK(pts.back().recall == doctest::Approx(1.0));
    CHECK(pts.back().precision == doctest::Approx(0.5));
}

TEST_CASE("average precision requires at least one positive") {
    ScoredSet s{{0.2, 0.4}, {0, 0}, {}};
    CHECK_THROWS_AS(stats::average_precision(s), MetricError);
}

TEST_CASE("brier: hand cases and range validation") {
    CHECK(stats::brier({{0.8, 0.2}, {1, 0}, {}}) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(stats::brier({{1.0, 0.0}, {1, 0}, {}}) == doctest::Approx(0.0));
    CHECK(stats::brier({{0.5, 0.5, 0.5}, {1, 0, 1}, {}}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(stats::brier({{1.2}, {1}, {}}), ValidationError);
    CHECK_THROWS_AS(stats::brier({{-0.1}, {0}, {}}), ValidationError);
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
    Rng rng(31);
    ScoredSet s;
    for (int i = 0; i < 200; ++i) {
        s.scores.push_back(rng.normal());
        s.labels.push_back(rng.bernoulli(0.35) ? 1 : 0);
    }
    ScoredSet t = s;
    for (double& v : t.scores) v = std::exp(0.7 * v) + 3.0;
    CHECK(stats::auc(s) == doctest::Approx(stats::auc(t)).epsilon(1e-12));
    CHECK(stats::average_precision(s) ==
          doctest::Approx(stats::average_precision(t)).epsilon(1e-12));
}
