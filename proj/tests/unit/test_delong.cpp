#include <doctest.h>

#include <cmath>

#include "pfoa/common/error.hpp"
#include "pfoa/common/rng.hpp"
#include "pfoa/stats/delong.hpp"
#include "support/oracles.hpp"

using namespace pfoa;

TEST_CASE("structural components match pairwise enumeration on a 3+3 hand case") {
    const std::vector<double> scores{0.9, 0.5, 0.5, 0.7, 0.5, 0.1};
    const std::vector<int> labels{1, 1, 1, 0, 0, 0};
    const auto fast = stats::delong_components(scores, labels);
    const auto brute = oracles::pairwise_components(scores, labels);
    REQUIRE(fast.v10.size() == brute.v10.size());
    REQUIRE(fast.v01.size() == brute.v01.size());
    for (std::size_t i = 0; i < brute.v10.size(); ++i)
        CHECK(fast.v10[i] == doctest::Approx(brute.v10[i]).epsilon(1e-12));
    for (std::size_t j = 0; j < brute.v01.size(); ++j)
        CHECK(fast.v01[j] == doctest::Approx(brute.v01[j]).epsilon(1e-12));
    CHECK(fast.auc == doctest::Approx(oracles::pairwise_auc(scores, labels)).epsilon(1e-12));
}

TEST_CASE("structural components match enumeration on random tied sets") {
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> scores;
        std::vector<int> labels;
        bool pos = false, neg = false;
        const int n = 6 + static_cast<int>(rng.uniform_int(0, 30));
        for (int i = 0; i < n; ++i) {
            scores.push_back(std::round(rng.uniform() * 6.0) / 6.0);
            const int y = rng.bernoulli(0.5) ? 1 : 0;
            labels.push_back(y);
            (y ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        const auto fast = stats::delong_components(scores, labels);
        const auto brute = oracles::pairwise_components(scores, labels);
        for (std::size_t i = 0; i < brute.v10.size(); ++i)
            CHECK(std::fabs(fast.v10[i] - brute.v10[i]) < 1e-12);
        for (std::size_t j = 0; j < brute.v01.size(); ++j)
            CHECK(std::fabs(fast.v01[j] - brute.v01[j]) < 1e-12);
    }
}

TEST_CASE("identical score vectors give z = 0, p = 1 exactly") {
    const std::vector<double> s{0.9, 0.2, 0.6, 0.4, 0.8, 0.3};
    const std::vector<int> y{1, 0, 1, 0, 1, 0};
    const auto r = stats::delong_test(s, s, y);
    CHECK(r.z == 0.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("delong test is antisymmetric in its arguments") {
    Rng rng(11);
    std::vector<double> a, b;
    std::vector<int> y;
    for (int i = 0; i < 120; ++i) {
        const int label = rng.bernoulli(0.4) ? 1 : 0;
        y.push_back(label);
        a.push_back(rng.normal(label * 1.0, 1.0));
        b.push_back(rng.normal(label * 0.5, 1.0));
    }
    const auto ab = stats::delong_test(a, b, y);
    const auto ba = stats::delong_test(b, a, y);
    CHECK(ab.z == doctest::Approx(-ba.z).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
}

TEST_CASE("delong rejects mismatched lengths") {
    CHECK_THROWS_AS(stats::delong_test({0.1, 0.2}, {0.1}, {1, 0}), ValidationError);
}

TEST_CASE("single-model variance tracks Monte Carlo variance (binormal AUC 0.75)") {
    // positives ~ N(mu, 1), negatives ~ N(0, 1), mu = sqrt(2) * PhiInv(0.75)
    const double mu = std::sqrt(2.0) * 0.6744897501960817;
    Rng rng(2024);
    const int sims = 600, m = 100, n = 100;
    std::vector<double> aucs;
    double mean_est_var = 0.0;
    for (int s = 0; s < sims; ++s) {
        stats::ScoredSet set;
        for (int i = 0; i < m; ++i) {
            set.scores.push_back(rng.normal(mu, 1.0));
            set.labels.push_back(1);
        }
        for (int j = 0; j < n; ++j) {
            set.scores.push_back(rng.normal(0.0, 1.0));
            set.labels.push_back(0);
        }
        const auto c = stats::delong_components(set.scores, set.labels);
        aucs.push_back(c.auc);
        mean_est_var += stats::delong_variance(set);
    }
    mean_est_var /= sims;
    double mean = 0.0;
    for (double a : aucs) mean += a;
    mean /= sims;
    double var = 0.0;
    for (double a : aucs) var += (a - mean) * (a - mean);
    var /= (sims - 1);
    CHECK(mean_est_var / var > 0.85);
    CHECK(mean_est_var / var < 1.15);
}

TEST_CASE("delong ci is clipped and ordered; large separation hugs 1.0") {
    stats::ScoredSet s;
    Rng rng(5);
    for (int i = 0; i < 400; ++i) {
        const int y = i % 2;
        s.labels.push_back(y);
        s.scores.push_back(y ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4));
    }
    const auto [lo, hi] = stats::delong_ci(s);
    CHECK(lo <= hi);
    CHECK(hi == doctest::Approx(1.0));
    CHECK(lo > 0.95);
}

TEST_CASE("normal quantile matches cdf round trip") {
    for (double p : {0.001, 0.025, 0.25, 0.5, 0.75, 0.975, 0.999}) {
        const double x = stats::normal_quantile(p);
        CHECK(stats::normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
}
