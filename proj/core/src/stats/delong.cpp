#include "pfoa/stats/delong.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfoa/common/error.hpp"

namespace pfoa::stats {

namespace {

std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

/// Sample covariance of two equally long vectors around their means.
double sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (a[i] - ma) * (b[i] - mb);
    return acc / static_cast<double>(n - 1);
}

void check_input(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("scores/labels length mismatch: " +
                              std::to_string(scores.size()) + " vs " +
                              std::to_string(labels.size()));
    std::size_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1)
            throw ValidationError("label outside {0,1}: " + std::to_string(y));
        (y == 1 ? pos : neg)++;
    }
    if (pos == 0 || neg == 0)
        throw MetricError("both classes required for DeLong components");
}

}  // namespace

DeLongComponents delong_components(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    check_input(scores, labels);
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i)
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    const double m = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());

    const auto rank_all = midranks(scores);
    const auto rank_pos = midranks(pos);
    const auto rank_neg = midranks(neg);

    DeLongComponents c;
    c.v10.resize(pos.size());
    c.v01.resize(neg.size());
    std::size_t ip = 0, in = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) {
            c.v10[ip] = (rank_all[i] - rank_pos[ip]) / n;
            ++ip;
        } else {
            c.v01[in] = 1.0 - (rank_all[i] - rank_neg[in]) / m;
            ++in;
        }
    }
    double acc = 0.0;
    for (double v : c.v10) acc += v;
    c.auc = acc / m;
    return c;
}

DeLongResult delong_test(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b,
                         const std::vector<int>& labels) {
    if (scores_a.size() != scores_b.size())
        throw ValidationError("score vectors differ in length: " +
                              std::to_string(scores_a.size()) + " vs " +
                              std::to_string(scores_b.size()));
    const auto ca = delong_components(scores_a, labels);
    const auto cb = delong_components(scores_b, labels);
    const double m = static_cast<double>(ca.v10.size());
    const double n = static_cast<double>(ca.v01.size());

    DeLongResult r;
    r.auc_a = ca.auc;
    r.auc_b = cb.auc;
    r.var_a = sample_cov(ca.v10, ca.v10) / m + sample_cov(ca.v01, ca.v01) / n;
    r.var_b = sample_cov(cb.v10, cb.v10) / m + sample_cov(cb.v01, cb.v01) / n;
    r.cov_ab = sample_cov(ca.v10, cb.v10) / m + sample_cov(ca.v01, cb.v01) / n;

    const double diff = r.auc_a - r.auc_b;
    double var_diff = r.var_a + r.var_b - 2.0 * r.cov_ab;
    if (var_diff < 0.0) var_diff = 0.0;  // guard numerical round-off
    if (var_diff == 0.0) {
        if (diff == 0.0) {
            r.z = 0.0;
            r.p_value = 1.0;
        } else {
            r.z = diff > 0 ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.z = diff / std::sqrt(var_diff);
    r.p_value = 2.0 * (1.0 - normal_cdf(std::fabs(r.z)));
    return r;
}

double delong_variance(const ScoredSet& s) {
    const auto c = delong_components(s.scores, s.labels);
    const double m = static_cast<double>(c.v10.size());
    const double n = static_cast<double>(c.v01.size());
    return sample_cov(c.v10, c.v10) / m + sample_cov(c.v01, c.v01) / n;
}

std::pair<double, double> delong_ci(const ScoredSet& s, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("confidence level outside (0,1): " + std::to_string(level));
    const auto c = delong_components(s.scores, s.labels);
    const double m = static_cast<double>(c.v10.size());
    const double n = static_cast<double>(c.v01.size());
    const double var = sample_cov(c.v10, c.v10) / m + sample_cov(c.v01, c.v01) / n;
    const double zq = normal_quantile(0.5 + level / 2.0);
    const double half = zq * std::sqrt(std::max(var, 0.0));
    return {std::max(0.0, c.auc - half), std::min(1.0, c.auc + half)};
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ValidationError("quantile argument outside (0,1): " + std::to_string(p));

    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley refinement step
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

}  // namespace pfoa::stats
