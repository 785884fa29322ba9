#include "pfoa/stats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pfoa/common/error.hpp"

namespace pfoa::stats {

namespace {

void check_labels(const ScoredSet& s, bool need_both_classes, bool need_positive) {
    if (s.scores.size() != s.labels.size())
        throw ValidationError("scores/labels length mismatch: " +
                              std::to_string(s.scores.size()) + " vs " +
                              std::to_string(s.labels.size()));
    if (s.scores.empty()) throw MetricError("empty scored set");
    std::size_t pos = 0, neg = 0;
    for (int y : s.labels) {
        if (y != 0 && y != 1)
            throw ValidationError("label outside {0,1}: " + std::to_string(y));
        (y == 1 ? pos : neg)++;
    }
    if (need_positive && pos == 0) throw MetricError("no positive labels");
    if (need_both_classes && (pos == 0 || neg == 0))
        throw MetricError("both classes required: " + std::to_string(pos) +
                          " positives, " + std::to_string(neg) + " negatives");
}

/// Midranks of v (1-based, ties get the average rank of their block).
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

}  // namespace

double auc(const ScoredSet& s) {
    check_labels(s, /*need_both_classes=*/true, /*need_positive=*/true);
    const auto rank = midranks(s.scores);
    double pos_rank_sum = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i] == 1) {
            pos_rank_sum += rank[i];
            ++m;
        }
    }
    const std::size_t n = s.labels.size() - m;
    return (pos_rank_sum - 0.5 * static_cast<double>(m) * static_cast<double>(m + 1)) /
           (static_cast<double>(m) * static_cast<double>(n));
}

std::vector<RocPoint> roc_points(const ScoredSet& s) {
    check_labels(s, true, true);
    const std::size_t n = s.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s.scores[a] > s.scores[b];
    });
    double total_pos = 0, total_neg = 0;
    for (int y : s.labels) (y == 1 ? total_pos : total_neg) += 1.0;

    std::vector<RocPoint> pts;
    pts.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double t = s.scores[order[i]];
        // consume the whole tie group before emitting a point
        while (i < n && s.scores[order[i]] == t) {
            (s.labels[order[i]] == 1 ? tp : fp) += 1.0;
            ++i;
        }
        pts.push_back({t, fp / total_neg, tp / total_pos});
    }
    return pts;
}

namespace {

std::vector<PrPoint> pr_points_impl(const ScoredSet& s) {
    const std::size_t n = s.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s.scores[a] > s.scores[b];
    });
    double total_pos = 0;
    for (int y : s.labels) total_pos += (y == 1);

    std::vector<PrPoint> pts;
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        const double t = s.scores[order[i]];
        while (i < n && s.scores[order[i]] == t) {
            (s.labels[order[i]] == 1 ? tp : fp) += 1.0;
            ++i;
        }
        pts.push_back({t, tp / total_pos, tp / (tp + fp)});
    }
    return pts;
}

}  // namespace

std::vector<PrPoint> pr_points(const ScoredSet& s) {
    check_labels(s, /*need_both_classes=*/true, /*need_positive=*/true);
    return pr_points_impl(s);
}

double average_precision(const ScoredSet& s) {
    check_labels(s, /*need_both_classes=*/false, /*need_positive=*/true);
    double ap = 0.0, prev_recall = 0.0;
    for (const auto& p : pr_points_impl(s)) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

double brier(const ScoredSet& s) {
    if (s.scores.size() != s.labels.size())
        throw ValidationError("scores/labels length mismatch");
    if (s.scores.empty()) throw MetricError("empty scored set");
    double acc = 0.0;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
        const double p = s.scores[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("brier score input outside [0,1]: " + std::to_string(p));
        const int y = s.labels[i];
        if (y != 0 && y != 1)
            throw ValidationError("label outside {0,1}: " + std::to_string(y));
        const double d = p - static_cast<double>(y);
        acc += d * d;
    }
    return acc / static_cast<double>(s.scores.size());
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * 0.5 *
                (points[i].tpr + points[i - 1].tpr);
    }
    return area;
}

}  // namespace pfoa::stats
