#include "pfoa/gbm/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pfoa/common/error.hpp"

namespace pfoa::gbm {

void GbmConfig::validate() const {
    if (n_trees <= 0) throw ConfigError("n_trees must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (max_leaves < 2) throw ConfigError("max_leaves must be >= 2, got " + std::to_string(max_leaves));
    if (min_samples_leaf <= 0) throw ConfigError("min_samples_leaf must be positive");
    if (n_bins < 2) throw ConfigError("n_bins must be >= 2");
    if (lambda_l2 <= 0.0) throw ConfigError("lambda_l2 must be positive");
}

double Tree::predict_row(const std::vector<double>& row) const {
    int node = 0;
    for (;;) {
        const TreeNode& nd = nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) return nd.value;
        const double v = row[static_cast<std::size_t>(nd.feature)];
        if (is_missing(v))
            node = nd.default_left ? nd.left : nd.right;
        else
            node = (v <= nd.threshold) ? nd.left : nd.right;
    }
}

namespace {

/// Bin layout for one feature: edges[b] is the inclusive upper bound of bin b;
/// the last bin is unbounded. Edges sit at midpoints between adjacent
/// training values, so a real-valued threshold reproduces the training
/// partition exactly.
struct FeatureBins {
    std::vector<double> edges;

    int n_bins() const { return static_cast<int>(edges.size()) + 1; }

    int bin_of(double v) const {
        const auto it = std::lower_bound(edges.begin(), edges.end(), v);
        return static_cast<int>(it - edges.begin());
    }
};

FeatureBins build_bins(const std::vector<double>& column, int max_bins) {
    std::vector<double> vals;
    vals.reserve(column.size());
    for (double v : column)
        if (!is_missing(v)) vals.push_back(v);
    std::sort(vals.begin(), vals.end());

    std::vector<double> uniq;
    std::vector<std::size_t> counts;
    for (double v : vals) {
        if (uniq.empty() || v != uniq.back()) {
            uniq.push_back(v);
            counts.push_back(1);
        } else {
            ++counts.back();
        }
    }

    FeatureBins bins;
    const std::size_t k = uniq.size();
    if (k <= 1) return bins;  // constant or all-missing: single bin, never split

    if (k <= static_cast<std::size_t>(max_bins)) {
        bins.edges.reserve(k - 1);
        for (std::size_t i = 0; i + 1 < k; ++i)
            bins.edges.push_back(0.5 * (uniq[i] + uniq[i + 1]));
        return bins;
    }

    // Quantile cuts weighted by row counts.
    std::vector<std::size_t> cum(counts.size());
    std::partial_sum(counts.begin(), counts.end(), cum.begin());
    const double total = static_cast<double>(vals.size());
    std::size_t prev_idx = static_cast<std::size_t>(-1);
    for (int q = 1; q < max_bins; ++q) {
        const double target = total * static_cast<double>(q) / static_cast<double>(max_bins);
        std::size_t i = 0;
        while (i + 1 < cum.size() && static_cast<double>(cum[i]) < target) ++i;
        if (i + 1 >= k) break;
        if (i == prev_idx) continue;
        prev_idx = i;
        bins.edges.push_back(0.5 * (uniq[i] + uniq[i + 1]));
    }
    return bins;
}

struct SplitDecision {
    bool found = false;
    int feature = -1;
    int bin = -1;  // split after this bin
    double threshold = 0.0;
    bool missing_left = true;
    double gain = 0.0;
    double left_g = 0.0, left_h = 0.0;  // aggregates for child bookkeeping
    std::size_t left_count = 0;
};

double leaf_gain_term(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

/// Best histogram split over the given rows. Deterministic tie-break:
/// lowest feature, then lowest bin, then missing-left.
SplitDecision find_best_split(const FeatureMatrix& X,
                              const std::vector<std::vector<int>>& binned,
                              const std::vector<FeatureBins>& bins,
                              const std::vector<double>& grad,
                              const std::vector<double>& hess,
                              const std::vector<std::size_t>& rows,
                              double lambda, int min_samples_leaf) {
    SplitDecision best;
    double total_g = 0.0, total_h = 0.0;
    for (std::size_t r : rows) {
        total_g += grad[r];
        total_h += hess[r];
    }
    const double parent_term = leaf_gain_term(total_g, total_h, lambda);

    const std::size_t n_features = X.n_features();
    std::vector<double> bin_g, bin_h;
    std::vector<std::size_t> bin_c;
    for (std::size_t f = 0; f < n_features; ++f) {
        const int nb = bins[f].n_bins();
        if (nb < 2) continue;
        bin_g.assign(static_cast<std::size_t>(nb), 0.0);
        bin_h.assign(static_cast<std::size_t>(nb), 0.0);
        bin_c.assign(static_cast<std::size_t>(nb), 0);
        double miss_g = 0.0, miss_h = 0.0;
        std::size_t miss_c = 0;
        for (std::size_t r : rows) {
            const int b = binned[f][r];
            if (b < 0) {
                miss_g += grad[r];
                miss_h += hess[r];
                ++miss_c;
            } else {
                bin_g[static_cast<std::size_t>(b)] += grad[r];
                bin_h[static_cast<std::size_t>(b)] += hess[r];
                ++bin_c[static_cast<std::size_t>(b)];
            }
        }

        double cum_g = 0.0, cum_h = 0.0;
        std::size_t cum_c = 0;
        for (int b = 0; b + 1 < nb; ++b) {
            cum_g += bin_g[static_cast<std::size_t>(b)];
            cum_h += bin_h[static_cast<std::size_t>(b)];
            cum_c += bin_c[static_cast<std::size_t>(b)];
            for (int miss_left = 1; miss_left >= 0; --miss_left) {
                const double gl = cum_g + (miss_left ? miss_g : 0.0);
                const double hl = cum_h + (miss_left ? miss_h : 0.0);
                const std::size_t cl = cum_c + (miss_left ? miss_c : 0);
                const double gr = total_g - gl;
                const double hr = total_h - hl;
                const std::size_t cr = rows.size() - cl;
                if (cl < static_cast<std::size_t>(min_samples_leaf) ||
                    cr < static_cast<std::size_t>(min_samples_leaf))
                    continue;
                const double gain = 0.5 * (leaf_gain_term(gl, hl, lambda) +
                                           leaf_gain_term(gr, hr, lambda) - parent_term);
                if (gain > best.gain) {
                    best.found = true;
                    best.feature = static_cast<int>(f);
                    best.bin = b;
                    best.threshold = bins[f].edges[static_cast<std::size_t>(b)];
                    best.missing_left = (miss_left == 1);
                    best.gain = gain;
                    best.left_g = gl;
                    best.left_h = hl;
                    best.left_count = cl;
                }
            }
        }
    }
    return best;
}

struct LeafState {
    int node_id = -1;
    std::vector<std::size_t> rows;
    double sum_g = 0.0, sum_h = 0.0;
    SplitDecision split;
};

Tree grow_tree(const FeatureMatrix& X, const std::vector<std::vector<int>>& binned,
               const std::vector<FeatureBins>& bins, const std::vector<double>& grad,
               const std::vector<double>& hess, const GbmConfig& cfg) {
    Tree tree;
    tree.nodes.emplace_back();

    auto make_leaf_state = [&](int node_id, std::vector<std::size_t> rows) {
        LeafState s;
        s.node_id = node_id;
        s.rows = std::move(rows);
        for (std::size_t r : s.rows) {
            s.sum_g += grad[r];
            s.sum_h += hess[r];
        }
        s.split = find_best_split(X, binned, bins, grad, hess, s.rows, cfg.lambda_l2,
                                  cfg.min_samples_leaf);
        return s;
    };

    std::vector<std::size_t> all_rows(grad.size());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

    std::vector<LeafState> open;
    open.push_back(make_leaf_state(0, std::move(all_rows)));
    int n_leaves = 1;

    // kDepthWise expands in creation (FIFO) order, kLeafWise by best gain.
    std::size_t fifo_head = 0;
    while (n_leaves < cfg.max_leaves) {
        std::size_t pick = open.size();
        if (cfg.growth == Growth::kLeafWise) {
            double best_gain = 0.0;
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (open[i].split.found && open[i].split.gain > best_gain) {
                    best_gain = open[i].split.gain;
                    pick = i;
                }
            }
            if (pick == open.size()) break;  // nothing with positive gain
        } else {
            while (fifo_head < open.size() && !open[fifo_head].split.found) ++fifo_head;
            if (fifo_head >= open.size()) break;
            pick = fifo_head++;
        }

        LeafState leaf = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        if (cfg.growth == Growth::kDepthWise && pick < fifo_head) --fifo_head;

        const SplitDecision& sp = leaf.split;
        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(sp.left_count);
        right_rows.reserve(leaf.rows.size() - sp.left_count);
        for (std::size_t r : leaf.rows) {
            const int b = binned[static_cast<std::size_t>(sp.feature)][r];
            const bool go_left = (b < 0) ? sp.missing_left : (b <= sp.bin);
            (go_left ? left_rows : right_rows).push_back(r);
        }

        TreeNode& parent = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
        parent.feature = sp.feature;
        parent.threshold = sp.threshold;
        parent.default_left = sp.missing_left;
        parent.left = static_cast<int>(tree.nodes.size());
        parent.right = parent.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();

        const int left_id = tree.nodes[static_cast<std::size_t>(leaf.node_id)].left;
        const int right_id = tree.nodes[static_cast<std::size_t>(leaf.node_id)].right;
        open.push_back(make_leaf_state(left_id, std::move(left_rows)));
        open.push_back(make_leaf_state(right_id, std::move(right_rows)));
        ++n_leaves;
    }

    for (const LeafState& leaf : open) {
        TreeNode& nd = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
        nd.feature = -1;
        nd.value = -leaf.sum_g / (leaf.sum_h + cfg.lambda_l2) * cfg.learning_rate;
    }
    return tree;
}

}  // namespace

GbmModel fit_gbm(const FeatureMatrix& X, const std::vector<int>& y, const GbmConfig& cfg) {
    cfg.validate();
    const std::size_t n = X.n_rows();
    if (n != y.size())
        throw ValidationError("row/label count mismatch: " + std::to_string(n) + " vs " +
                              std::to_string(y.size()));
    std::size_t n_pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1)
            throw ValidationError("label outside {0,1}: " + std::to_string(v));
        n_pos += static_cast<std::size_t>(v);
    }
    if (n_pos == 0 || n_pos == n)
        throw ValidationError("single-class training set: " + std::to_string(n_pos) + "/" +
                              std::to_string(n) + " positives");
    if (n < 2 * static_cast<std::size_t>(cfg.min_samples_leaf))
        throw ValidationError("need at least 2*min_samples_leaf rows, got " + std::to_string(n));

    GbmModel model;
    model.feature_names = X.feature_names();
    model.config = cfg;
    const double p_bar = static_cast<double>(n_pos) / static_cast<double>(n);
    model.base_score = std::log(p_bar / (1.0 - p_bar));

    // Bin edges are computed once from the training rows only.
    std::vector<FeatureBins> bins(X.n_features());
    std::vector<std::vector<int>> binned(X.n_features());
    for (std::size_t f = 0; f < X.n_features(); ++f) {
        bins[f] = build_bins(X.column(f), cfg.n_bins);
        binned[f].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = X.column(f)[i];
            binned[f][i] = is_missing(v) ? -1 : bins[f].bin_of(v);
        }
    }

    std::vector<double> margin(n, model.base_score);
    std::vector<double> grad(n), hess(n);
    for (int t = 0; t < cfg.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(y[i]);
            hess[i] = p * (1.0 - p);
        }
        Tree tree = grow_tree(X, binned, bins, grad, hess, cfg);
        std::vector<double> row(X.n_features());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < X.n_features(); ++f) row[f] = X.column(f)[i];
            margin[i] += tree.predict_row(row);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> GbmModel::predict_margin(const FeatureMatrix& X) const {
    std::vector<std::size_t> col_of(feature_names.size());
    std::vector<std::string> missing;
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        const int j = X.column_index(feature_names[f]);
        if (j < 0)
            missing.push_back(feature_names[f]);
        else
            col_of[f] = static_cast<std::size_t>(j);
    }
    if (!missing.empty()) {
        std::string msg = "feature schema mismatch; model expects missing column(s):";
        for (const auto& name : missing) msg += " " + name;
        throw SchemaError(msg);
    }

    std::vector<double> out(X.n_rows(), base_score);
    std::vector<double> row(feature_names.size());
    for (std::size_t i = 0; i < X.n_rows(); ++i) {
        for (std::size_t f = 0; f < feature_names.size(); ++f) row[f] = X.at(i, col_of[f]);
        for (const Tree& t : trees) out[i] += t.predict_row(row);
    }
    return out;
}

std::vector<double> GbmModel::predict_proba(const FeatureMatrix& X) const {
    auto out = predict_margin(X);
    for (double& v : out) v = sigmoid(v);
    return out;
}

double GbmModel::margin_for_row(const std::vector<double>& row) const {
    if (row.size() != feature_names.size())
        throw SchemaError("row has " + std::to_string(row.size()) + " features, model expects " +
                          std::to_string(feature_names.size()));
    double m = base_score;
    for (const Tree& t : trees) m += t.predict_row(row);
    return m;
}

ExactSplit best_exact_split(const FeatureMatrix& X, const std::vector<double>& grad,
                            const std::vector<double>& hess,
                            const std::vector<std::size_t>& rows, double lambda_l2,
                            int min_samples_leaf) {
    ExactSplit best;
    double total_g = 0.0, total_h = 0.0;
    for (std::size_t r : rows) {
        total_g += grad[r];
        total_h += hess[r];
    }
    const double parent_term = leaf_gain_term(total_g, total_h, lambda_l2);

    for (std::size_t f = 0; f < X.n_features(); ++f) {
        struct Entry {
            double v, g, h;
        };
        std::vector<Entry> entries;
        double miss_g = 0.0, miss_h = 0.0;
        std::size_t miss_c = 0;
        for (std::size_t r : rows) {
            const double v = X.column(f)[r];
            if (is_missing(v)) {
                miss_g += grad[r];
                miss_h += hess[r];
                ++miss_c;
            } else {
                entries.push_back({v, grad[r], hess[r]});
            }
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.v < b.v; });

        double cum_g = 0.0, cum_h = 0.0;
        std::size_t cum_c = 0;
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
            cum_g += entries[i].g;
            cum_h += entries[i].h;
            ++cum_c;
            if (entries[i].v == entries[i + 1].v) continue;  // not a boundary
            const double threshold = 0.5 * (entries[i].v + entries[i + 1].v);
            for (int miss_left = 1; miss_left >= 0; --miss_left) {
                const double gl = cum_g + (miss_left ? miss_g : 0.0);
                const double hl = cum_h + (miss_left ? miss_h : 0.0);
                const std::size_t cl = cum_c + (miss_left ? miss_c : 0);
                const double gr = total_g - gl;
                const double hr = total_h - hl;
                const std::size_t cr = rows.size() - cl;
                if (cl < static_cast<std::size_t>(min_samples_leaf) ||
                    cr < static_cast<std::size_t>(min_samples_leaf))
                    continue;
                const double gain = 0.5 * (leaf_gain_term(gl, hl, lambda_l2) +
                                           leaf_gain_term(gr, hr, lambda_l2) - parent_term);
                if (gain > best.gain) {
                    best.found = true;
                    best.feature = static_cast<int>(f);
                    best.threshold = threshold;
                    best.missing_left = (miss_left == 1);
                    best.gain = gain;
                }
            }
        }
    }
    return best;
}

ExactSplit best_histogram_split(const FeatureMatrix& X, const std::vector<double>& grad,
                                const std::vector<double>& hess,
                                const std::vector<std::size_t>& rows, const GbmConfig& cfg) {
    std::vector<FeatureBins> bins(X.n_features());
    std::vector<std::vector<int>> binned(X.n_features());
    for (std::size_t f = 0; f < X.n_features(); ++f) {
        bins[f] = build_bins(X.column(f), cfg.n_bins);
        binned[f].resize(X.n_rows(), -1);
        for (std::size_t r : rows) {
            const double v = X.column(f)[r];
            binned[f][r] = is_missing(v) ? -1 : bins[f].bin_of(v);
        }
    }
    const SplitDecision d =
        find_best_split(X, binned, bins, grad, hess, rows, cfg.lambda_l2, cfg.min_samples_leaf);
    ExactSplit out;
    out.found = d.found;
    out.feature = d.feature;
    out.threshold = d.threshold;
    out.missing_left = d.missing_left;
    out.gain = d.gain;
    return out;
}

}  // namespace pfoa::gbm
