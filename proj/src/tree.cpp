#include "impforecast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "impforecast/random.hpp"

namespace impforecast {

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeGrowOptions& options, Rng* rng)
        : X_(X), y_(y), options_(options), rng_(rng) {
        const int d = static_cast<int>(X.cols());
        subset_ = (options.feature_subset_size <= 0 || options.feature_subset_size >= d)
                      ? d
                      : options.feature_subset_size;
        all_features_.resize(static_cast<std::size_t>(d));
        std::iota(all_features_.begin(), all_features_.end(), 0);
    }

    int build(std::vector<std::size_t> rows, int depth) {
        const int index = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{});
        nodes_[index].value = leaf_value(rows);

        const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, options_.min_leaf));
        if (depth >= options_.max_depth || rows.size() < 2 * min_leaf) return index;

        double sum = 0.0;
        for (std::size_t r : rows) sum += y_[static_cast<Eigen::Index>(r)];
        const double n = static_cast<double>(rows.size());
        const double mean = sum / n;
        double parent_sse = 0.0;
        for (std::size_t r : rows) {
            const double e = y_[static_cast<Eigen::Index>(r)] - mean;
            parent_sse += e * e;
        }
        if (!(parent_sse > 0.0)) return index;

        const std::vector<int> features = draw_features();
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 1e-10 * parent_sse;

        std::vector<std::pair<double, double>> column(rows.size());
        for (int f : features) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto r = static_cast<Eigen::Index>(rows[i]);
                column[i] = {X_(r, f), y_[r]};
            }
            std::stable_sort(column.begin(), column.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            double left_sum = 0.0;
            for (std::size_t i = 1; i < column.size(); ++i) {
                left_sum += column[i - 1].second;
                if (i < min_leaf || column.size() - i < min_leaf) continue;
                if (!(column[i - 1].first < column[i].first)) continue;
                const double nl = static_cast<double>(i);
                const double nr = n - nl;
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = midpoint(column[i - 1].first, column[i].first);
                }
            }
        }
        if (best_feature < 0) return index;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) {
            (X_(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
        }
        nodes_[index].feature = best_feature;
        nodes_[index].threshold = best_threshold;
        const int left = build(std::move(left_rows), depth + 1);
        const int right = build(std::move(right_rows), depth + 1);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    std::vector<TreeNode> take() { return std::move(nodes_); }

private:
    // Midpoint that stays strictly below `hi` so `lo` routes left and `hi` right.
    static double midpoint(double lo, double hi) {
        const double mid = lo + 0.5 * (hi - lo);
        return mid < hi ? mid : lo;
    }

    double leaf_value(const std::vector<std::size_t>& rows) const {
        double sum = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r : rows) {
            const double v = y_[static_cast<Eigen::Index>(r)];
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return std::clamp(sum / static_cast<double>(rows.size()), lo, hi);
    }

    std::vector<int> draw_features() {
        if (subset_ >= static_cast<int>(all_features_.size()) || rng_ == nullptr) return all_features_;
        std::vector<int> pool = all_features_;
        for (int i = 0; i < subset_; ++i) {
            const auto remaining = static_cast<std::uint64_t>(pool.size() - static_cast<std::size_t>(i));
            const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng_->below(remaining));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(subset_));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    TreeGrowOptions options_;
    Rng* rng_;
    int subset_;
    std::vector<int> all_features_;
    std::vector<TreeNode> nodes_;
};

int depth_of(const std::vector<TreeNode>& nodes, int index) {
    const TreeNode& node = nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(depth_of(nodes, node.left), depth_of(nodes, node.right));
}

}  // namespace

int RegressionTree::depth() const { return nodes_.empty() ? 0 : depth_of(nodes_, 0); }

double RegressionTree::predict(const Eigen::MatrixXd& X, Eigen::Index row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const TreeNode& node = nodes_[i];
        i = static_cast<std::size_t>(X(row, node.feature) <= node.threshold ? node.left : node.right);
    }
    return nodes_[i].value;
}

bool RegressionTree::well_formed() const {
    if (nodes_.empty()) return false;
    const int count = static_cast<int>(nodes_.size());
    std::vector<int> parents(nodes_.size(), 0);
    for (int i = 0; i < count; ++i) {
        const TreeNode& node = nodes_[static_cast<std::size_t>(i)];
        if (!std::isfinite(node.value)) return false;
        if (node.is_leaf()) {
            if (node.left != -1 || node.right != -1) return false;
            continue;
        }
        if (!std::isfinite(node.threshold)) return false;
        // Preorder layout: children always come after their parent.
        if (node.left <= i || node.right <= i || node.left >= count || node.right >= count) return false;
        if (node.left == node.right) return false;
        ++parents[static_cast<std::size_t>(node.left)];
        ++parents[static_cast<std::size_t>(node.right)];
    }
    if (parents[0] != 0) return false;
    return std::all_of(parents.begin() + 1, parents.end(), [](int p) { return p == 1; });
}

RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::size_t> rows,
                         const TreeGrowOptions& options, Rng* rng) {
    TreeBuilder builder(X, y, options, rng);
    builder.build(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return RegressionTree(builder.take());
}

}  // namespace impforecast
