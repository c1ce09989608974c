#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace impforecast {

class Rng;

/// Flat binary tree. Internal nodes route x[feature] <= threshold to `left`.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf prediction; for internal nodes the node mean

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    int depth() const;

    double predict(const Eigen::MatrixXd& X, Eigen::Index row) const;

    /// Structural check: children in range, exactly two per internal node,
    /// finite thresholds and values, no cycles.
    bool well_formed() const;

    bool operator==(const RegressionTree&) const = default;

private:
    std::vector<TreeNode> nodes_;
};

struct TreeGrowOptions {
    int max_depth = 8;
    int min_leaf = 1;
    /// Features examined per split; 0 or >= d means all of them.
    int feature_subset_size = 0;
};

/// Grows a least-squares regression tree on the given rows (duplicates allowed,
/// as produced by bootstrap resampling). Splits maximize squared-error
/// reduction; equal-gain candidates resolve to the lowest feature index, then
/// the lowest threshold. Leaves hold the mean target of their rows. `rng` is
/// only consulted when a feature subset is drawn.
RegressionTree grow_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::span<const std::size_t> rows,
                         const TreeGrowOptions& options, Rng* rng);

}  // namespace impforecast
