#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csense/data.hpp"

namespace csense {

struct NodeStats {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double w_pos = 0.0; // summed record weights (equal to counts for unweighted trees)
    double w_neg = 0.0;
    double sum_fn_cost = 0.0; // Σ resolved C_FN over positives at the node
    double sum_fp_cost = 0.0; // Σ resolved C_FP over negatives at the node

    std::size_t n() const { return n_pos + n_neg; }
    double w() const { return w_pos + w_neg; }
};

enum class SplitCriterion { gini_gain, gain_ratio, cost_gain };
enum class LeafLabeling { majority, weight_majority, cost_threshold };
enum class AttributeMode { all, per_tree, per_split };
enum class PruneMethod { none, cost_complexity, reduced_error, cost_complexity_cost, reduced_cost };

struct TreeConfig {
    SplitCriterion split_criterion = SplitCriterion::gini_gain;
    LeafLabeling labeling = LeafLabeling::majority;
    std::size_t min_node_size = 1;
    std::size_t max_depth = 0;        // 0 = unlimited; otherwise number of split levels below the root
    AttributeMode attribute_mode = AttributeMode::all;
    std::size_t attribute_subset = 0; // k for the random modes; 0 = floor(sqrt(#attrs))
    PruneMethod prune = PruneMethod::none;
    std::uint64_t rng_seed = 0;
};

struct TreeNode {
    int attribute = -1;            // -1 marks a leaf
    double split_value = 0.0;      // numeric threshold, or matched category id
    bool categorical_split = false;
    int left = -1;                 // numeric: value < threshold; categorical: value == category
    int right = -1;
    int label = 0;
    NodeStats stats;

    bool is_leaf() const { return attribute < 0; }
};

class Tree {
public:
    Tree() = default;

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& mutable_nodes() { return nodes_; }
    const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    int root() const { return 0; }
    bool empty() const { return nodes_.empty(); }
    bool weighted() const { return weighted_; }
    void set_weighted(bool w) { weighted_ = w; }

    std::size_t leaf_count() const;

    // Index of the leaf the record routes to. Unseen categorical values take
    // the child with the greater training-record count (tie: first child).
    int route(const Record& r) const;

    // Root-to-leaf node indices along the routing path.
    std::vector<int> route_path(const Record& r) const;

    std::pair<int, const NodeStats*> predict_leaf(const Record& r) const;
    int predict(const Record& r) const { return predict_leaf(r).first; }

    int add_node(TreeNode n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Drop unreachable nodes (after pruning), renumbering children links.
    void compact();

private:
    std::vector<TreeNode> nodes_;
    bool weighted_ = false;
};

// CART gain of a candidate split (Gini impurity drop). Probabilities come
// from counts, or from weights when use_weights is set. Children must
// partition the parent; empty children contribute zero.
double gini_gain(const NodeStats& parent, std::span<const NodeStats> children, bool use_weights = false);

// C4.5 gain ratio: information gain over split information, base-2 logs,
// 0*log0 = 0. Requires at least two nonempty children.
double gain_ratio(const NodeStats& parent, std::span<const NodeStats> children, bool use_weights = false);

// Cost drop of a candidate split: each node costs its would-be
// misclassification total under cost-threshold labeling (sum_fp_cost when
// labeled positive, sum_fn_cost otherwise); returns parent cost minus summed
// children costs.
double cost_gain(const NodeStats& parent, std::span<const NodeStats> children);

// Leaf label for the given stats under a labeling rule. Ties predict negative.
int label_for(const NodeStats& stats, LeafLabeling labeling);

// Greedy recursive growth. Weights, when given, must align positionally with
// the dataset. A cost model is required for cost_gain splitting and
// cost-threshold labeling, and fills the per-node cost sums.
Tree grow_tree(const Dataset& data, const TreeConfig& config,
               const WeightVector* weights = nullptr,
               const CostModel* costs = nullptr);

// Prune with a validation set. Cost-based methods need a cost model. The
// result is a subtree of the input sharing its root.
Tree prune(const Tree& tree, PruneMethod method, const Dataset& validation,
           const CostModel* costs = nullptr);

// Total misclassification error count (or cost) of a tree on a dataset.
std::size_t tree_error_count(const Tree& tree, const Dataset& data);
double tree_cost(const Tree& tree, const Dataset& data, const CostModel& costs);

std::string to_string(SplitCriterion c);
std::string to_string(LeafLabeling l);
std::string to_string(AttributeMode m);
std::string to_string(PruneMethod p);

} // namespace csense
