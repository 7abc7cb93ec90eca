#include "csense/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "csense/rng.hpp"

namespace csense {

namespace {

constexpr double kGainTol = 1e-12;

double gini_impurity(double p_pos) {
    double p_neg = 1.0 - p_pos;
    return 1.0 - p_pos * p_pos - p_neg * p_neg;
}

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

double entropy(double p_pos) { return -plogp(p_pos) - plogp(1.0 - p_pos); }

double mass(const NodeStats& s, bool use_weights) {
    return use_weights ? s.w() : static_cast<double>(s.n());
}

double pos_fraction(const NodeStats& s, bool use_weights) {
    double m = mass(s, use_weights);
    return m > 0.0 ? (use_weights ? s.w_pos : static_cast<double>(s.n_pos)) / m : 0.0;
}

void check_partition(const NodeStats& parent, std::span<const NodeStats> children) {
    if (parent.n() == 0) throw std::invalid_argument("split gain of an empty parent node");
    std::size_t np = 0, nn = 0;
    for (const auto& c : children) { np += c.n_pos; nn += c.n_neg; }
    if (np != parent.n_pos || nn != parent.n_neg)
        throw std::invalid_argument("children do not partition the parent node");
}

} // namespace

double gini_gain(const NodeStats& parent, std::span<const NodeStats> children, bool use_weights) {
    check_partition(parent, children);
    const double parent_mass = mass(parent, use_weights);
    double g = gini_impurity(pos_fraction(parent, use_weights));
    for (const auto& c : children) {
        double m = mass(c, use_weights);
        if (m <= 0.0) continue;
        g -= (m / parent_mass) * gini_impurity(pos_fraction(c, use_weights));
    }
    return g;
}

double gain_ratio(const NodeStats& parent, std::span<const NodeStats> children, bool use_weights) {
    check_partition(parent, children);
    const double parent_mass = mass(parent, use_weights);
    std::size_t nonempty = 0;
    for (const auto& c : children)
        if (c.n() > 0) ++nonempty;
    if (nonempty < 2)
        throw std::invalid_argument("gain ratio needs at least two nonempty children (split info is zero)");

    double info_gain = entropy(pos_fraction(parent, use_weights));
    double split_info = 0.0;
    for (const auto& c : children) {
        double m = mass(c, use_weights);
        if (m <= 0.0) continue;
        double frac = m / parent_mass;
        info_gain -= frac * entropy(pos_fraction(c, use_weights));
        split_info -= plogp(frac);
    }
    return info_gain / split_info;
}

namespace {

// Cost of a node were it a leaf: labeling positive incurs the negatives'
// FP costs, labeling negative the positives' FN costs. The label comparison
// sum_fn > sum_fp is the record-cost form of P_t+ > T_cs.
double node_cost(const NodeStats& s) {
    bool positive = s.sum_fn_cost > s.sum_fp_cost;
    return positive ? s.sum_fp_cost : s.sum_fn_cost;
}

} // namespace

double cost_gain(const NodeStats& parent, std::span<const NodeStats> children) {
    check_partition(parent, children);
    double g = node_cost(parent);
    for (const auto& c : children) g -= node_cost(c);
    return g;
}

int label_for(const NodeStats& stats, LeafLabeling labeling) {
    switch (labeling) {
        case LeafLabeling::majority: return stats.n_pos > stats.n_neg ? 1 : 0;
        case LeafLabeling::weight_majority: return stats.w_pos > stats.w_neg ? 1 : 0;
        case LeafLabeling::cost_threshold: return stats.sum_fn_cost > stats.sum_fp_cost ? 1 : 0;
    }
    return 0;
}

std::size_t Tree::leaf_count() const {
    std::size_t k = 0;
    for (const auto& n : nodes_)
        if (n.is_leaf()) ++k;
    return k;
}

int Tree::route(const Record& r) const {
    int i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
        double v = r.features[static_cast<std::size_t>(n.attribute)];
        if (n.categorical_split && v == kUnseenCategory) {
            const NodeStats& ls = nodes_[static_cast<std::size_t>(n.left)].stats;
            const NodeStats& rs = nodes_[static_cast<std::size_t>(n.right)].stats;
            i = rs.n() > ls.n() ? n.right : n.left;
        } else if (n.categorical_split) {
            i = (v == n.split_value) ? n.left : n.right;
        } else {
            i = (v < n.split_value) ? n.left : n.right;
        }
    }
    return i;
}

std::vector<int> Tree::route_path(const Record& r) const {
    std::vector<int> path;
    int i = 0;
    for (;;) {
        path.push_back(i);
        const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
        if (n.is_leaf()) break;
        double v = r.features[static_cast<std::size_t>(n.attribute)];
        if (n.categorical_split && v == kUnseenCategory) {
            const NodeStats& ls = nodes_[static_cast<std::size_t>(n.left)].stats;
            const NodeStats& rs = nodes_[static_cast<std::size_t>(n.right)].stats;
            i = rs.n() > ls.n() ? n.right : n.left;
        } else if (n.categorical_split) {
            i = (v == n.split_value) ? n.left : n.right;
        } else {
            i = (v < n.split_value) ? n.left : n.right;
        }
    }
    return path;
}

std::pair<int, const NodeStats*> Tree::predict_leaf(const Record& r) const {
    int leaf = route(r);
    const TreeNode& n = nodes_[static_cast<std::size_t>(leaf)];
    return {n.label, &n.stats};
}

void Tree::compact() {
    std::vector<TreeNode> ordered;
    std::vector<int> order_remap(nodes_.size(), -1);
    std::vector<int> walk{0};
    while (!walk.empty()) {
        int i = walk.back();
        walk.pop_back();
        order_remap[static_cast<std::size_t>(i)] = static_cast<int>(ordered.size());
        ordered.push_back(nodes_[static_cast<std::size_t>(i)]);
        const TreeNode& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.is_leaf()) {
            walk.push_back(n.right);
            walk.push_back(n.left);
        }
    }
    for (auto& n : ordered) {
        if (!n.is_leaf()) {
            n.left = order_remap[static_cast<std::size_t>(n.left)];
            n.right = order_remap[static_cast<std::size_t>(n.right)];
        }
    }
    nodes_ = std::move(ordered);
}

namespace {

struct GrowContext {
    const Dataset& data;
    const TreeConfig& config;
    const WeightVector* weights;
    const CostModel* costs;
    std::vector<double> fn_cost; // resolved per record when costs present
    std::vector<double> fp_cost;
    std::vector<std::size_t> tree_attrs; // candidate pool for per-tree mode
    Rng rng;
    bool use_weights;
};

NodeStats stats_of(const GrowContext& ctx, std::span<const std::size_t> idx) {
    NodeStats s;
    for (std::size_t i : idx) {
        const Record& r = ctx.data[i];
        double w = ctx.weights ? (*ctx.weights)[i] : 1.0;
        if (r.label == 1) {
            s.n_pos++;
            s.w_pos += w;
            if (ctx.costs) s.sum_fn_cost += ctx.fn_cost[i];
        } else {
            s.n_neg++;
            s.w_neg += w;
            if (ctx.costs) s.sum_fp_cost += ctx.fp_cost[i];
        }
    }
    return s;
}

void stats_add(GrowContext& ctx, NodeStats& s, std::size_t i) {
    const Record& r = ctx.data[i];
    double w = ctx.weights ? (*ctx.weights)[i] : 1.0;
    if (r.label == 1) {
        s.n_pos++;
        s.w_pos += w;
        if (ctx.costs) s.sum_fn_cost += ctx.fn_cost[i];
    } else {
        s.n_neg++;
        s.w_neg += w;
        if (ctx.costs) s.sum_fp_cost += ctx.fp_cost[i];
    }
}

NodeStats stats_minus(const NodeStats& a, const NodeStats& b) {
    NodeStats s;
    s.n_pos = a.n_pos - b.n_pos;
    s.n_neg = a.n_neg - b.n_neg;
    s.w_pos = a.w_pos - b.w_pos;
    s.w_neg = a.w_neg - b.w_neg;
    s.sum_fn_cost = a.sum_fn_cost - b.sum_fn_cost;
    s.sum_fp_cost = a.sum_fp_cost - b.sum_fp_cost;
    return s;
}

double split_gain(const GrowContext& ctx, const NodeStats& parent, const NodeStats& left, const NodeStats& right) {
    NodeStats children[2] = {left, right};
    switch (ctx.config.split_criterion) {
        case SplitCriterion::gini_gain: return gini_gain(parent, children, ctx.use_weights);
        case SplitCriterion::gain_ratio: {
            if (left.n() == 0 || right.n() == 0) return -1.0;
            return gain_ratio(parent, children, ctx.use_weights);
        }
        case SplitCriterion::cost_gain: return cost_gain(parent, children);
    }
    return -1.0;
}

struct BestSplit {
    double gain = kGainTol;
    int attribute = -1;
    double value = 0.0;
    bool categorical = false;
    bool found = false;
};

std::vector<std::size_t> attribute_pool(GrowContext& ctx) {
    const std::size_t d = ctx.data.schema().n_features();
    switch (ctx.config.attribute_mode) {
        case AttributeMode::all: {
            std::vector<std::size_t> all(d);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        case AttributeMode::per_tree: return ctx.tree_attrs;
        case AttributeMode::per_split: {
            std::size_t k = ctx.config.attribute_subset;
            if (k == 0) k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
            k = std::min(k, d);
            std::vector<std::size_t> all(d);
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), ctx.rng);
            all.resize(k);
            std::sort(all.begin(), all.end());
            return all;
        }
    }
    return {};
}

BestSplit find_best_split(GrowContext& ctx, std::span<const std::size_t> idx, const NodeStats& parent) {
    BestSplit best;
    const std::size_t min_size = ctx.config.min_node_size;

    for (std::size_t attr : attribute_pool(ctx)) {
        if (ctx.data.schema().is_categorical(attr)) {
            // one-vs-rest on each category present at the node, ascending id
            std::map<double, NodeStats> per_cat;
            for (std::size_t i : idx)
                stats_add(ctx, per_cat[ctx.data[i].features[attr]], i);
            if (per_cat.size() < 2) continue;
            for (const auto& [cat, cs] : per_cat) {
                NodeStats rest = stats_minus(parent, cs);
                if (cs.n() < min_size || rest.n() < min_size) continue;
                double g = split_gain(ctx, parent, cs, rest);
                if (g > best.gain) {
                    best = {g, static_cast<int>(attr), cat, true, true};
                }
            }
        } else {
            std::vector<std::size_t> sorted(idx.begin(), idx.end());
            std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return ctx.data[a].features[attr] < ctx.data[b].features[attr];
            });
            NodeStats left;
            for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                stats_add(ctx, left, sorted[k]);
                double v = ctx.data[sorted[k]].features[attr];
                double v_next = ctx.data[sorted[k + 1]].features[attr];
                if (v == v_next) continue; // thresholds only between distinct values
                if (left.n() < min_size || parent.n() - left.n() < min_size) continue;
                NodeStats right = stats_minus(parent, left);
                double g = split_gain(ctx, parent, left, right);
                if (g > best.gain) {
                    best = {g, static_cast<int>(attr), 0.5 * (v + v_next), false, true};
                }
            }
        }
    }
    return best;
}

int build_node(GrowContext& ctx, Tree& tree, std::vector<std::size_t> idx, std::size_t depth) {
    NodeStats stats = stats_of(ctx, idx);
    TreeNode node;
    node.stats = stats;
    node.label = label_for(stats, ctx.config.labeling);
    int self = tree.add_node(node);

    const bool pure = stats.n_pos == 0 || stats.n_neg == 0;
    const bool depth_capped = ctx.config.max_depth > 0 && depth >= ctx.config.max_depth;
    if (pure || depth_capped || stats.n() < 2 * ctx.config.min_node_size) return self;

    BestSplit best = find_best_split(ctx, idx, stats);
    if (!best.found) return self;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        double v = ctx.data[i].features[static_cast<std::size_t>(best.attribute)];
        bool go_left = best.categorical ? (v == best.value) : (v < best.value);
        (go_left ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    int left = build_node(ctx, tree, std::move(left_idx), depth + 1);
    int right = build_node(ctx, tree, std::move(right_idx), depth + 1);

    TreeNode& n = tree.mutable_nodes()[static_cast<std::size_t>(self)];
    n.attribute = best.attribute;
    n.split_value = best.value;
    n.categorical_split = best.categorical;
    n.left = left;
    n.right = right;
    return self;
}

} // namespace

Tree grow_tree(const Dataset& data, const TreeConfig& config, const WeightVector* weights, const CostModel* costs) {
    if (data.empty()) throw DataError("cannot grow a tree on an empty dataset");
    if (weights && weights->size() != data.size())
        throw DataError("weight vector does not cover the dataset");
    if ((config.split_criterion == SplitCriterion::cost_gain ||
         config.labeling == LeafLabeling::cost_threshold) && !costs)
        throw ConfigError("cost-based splitting/labeling requires a cost model");

    GrowContext ctx{data, config, weights, costs, {}, {}, {}, make_rng(config.rng_seed),
                    weights != nullptr};
    if (costs) {
        ctx.fn_cost.resize(data.size());
        ctx.fp_cost.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Record& r = data[i];
            if (r.label == 1) ctx.fn_cost[i] = costs->resolve_fn(r);
            else ctx.fp_cost[i] = costs->resolve_fp(r);
        }
    }
    if (config.attribute_mode == AttributeMode::per_tree) {
        const std::size_t d = data.schema().n_features();
        std::size_t k = config.attribute_subset;
        if (k == 0) k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
        k = std::min(k, d);
        std::vector<std::size_t> all(d);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), ctx.rng);
        all.resize(k);
        std::sort(all.begin(), all.end());
        ctx.tree_attrs = std::move(all);
    }

    Tree tree;
    tree.set_weighted(weights != nullptr);
    std::vector<std::size_t> all_idx(data.size());
    std::iota(all_idx.begin(), all_idx.end(), 0);
    build_node(ctx, tree, std::move(all_idx), 0);
    return tree;
}

std::size_t tree_error_count(const Tree& tree, const Dataset& data) {
    std::size_t e = 0;
    for (const auto& r : data.records())
        if (tree.predict(r) != r.label) ++e;
    return e;
}

double tree_cost(const Tree& tree, const Dataset& data, const CostModel& costs) {
    double c = 0.0;
    for (const auto& r : data.records()) {
        int pred = tree.predict(r);
        if (pred == r.label) continue;
        c += r.label == 1 ? costs.resolve_fn(r) : costs.resolve_fp(r);
    }
    return c;
}

namespace {

// Pruning works on a "collapsed set": node ids treated as leaves. Routing
// stops at the first collapsed node on the path.

int route_collapsed(const Tree& t, const Record& r, const std::vector<char>& collapsed) {
    int i = 0;
    for (;;) {
        const TreeNode& n = t.node(i);
        if (n.is_leaf() || collapsed[static_cast<std::size_t>(i)]) return i;
        double v = r.features[static_cast<std::size_t>(n.attribute)];
        if (n.categorical_split && v == kUnseenCategory) {
            i = t.node(n.right).stats.n() > t.node(n.left).stats.n() ? n.right : n.left;
        } else if (n.categorical_split) {
            i = (v == n.split_value) ? n.left : n.right;
        } else {
            i = (v < n.split_value) ? n.left : n.right;
        }
    }
}

enum class Measure { error, weight, cost };

// Training-data measure of a node acting as a leaf, from its stored stats.
double leaf_measure(const TreeNode& n, Measure m) {
    switch (m) {
        case Measure::error:
            return n.label == 1 ? static_cast<double>(n.stats.n_neg) : static_cast<double>(n.stats.n_pos);
        case Measure::weight:
            return n.label == 1 ? n.stats.w_neg : n.stats.w_pos;
        case Measure::cost:
            return n.label == 1 ? n.stats.sum_fp_cost : n.stats.sum_fn_cost;
    }
    return 0.0;
}

struct SubtreeAgg {
    double measure = 0.0;
    std::size_t leaves = 0;
};

SubtreeAgg subtree_agg(const Tree& t, int i, const std::vector<char>& collapsed, Measure m) {
    const TreeNode& n = t.node(i);
    if (n.is_leaf() || collapsed[static_cast<std::size_t>(i)]) return {leaf_measure(n, m), 1};
    SubtreeAgg l = subtree_agg(t, n.left, collapsed, m);
    SubtreeAgg r = subtree_agg(t, n.right, collapsed, m);
    return {l.measure + r.measure, l.leaves + r.leaves};
}

double validation_measure(const Tree& t, const Dataset& valid, const std::vector<char>& collapsed,
                          bool use_cost, const CostModel* costs) {
    double total = 0.0;
    for (const auto& r : valid.records()) {
        int node = route_collapsed(t, r, collapsed);
        int pred = t.node(node).label;
        if (pred == r.label) continue;
        if (use_cost) total += r.label == 1 ? costs->resolve_fn(r) : costs->resolve_fp(r);
        else total += 1.0;
    }
    return total;
}

Tree apply_collapse(const Tree& t, const std::vector<char>& collapsed) {
    Tree out = t;
    for (std::size_t i = 0; i < out.nodes().size(); ++i) {
        if (collapsed[i] && !out.nodes()[i].is_leaf()) {
            TreeNode& n = out.mutable_nodes()[i];
            n.attribute = -1;
            n.left = n.right = -1;
        }
    }
    out.compact();
    return out;
}

Tree cost_complexity_prune(const Tree& tree, const Dataset& valid, bool use_cost, const CostModel* costs) {
    Measure m = use_cost ? Measure::cost : (tree.weighted() ? Measure::weight : Measure::error);

    std::vector<char> collapsed(tree.nodes().size(), 0);
    std::vector<std::vector<char>> sequence{collapsed};

    // weakest-link: repeatedly collapse the internal node(s) with the smallest
    // per-leaf improvement until only the root remains
    for (;;) {
        double min_g = std::numeric_limits<double>::infinity();
        std::vector<int> weakest;
        std::vector<int> stack{0};
        bool any_internal = false;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            const TreeNode& n = tree.node(i);
            if (n.is_leaf() || collapsed[static_cast<std::size_t>(i)]) continue;
            any_internal = true;
            SubtreeAgg agg = subtree_agg(tree, i, collapsed, m);
            double g = agg.leaves > 1
                           ? (leaf_measure(n, m) - agg.measure) / static_cast<double>(agg.leaves - 1)
                           : std::numeric_limits<double>::infinity();
            if (g < min_g) {
                min_g = g;
                weakest.assign(1, i);
            } else if (g == min_g) {
                weakest.push_back(i);
            }
            stack.push_back(n.left);
            stack.push_back(n.right);
        }
        if (!any_internal) break;
        for (int i : weakest) collapsed[static_cast<std::size_t>(i)] = 1;
        sequence.push_back(collapsed);
    }

    // pick the sequence member with the smallest validation measure; ties go
    // to the most-pruned member
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < sequence.size(); ++k) {
        double v = validation_measure(tree, valid, sequence[k], use_cost, costs);
        if (v <= best) {
            best = v;
            best_k = k;
        }
    }
    return apply_collapse(tree, sequence[best_k]);
}

struct ReducedPruner {
    const Tree& tree;
    const Dataset& valid;
    bool use_cost;
    const CostModel* costs;
    std::vector<char> collapsed;
    std::vector<std::vector<std::size_t>> node_records; // validation rows per node

    void distribute() {
        node_records.assign(tree.nodes().size(), {});
        for (std::size_t k = 0; k < valid.size(); ++k) {
            int i = 0;
            for (;;) {
                node_records[static_cast<std::size_t>(i)].push_back(k);
                const TreeNode& n = tree.node(i);
                if (n.is_leaf()) break;
                double v = valid[k].features[static_cast<std::size_t>(n.attribute)];
                if (n.categorical_split && v == kUnseenCategory)
                    i = tree.node(n.right).stats.n() > tree.node(n.left).stats.n() ? n.right : n.left;
                else if (n.categorical_split)
                    i = (v == n.split_value) ? n.left : n.right;
                else
                    i = (v < n.split_value) ? n.left : n.right;
            }
        }
    }

    double node_as_leaf_measure(int i) const {
        double total = 0.0;
        for (std::size_t k : node_records[static_cast<std::size_t>(i)]) {
            const Record& r = valid[k];
            if (tree.node(i).label == r.label) continue;
            if (use_cost) total += r.label == 1 ? costs->resolve_fn(r) : costs->resolve_fp(r);
            else total += 1.0;
        }
        return total;
    }

    // bottom-up: collapse whenever the node-as-leaf measure does not exceed
    // the (already pruned) subtree's measure
    double visit(int i) {
        const TreeNode& n = tree.node(i);
        double leaf_m = node_as_leaf_measure(i);
        if (n.is_leaf()) return leaf_m;
        double sub_m = visit(n.left) + visit(n.right);
        if (leaf_m <= sub_m) {
            collapsed[static_cast<std::size_t>(i)] = 1;
            return leaf_m;
        }
        return sub_m;
    }
};

Tree reduced_prune(const Tree& tree, const Dataset& valid, bool use_cost, const CostModel* costs) {
    ReducedPruner p{tree, valid, use_cost, costs, std::vector<char>(tree.nodes().size(), 0), {}};
    p.distribute();
    p.visit(0);
    return apply_collapse(tree, p.collapsed);
}

} // namespace

Tree prune(const Tree& tree, PruneMethod method, const Dataset& validation, const CostModel* costs) {
    if (method == PruneMethod::none) return tree;
    bool use_cost = method == PruneMethod::cost_complexity_cost || method == PruneMethod::reduced_cost;
    if (use_cost && !costs) throw ConfigError("cost-based pruning requires a cost model");
    if (validation.empty()) throw DataError("pruning requires a nonempty validation set");
    if (tree.empty()) throw DataError("cannot prune an empty tree");

    switch (method) {
        case PruneMethod::cost_complexity:
        case PruneMethod::cost_complexity_cost:
            return cost_complexity_prune(tree, validation, use_cost, costs);
        case PruneMethod::reduced_error:
        case PruneMethod::reduced_cost:
            return reduced_prune(tree, validation, use_cost, costs);
        default:
            return tree;
    }
}

std::string to_string(SplitCriterion c) {
    switch (c) {
        case SplitCriterion::gini_gain: return "gini_gain";
        case SplitCriterion::gain_ratio: return "gain_ratio";
        case SplitCriterion::cost_gain: return "cost_gain";
    }
    return "?";
}

std::string to_string(LeafLabeling l) {
    switch (l) {
        case LeafLabeling::majority: return "majority";
        case LeafLabeling::weight_majority: return "weight_majority";
        case LeafLabeling::cost_threshold: return "cost_threshold";
    }
    return "?";
}

std::string to_string(AttributeMode m) {
    switch (m) {
        case AttributeMode::all: return "all";
        case AttributeMode::per_tree: return "per_tree";
        case AttributeMode::per_split: return "per_split";
    }
    return "?";
}

std::string to_string(PruneMethod p) {
    switch (p) {
        case PruneMethod::none: return "none";
        case PruneMethod::cost_complexity: return "cost_complexity";
        case PruneMethod::reduced_error: return "reduced_error";
        case PruneMethod::cost_complexity_cost: return "cost_complexity_cost";
        case PruneMethod::reduced_cost: return "reduced_cost";
    }
    return "?";
}

} // namespace csense
