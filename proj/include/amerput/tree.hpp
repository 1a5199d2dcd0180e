#pragma once

#include <vector>

namespace amerput {

struct TreeNode {
    int id = 0;
    double time = 0.0;
    double price = 0.0;
    int parent = -1;
    double prob = 1.0;  ///< transition probability from the parent
    std::vector<int> children;
};

/// Rooted tree of price jumps. Between a node and its children the price grows at
/// the interest rate; node ids equal their index and the root has id 0.
class TreeModel {
  public:
    TreeModel() = default;
    TreeModel(double rate, double maturity, double spot);

    /// Rebuilds a tree from a flat node list (children lists are ignored and
    /// recomputed). Throws InputError on orphans, cycles or bad ids.
    static TreeModel from_nodes(double rate, double maturity, std::vector<TreeNode> nodes);

    int add_child(int parent, double time, double price, double prob);

    double rate() const { return rate_; }
    double maturity() const { return maturity_; }
    double spot() const { return nodes_.front().price; }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }

    std::vector<int> leaves() const;
    /// Node ids with every child after its parent.
    std::vector<int> topological_order() const;
    /// Longest path from the node down to a leaf.
    std::vector<int> heights() const;

    /// Throws InputError when child probabilities do not sum to one, times decrease
    /// along an edge, or a node lies beyond maturity.
    void validate(double tolerance = 1e-9) const;

    /// Copy with every price multiplied by `factor`.
    TreeModel scaled(double factor) const;

  private:
    double rate_ = 0.0;
    double maturity_ = 0.0;
    std::vector<TreeNode> nodes_;
};

} // namespace amerput
