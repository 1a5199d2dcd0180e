#include "amerput/tree.hpp"

#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace amerput {

TreeModel::TreeModel(double rate, double maturity, double spot) : rate_(rate), maturity_(maturity) {
    nodes_.push_back({0, 0.0, spot, -1, 1.0, {}});
}

TreeModel TreeModel::from_nodes(double rate, double maturity, std::vector<TreeNode> nodes) {
    if (nodes.empty())
        throw InputError("model has no nodes");
    std::sort(nodes.begin(), nodes.end(), [](const TreeNode& a, const TreeNode& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id != static_cast<int>(i))
            throw InputError("model node ids must be 0..n-1 without gaps");
        nodes[i].children.clear();
    }
    if (nodes[0].parent != -1)
        throw InputError("node 0 must be the root (parent -1)");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const int p = nodes[i].parent;
        if (p < 0 || p >= static_cast<int>(nodes.size()) || p == nodes[i].id) {
            std::ostringstream os;
            os << "node " << i << " has no valid parent";
            throw InputError(os.str());
        }
        nodes[static_cast<std::size_t>(p)].children.push_back(nodes[i].id);
    }
    TreeModel m;
    m.rate_ = rate;
    m.maturity_ = maturity;
    m.nodes_ = std::move(nodes);
    if (m.topological_order().size() != m.nodes_.size())
        throw InputError("model contains nodes unreachable from the root");
    return m;
}

int TreeModel::add_child(int parent, double time, double price, double prob) {
    if (parent < 0 || parent >= static_cast<int>(nodes_.size()))
        throw InputError("add_child: unknown parent");
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({id, time, price, parent, prob, {}});
    nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
    return id;
}

std::vector<int> TreeModel::leaves() const {
    std::vector<int> out;
    for (const TreeNode& n : nodes_)
        if (n.children.empty())
            out.push_back(n.id);
    return out;
}

std::vector<int> TreeModel::topological_order() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    std::vector<char> seen(nodes_.size(), 0);
    order.push_back(0);
    seen[0] = 1;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : nodes_[static_cast<std::size_t>(order[i])].children) {
            if (seen[static_cast<std::size_t>(c)])
                throw InputError("model is not a tree");
            seen[static_cast<std::size_t>(c)] = 1;
            order.push_back(c);
        }
    return order;
}

std::vector<int> TreeModel::heights() const {
    std::vector<int> h(nodes_.size(), 0);
    const std::vector<int> order = topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        for (int c : nodes_[static_cast<std::size_t>(*it)].children)
            h[static_cast<std::size_t>(*it)] = std::max(h[static_cast<std::size_t>(*it)], h[static_cast<std::size_t>(c)] + 1);
    return h;
}

void TreeModel::validate(double tolerance) const {
    if (!(rate_ >= 0.0) || !(maturity_ > 0.0))
        throw InputError("model rate must be non-negative and maturity positive");
    topological_order();
    for (const TreeNode& n : nodes_) {
        if (!std::isfinite(n.price) || n.price < 0.0 || !std::isfinite(n.time))
            throw InputError("model node has invalid price or time");
        if (n.time > maturity_ * (1.0 + 1e-12))
            throw InputError("model node lies beyond maturity");
        if (n.children.empty())
            continue;
        double total = 0.0;
        for (int c : n.children) {
            const TreeNode& ch = node(c);
            if (!(ch.prob > 0.0) || ch.prob > 1.0 + tolerance)
                throw InputError("model transition probabilities must lie in (0, 1]");
            if (ch.time < n.time)
                throw InputError("model child precedes its parent in time");
            total += ch.prob;
        }
        if (std::abs(total - 1.0) > tolerance) {
            std::ostringstream os;
            os << "transition probabilities at node " << n.id << " sum to " << total;
            throw InputError(os.str());
        }
    }
}

TreeModel TreeModel::scaled(double factor) const {
    TreeModel out = *this;
    for (TreeNode& n : out.nodes_)
        n.price *= factor;
    return out;
}

} // namespace amerput
