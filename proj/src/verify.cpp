#include "amerput/verify.hpp"

#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace amerput {

namespace {

// Price the leaf would reach at T growing at the interest rate.
double grown_to_maturity(const TreeModel& m, const TreeNode& n) {
    return n.price * std::exp(m.rate() * (m.maturity() - n.time));
}

} // namespace

DpResult dp_american(const TreeModel& model, double strike) {
    model.validate();
    const std::size_t n = model.size();
    const double r = model.rate();
    ValueSurface s;
    s.strike = strike;
    s.value.assign(n, 0.0);
    s.immediate.assign(n, 0.0);
    s.continuation.assign(n, 0.0);
    s.exercise.assign(n, 0);
    const std::vector<int> order = model.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const TreeNode& node = model.node(*it);
        const auto i = static_cast<std::size_t>(*it);
        s.immediate[i] = std::exp(-r * node.time) * std::max(0.0, strike - node.price);
        if (node.children.empty()) {
            s.continuation[i] =
                std::exp(-r * model.maturity()) * std::max(0.0, strike - grown_to_maturity(model, node));
        } else {
            double c = 0.0;
            for (int ch : node.children)
                c += model.node(ch).prob * s.value[static_cast<std::size_t>(ch)];
            s.continuation[i] = c;
        }
        s.value[i] = std::max(s.immediate[i], s.continuation[i]);
        const double slack = 1e-12 * std::max(1.0, strike);
        s.exercise[i] = strike > node.price && s.immediate[i] >= s.continuation[i] - slack;
    }
    DpResult out;
    out.price = s.value[0];
    out.surface = std::move(s);
    return out;
}

double european_on_tree(const TreeModel& model, double strike) {
    const DiscreteMeasure law = terminal_law(model);
    double v = 0.0;
    for (const Atom& a : law.atoms())
        v += a.mass * std::max(0.0, strike - a.location);
    return std::exp(-model.rate() * model.maturity()) * v;
}

DiscreteMeasure terminal_law(const TreeModel& model) {
    model.validate();
    std::vector<double> path(model.size(), 0.0);
    path[0] = 1.0;
    std::vector<Atom> raw;
    for (int id : model.topological_order()) {
        const TreeNode& node = model.node(id);
        for (int c : node.children)
            path[static_cast<std::size_t>(c)] = path[static_cast<std::size_t>(id)] * model.node(c).prob;
        if (node.children.empty())
            raw.push_back({grown_to_maturity(model, node), path[static_cast<std::size_t>(id)]});
    }
    std::sort(raw.begin(), raw.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> atoms;
    for (const Atom& a : raw) {
        if (!atoms.empty() && a.location == atoms.back().location)
            atoms.back().mass += a.mass;
        else
            atoms.push_back(a);
    }
    return DiscreteMeasure(std::move(atoms), 1e-9);
}

PLCurve american_curve_on_tree(const TreeModel& model) {
    model.validate();
    const double r = model.rate();
    auto payoff = [&](double price, double time) {
        const double disc = std::exp(-r * time);
        if (price <= 0.0)
            return PLCurve({{0.0, 0.0}}, disc, disc);
        return PLCurve({{0.0, 0.0}, {price, 0.0}}, 0.0, disc);
    };
    std::vector<PLCurve> v(model.size());
    const std::vector<int> order = model.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const TreeNode& node = model.node(*it);
        const PLCurve now = payoff(node.price, node.time);
        if (node.children.empty()) {
            v[static_cast<std::size_t>(*it)] = now;
            continue;
        }
        std::vector<std::pair<double, PLCurve>> terms;
        for (int c : node.children)
            terms.emplace_back(model.node(c).prob, v[static_cast<std::size_t>(c)]);
        v[static_cast<std::size_t>(*it)] = pointwise_max(now, weighted_sum(terms)).merged(1e-12);
    }
    return v[0];
}

MartingaleReport martingale_check(const TreeModel& model, double threshold) {
    MartingaleReport rep;
    rep.residuals.assign(model.size(), 0.0);
    const double r = model.rate();
    for (const TreeNode& node : model.nodes()) {
        if (node.children.empty())
            continue;
        double mean = 0.0;
        for (int c : node.children) {
            const TreeNode& ch = model.node(c);
            mean += ch.prob * std::exp(-r * ch.time) * ch.price;
        }
        const double own = std::exp(-r * node.time) * node.price;
        const double res = std::abs(mean - own) / std::max(own, 1e-300);
        rep.residuals[static_cast<std::size_t>(node.id)] = res;
        if (res > rep.max_residual) {
            rep.max_residual = res;
            rep.worst_node = node.id;
        }
    }
    rep.passed = rep.max_residual <= threshold;
    return rep;
}

RepriceReport reprice_report(const TreeModel& model, const Market& market, double threshold) {
    RepriceReport rep;
    for (const Quote& q : market.european) {
        const double v = european_on_tree(model, q.strike);
        rep.quotes.push_back({false, q.strike, q.price, v, std::abs(v - q.price) / market.spot});
    }
    for (const Quote& q : market.american) {
        const double v = dp_american(model, q.strike).price;
        rep.quotes.push_back({true, q.strike, q.price, v, std::abs(v - q.price) / market.spot});
    }
    for (const QuoteError& e : rep.quotes)
        rep.max_error = std::max(rep.max_error, e.error);
    rep.passed = rep.max_error <= threshold;
    return rep;
}

OracleResult random_model_oracle(std::uint64_t seed, int depth, int branching) {
    if (depth < 1)
        throw InputError("random_model_oracle: depth must be at least 1");
    if (branching < 2 || branching > 4)
        throw InputError("random_model_oracle: branching must be between 2 and 4");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    std::normal_distribution<double> normal(0.0, 1.0);

    const double s0 = uniform(20.0, 200.0);
    const double rate = uniform(0.01, 0.1);
    const double maturity = uniform(0.25, 2.0);
    TreeModel tree(rate, maturity, s0);

    struct Pending {
        int id;
        int level;
    };
    std::vector<Pending> frontier{{0, 0}};
    for (std::size_t f = 0; f < frontier.size(); ++f) {
        const Pending cur = frontier[f];
        if (cur.level == depth)
            continue;
        const TreeNode parent = tree.node(cur.id);
        const bool last = cur.level + 1 == depth;
        const double t = last ? maturity : parent.time + (maturity - parent.time) * uniform(0.1, 0.9);
        const double forward = parent.price * std::exp(rate * (t - parent.time));
        // the slack absorbs growth over later layers so every price stays in [S0/10, 10 S0]
        const double lo = last ? s0 / 10.0 : 0.122 * s0;
        const double hi = last ? 10.0 * s0 : 8.19 * s0;

        const int k = std::uniform_int_distribution<int>(2, branching)(rng);
        std::vector<double> p(static_cast<std::size_t>(k)), z(static_cast<std::size_t>(k));
        double total = 0.0;
        for (double& x : p)
            total += (x = uniform(0.1, 1.0));
        for (double& x : p)
            x /= total;
        double zbar = 0.0;
        for (int i = 0; i < k; ++i)
            zbar += p[static_cast<std::size_t>(i)] * (z[static_cast<std::size_t>(i)] = normal(rng));
        for (double& x : z)
            x -= zbar;
        double spread = uniform(0.05, 0.6);
        auto within = [&] {
            for (double x : z) {
                const double v = forward * (1.0 + spread * x);
                if (v < lo || v > hi)
                    return false;
            }
            return true;
        };
        for (int tries = 0; tries < 200 && !within(); ++tries)
            spread *= 0.8;
        for (int i = 0; i < k; ++i) {
            const double price = forward * (1.0 + spread * z[static_cast<std::size_t>(i)]);
            frontier.push_back({tree.add_child(cur.id, t, price, p[static_cast<std::size_t>(i)]), cur.level + 1});
        }
    }

    Market m;
    m.spot = s0;
    m.rate = rate;
    m.maturity = maturity;
    const DiscreteMeasure law = terminal_law(tree);
    for (const Atom& a : law.atoms())
        m.european.push_back({a.location, european_on_tree(tree, a.location)});
    const PLCurve a = american_curve_on_tree(tree).merged(1e-12);
    for (const Kink& k : a.kinks())
        if (k.strike > 0.0)
            m.american.push_back({k.strike, dp_american(tree, k.strike).price});
    return {std::move(tree), std::move(m)};
}

MonotonicityReport exercise_monotonicity(const TreeModel& model, std::vector<double> strikes) {
    std::sort(strikes.begin(), strikes.end());
    MonotonicityReport rep;
    std::vector<std::vector<char>> flags;
    for (double k : strikes)
        flags.push_back(dp_american(model, k).surface.exercise);
    for (std::size_t node = 0; node < model.size(); ++node) {
        bool seen = false;
        for (std::size_t j = 0; j < strikes.size(); ++j) {
            if (flags[j][node])
                seen = true;
            else if (seen) {
                rep.passed = false;
                rep.node = static_cast<int>(node);
                rep.strike = strikes[j];
                return rep;
            }
        }
    }
    return rep;
}

} // namespace amerput
