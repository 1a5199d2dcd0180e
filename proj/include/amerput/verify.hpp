#pragma once

#include "amerput/curves.hpp"
#include "amerput/tree.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace amerput {

/// Per-node values v(K, t, node) for one strike, discounted to time 0.
struct ValueSurface {
    double strike = 0.0;
    std::vector<double> value;
    std::vector<double> immediate;     ///< e^{-rt}(K - price)_+
    std::vector<double> continuation;  ///< sum of child values; equals immediate growth for leaves
    std::vector<char> exercise;        ///< exercising now attains the value and pays something
};

struct DpResult {
    double price = 0.0;
    ValueSurface surface;
};

/// Bellman recursion v = max{e^{-rt}(K - S)_+, sum_c p_c v_c} from the leaves up.
DpResult dp_american(const TreeModel& model, double strike);

/// e^{-rT} E(K - S_T)_+ with leaves before T grown at the interest rate.
double european_on_tree(const TreeModel& model, double strike);

/// Exact American price curve K -> v(K, 0, root) of the model (piecewise linear).
PLCurve american_curve_on_tree(const TreeModel& model);
/// Law of S_T under the model (leaves before T grown at the interest rate).
DiscreteMeasure terminal_law(const TreeModel& model);

struct MartingaleReport {
    bool passed = true;
    double max_residual = 0.0;  ///< relative to the node's discounted price
    int worst_node = -1;
    std::vector<double> residuals;  ///< per node; zero for leaves
};

MartingaleReport martingale_check(const TreeModel& model, double threshold = 1e-10);

struct QuoteError {
    bool american = false;
    double strike = 0.0;
    double quoted = 0.0;
    double model = 0.0;
    double error = 0.0;  ///< |model - quoted| / spot
};

struct RepriceReport {
    bool passed = true;
    double max_error = 0.0;
    std::vector<QuoteError> quotes;
};

RepriceReport reprice_report(const TreeModel& model, const Market& market, double threshold = 1e-8);

struct OracleResult {
    TreeModel model;
    Market market;
};

/// Random discounted-martingale tree with `depth` jump layers (the last at T) and
/// 2..`branching` children per node (branching at most 4), together with the quotes it generates:
/// Europeans at the leaf prices and Americans at the kinks of its price curve.
OracleResult random_model_oracle(std::uint64_t seed, int depth, int branching);

struct MonotonicityReport {
    bool passed = true;
    int node = -1;
    double strike = 0.0;  ///< exercised strike below a non-exercised one at `node`
};

/// Checks that at every node the strikes where exercise is optimal form an upper set.
MonotonicityReport exercise_monotonicity(const TreeModel& model, std::vector<double> strikes);

} // namespace amerput
