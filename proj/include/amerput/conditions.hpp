#pragma once

#include "amerput/curves.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amerput {

enum class ViolationKind {
    EMonotoneConvex,
    ELower,
    EUpper,
    ESlopeCap,
    AMonotone,
    AConvex,
    ALf,
    ALower,
    AUpper,
};

std::string_view to_string(ViolationKind kind);

/// A failed condition with the strikes that witness it. `magnitude` is the size of
/// the breach in price units divided by the spot (slopes for slope conditions).
struct Violation {
    ViolationKind kind{};
    std::vector<double> strikes;
    double magnitude = 0.0;
};

struct ConditionReport {
    bool passed = true;
    std::vector<Violation> violations;
    /// Boundary cases (e.g. a European slope exactly at the discount factor) that are
    /// weak rather than model-independent arbitrage.
    std::vector<Violation> warnings;

    void add(Violation v);
    void merge(const ConditionReport& other);
    bool has(ViolationKind kind) const;
    const Violation* first(ViolationKind kind) const;
};

/// Economic setting a pair of curves is checked in. `tau` is time to maturity;
/// price comparisons use `tolerance * scale`.
struct CheckContext {
    double spot = 1.0;
    double rate = 0.0;
    double tau = 1.0;
    double tolerance = kDefaultTolerance;
    double scale = 1.0;
};

ConditionReport check_european_curve(const PLCurve& european, const CheckContext& ctx);
ConditionReport check_american_curves(const PLCurve& european, const PLCurve& american,
                                      const CheckContext& ctx);

/// European no-arbitrage conditions on the quoted (interpolated) European prices.
ConditionReport check_european(const Market& market);

/// American conditions against a European curve. `european` should be the completed
/// European curve and `american` the completed (or naive, when completion fails) one.
ConditionReport check_american(const Market& market, const PLCurve& european, const PLCurve& american);

/// Chord form of the Legendre-Fenchel inequality on raw traded strikes
/// K_j^E <= K_i^A <= K_j'^E <= K_i'^A.
ConditionReport check_discrete_pairs(const Market& market);

/// Finite-difference form [f(K+h) - f(K)]/h * K - f(K) compared for A and E.
bool lf_equivalence_probe(const PLCurve& american, const PLCurve& european, double strike, double step,
                          double tolerance = 0.0);

/// Curves the market-level pipeline works with, plus every report along the way.
struct MarketCurves {
    PLCurve european;
    PLCurve american;
    std::optional<DiscreteMeasure> measure;  ///< set when the European completion succeeded
    bool american_completed = false;
    ConditionReport report;                   ///< European and American checks combined
};

/// Completes both curves where possible and runs every condition check.
MarketCurves analyze_market(const Market& market);

} // namespace amerput
