#pragma once

#include "amerput/conditions.hpp"
#include "amerput/curves.hpp"
#include "amerput/tree.hpp"

#include <limits>
#include <string>
#include <vector>

namespace amerput {

enum class Instrument { AmericanPut, EuropeanPut, Underlying, Cash };

enum class ExerciseRule {
    None,
    WhenCounterpartyExercises,  ///< exercised together with the short American leg
    AtMaturity,
    Immediately,                ///< exercised at time 0
};

std::string_view to_string(Instrument i);
std::string_view to_string(ExerciseRule r);

struct Position {
    Instrument instrument = Instrument::Cash;
    double strike = 0.0;
    double quantity = 0.0;  ///< positive long, negative short
    ExerciseRule rule = ExerciseRule::None;
};

/// Payoff of the portfolio as a function of one price variable (S_T or the price at
/// the counterparty's exercise time) on [lo, hi].
struct PayoffCase {
    std::string region;
    std::string variable;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    PLCurve payoff;
};

struct ArbitrageStrategy {
    ViolationKind kind{};
    std::vector<double> strikes;
    std::vector<Position> positions;
    double initial_credit = 0.0;
    std::vector<PayoffCase> payoff_cases;
};

/// Minimum of the case's payoff over its region (-inf if it decreases without bound).
double payoff_minimum(const PayoffCase& c);
bool payoffs_nonnegative(const ArbitrageStrategy& s, double tolerance);

// All builders throw NotApplicable when the quoted prices show no strict gap.
ArbitrageStrategy strategy_for_monotonicity(double k1, double k2, const PLCurve& american, double tolerance);
ArbitrageStrategy strategy_for_convexity(double k1, double k2, double alpha, const PLCurve& american,
                                         double tolerance);
ArbitrageStrategy strategy_for_lf(double strike, double eps_gap, const PLCurve& american, const PLCurve& european,
                                  double tolerance);
ArbitrageStrategy strategy_for_upper_bound(double strike, const PLCurve& american, const PLCurve& european,
                                           double rate, double maturity, double tolerance);
ArbitrageStrategy strategy_for_lower_bound(double strike, const PLCurve& american, const PLCurve& european,
                                           double spot, double tolerance);

struct StrategyCheck {
    bool credit_positive = false;
    bool cashflows_nonnegative = true;
    double min_terminal_value = std::numeric_limits<double>::infinity();
    std::size_t scenarios = 0;  ///< (path, counterparty exercise node) pairs walked
    bool passed() const { return credit_positive && cashflows_nonnegative; }
};

/// Walks every root-to-leaf path and every node where the short American could be
/// exercised (plus never), settling exercises physically and valuing everything at T.
StrategyCheck verify_strategy(const ArbitrageStrategy& strategy, const TreeModel& model, double tolerance = 1e-9);

struct ArbitrageReport {
    ConditionReport conditions;
    std::vector<ArbitrageStrategy> strategies;  ///< one per American violation kind, lowest witness first
};

/// Checks the market and builds a strategy for the first violation of each American kind.
ArbitrageReport find_arbitrage(const Market& market);

} // namespace amerput
