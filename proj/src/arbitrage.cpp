#include "amerput/arbitrage.hpp"

#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace amerput {

std::string_view to_string(Instrument i) {
    switch (i) {
    case Instrument::AmericanPut: return "american_put";
    case Instrument::EuropeanPut: return "european_put";
    case Instrument::Underlying: return "underlying";
    case Instrument::Cash: return "cash";
    }
    return "unknown";
}

std::string_view to_string(ExerciseRule r) {
    switch (r) {
    case ExerciseRule::None: return "none";
    case ExerciseRule::WhenCounterpartyExercises: return "when_counterparty_exercises";
    case ExerciseRule::AtMaturity: return "at_maturity";
    case ExerciseRule::Immediately: return "immediately";
    }
    return "unknown";
}

namespace {

PLCurve constant(double v) { return PLCurve({{0.0, v}}, 0.0, 0.0); }

// q (K - S)_+
PLCurve put_payoff(double k, double q) {
    if (k <= 0.0)
        return constant(0.0);
    return PLCurve({{0.0, q * k}, {k, 0.0}}, -q, 0.0);
}

PLCurve add(const PLCurve& f, const PLCurve& g) {
    const std::pair<double, PLCurve> terms[] = {{1.0, f}, {1.0, g}};
    return weighted_sum(terms);
}

} // namespace

double payoff_minimum(const PayoffCase& c) {
    const PLCurve& f = c.payoff;
    double m = f(c.lo);
    for (const Kink& k : f.kinks())
        if (k.strike > c.lo && k.strike < c.hi)
            m = std::min(m, k.value);
    if (std::isfinite(c.hi))
        m = std::min(m, f(c.hi));
    else if (f.right_extension_slope() < 0.0)
        return -std::numeric_limits<double>::infinity();
    return m;
}

bool payoffs_nonnegative(const ArbitrageStrategy& s, double tolerance) {
    for (const PayoffCase& c : s.payoff_cases)
        if (payoff_minimum(c) < -tolerance)
            return false;
    return true;
}

ArbitrageStrategy strategy_for_monotonicity(double k1, double k2, const PLCurve& a, double tol) {
    if (!(k1 < k2) || !(a(k1) > a(k2) + tol))
        throw NotApplicable("monotonicity: need K1 < K2 with A(K1) > A(K2)");
    ArbitrageStrategy s;
    s.kind = ViolationKind::AMonotone;
    s.strikes = {k1, k2};
    s.positions = {{Instrument::AmericanPut, k1, -1.0, ExerciseRule::None},
                   {Instrument::AmericanPut, k2, 1.0, ExerciseRule::WhenCounterpartyExercises}};
    s.initial_credit = a(k1) - a(k2);
    s.payoff_cases = {{"counterparty exercises at tau", "S_tau", 0.0, INFINITY, constant(k2 - k1)},
                      {"never exercised; long held to T", "S_T", 0.0, INFINITY, put_payoff(k2, 1.0)}};
    return s;
}

ArbitrageStrategy strategy_for_convexity(double k1, double k2, double alpha, const PLCurve& a, double tol) {
    if (!(k1 < k2) || !(alpha > 0.0 && alpha < 1.0))
        throw NotApplicable("convexity: need K1 < K2 and 0 < alpha < 1");
    const double km = alpha * k1 + (1.0 - alpha) * k2;
    const double gap = a(km) - alpha * a(k1) - (1.0 - alpha) * a(k2);
    if (!(gap > tol))
        throw NotApplicable("convexity: no gap at the quoted strikes");
    ArbitrageStrategy s;
    s.kind = ViolationKind::AConvex;
    s.strikes = {k1, km, k2};
    s.positions = {{Instrument::AmericanPut, km, -1.0, ExerciseRule::None},
                   {Instrument::AmericanPut, k1, alpha, ExerciseRule::WhenCounterpartyExercises},
                   {Instrument::AmericanPut, k2, 1.0 - alpha, ExerciseRule::WhenCounterpartyExercises}};
    s.initial_credit = gap;
    s.payoff_cases = {
        {"counterparty exercises at tau", "S_tau", 0.0, INFINITY, constant(0.0)},
        {"never exercised; longs held to T", "S_T", 0.0, INFINITY,
         add(put_payoff(k1, alpha), put_payoff(k2, 1.0 - alpha))}};
    return s;
}

ArbitrageStrategy strategy_for_lf(double k, double eps, const PLCurve& a, const PLCurve& e, double tol) {
    if (!(k > 0.0))
        throw NotApplicable("lf: the condition is vacuous at strike 0");
    if (!(eps > 0.0))
        throw NotApplicable("lf: step must be positive");
    const double q = (k + eps) / (k * eps);
    const double credit = e(k + eps) / eps + q * a(k) - a(k + eps) / eps - q * e(k);
    if (!(credit > tol))
        throw NotApplicable("lf: finite-difference inequality holds at this strike and step");
    ArbitrageStrategy s;
    s.kind = ViolationKind::ALf;
    s.strikes = {k, k + eps};
    s.positions = {{Instrument::EuropeanPut, k + eps, -1.0 / eps, ExerciseRule::AtMaturity},
                   {Instrument::AmericanPut, k, -q, ExerciseRule::None},
                   {Instrument::AmericanPut, k + eps, 1.0 / eps, ExerciseRule::WhenCounterpartyExercises},
                   {Instrument::EuropeanPut, k, q, ExerciseRule::AtMaturity}};
    s.initial_credit = credit;
    const PLCurve exercised({{0.0, 0.0}, {k, 0.0}, {k + eps, (k + eps) / k}}, 0.0, 1.0 / k);
    s.payoff_cases = {{"counterparty exercises; stock held to T", "S_T", 0.0, INFINITY, exercised},
                      {"never exercised; long held to T", "S_T", 0.0, INFINITY, put_payoff(k, q)}};
    return s;
}

ArbitrageStrategy strategy_for_upper_bound(double k, const PLCurve& a, const PLCurve& e, double rate,
                                           double maturity, double tol) {
    const double kf = std::exp(rate * maturity) * k;
    const double gap = a(k) - e(kf);
    if (!(gap > tol))
        throw NotApplicable("upper bound: A(K) does not exceed E(exp(rT) K)");
    ArbitrageStrategy s;
    s.kind = ViolationKind::AUpper;
    s.strikes = {k, kf};
    s.positions = {{Instrument::AmericanPut, k, -1.0, ExerciseRule::None},
                   {Instrument::EuropeanPut, kf, 1.0, ExerciseRule::AtMaturity}};
    s.initial_credit = gap;
    // residual exp(rT) K (1 - exp(-r tau)) below kf is smallest for tau -> 0
    s.payoff_cases = {
        {"counterparty exercises at tau (worst case tau = 0)", "S_T", 0.0, INFINITY,
         PLCurve({{0.0, 0.0}, {kf, 0.0}}, 0.0, 1.0)},
        {"never exercised", "S_T", 0.0, INFINITY, put_payoff(kf, 1.0)}};
    return s;
}

ArbitrageStrategy strategy_for_lower_bound(double k, const PLCurve& a, const PLCurve& e, double spot, double tol) {
    const double gap_e = e(k) - a(k);
    const double gap_x = k - spot - a(k);
    if (!(std::max(gap_e, gap_x) > tol))
        throw NotApplicable("lower bound: A(K) is not below max{E(K), K - S0}");
    ArbitrageStrategy s;
    s.kind = ViolationKind::ALower;
    s.strikes = {k};
    if (gap_e >= gap_x) {
        s.positions = {{Instrument::AmericanPut, k, 1.0, ExerciseRule::AtMaturity},
                       {Instrument::EuropeanPut, k, -1.0, ExerciseRule::AtMaturity}};
        s.initial_credit = gap_e;
        s.payoff_cases = {{"both held to T", "S_T", 0.0, INFINITY, constant(0.0)}};
    } else {
        s.positions = {{Instrument::AmericanPut, k, 1.0, ExerciseRule::Immediately},
                       {Instrument::Underlying, 0.0, 1.0, ExerciseRule::None}};
        s.initial_credit = gap_x;
        s.payoff_cases = {{"exercised at time 0", "S_0", 0.0, INFINITY, constant(0.0)}};
    }
    return s;
}

StrategyCheck verify_strategy(const ArbitrageStrategy& strategy, const TreeModel& model, double tolerance) {
    model.validate();
    for (const Position& p : strategy.positions) {
        if (!std::isfinite(p.quantity))
            throw InputError("strategy position has a non-finite quantity");
        if (p.instrument == Instrument::AmericanPut || p.instrument == Instrument::EuropeanPut) {
            if (!std::isfinite(p.strike) || p.strike < 0.0)
                throw InputError("strategy references an option without a valid strike");
            if (p.instrument == Instrument::AmericanPut && p.quantity > 0.0 && p.rule == ExerciseRule::None)
                throw InputError("long American position needs an exercise rule");
        }
    }
    const double r = model.rate();
    const double T = model.maturity();
    StrategyCheck out;
    out.credit_positive = strategy.initial_credit > 0.0;

    double short_strike = -1.0;
    for (const Position& p : strategy.positions)
        if (p.instrument == Instrument::AmericanPut && p.quantity < 0.0)
            short_strike = std::max(short_strike, p.strike);

    const double scale = model.spot();
    for (int leaf : model.leaves()) {
        std::vector<int> path;
        for (int n = leaf; n >= 0; n = model.node(n).parent)
            path.push_back(n);
        std::reverse(path.begin(), path.end());
        const TreeNode& lf = model.node(leaf);
        const double s_t = lf.price * std::exp(r * (T - lf.time));

        std::vector<int> candidates{-1};
        if (short_strike >= 0.0)
            for (int n : path)
                if (model.node(n).price < short_strike)
                    candidates.push_back(n);

        for (int ex : candidates) {
            double cash_t = 0.0;  // cash valued at T
            double stock = 0.0;
            auto settle = [&](const Position& p, double time) {
                cash_t += p.quantity * p.strike * std::exp(r * (T - time));
                stock -= p.quantity;
            };
            for (const Position& p : strategy.positions) {
                switch (p.instrument) {
                case Instrument::Underlying:
                    stock += p.quantity;
                    break;
                case Instrument::Cash:
                    break;
                case Instrument::EuropeanPut:
                    cash_t += p.quantity * std::max(0.0, p.strike - s_t);
                    break;
                case Instrument::AmericanPut: {
                    if (p.rule == ExerciseRule::Immediately) {
                        settle(p, 0.0);
                        break;
                    }
                    const bool coupled = p.quantity < 0.0 || p.rule == ExerciseRule::WhenCounterpartyExercises;
                    if (coupled && ex >= 0)
                        settle(p, model.node(ex).time);
                    else if (p.quantity > 0.0)
                        cash_t += p.quantity * std::max(0.0, p.strike - s_t);
                    break;
                }
                }
            }
            // stock bought at time 0 was paid for out of the initial credit
            const double value = cash_t + stock * s_t;
            ++out.scenarios;
            out.min_terminal_value = std::min(out.min_terminal_value, value);
            if (value < -tolerance * scale)
                out.cashflows_nonnegative = false;
        }
    }
    return out;
}

namespace {

double next_kink_after(const PLCurve& c, double k) {
    for (const Kink& kk : c.kinks())
        if (kk.strike > k * (1.0 + 1e-12) + 1e-300)
            return kk.strike;
    return std::numeric_limits<double>::infinity();
}

} // namespace

ArbitrageReport find_arbitrage(const Market& market) {
    ArbitrageReport rep;
    const MarketCurves mc = analyze_market(market);
    rep.conditions = mc.report;
    const PLCurve& a = mc.american;
    const PLCurve& e = mc.european;
    const double tol = market.tolerance * market.spot;

    std::map<ViolationKind, const Violation*> first;
    for (const Violation& v : mc.report.violations) {
        auto it = first.find(v.kind);
        if (it == first.end() || (!v.strikes.empty() && v.strikes.front() < it->second->strikes.front()))
            first[v.kind] = &v;
    }
    for (const auto& [kind, v] : first) {
        const std::vector<double>& k = v->strikes;
        try {
            switch (kind) {
            case ViolationKind::AMonotone:
                rep.strategies.push_back(strategy_for_monotonicity(k[0], k[1], a, tol));
                break;
            case ViolationKind::AConvex:
                rep.strategies.push_back(strategy_for_convexity(k[0], k[2], (k[2] - k[1]) / (k[2] - k[0]), a, tol));
                break;
            case ViolationKind::ALf: {
                double eps = next_kink_after(a, k[0]) - k[0];
                if (!std::isfinite(eps))
                    eps = k[0];
                rep.strategies.push_back(strategy_for_lf(k[0], eps, a, e, tol));
                break;
            }
            case ViolationKind::ALower:
                rep.strategies.push_back(strategy_for_lower_bound(k[0], a, e, market.spot, tol));
                break;
            case ViolationKind::AUpper:
                rep.strategies.push_back(
                    strategy_for_upper_bound(k[0], a, e, market.rate, market.maturity, tol));
                break;
            default:
                break;  // European violations are reported without a strategy
            }
        } catch (const NotApplicable&) {
            // the interpolated curve shows the violation but the traded quotes do not
        }
    }
    return rep;
}

} // namespace amerput
