#include "amerput/conditions.hpp"

#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>

namespace amerput {

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::EMonotoneConvex: return "E_MONOTONE_CONVEX";
    case ViolationKind::ELower: return "E_LOWER";
    case ViolationKind::EUpper: return "E_UPPER";
    case ViolationKind::ESlopeCap: return "E_SLOPE_CAP";
    case ViolationKind::AMonotone: return "A_MONOTONE";
    case ViolationKind::AConvex: return "A_CONVEX";
    case ViolationKind::ALf: return "A_LF";
    case ViolationKind::ALower: return "A_LOWER";
    case ViolationKind::AUpper: return "A_UPPER";
    }
    return "UNKNOWN";
}

void ConditionReport::add(Violation v) {
    violations.push_back(std::move(v));
    passed = false;
}

void ConditionReport::merge(const ConditionReport& other) {
    for (const Violation& v : other.violations)
        add(v);
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

bool ConditionReport::has(ViolationKind kind) const { return first(kind) != nullptr; }

const Violation* ConditionReport::first(ViolationKind kind) const {
    for (const Violation& v : violations)
        if (v.kind == kind)
            return &v;
    return nullptr;
}

namespace {

// Strikes at which a piecewise-linear comparison must be evaluated: 0, kinks, and a
// point past the last of them so the right extensions are compared too.
std::vector<double> sorted_unique(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

std::vector<double> kink_strikes(const PLCurve& c) {
    std::vector<double> xs;
    for (const Kink& k : c.kinks())
        if (k.strike >= 0.0)
            xs.push_back(k.strike);
    return xs;
}

} // namespace

ConditionReport check_european_curve(const PLCurve& e, const CheckContext& ctx) {
    ConditionReport rep;
    const double tol = ctx.tolerance * ctx.scale;
    const double disc = std::exp(-ctx.rate * ctx.tau);
    const double norm = 1.0 / ctx.scale;
    auto lower = [&](double k) { return std::max(0.0, disc * k - ctx.spot); };

    std::vector<double> xs = kink_strikes(e);
    xs.push_back(0.0);
    xs = sorted_unique(xs);

    const double e0 = e(0.0);
    if (std::abs(e0) > tol)
        rep.add({ViolationKind::EMonotoneConvex, {0.0}, std::abs(e0) * norm});

    // segments [x_i, x_{i+1}] over the quoted range; right extension excluded
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double a = xs[i], b = xs[i + 1];
        const double s = (e(b) - e(a)) / (b - a);
        if (s < -ctx.tolerance)
            rep.add({ViolationKind::EMonotoneConvex, {a, b}, (e(a) - e(b)) * norm});
        if (e(a) > disc * a - ctx.spot + tol) {
            if (s > disc + ctx.tolerance)
                rep.add({ViolationKind::ESlopeCap, {a, b}, s - disc});
            else if (s > disc - ctx.tolerance)
                rep.warnings.push_back({ViolationKind::ESlopeCap, {a, b}, s - disc});
        }
    }
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double k = xs[i];
        const double drop = e.left_slope(k) - e.right_slope(k);
        if (drop > ctx.tolerance)
            rep.add({ViolationKind::EMonotoneConvex, {xs[i - 1], k, xs[i + 1]}, drop});
    }
    for (double k : xs) {
        const double v = e(k);
        if (v < lower(k) - tol)
            rep.add({ViolationKind::ELower, {k}, (lower(k) - v) * norm});
        if (v > disc * k + tol)
            rep.add({ViolationKind::EUpper, {k}, (v - disc * k) * norm});
    }
    return rep;
}

ConditionReport check_american_curves(const PLCurve& e, const PLCurve& a, const CheckContext& ctx) {
    ConditionReport rep;
    const double tol = ctx.tolerance * ctx.scale;
    const double growth = std::exp(ctx.rate * ctx.tau);
    const double norm = 1.0 / ctx.scale;

    std::vector<double> ak = kink_strikes(a);
    ak.push_back(0.0);
    ak = sorted_unique(ak);
    std::vector<double> ek = kink_strikes(e);

    // (i) monotone and convex
    {
        std::vector<double> xs = ak;
        xs.push_back(xs.back() + std::max(1.0, xs.back()));
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            const double s = (a(xs[i + 1]) - a(xs[i])) / (xs[i + 1] - xs[i]);
            if (s < -ctx.tolerance)
                rep.add({ViolationKind::AMonotone, {xs[i], xs[i + 1]}, (a(xs[i]) - a(xs[i + 1])) * norm});
        }
        for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
            const double k = xs[i];
            const double drop = a.left_slope(k) - a.right_slope(k);
            if (drop > ctx.tolerance)
                rep.add({ViolationKind::AConvex, {xs[i - 1], k, xs[i + 1]}, drop});
        }
    }

    // (ii) at E kinks, and at A kinks left of the first E kink; K = 0 is vacuous
    {
        std::vector<double> xs;
        const double first_e = ek.empty() ? 0.0 : ek.front();
        for (double k : ek)
            if (k > 0.0)
                xs.push_back(k);
        for (double k : ak)
            if (k > 0.0 && k < first_e)
                xs.push_back(k);
        // lf is piecewise constant and nondecreasing; the shift absorbs A kinks a rounding step to the right
        for (double k : sorted_unique(xs)) {
            const double gap = lf_value(e, k) - lf_value(a, k + tol);
            if (gap > tol)
                rep.add({ViolationKind::ALf, {k}, gap * norm});
        }
    }

    // (iii) lower bound max{E, K - S0}
    {
        std::vector<double> xs = ak;
        xs.insert(xs.end(), ek.begin(), ek.end());
        xs.push_back(ctx.spot);
        // crossing of E with K - S0 lies where the concave difference changes sign
        std::vector<double> grid = sorted_unique(xs);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double l = grid[i], r = grid[i + 1];
            const double dl = e(l) - (l - ctx.spot), dr = e(r) - (r - ctx.spot);
            if ((dl > 0.0) != (dr > 0.0) && dl != dr)
                xs.push_back(l + (r - l) * dl / (dl - dr));
        }
        xs.push_back(grid.back() + std::max(1.0, grid.back()));
        for (double k : sorted_unique(xs)) {
            const double bound = std::max(e(k), k - ctx.spot);
            if (a(k) < bound - tol)
                rep.add({ViolationKind::ALower, {k}, (bound - a(k)) * norm});
        }
    }

    // (iv) upper bound E(exp(r tau) K)
    {
        std::vector<double> xs = ak;
        for (double k : ek)
            xs.push_back(k / growth);
        xs = sorted_unique(xs);
        xs.push_back(xs.back() + std::max(1.0, xs.back()));
        for (double k : xs) {
            const double bound = e(growth * k);
            if (a(k) > bound + tol)
                rep.add({ViolationKind::AUpper, {k}, (a(k) - bound) * norm});
        }
    }
    return rep;
}

namespace {

std::vector<Quote> with_origin(const std::vector<Quote>& quotes) {
    std::vector<Quote> pts;
    if (quotes.empty() || quotes.front().strike > 0.0)
        pts.push_back({0.0, 0.0});
    pts.insert(pts.end(), quotes.begin(), quotes.end());
    return pts;
}

CheckContext context_for(const Market& m) {
    return {m.spot, m.rate, m.maturity, m.tolerance, m.spot};
}

} // namespace

ConditionReport check_european(const Market& market) {
    market.validate();
    const std::vector<Quote> pts = with_origin(market.european);
    const double last_slope =
        pts.size() > 1 ? (pts.back().price - pts[pts.size() - 2].price) /
                             (pts.back().strike - pts[pts.size() - 2].strike)
                       : 0.0;
    const PLCurve e = curve_from_quotes(pts, 0.0, last_slope);
    ConditionReport rep = check_european_curve(e, context_for(market));
    // the continuation past the last quote must still be able to reach the lower bound
    const double disc = std::exp(-market.rate * market.maturity);
    const Quote& last = pts.back();
    const bool on_lower = last.price <= disc * last.strike - market.spot + market.tolerance * market.spot;
    if (!on_lower && !rep.has(ViolationKind::ESlopeCap) && last_slope > disc - market.tolerance) {
        if (last_slope > disc + market.tolerance)
            rep.add({ViolationKind::ESlopeCap, {last.strike}, last_slope - disc});
        else
            rep.warnings.push_back({ViolationKind::ESlopeCap, {last.strike}, last_slope - disc});
    }
    return rep;
}

ConditionReport check_american(const Market& market, const PLCurve& european, const PLCurve& american) {
    market.validate();
    return check_american_curves(european, american, context_for(market));
}

ConditionReport check_discrete_pairs(const Market& market) {
    market.validate();
    ConditionReport rep;
    const auto& eq = market.european;
    const auto& aq = market.american;
    const double tol = market.tolerance * market.spot;
    for (std::size_t j = 0; j < eq.size(); ++j)
        for (std::size_t jp = j + 1; jp < eq.size(); ++jp) {
            const double e_chord = (eq[jp].price - eq[j].price) / (eq[jp].strike - eq[j].strike);
            const double rhs = e_chord * eq[j].strike - eq[j].price;
            for (std::size_t i = 0; i < aq.size(); ++i) {
                if (aq[i].strike < eq[j].strike || aq[i].strike > eq[jp].strike)
                    continue;
                for (std::size_t ip = i + 1; ip < aq.size(); ++ip) {
                    if (aq[ip].strike < eq[jp].strike)
                        continue;
                    const double a_chord = (aq[ip].price - aq[i].price) / (aq[ip].strike - aq[i].strike);
                    const double lhs = a_chord * aq[i].strike - aq[i].price;
                    if (lhs < rhs - tol)
                        rep.add({ViolationKind::ALf,
                                 {eq[j].strike, aq[i].strike, eq[jp].strike, aq[ip].strike},
                                 (rhs - lhs) / market.spot});
                }
            }
        }
    return rep;
}

bool lf_equivalence_probe(const PLCurve& american, const PLCurve& european, double strike, double step,
                          double tolerance) {
    if (!(step > 0.0))
        throw InputError("lf_equivalence_probe: step must be positive");
    auto side = [&](const PLCurve& f) {
        return (f(strike + step) - f(strike)) / step * strike - f(strike);
    };
    return side(american) >= side(european) - tolerance;
}

MarketCurves analyze_market(const Market& market) {
    market.validate();
    MarketCurves out;
    out.report = check_european(market);
    try {
        CompletedEuropean ce = complete_european(market);
        out.european = ce.curve;
        out.measure = ce.measure;
    } catch (const InconsistencyError&) {
        const std::vector<Quote> pts = with_origin(market.european);
        const double disc = std::exp(-market.rate * market.maturity);
        out.european = curve_from_quotes(pts, 0.0, disc);
        if (out.report.passed)
            out.report.add({ViolationKind::ESlopeCap, {pts.back().strike}, 0.0});
    }
    try {
        out.american = complete_american(market, out.european);
        out.american_completed = true;
    } catch (const InconsistencyError&) {
        out.american = naive_american(market);
    }
    out.report.merge(check_american(market, out.european, out.american));
    return out;
}

} // namespace amerput
