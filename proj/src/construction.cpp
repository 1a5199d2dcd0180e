#include "amerput/construction.hpp"

#include "amerput/conditions.hpp"
#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace amerput {

namespace {

double remaining(const Picture& p, const BuildSettings& s) { return s.maturity - p.t_old; }

PLCurve picture_european(const Picture& p, const BuildSettings& s) {
    return european_from_measure(p.measure, s.rate, remaining(p, s));
}

bool is_exercise_piece(const Line& l, double spot, double tol) {
    return std::abs(l.slope - 1.0) <= tol && std::abs(l.intercept - spot) <= tol;
}

// Looser tolerance for invariants that accumulate rounding through the recursion.
double audit_tolerance(const BuildSettings& s) { return std::max(1e-7, 100.0 * s.tolerance); }

void audit_picture(const Picture& p, const BuildSettings& s, const char* which) {
    const CheckContext ctx{p.spot, s.rate, remaining(p, s), audit_tolerance(s), 1.0};
    const PLCurve e = picture_european(p, s);
    ConditionReport rep = check_european_curve(e, ctx);
    rep.merge(check_american_curves(e, p.american, ctx));
    if (!rep.passed) {
        std::ostringstream os;
        os << which << " sub-picture (spot " << p.spot << ", t_old " << p.t_old << ") fails "
           << to_string(rep.violations.front().kind);
        if (!rep.violations.front().strikes.empty())
            os << " at strike " << rep.violations.front().strikes.front();
        os << " by " << rep.violations.front().magnitude;
        throw InternalError(os.str());
    }
}

} // namespace

ExtendedAmerican extend_american(const Picture& picture, const BuildSettings& settings) {
    const double tol = settings.tolerance;
    const PLCurve e = picture_european(picture, settings);
    ExtendedAmerican out;

    const auto kinks = picture.american.kinks();
    const std::vector<Line> lines = picture.american.pieces();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].slope <= tol || is_exercise_piece(lines[i], picture.spot, tol))
            continue;
        out.pieces.push_back({lines[i], kinks[i].strike, false});
    }
    out.n_original = out.pieces.size();

    if (!out.pieces.empty()) {
        Line cur = out.pieces.back().line;
        const double start = out.pieces.back().start;
        bool resetting = false;
        for (const Atom& a : picture.measure.atoms()) {
            const double x = a.location;
            if (x <= start || x <= 0.0)
                continue;
            const double d_e = lf_value(e, x);
            if (resetting || cur.intercept < d_e - tol) {
                if (!resetting)
                    out.k_p = x;
                const double v = cur(x);
                cur = Line{(v + d_e) / x, d_e};
                out.pieces.push_back({cur, x, true});
                resetting = true;
            }
        }
    }

    std::vector<Line> env{{0.0, 0.0}};
    for (const ExtendedPiece& p : out.pieces)
        env.push_back(p.line);
    out.curve = upper_envelope(env, tol);
    return out;
}

double upper_bound(const Picture& picture, const BuildSettings& settings, double strike, double t) {
    const double tau = remaining(picture, settings);
    if (t < -1e-12 || t > tau + 1e-12)
        throw InputError("upper_bound: time outside the picture's remaining life");
    const PLCurve e = picture_european(picture, settings);
    return e(std::exp(settings.rate * (tau - t)) * strike);
}

PieceCandidate critical_time_piece(const Picture& picture, const BuildSettings& settings, const Line& piece) {
    const double tau = remaining(picture, settings);
    const PLCurve e = picture_european(picture, settings);
    const auto atoms = picture.measure.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double x = atoms[i].location;
        if (piece.intercept < lf_value(e, x) - settings.tolerance) {
            const double ratio = (e(x) + piece.intercept) / (piece.slope * x);
            const double t = ratio > 0.0 ? tau + std::log(ratio) / settings.rate
                                         : -std::numeric_limits<double>::infinity();
            return {t, i};
        }
    }
    throw InternalError("critical_time_piece: no atom has a larger intercept than the piece");
}

std::optional<CriticalPoint> critical_time(const Picture& picture, const BuildSettings& settings,
                                           const ExtendedAmerican& ext) {
    const double tol = settings.tolerance;
    const double tau = remaining(picture, settings);
    const PLCurve e = picture_european(picture, settings);
    const auto atoms = picture.measure.atoms();

    struct Cand {
        double t;
        std::size_t atom;
        std::size_t piece;
    };
    std::vector<Cand> cands;
    for (std::size_t j = 0; j < ext.pieces.size(); ++j) {
        const Line& f = ext.pieces[j].line;
        if (f.slope <= tol || f.intercept >= picture.spot - tol)
            continue;
        double gap = -std::numeric_limits<double>::infinity();
        for (const Atom& a : atoms)
            gap = std::max(gap, f(a.location) - e(a.location));
        if (gap <= tol)
            continue;
        PieceCandidate pc = critical_time_piece(picture, settings, f);
        if (pc.time < 0.0) {
            const double x = atoms[pc.atom].location;
            const double early_gap = f(x * std::exp(-settings.rate * tau)) - e(x);
            if (early_gap > audit_tolerance(settings))
                throw InternalError("critical time precedes the picture start: upper bound violated");
            pc.time = 0.0;
        }
        if (pc.time >= tau)
            continue;
        cands.push_back({pc.time, pc.atom, j});
    }
    if (cands.empty())
        return std::nullopt;

    double t_min = std::numeric_limits<double>::infinity();
    for (const Cand& c : cands)
        t_min = std::min(t_min, c.t);
    const Cand* best = nullptr;
    for (const Cand& c : cands) {
        if (c.t > t_min + 1e-10)
            continue;
        if (!best || c.atom < best->atom ||
            (c.atom == best->atom && ext.pieces[c.piece].line.slope < ext.pieces[best->piece].line.slope))
            best = &c;
    }
    CriticalPoint cp;
    cp.t_crit = best->t;
    cp.atom = best->atom;
    cp.piece = best->piece;
    cp.k_crit = atoms[best->atom].location * std::exp(-settings.rate * (tau - best->t));
    return cp;
}

SplitResult embed_step(const Picture& picture, const BuildSettings& settings, const ExtendedAmerican& ext,
                       const CriticalPoint& crit) {
    const double tol = settings.tolerance;
    const double r = settings.rate;
    const double tau = remaining(picture, settings);
    const double t = crit.t_crit;
    const double tau_new = tau - t;
    const Line& fk = ext.pieces.at(crit.piece).line;
    const auto atoms = picture.measure.atoms();

    SplitResult out;
    out.t_crit = t;
    out.t_jump = picture.t_old + t;
    out.k_crit = crit.k_crit;
    out.piece_index = crit.piece;

    const double growth = std::exp(r * t);
    const double p_d = growth * fk.slope;
    const double below = picture.measure.mass_below(crit.atom);
    const double at = atoms[crit.atom].mass;
    const double bracket_tol = audit_tolerance(settings);
    if (p_d < below - bracket_tol || p_d > below + at + bracket_tol) {
        std::ostringstream os;
        os << "split probability " << p_d << " outside [" << below << ", " << below + at << "]";
        throw InternalError(os.str());
    }
    if (p_d >= 1.0 - tol)
        throw InternalError("split probability reaches one: no mass left above the split atom");

    double m1 = std::clamp(p_d - below, 0.0, at);
    double m2 = at - m1;
    // a sliver on one side joins the other so no mass is lost
    if (m1 <= tol) {
        m2 = at;
        m1 = 0.0;
    } else if (m2 <= tol) {
        m1 = at;
        m2 = 0.0;
    }
    std::vector<Atom> lo, hi;
    for (std::size_t i = 0; i < crit.atom; ++i)
        lo.push_back(atoms[i]);
    if (m1 > tol)
        lo.push_back({atoms[crit.atom].location, m1});
    if (m2 > tol)
        hi.push_back({atoms[crit.atom].location, m2});
    for (std::size_t i = crit.atom + 1; i < atoms.size(); ++i)
        hi.push_back(atoms[i]);
    if (lo.empty() || hi.empty())
        throw InternalError("split leaves one side without mass");

    auto normalize = [](std::vector<Atom>& v) {
        double total = 0.0;
        for (const Atom& a : v)
            total += a.mass;
        for (Atom& a : v)
            a.mass /= total;
        return total;
    };
    out.p_down = normalize(lo);
    out.p_up = normalize(hi);
    DiscreteMeasure mu1(std::move(lo)), mu2(std::move(hi));

    const double disc_new = std::exp(-r * tau_new);
    out.s_down = mu1.mean() * disc_new;
    out.s_up = mu2.mean() * disc_new;
    const double p_u = 1.0 - p_d;
    const double s_down_formula = fk.intercept / fk.slope;
    const double s_up_formula = (picture.spot * growth - p_d * s_down_formula) / p_u;
    const double check_tol = std::max(1e-6, 1e3 * tol);
    if (std::abs(out.s_down - s_down_formula) > check_tol * (1.0 + s_down_formula) ||
        std::abs(out.s_up - s_up_formula) > check_tol * (1.0 + s_up_formula)) {
        std::ostringstream os;
        os << "split prices disagree: S_d " << out.s_down << " vs " << s_down_formula << ", S_u " << out.s_up
           << " vs " << s_up_formula;
        throw InternalError(os.str());
    }

    // A_1 = e^{rt}/p_d * max{0, f_1..f_k}; the scaled f_k is K - S_d
    const double c1 = growth / p_d;
    std::vector<Line> l1{{0.0, 0.0}};
    for (std::size_t j = 0; j < crit.piece; ++j)
        l1.push_back({ext.pieces[j].line.slope * c1, ext.pieces[j].line.intercept * c1});
    l1.push_back({1.0, out.s_down});

    // A_2 = e^{rt}/p_u * (max{f_k..f_N, e^{-rt}K - S} - f_k); the last term is K - S_u
    const double c2 = growth / p_u;
    std::vector<Line> l2{{0.0, 0.0}};
    for (std::size_t j = crit.piece + 1; j < ext.pieces.size(); ++j) {
        const Line& f = ext.pieces[j].line;
        l2.push_back({(f.slope - fk.slope) * c2, (f.intercept - fk.intercept) * c2});
    }
    l2.push_back({1.0, out.s_up});

    out.picture_down = {out.s_down, out.t_jump, upper_envelope(l1, tol), std::move(mu1)};
    out.picture_up = {out.s_up, out.t_jump, upper_envelope(l2, tol), std::move(mu2)};
    audit_picture(out.picture_down, settings, "lower");
    audit_picture(out.picture_up, settings, "upper");
    return out;
}

bool is_lower_bound_picture(const Picture& picture, const BuildSettings& settings) {
    const double tol = settings.tolerance;
    const PLCurve e = picture_european(picture, settings);
    const PLCurve& a = picture.american;
    const double s = picture.spot;
    std::vector<double> xs{0.0, s};
    for (const Kink& k : a.kinks())
        xs.push_back(k.strike);
    for (const Kink& k : e.kinks())
        xs.push_back(k.strike);
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double l = xs[i], rr = xs[i + 1];
        const double dl = e(l) - (l - s), dr = e(rr) - (rr - s);
        if ((dl > 0.0) != (dr > 0.0) && dl != dr)
            xs.push_back(l + (rr - l) * dl / (dl - dr));
    }
    xs.push_back(xs[n - 1] + std::max(1.0, xs[n - 1]));
    for (double k : xs) {
        const double bound = std::max(e(k), std::max(0.0, k - s));
        if (std::abs(a(k) - bound) > tol)
            return false;
    }
    return true;
}

namespace {

struct Builder {
    BuildSettings settings;
    TreeModel tree;
    BuildResult* result = nullptr;
    std::size_t split_limit = 0;

    void embed_terminal(const Picture& p, int node) {
        for (const Atom& a : p.measure.atoms())
            tree.add_child(node, settings.maturity, a.location, a.mass);
    }

    void run(const Picture& p, int node, std::size_t depth) {
        result->stats.max_depth = std::max(result->stats.max_depth, depth);
        const bool lower = is_lower_bound_picture(p, settings);
        if (lower && depth == 0) {
            embed_terminal(p, node);
            return;
        }
        const ExtendedAmerican ext = extend_american(p, settings);
        const std::optional<CriticalPoint> crit = critical_time(p, settings, ext);
        if (lower != !crit.has_value()) {
            std::ostringstream os;
            os << "terminal detectors disagree at depth " << depth << " (spot " << p.spot << ", t_old " << p.t_old
               << ")";
            throw InternalError(os.str());
        }
        if (!crit) {
            embed_terminal(p, node);
            return;
        }
        if (ext.pieces[crit->piece].extension)
            throw InternalError("an extension piece set the critical time");
        if (++result->stats.splits > split_limit)
            throw InternalError("split count exceeds 2 N_A + 1");
        SplitResult split = embed_step(p, settings, ext, *crit);
        const int down = tree.add_child(node, split.t_jump, split.s_down, split.p_down);
        const int up = tree.add_child(node, split.t_jump, split.s_up, split.p_up);
        Picture pd = split.picture_down;
        Picture pu = split.picture_up;
        result->splits.push_back(std::move(split));
        run(pd, down, depth + 1);
        run(pu, up, depth + 1);
    }
};

std::size_t count_regular_pieces(const PLCurve& a, double spot, double tol) {
    std::size_t n = 0;
    for (const Line& l : a.pieces())
        if (l.slope > tol && !is_exercise_piece(l, spot, tol))
            ++n;
    return n;
}

} // namespace

BuildResult build_model(const Market& market) {
    market.validate();
    const MarketCurves mc = analyze_market(market);
    if (!mc.report.passed) {
        const Violation& v = mc.report.violations.front();
        std::ostringstream os;
        os << "market admits arbitrage: " << to_string(v.kind);
        if (!v.strikes.empty())
            os << " at strike " << v.strikes.front();
        throw InconsistencyError(os.str());
    }
    if (!mc.american_completed)
        throw InternalError("American completion failed on a market that passed every check");

    const Market nm = normalized(market);
    const CompletedEuropean ce = complete_european(nm);
    const PLCurve a = complete_american(nm, ce.curve);

    BuildResult result;
    Builder b;
    b.settings = {nm.rate, nm.maturity, nm.tolerance};
    b.tree = TreeModel(nm.rate, nm.maturity, 1.0);
    b.result = &result;
    result.stats.regular_pieces = count_regular_pieces(a, 1.0, nm.tolerance);
    b.split_limit = 2 * result.stats.regular_pieces + 1;
    b.run(Picture{1.0, 0.0, a, ce.measure}, 0, 0);
    result.model = b.tree.scaled(market.spot);
    return result;
}

std::pair<TreeModel, TreeModel> extremal_models(const Market& market, double delta) {
    market.validate();
    const CompletedEuropean ce = complete_european(market);
    const double T = market.maturity;
    if (delta < 0.0)
        delta = T * 1e-6;
    if (!(delta < T))
        throw InputError("extremal_models: delta must be below maturity");
    TreeModel lower(market.rate, T, market.spot);
    TreeModel upper(market.rate, T, market.spot);
    const double shrink = std::exp(-market.rate * (T - delta));
    for (const Atom& a : ce.measure.atoms()) {
        lower.add_child(0, T, a.location, a.mass);
        const int mid = upper.add_child(0, delta, a.location * shrink, a.mass);
        upper.add_child(mid, T, a.location, 1.0);
    }
    return {std::move(lower), std::move(upper)};
}

} // namespace amerput
