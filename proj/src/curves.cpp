#include "amerput/curves.hpp"

#include "amerput/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace amerput {

namespace {

void validate_quotes(std::span<const Quote> quotes, const char* family) {
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const Quote& q = quotes[i];
        if (!std::isfinite(q.strike) || !std::isfinite(q.price))
            throw InputError(std::string(family) + " quote is not finite");
        if (q.strike < 0.0 || q.price < 0.0)
            throw InputError(std::string(family) + " quote has negative strike or price");
        if (i > 0 && !(quotes[i - 1].strike < q.strike)) {
            std::ostringstream os;
            os << family << " strikes must be strictly increasing (at " << q.strike << ")";
            throw InputError(os.str());
        }
    }
}

// Quotes with the implicit E(0) = A(0) = 0 point prepended.
std::vector<Quote> with_origin(std::span<const Quote> quotes) {
    std::vector<Quote> pts;
    pts.reserve(quotes.size() + 1);
    if (quotes.empty() || quotes.front().strike > 0.0)
        pts.push_back({0.0, 0.0});
    pts.insert(pts.end(), quotes.begin(), quotes.end());
    return pts;
}

double segment_slope(const Quote& a, const Quote& b) {
    return (b.price - a.price) / (b.strike - a.strike);
}

} // namespace

void Market::validate() const {
    if (!(spot > 0.0) || !std::isfinite(spot))
        throw InputError("spot must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw InputError("rate must be positive");
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw InputError("maturity must be positive");
    if (!(tolerance > 0.0))
        throw InputError("tolerance must be positive");
    if (european.empty())
        throw InputError("at least one European quote is required");
    if (american.empty())
        throw InputError("at least one American quote is required");
    validate_quotes(european, "european");
    validate_quotes(american, "american");
}

Market normalized(const Market& market) {
    Market out = market;
    const double s = market.spot;
    out.spot = 1.0;
    for (auto* list : {&out.european, &out.american})
        for (Quote& q : *list) {
            q.strike /= s;
            q.price /= s;
        }
    return out;
}

// ---------------------------------------------------------------------------
// PLCurve

PLCurve::PLCurve(std::vector<Kink> kinks, double left_slope, double right_slope)
    : kinks_(std::move(kinks)), left_slope_(left_slope), right_slope_(right_slope) {
    if (kinks_.empty())
        throw InputError("PLCurve needs at least one kink");
    for (std::size_t i = 1; i < kinks_.size(); ++i)
        if (!(kinks_[i - 1].strike < kinks_[i].strike))
            throw InputError("PLCurve kinks must have strictly increasing strikes");
}

std::size_t PLCurve::segment_index(double strike) const {
    // Index i such that kinks_[i].strike <= strike < kinks_[i+1].strike.
    auto it = std::upper_bound(kinks_.begin(), kinks_.end(), strike,
                               [](double k, const Kink& kink) { return k < kink.strike; });
    return static_cast<std::size_t>(std::distance(kinks_.begin(), it)) - 1;
}

double PLCurve::eval(double strike) const {
    const Kink& first = kinks_.front();
    const Kink& last = kinks_.back();
    if (strike <= first.strike)
        return first.value + left_slope_ * (strike - first.strike);
    if (strike >= last.strike)
        return last.value + right_slope_ * (strike - last.strike);
    const std::size_t i = segment_index(strike);
    const Kink& a = kinks_[i];
    const Kink& b = kinks_[i + 1];
    if (strike == a.strike)
        return a.value;
    const double w = (strike - a.strike) / (b.strike - a.strike);
    return a.value + w * (b.value - a.value);
}

double PLCurve::right_slope(double strike) const {
    if (strike < kinks_.front().strike)
        return left_slope_;
    if (strike >= kinks_.back().strike)
        return right_slope_;
    const std::size_t i = segment_index(strike);
    return (kinks_[i + 1].value - kinks_[i].value) / (kinks_[i + 1].strike - kinks_[i].strike);
}

double PLCurve::left_slope(double strike) const {
    if (strike <= kinks_.front().strike)
        return left_slope_;
    if (strike > kinks_.back().strike)
        return right_slope_;
    std::size_t i = segment_index(strike);
    if (kinks_[i].strike == strike)
        --i;
    return (kinks_[i + 1].value - kinks_[i].value) / (kinks_[i + 1].strike - kinks_[i].strike);
}

std::vector<Line> PLCurve::pieces() const {
    std::vector<Line> out;
    out.reserve(kinks_.size());
    for (std::size_t i = 0; i < kinks_.size(); ++i) {
        const double s = i + 1 < kinks_.size()
                             ? (kinks_[i + 1].value - kinks_[i].value) /
                                   (kinks_[i + 1].strike - kinks_[i].strike)
                             : right_slope_;
        out.push_back({s, s * kinks_[i].strike - kinks_[i].value});
    }
    return out;
}

PLCurve PLCurve::merged(double slope_tol) const {
    if (kinks_.size() < 2)
        return *this;
    std::vector<Kink> kept{kinks_.front()};
    for (std::size_t i = 1; i < kinks_.size(); ++i) {
        const Kink& cur = kinks_[i];
        const Kink& prev = kept.back();
        const double in = (cur.value - prev.value) / (cur.strike - prev.strike);
        const double out = i + 1 < kinks_.size()
                               ? (kinks_[i + 1].value - cur.value) / (kinks_[i + 1].strike - cur.strike)
                               : right_slope_;
        if (std::abs(out - in) <= slope_tol)
            continue;
        kept.push_back(cur);
    }
    return PLCurve(std::move(kept), left_slope_, right_slope_);
}

PLCurve PLCurve::scaled(double factor) const {
    std::vector<Kink> k = kinks_;
    for (Kink& p : k)
        p.value *= factor;
    return PLCurve(std::move(k), left_slope_ * factor, right_slope_ * factor);
}

bool PLCurve::is_convex(double slope_tol) const {
    double prev = left_slope_;
    for (const Line& piece : pieces()) {
        if (piece.slope < prev - slope_tol)
            return false;
        prev = piece.slope;
    }
    return true;
}

PLCurve curve_from_quotes(std::span<const Quote> quotes, double left_slope, double right_slope) {
    if (quotes.empty())
        throw InputError("curve_from_quotes: no quotes");
    validate_quotes(quotes, "curve");
    std::vector<Kink> kinks;
    kinks.reserve(quotes.size());
    for (const Quote& q : quotes)
        kinks.push_back({q.strike, q.price});
    return PLCurve(std::move(kinks), left_slope, right_slope);
}

double lf_value(const PLCurve& curve, double strike) {
    return curve.right_slope(strike) * strike - curve.eval(strike);
}

// ---------------------------------------------------------------------------
// Envelope arithmetic on [0, inf)

PLCurve upper_envelope(std::span<const Line> lines, double slope_tol) {
    if (lines.empty())
        throw InputError("upper_envelope: no lines");
    std::vector<Line> ls(lines.begin(), lines.end());
    // start with the highest line at 0, steepest on ties
    auto start = std::max_element(ls.begin(), ls.end(), [](const Line& a, const Line& b) {
        if (a(0.0) != b(0.0))
            return a(0.0) < b(0.0);
        return a.slope < b.slope;
    });
    Line cur = *start;
    double pos = 0.0;
    std::vector<Kink> kinks{{0.0, cur(0.0)}};
    for (;;) {
        const Line* next = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (const Line& l : ls) {
            if (!(l.slope > cur.slope))
                continue;
            double x = (l.intercept - cur.intercept) / (l.slope - cur.slope);
            x = std::max(x, pos);
            if (x < best || (x == best && next != nullptr && l.slope > next->slope)) {
                best = x;
                next = &l;
            }
        }
        if (next == nullptr)
            break;
        if (best > pos) {
            kinks.push_back({best, cur(best)});
            pos = best;
        }
        cur = *next;
    }
    const double left = kinks.size() > 1 ? (kinks[1].value - kinks[0].value) / (kinks[1].strike - kinks[0].strike)
                                         : cur.slope;
    PLCurve env(std::move(kinks), left, cur.slope);
    return slope_tol > 0.0 ? env.merged(slope_tol) : env;
}

namespace {

std::vector<double> union_grid(std::initializer_list<const PLCurve*> curves) {
    std::vector<double> xs{0.0};
    for (const PLCurve* c : curves)
        for (const Kink& k : c->kinks())
            if (k.strike > 0.0)
                xs.push_back(k.strike);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

PLCurve from_samples(const std::vector<double>& xs, const std::vector<double>& vs, double right) {
    std::vector<Kink> kinks;
    kinks.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        kinks.push_back({xs[i], vs[i]});
    const double left =
        xs.size() > 1 ? (vs[1] - vs[0]) / (xs[1] - xs[0]) : right;
    return PLCurve(std::move(kinks), left, right);
}

} // namespace

PLCurve weighted_sum(std::span<const std::pair<double, PLCurve>> terms) {
    if (terms.empty())
        throw InputError("weighted_sum: no terms");
    std::vector<double> xs{0.0};
    for (const auto& [w, c] : terms)
        for (const Kink& k : c.kinks())
            if (k.strike > 0.0)
                xs.push_back(k.strike);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> vs(xs.size(), 0.0);
    double right = 0.0;
    for (const auto& [w, c] : terms) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            vs[i] += w * c.eval(xs[i]);
        right += w * c.right_slope(xs.back());
    }
    return from_samples(xs, vs, right);
}

PLCurve pointwise_max(const PLCurve& f, const PLCurve& g) {
    std::vector<double> grid = union_grid({&f, &g});
    std::vector<double> xs;
    xs.reserve(grid.size() * 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        xs.push_back(grid[i]);
        if (i + 1 < grid.size()) {
            const double a = grid[i], b = grid[i + 1];
            const double da = f(a) - g(a), db = f(b) - g(b);
            if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) {
                const double c = a + (b - a) * da / (da - db);
                if (c > a && c < b)
                    xs.push_back(c);
            }
        }
    }
    const double last = grid.back();
    const double dl = f(last) - g(last);
    const double ds = f.right_slope(last) - g.right_slope(last);
    if ((dl < 0.0 && ds > 0.0) || (dl > 0.0 && ds < 0.0)) {
        const double c = last - dl / ds;
        if (c > last)
            xs.push_back(c);
    }
    std::vector<double> vs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        vs[i] = std::max(f(xs[i]), g(xs[i]));
    const double tail = xs.back() + 1.0;
    const double right =
        f(tail) >= g(tail) ? f.right_slope(xs.back()) : g.right_slope(xs.back());
    return from_samples(xs, vs, right);
}

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms, double tolerance) : atoms_(std::move(atoms)) {
    if (atoms_.empty())
        throw InputError("measure has no atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const Atom& a = atoms_[i];
        if (!(a.mass > 0.0) || !std::isfinite(a.mass))
            throw InputError("measure atoms must carry positive mass");
        if (!(a.location >= 0.0) || !std::isfinite(a.location))
            throw InputError("measure atoms must sit at non-negative locations");
        if (i > 0 && !(atoms_[i - 1].location < a.location))
            throw InputError("measure atom locations must be strictly increasing");
        total += a.mass;
    }
    if (std::abs(total - 1.0) > tolerance) {
        std::ostringstream os;
        os << "measure masses sum to " << total << ", not 1";
        throw InputError(os.str());
    }
}

double DiscreteMeasure::total_mass() const {
    return std::accumulate(atoms_.begin(), atoms_.end(), 0.0,
                           [](double acc, const Atom& a) { return acc + a.mass; });
}

double DiscreteMeasure::mean() const {
    return std::accumulate(atoms_.begin(), atoms_.end(), 0.0,
                           [](double acc, const Atom& a) { return acc + a.mass * a.location; });
}

double DiscreteMeasure::mass_below(std::size_t index) const {
    double m = 0.0;
    for (std::size_t i = 0; i < index && i < atoms_.size(); ++i)
        m += atoms_[i].mass;
    return m;
}

PLCurve european_from_measure(const DiscreteMeasure& measure, double rate, double tau) {
    const double disc = std::exp(-rate * tau);
    std::vector<Kink> kinks;
    kinks.reserve(measure.size());
    double cumulative = 0.0;
    double value = 0.0;
    double prev = 0.0;
    for (const Atom& a : measure.atoms()) {
        value += disc * cumulative * (a.location - prev);
        kinks.push_back({a.location, value});
        cumulative += a.mass;
        prev = a.location;
    }
    return PLCurve(std::move(kinks), 0.0, disc);
}

DiscreteMeasure measure_from_european(const PLCurve& curve, double rate, double tau, double spot,
                                      double tolerance) {
    const double growth = std::exp(rate * tau);
    const double scale = std::max(spot, 1e-300);
    std::vector<Atom> atoms;
    const auto kinks = curve.kinks();
    if (std::abs(curve.eval(0.0)) > tolerance * scale)
        throw InconsistencyError("European curve does not vanish at strike 0");
    if (curve.left_extension_slope() < -tolerance)
        throw InconsistencyError("European curve is decreasing left of its first kink");
    if (kinks.front().strike > 0.0 && curve.left_extension_slope() > tolerance)
        atoms.push_back({0.0, growth * curve.left_extension_slope()});
    for (const Kink& k : kinks) {
        const double jump = curve.right_slope(k.strike) - curve.left_slope(k.strike);
        const double mass = growth * jump;
        if (mass < -tolerance) {
            std::ostringstream os;
            os << "European curve is not convex at strike " << k.strike;
            throw InconsistencyError(os.str());
        }
        if (mass > 1e-15)
            atoms.push_back({k.strike, mass});
    }
    if (atoms.empty())
        throw InconsistencyError("European curve carries no probability mass");
    double total = 0.0, mean = 0.0;
    for (const Atom& a : atoms) {
        total += a.mass;
        mean += a.mass * a.location;
    }
    if (std::abs(total - 1.0) > tolerance) {
        std::ostringstream os;
        os << "European curve implies total mass " << total;
        throw InconsistencyError(os.str());
    }
    if (std::abs(mean - spot * growth) > tolerance * scale * growth) {
        std::ostringstream os;
        os << "European curve implies forward " << mean << " instead of " << spot * growth;
        throw InconsistencyError(os.str());
    }
    return DiscreteMeasure(std::move(atoms), tolerance);
}

CompletedEuropean complete_european(const Market& market) {
    market.validate();
    const double tol = market.tolerance * market.spot;
    const double disc = std::exp(-market.rate * market.maturity);
    std::vector<Quote> pts = with_origin(market.european);
    if (pts.front().price != 0.0 && std::abs(pts.front().price) > tol)
        throw InconsistencyError("European price at strike 0 must vanish");

    const Quote& last = pts.back();
    const double slope_last = pts.size() > 1 ? segment_slope(pts[pts.size() - 2], last) : 0.0;
    const double residual = 1.0 - slope_last / disc;
    const double gap = last.price - (disc * last.strike - market.spot);

    CompletedEuropean out{market, {}, {}};
    if (gap < -tol)
        throw InconsistencyError("last European quote lies below the lower bound");
    if (gap <= tol) {
        if (residual < -market.tolerance)
            throw InconsistencyError("European slopes imply more than unit mass");
    } else {
        if (residual <= market.tolerance)
            throw InconsistencyError(
                "European curve stays above its lower bound with slope at the discount factor");
        // partial law from the quoted kinks; the balancing atom takes what is left
        PLCurve partial = curve_from_quotes(pts, 0.0, slope_last);
        double mean = 0.0;
        for (const Kink& k : partial.kinks())
            mean += (partial.right_slope(k.strike) - partial.left_slope(k.strike)) / disc * k.strike;
        const double forward = market.spot / disc;
        const double x_star = (forward - mean) / residual;
        if (!(x_star > last.strike))
            throw InconsistencyError("balancing atom falls inside the quoted strike range");
        const Quote appended{x_star, disc * x_star - market.spot};
        pts.push_back(appended);
        out.market.european.push_back(appended);
    }
    out.curve = curve_from_quotes(pts, 0.0, disc).merged(market.tolerance);
    out.measure = measure_from_european(out.curve, market.rate, market.maturity, market.spot,
                                        std::max(market.tolerance, 1e-12));
    return out;
}

PLCurve complete_american(const Market& market, const PLCurve& european) {
    market.validate();
    const double s0 = market.spot;
    const double tol = market.tolerance * s0;
    std::vector<Quote> pts = with_origin(market.american);
    const Quote last = pts.back();
    if (pts.size() == 1 || last.price - (last.strike - s0) <= tol)
        return curve_from_quotes(pts, 0.0, 1.0).merged(market.tolerance);

    std::vector<Kink> kinks;
    for (const Quote& q : pts)
        kinks.push_back({q.strike, q.price});
    const double s = segment_slope(pts[pts.size() - 2], last);
    Line cur{s, s * last.strike - last.price};
    double pos = last.strike;
    bool resetting = false;

    auto crossing = [&](const Line& l) {
        // l(K) = K - s0
        if (!(l.slope < 1.0))
            return std::numeric_limits<double>::infinity();
        return (s0 - l.intercept) / (1.0 - l.slope);
    };

    double cross = std::numeric_limits<double>::infinity();
    for (const Kink& atom : european.kinks()) {
        const double x = atom.strike;
        if (x < pos || x <= 0.0)
            continue;
        const double kc = crossing(cur);
        if (kc <= x) {
            cross = kc;
            break;
        }
        const double d_e = lf_value(european, x);
        if (resetting || cur.intercept < d_e - tol) {
            const double v = cur(x);
            if (x > pos)
                kinks.push_back({x, v});
            cur = Line{(v + d_e) / x, d_e};
            resetting = true;
            pos = x;
        }
    }
    if (!std::isfinite(cross))
        cross = crossing(cur);
    const double last_atom = european.kinks().back().strike;
    const double bound = last_atom * std::exp(-market.rate * market.maturity);
    if (!std::isfinite(cross) || cross > bound + tol + 1e-12 * bound || cross < pos - tol)
        throw InconsistencyError("American extension does not meet K - S0 before the upper bound does");
    cross = std::max(cross, pos);
    if (cross > kinks.back().strike)
        kinks.push_back({cross, cross - s0});
    return PLCurve(std::move(kinks), 0.0, 1.0).merged(market.tolerance);
}

PLCurve naive_american(const Market& market) {
    const double s0 = market.spot;
    std::vector<Quote> pts = with_origin(market.american);
    const Quote last = pts.back();
    if (pts.size() == 1 || last.price <= last.strike - s0)
        return curve_from_quotes(pts, 0.0, 1.0);
    const double s = segment_slope(pts[pts.size() - 2], last);
    if (s >= 1.0)
        return curve_from_quotes(pts, 0.0, s);
    const double d = s * last.strike - last.price;
    const double kc = (s0 - d) / (1.0 - s);
    if (kc > last.strike)
        pts.push_back({kc, kc - s0});
    return curve_from_quotes(pts, 0.0, 1.0);
}

} // namespace amerput
