#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace oracle {

double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations) {
    double flo = f(lo);
    if (flo == 0.0)
        return lo;
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0)
            return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

double put_from_atoms(std::span<const Atom> atoms, double rate, double tau, double strike) {
    double v = 0.0;
    for (const Atom& a : atoms)
        v += a.mass * std::max(0.0, strike - a.location);
    return std::exp(-rate * tau) * v;
}

} // namespace

BisectedCritical critical_time_bisection(const Picture& picture, const BuildSettings& settings) {
    const double r = settings.rate;
    const double tau = settings.maturity - picture.t_old;
    const auto atoms = picture.measure.atoms();
    const auto pieces = picture.american.pieces();
    std::vector<BisectedCritical> found;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
        const Line f = pieces[j];
        if (f.slope <= 1e-12 || f.intercept >= picture.spot - 1e-12)
            continue;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const double x = atoms[i].location;
            const double ex = put_from_atoms(atoms, r, tau, x);
            auto g = [&](double t) { return f(x * std::exp(-r * (tau - t))) - ex; };
            if (g(tau) <= 1e-12)
                continue;
            const double t = g(0.0) >= 0.0 ? 0.0 : bisect(g, 0.0, tau);
            found.push_back({t, x * std::exp(-r * (tau - t)), j, i});
        }
    }
    BisectedCritical best{tau, 0.0, 0, 0};
    if (found.empty())
        return best;
    double t_min = tau;
    for (const BisectedCritical& c : found)
        t_min = std::min(t_min, c.t);
    // simultaneous touches (siblings jumping together) go to the leftmost atom
    bool first = true;
    for (const BisectedCritical& c : found) {
        if (c.t > t_min + 1e-10)
            continue;
        if (first || c.atom < best.atom || (c.atom == best.atom && pieces[c.piece].slope < pieces[best.piece].slope))
            best = c;
        first = false;
    }
    return best;
}

double american_by_enumeration(const TreeModel& model, double strike) {
    const auto& nodes = model.nodes();
    const std::size_t n = nodes.size();
    if (n > 18)
        throw std::invalid_argument("american_by_enumeration: tree too large");
    const double r = model.rate();
    const double T = model.maturity();
    double best = 0.0;
    for (std::uint32_t rule = 0; rule < (1u << n); ++rule) {
        // expected discounted payoff of "stop at the first node in `rule`, else at T"
        std::function<double(int)> value = [&](int id) -> double {
            const TreeNode& node = nodes[static_cast<std::size_t>(id)];
            if (rule & (1u << id))
                return std::exp(-r * node.time) * std::max(0.0, strike - node.price);
            if (node.children.empty()) {
                const double st = node.price * std::exp(r * (T - node.time));
                return std::exp(-r * T) * std::max(0.0, strike - st);
            }
            double v = 0.0;
            for (int c : node.children)
                v += nodes[static_cast<std::size_t>(c)].prob * value(c);
            return v;
        };
        best = std::max(best, value(0));
    }
    return best;
}

double european_by_paths(const TreeModel& model, double strike) {
    const double r = model.rate();
    const double T = model.maturity();
    std::function<double(int, double)> walk = [&](int id, double prob) -> double {
        const TreeNode& node = model.node(id);
        if (node.children.empty()) {
            const double st = node.price * std::exp(r * (T - node.time));
            return prob * std::max(0.0, strike - st);
        }
        double v = 0.0;
        for (int c : node.children)
            v += walk(c, prob * model.node(c).prob);
        return v;
    };
    return std::exp(-r * T) * walk(0, 1.0);
}

double lf_numeric(const PLCurve& f, double strike, double h) {
    return (f(strike + h) - f(strike)) / h * strike - f(strike);
}

bool lf_dense_grid(const PLCurve& european, const PLCurve& american, double hi, int points, double tol) {
    for (int i = 0; i < points; ++i) {
        const double x = hi * i / (points - 1);
        if (lf_numeric(american, x) < lf_numeric(european, x) - tol)
            return false;
    }
    return true;
}

namespace {

// Linear interpolation through (0,0) and the quotes; nullopt-like NaN past the last one.
double interp(const std::vector<Quote>& q, double k) {
    if (k < 0.0 || k > q.back().strike)
        return std::numeric_limits<double>::quiet_NaN();
    double x0 = 0.0, y0 = 0.0;
    for (const Quote& p : q) {
        if (k <= p.strike)
            return p.strike == x0 ? p.price : y0 + (p.price - y0) * (k - x0) / (p.strike - x0);
        x0 = p.strike;
        y0 = p.price;
    }
    return y0;
}

std::vector<double> slopes_with_origin(const std::vector<Quote>& q) {
    std::vector<double> s;
    double x0 = 0.0, y0 = 0.0;
    for (const Quote& p : q) {
        if (p.strike > x0)
            s.push_back((p.price - y0) / (p.strike - x0));
        x0 = p.strike;
        y0 = p.price;
    }
    return s;
}

} // namespace

std::set<ViolationKind> dense_violations(const Market& m, int points) {
    std::set<ViolationKind> out;
    const double tol = m.tolerance * m.spot;
    const double disc = std::exp(-m.rate * m.maturity);
    const auto& eq = m.european;
    const auto& aq = m.american;

    const std::vector<double> es = slopes_with_origin(eq);
    for (std::size_t i = 0; i < es.size(); ++i) {
        if (es[i] < -1e-9 || (i > 0 && es[i] < es[i - 1] - 1e-9))
            out.insert(ViolationKind::EMonotoneConvex);
        if (es[i] > disc + 1e-9)
            out.insert(ViolationKind::ESlopeCap);
    }
    for (const Quote& q : eq) {
        if (q.price < std::max(0.0, disc * q.strike - m.spot) - tol)
            out.insert(ViolationKind::ELower);
        if (q.price > disc * q.strike + tol)
            out.insert(ViolationKind::EUpper);
    }

    const std::vector<double> as = slopes_with_origin(aq);
    for (std::size_t i = 0; i < as.size(); ++i) {
        if (as[i] < -1e-9)
            out.insert(ViolationKind::AMonotone);
        if (i > 0 && as[i] < as[i - 1] - 1e-9)
            out.insert(ViolationKind::AConvex);
    }

    const double growth = 1.0 / disc;
    const double hi = aq.back().strike;
    for (int i = 0; i <= points; ++i) {
        const double k = hi * i / points;
        const double a = interp(aq, k);
        const double e = interp(eq, k);
        if (a < k - m.spot - tol || (!std::isnan(e) && a < e - tol))
            out.insert(ViolationKind::ALower);
        const double eu = interp(eq, growth * k);
        if (!std::isnan(eu) && a > eu + tol)
            out.insert(ViolationKind::AUpper);
    }
    // LF on the quoted range of both curves, right slopes from the interpolants
    const double lf_hi = std::min(aq.back().strike, eq.back().strike);
    const double h = 1e-7 * std::max(1.0, lf_hi);
    for (int i = 1; i < points; ++i) {
        const double k = lf_hi * i / points;
        if (k + h > lf_hi)
            break;
        const double la = (interp(aq, k + h) - interp(aq, k)) / h * k - interp(aq, k);
        const double le = (interp(eq, k + h) - interp(eq, k)) / h * k - interp(eq, k);
        if (la < le - 1e-6 * m.spot)
            out.insert(ViolationKind::ALf);
    }
    return out;
}

std::string Perturbation::label() const {
    std::ostringstream os;
    os << (american ? "A" : "E") << "[" << index << "]x" << factor;
    return os.str();
}

std::vector<Perturbation> single_quote_perturbations(const Market& market, double rel) {
    std::vector<Perturbation> out;
    for (int fam = 0; fam < 2; ++fam) {
        const auto& quotes = fam ? market.american : market.european;
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            if (quotes[i].price <= 0.0)
                continue;
            for (double f : {1.0 + rel, 1.0 - rel}) {
                Perturbation p{market, fam == 1, i, f};
                (fam ? p.market.american : p.market.european)[i].price *= f;
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

Market worked_market() {
    Market m;
    m.spot = 1.0;
    m.rate = std::log(2.0);
    m.maturity = 1.0;
    m.european = {{1.0, 0.0}, {2.0, 0.125}, {3.0, 0.5}};
    m.american = {{0.6, 0.0}, {1.0, 0.1}};
    return m;
}

CurvePair random_curve_pair(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double step = 0.02;
    const double rate = 0.01 + 0.09 * unit(rng);
    const double tau = 0.25 + 1.75 * unit(rng);
    const double disc = std::exp(-rate * tau);

    // atoms on the half-step lattice
    const int n_atoms = 3 + static_cast<int>(unit(rng) * 5);
    std::set<int> cells;
    while (static_cast<int>(cells.size()) < n_atoms)
        cells.insert(10 + static_cast<int>(unit(rng) * 140));
    std::vector<Atom> atoms;
    double total = 0.0;
    for (int c : cells) {
        atoms.push_back({(c + 0.5) * step, 0.1 + unit(rng)});
        total += atoms.back().mass;
    }
    for (Atom& a : atoms)
        a.mass /= total;

    auto lf_e = [&](double x) {
        double v = 0.0;
        for (const Atom& a : atoms)
            if (a.location <= x)
                v += a.mass * a.location;
        return disc * v;
    };

    // American pieces start on the integer lattice, the first one below every atom. Each
    // intercept covers lf(E) up to the next start; in about half the pairs one piece
    // falls short of it.
    const int n_pieces = 2 + static_cast<int>(unit(rng) * 5);
    std::set<int> starts{5};
    while (static_cast<int>(starts.size()) < n_pieces)
        starts.insert(6 + static_cast<int>(unit(rng) * 150));
    const std::vector<int> cuts(starts.begin(), starts.end());
    const int broken = unit(rng) < 0.5 ? static_cast<int>(unit(rng) * n_pieces) : -1;
    std::vector<Kink> kinks{{0.0, 0.0}};
    double slope = 0.0, d = 0.0;
    for (int j = 0; j < n_pieces; ++j) {
        const double k = cuts[static_cast<std::size_t>(j)] * step;
        const double end = j + 1 < n_pieces ? cuts[static_cast<std::size_t>(j) + 1] * step - 1e-9 : 1e9;
        const double need = lf_e(end);
        const double target = j == broken ? need * (0.9 + 0.08 * unit(rng)) : need * (1.0 + 0.05 * unit(rng));
        const double d_new = std::max(d + 1e-4, target);
        const double a_k = slope * k - d;
        slope += (d_new - d) / k;
        d = d_new;
        kinks.push_back({k, a_k});
    }

    CurvePair out;
    out.european = european_from_measure(DiscreteMeasure(atoms), rate, tau);
    out.american = PLCurve(kinks, 0.0, slope);
    out.hi = 3.5;
    return out;
}

} // namespace oracle
