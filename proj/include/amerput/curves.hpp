#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace amerput {

inline constexpr double kDefaultTolerance = 1e-9;

struct Quote {
    double strike = 0.0;
    double price = 0.0;
};

/// Co-terminal put quotes on one underlying. Strikes strictly increase within each list.
struct Market {
    double spot = 1.0;
    double rate = 0.0;
    double maturity = 1.0;
    std::vector<Quote> european;
    std::vector<Quote> american;
    double tolerance = kDefaultTolerance;

    /// Throws InputError on any broken field invariant.
    void validate() const;
};

/// Same market with strikes and prices divided by spot (spot becomes 1).
Market normalized(const Market& market);

/// Line K -> slope * K - intercept. The intercept of a supporting line is the
/// Legendre-Fenchel quantity slope * K - f(K) of the curve it supports.
struct Line {
    double slope = 0.0;
    double intercept = 0.0;

    double operator()(double strike) const { return slope * strike - intercept; }
};

struct Kink {
    double strike = 0.0;
    double value = 0.0;
};

/// Continuous piecewise-linear function of strike: kinks joined by segments,
/// linear extensions with the given slopes on either side.
class PLCurve {
  public:
    PLCurve() = default;
    PLCurve(std::vector<Kink> kinks, double left_slope, double right_slope);

    std::span<const Kink> kinks() const { return kinks_; }
    std::size_t size() const { return kinks_.size(); }
    double left_extension_slope() const { return left_slope_; }
    double right_extension_slope() const { return right_slope_; }

    double eval(double strike) const;
    double operator()(double strike) const { return eval(strike); }

    /// One-sided derivatives. At a kink these return the adjacent segment slope.
    double right_slope(double strike) const;
    double left_slope(double strike) const;

    /// Supporting lines of each segment from the first kink on, left to right;
    /// the last one is the right extension.
    std::vector<Line> pieces() const;

    /// Drops interior kinks whose slope change is at most `slope_tol`.
    PLCurve merged(double slope_tol) const;
    PLCurve scaled(double factor) const;

    /// True when successive slopes never drop by more than `slope_tol`.
    bool is_convex(double slope_tol) const;

  private:
    std::size_t segment_index(double strike) const;

    std::vector<Kink> kinks_;
    double left_slope_ = 0.0;
    double right_slope_ = 0.0;
};

/// Linear interpolation through the quotes with the stated extension slopes.
PLCurve curve_from_quotes(std::span<const Quote> quotes, double left_slope, double right_slope);

/// f'(K+) * K - f(K).
double lf_value(const PLCurve& curve, double strike);

/// Upper envelope max_j lines_j restricted to [0, inf). Always has a kink at 0.
PLCurve upper_envelope(std::span<const Line> lines, double slope_tol = 0.0);

/// sum_i w_i f_i on [0, inf).
PLCurve weighted_sum(std::span<const std::pair<double, PLCurve>> terms);

/// max(f, g) on [0, inf), with kinks added at crossings.
PLCurve pointwise_max(const PLCurve& f, const PLCurve& g);

struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

/// Finite atomic law with strictly increasing locations and positive masses summing to one.
class DiscreteMeasure {
  public:
    DiscreteMeasure() = default;
    explicit DiscreteMeasure(std::vector<Atom> atoms, double tolerance = kDefaultTolerance);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    double total_mass() const;
    double mean() const;
    /// Mass strictly below / at-or-below the atom with the given index.
    double mass_below(std::size_t index) const;

  private:
    std::vector<Atom> atoms_;
};

/// E(K) = exp(-rate * tau) * sum_i p_i (K - x_i)_+ with kinks exactly at the atoms.
PLCurve european_from_measure(const DiscreteMeasure& measure, double rate, double tau);

/// Recovers the terminal law from a completed European curve: mass exp(rate*tau) times
/// the slope jump at each kink. Throws InconsistencyError when the curve is not the
/// put curve of a unit-mass law with mean spot * exp(rate * tau).
DiscreteMeasure measure_from_european(const PLCurve& curve, double rate, double tau, double spot,
                                      double tolerance = kDefaultTolerance);

struct CompletedEuropean {
    Market market;
    DiscreteMeasure measure;
    PLCurve curve;
};

/// Appends the single balancing atom that puts the last quote on the lower bound
/// exp(-rT) K - S0 and matches the forward.
CompletedEuropean complete_european(const Market& market);

/// Extends the American curve past its last quote (slope resets at European atoms
/// wherever the Legendre-Fenchel inequality would fail) until it meets K - S0.
PLCurve complete_american(const Market& market, const PLCurve& european);

/// Interpolated American curve as quoted, continued past the last quote by its last
/// segment and then by K - S0 where that line crosses it. Used when completion fails.
PLCurve naive_american(const Market& market);

} // namespace amerput
