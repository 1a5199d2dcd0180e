#include "oracles.hpp"

#include "amerput/curves.hpp"
#include "amerput/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace amerput;

namespace {

const double kLn2 = std::log(2.0);

PLCurve w_european() {
    return european_from_measure(DiscreteMeasure({{1.0, 0.25}, {2.0, 0.5}, {3.0, 0.25}}), kLn2, 1.0);
}

PLCurve w_american() {
    return upper_envelope(std::vector<Line>{{0.0, 0.0}, {0.25, 0.15}, {1.0, 1.0}});
}

} // namespace

TEST(PLCurve, InterpolatesQuotes) {
    const std::vector<Quote> q{{1.0, 0.0}, {2.0, 0.125}, {3.0, 0.5}};
    const PLCurve c = curve_from_quotes(q, 0.0, 0.5);
    EXPECT_DOUBLE_EQ(c(2.5), 0.3125);
    EXPECT_DOUBLE_EQ(c(1.5), 0.0625);
    EXPECT_DOUBLE_EQ(c(4.0), 1.0);
    EXPECT_DOUBLE_EQ(c(0.5), 0.0);
}

TEST(PLCurve, SingleQuoteUsesExtensionSlopes) {
    const std::vector<Quote> q{{1.0, 0.0}};
    const PLCurve c = curve_from_quotes(q, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(c(0.3), 0.0);
    EXPECT_DOUBLE_EQ(c(1.0), 0.0);
    EXPECT_DOUBLE_EQ(c(2.5), 1.5);
}

TEST(PLCurve, LeftExtensionIsLinear) {
    const PLCurve c({{1.0, 0.5}, {2.0, 1.0}}, 0.25, 1.0);
    EXPECT_DOUBLE_EQ(c(0.0), 0.25);
    const PLCurve flat({{1.0, 0.5}, {2.0, 1.0}}, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(flat(0.0), 0.5);
}

TEST(PLCurve, OneSidedSlopes) {
    const PLCurve e = w_european();
    EXPECT_DOUBLE_EQ(e(2.0), 0.125);
    EXPECT_DOUBLE_EQ(e.right_slope(2.0), 0.375);
    EXPECT_DOUBLE_EQ(e.left_slope(2.0), 0.125);
    EXPECT_DOUBLE_EQ(e.left_slope(2.4), e.right_slope(2.4));
}

TEST(PLCurve, KeepsCollinearQuotesUntilMerged) {
    const std::vector<Quote> q{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 4.0}};
    const PLCurve c = curve_from_quotes(q, 0.0, 2.0);
    EXPECT_EQ(c.size(), 4u);
    EXPECT_EQ(c.merged(0.0).size(), 2u);
    EXPECT_TRUE(c.is_convex(0.0));
}

TEST(PLCurve, RejectsUnsortedStrikes) {
    const std::vector<Quote> q{{2.0, 0.1}, {1.0, 0.0}};
    EXPECT_THROW(curve_from_quotes(q, 0.0, 1.0), InputError);
}

TEST(LfValue, WorkedValues) {
    EXPECT_DOUBLE_EQ(lf_value(w_american(), 1.0), 0.15);
    EXPECT_DOUBLE_EQ(lf_value(w_european(), 3.0), 1.0);
    const PLCurve ray({{0.0, 0.0}}, 0.0, 0.7);
    for (double k : {0.0, 0.3, 5.0})
        EXPECT_NEAR(lf_value(ray, k), 0.0, 1e-15);
}

TEST(Envelope, MatchesPointwiseMaxOfLines) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Line> lines{{0.0, 0.0}};
        for (int j = 0; j < 6; ++j)
            lines.push_back({2.0 * u(rng), 3.0 * u(rng)});
        const PLCurve env = upper_envelope(lines);
        EXPECT_DOUBLE_EQ(env.kinks().front().strike, 0.0);
        for (int i = 0; i <= 400; ++i) {
            const double k = 0.02 * i;
            double want = 0.0;
            for (const Line& l : lines)
                want = std::max(want, l(k));
            ASSERT_NEAR(env(k), want, 1e-12) << "trial " << trial << " K " << k;
        }
        EXPECT_TRUE(env.is_convex(1e-12));
    }
}

TEST(Envelope, SumAndMaxAgreeWithPointwiseEvaluation) {
    const PLCurve e = w_european();
    const PLCurve a = w_american();
    const std::vector<std::pair<double, PLCurve>> terms{{0.3, e}, {0.7, a}};
    const PLCurve s = weighted_sum(terms);
    const PLCurve m = pointwise_max(e, a);
    for (int i = 0; i <= 500; ++i) {
        const double k = 0.01 * i;
        EXPECT_NEAR(s(k), 0.3 * e(k) + 0.7 * a(k), 1e-12);
        EXPECT_NEAR(m(k), std::max(e(k), a(k)), 1e-12);
    }
}

TEST(Measure, EuropeanFromSingleAtom) {
    const PLCurve e = european_from_measure(DiscreteMeasure({{2.0, 1.0}}), kLn2, 1.0);
    EXPECT_DOUBLE_EQ(e(3.0), 0.5);
    EXPECT_DOUBLE_EQ(e(1.5), 0.0);
}

TEST(Measure, EuropeanFromThreeAtoms) {
    const PLCurve e = w_european();
    EXPECT_DOUBLE_EQ(e(1.0), 0.0);
    EXPECT_DOUBLE_EQ(e(2.0), 0.125);
    EXPECT_DOUBLE_EQ(e(3.0), 0.5);
}

TEST(Measure, ParityAsymptote) {
    const DiscreteMeasure mu({{0.7, 0.2}, {1.1, 0.5}, {1.9, 0.3}});
    const double r = 0.05, tau = 1.5;
    const PLCurve e = european_from_measure(mu, r, tau);
    const double disc = std::exp(-r * tau);
    EXPECT_NEAR(e(100.0) - (disc * 100.0 - disc * mu.mean()), 0.0, 1e-12);
}

TEST(Measure, RecoveredFromEuropeanCurve) {
    const DiscreteMeasure mu = measure_from_european(w_european(), kLn2, 1.0, 1.0);
    ASSERT_EQ(mu.size(), 3u);
    EXPECT_NEAR(mu.atoms()[0].mass, 0.25, 1e-12);
    EXPECT_NEAR(mu.atoms()[1].mass, 0.5, 1e-12);
    EXPECT_NEAR(mu.atoms()[2].mass, 0.25, 1e-12);

    const PLCurve single = european_from_measure(DiscreteMeasure({{2.0, 1.0}}), kLn2, 1.0);
    const DiscreteMeasure d = measure_from_european(single, kLn2, 1.0, 1.0);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_DOUBLE_EQ(d.atoms()[0].location, 2.0);
}

TEST(Measure, ZeroCurveHasNoLaw) {
    const PLCurve zero({{0.0, 0.0}}, 0.0, 0.0);
    EXPECT_THROW(measure_from_european(zero, kLn2, 1.0, 1.0), InconsistencyError);
}

TEST(Measure, RejectsBadMasses) {
    EXPECT_THROW(DiscreteMeasure({{1.0, 0.5}, {2.0, 0.4}}), InputError);
    EXPECT_THROW(DiscreteMeasure({{2.0, 0.5}, {1.0, 0.5}}), InputError);
    EXPECT_THROW(DiscreteMeasure(std::vector<Atom>{}), InputError);
}

TEST(CompleteEuropean, QuotesOnLowerBoundUnchanged) {
    const Market m = oracle::worked_market();
    const CompletedEuropean ce = complete_european(m);
    EXPECT_EQ(ce.market.european.size(), 3u);
    EXPECT_EQ(ce.measure.size(), 3u);
}

TEST(CompleteEuropean, AppendsBalancingAtom) {
    Market m = oracle::worked_market();
    m.european = {{1.0, 0.0}, {2.0, 0.125}};
    const CompletedEuropean ce = complete_european(m);
    // mass 1/4 at 1 from the quotes, the other 3/4 where the forward 2 is matched
    ASSERT_EQ(ce.measure.size(), 2u);
    EXPECT_NEAR(ce.measure.atoms()[0].mass, 0.25, 1e-12);
    EXPECT_NEAR(ce.measure.atoms()[1].location, 7.0 / 3.0, 1e-12);
    EXPECT_NEAR(ce.measure.atoms()[1].mass, 0.75, 1e-12);
    EXPECT_NEAR(ce.measure.mean(), 2.0, 1e-12);
}

TEST(CompleteEuropean, MoreThanUnitMassIsInconsistent) {
    Market m = oracle::worked_market();
    // slope jumps imply mass 2 * (0.4 + 0.1) > 1 before the last quote
    m.european = {{1.0, 0.0}, {2.0, 0.4}, {3.0, 0.9}};
    EXPECT_THROW(complete_european(m), InconsistencyError);
}

TEST(CompleteAmerican, MeetsExerciseLine) {
    const Market m = oracle::worked_market();
    const PLCurve a = complete_american(m, complete_european(m).curve);
    EXPECT_NEAR(a(17.0 / 15.0), 2.0 / 15.0, 1e-12);
    EXPECT_NEAR(a(5.0), 4.0, 1e-12);
    EXPECT_NEAR(a.right_extension_slope(), 1.0, 1e-12);
}

TEST(CompleteAmerican, AlreadyOnExerciseLine) {
    Market m = oracle::worked_market();
    m.american = {{0.6, 0.0}, {1.0, 0.1}, {2.0, 1.0}};
    const PLCurve a = complete_american(m, complete_european(m).curve);
    EXPECT_NEAR(a(2.0), 1.0, 1e-12);
    EXPECT_NEAR(a(3.0), 2.0, 1e-12);
}

TEST(Market, NormalizedDividesBySpot) {
    Market m = oracle::worked_market();
    m.spot = 50.0;
    for (Quote& q : m.european)
        q = {q.strike * 50.0, q.price * 50.0};
    for (Quote& q : m.american)
        q = {q.strike * 50.0, q.price * 50.0};
    const Market n = normalized(m);
    EXPECT_DOUBLE_EQ(n.spot, 1.0);
    EXPECT_DOUBLE_EQ(n.european[1].price, 0.125);
    EXPECT_DOUBLE_EQ(n.american[0].strike, 0.6);
}

TEST(Market, ValidateRejectsBrokenFields) {
    Market m = oracle::worked_market();
    m.spot = -1.0;
    EXPECT_THROW(m.validate(), InputError);
    m = oracle::worked_market();
    m.maturity = 0.0;
    EXPECT_THROW(m.validate(), InputError);
    m = oracle::worked_market();
    m.tolerance = 0.0;
    EXPECT_THROW(m.validate(), InputError);
    m = oracle::worked_market();
    m.american.clear();
    EXPECT_THROW(m.validate(), InputError);
}
