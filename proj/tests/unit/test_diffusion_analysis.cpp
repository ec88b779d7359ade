#include <gtest/gtest.h>

#include <cmath>

#include "tradediff/diffusion_analysis.hpp"
#include "tradediff/errors.hpp"

namespace tradediff {
namespace {

DiffusionProblem one_sector(double lh, double lf, double beta) {
    DiffusionProblem p;
    p.lambda = Grid2(2, 1);
    p.lambda(0, 0) = lh;
    p.lambda(1, 0) = lf;
    p.eta = Grid2(1, 1, 1.0);
    p.landed_cost = Grid2(2, 1, 1.0);
    p.theta = {4.0};
    p.beta = beta;
    return p;
}

// Two regions, two sectors, home is region 0. landed(1, j) = tau_j * xf_j.
DiffusionProblem two_by_two(double tau0 = 1.0, double tau1 = 1.0, double xf0 = 1.0, double xf1 = 1.0,
                            double lf0 = 1.0, double lf1 = 1.0) {
    DiffusionProblem p;
    p.lambda = Grid2(2, 2, 1.0);
    p.lambda(1, 0) = lf0;
    p.lambda(1, 1) = lf1;
    p.eta = Grid2(2, 2, 0.5);
    p.landed_cost = Grid2(2, 2, 1.0);
    p.landed_cost(1, 0) = tau0 * xf0;
    p.landed_cost(1, 1) = tau1 * xf1;
    p.theta = {4.0, 4.0};
    p.beta = 0.44;
    return p;
}

Grid2 column(double a, double b) {
    Grid2 g(2, 1);
    g(0, 0) = a;
    g(1, 0) = b;
    return g;
}

TEST(DiffusionValue, BetaZeroIsOne) {
    const auto p = one_sector(4.0, 9.0, 0.0);
    for (double h : {0.0, 0.2, 0.5, 1.0}) EXPECT_NEAR(diffusion_value(column(h, 1.0 - h), p, 0), 1.0, 1e-15);
}

TEST(DiffusionValue, CornerShares) {
    const auto p = one_sector(4.0, 9.0, 0.5);
    EXPECT_NEAR(diffusion_value(column(1.0, 0.0), p, 0), 2.0, 1e-15);
}

TEST(DiffusionValue, SymmetricHalfShares) {
    const double lambda = 2.3;
    const auto p = one_sector(lambda, lambda, 0.5);
    EXPECT_NEAR(diffusion_value(column(0.5, 0.5), p, 0), std::sqrt(2.0 * lambda), 1e-14);
}

TEST(DiffusionValue, PerUsingSectorSharesAgreeWhenCommon) {
    auto p = two_by_two();
    p.lambda(1, 0) = 2.0;
    Grid2 pi(2, 2);
    pi(0, 0) = 0.3;
    pi(1, 0) = 0.7;
    pi(0, 1) = 0.6;
    pi(1, 1) = 0.4;
    Grid3 per_use(2, 2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t j = 0; j < 2; ++j) per_use(i, s, j) = pi(s, j);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(diffusion_value(per_use, p, i), diffusion_value(pi, p, i));
}

TEST(OptimalShares, ProportionalToLambda) {
    const auto even = optimal_shares(one_sector(1.0, 1.0, 0.4));
    EXPECT_DOUBLE_EQ(even(0, 0), 0.5);
    const auto uneven = optimal_shares(one_sector(1.0, 3.0, 0.4));
    EXPECT_DOUBLE_EQ(uneven(0, 0), 0.25);
    EXPECT_DOUBLE_EQ(uneven(1, 0), 0.75);
}

TEST(ActualShares, Examples) {
    EXPECT_DOUBLE_EQ(actual_shares(two_by_two())(0, 0), 0.5);
    const auto pi = actual_shares(two_by_two(1.2, 1.2));
    EXPECT_NEAR(pi(0, 0), 1.0 / (1.0 + std::pow(1.2, -4.0)), 1e-15);
    EXPECT_NEAR(pi(0, 0), 0.6747, 1e-4);
    EXPECT_GT(actual_shares(two_by_two(1e4, 1e4))(0, 1), 1.0 - 1e-12);
}

TEST(ActualShares, EqualsOptimalWhenCostsCancel) {
    auto p = two_by_two();
    p.landed_cost(0, 0) = 1.7;
    p.landed_cost(1, 0) = 1.7;
    p.landed_cost(0, 1) = 0.8;
    p.landed_cost(1, 1) = 0.8;
    p.lambda(1, 0) = 2.5;
    const auto a = actual_shares(p);
    const auto o = optimal_shares(p);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a(s, j), o(s, j), 1e-15);
}

TEST(Aleph, IdenticalCase) {
    EXPECT_NEAR(aleph_two_by_two(two_by_two(), 0, 1), 1.0, 1e-15);
    EXPECT_NEAR(aleph(two_by_two(), 0, 0, 0, 1), 1.0, 1e-15);
}

TEST(Aleph, TradeCostGap) { EXPECT_GT(aleph_two_by_two(two_by_two(1.6, 1.2), 0, 1), 1.0); }

TEST(Aleph, UnitCostGap) { EXPECT_GT(aleph_two_by_two(two_by_two(1.1, 1.1, 1.4, 1.0), 0, 1), 1.0); }

TEST(Aleph, ForeignProductivityGap) {
    EXPECT_GT(aleph_two_by_two(two_by_two(1.3, 1.3, 1.0, 1.0, 2.0, 1.0), 0, 1), 1.0);
    // Without trade costs the planner and the market agree.
    EXPECT_NEAR(aleph_two_by_two(two_by_two(1.0, 1.0, 1.0, 1.0, 2.0, 1.0), 0, 1), 1.0, 1e-15);
}

TEST(Aleph, MultiRegionFormAgreesWithTwoByTwo) {
    const auto p = two_by_two(1.5, 1.1, 1.2, 0.9, 0.7, 1.8);
    EXPECT_NEAR(aleph(p, 0, 0, 0, 1), aleph_two_by_two(p, 0, 1), 1e-13);
}

TEST(Aleph, TwoByTwoNeedsTwoRegions) {
    DiffusionProblem p;
    p.lambda = Grid2(3, 2, 1.0);
    p.eta = Grid2(2, 2, 0.5);
    p.landed_cost = Grid2(3, 2, 1.0);
    p.theta = {4.0, 4.0};
    p.beta = 0.3;
    EXPECT_THROW(aleph_two_by_two(p, 0, 1), Error);
}

TEST(FigureSurface, SymmetricMaximumAtCenter) {
    const auto s = figure_surface(two_by_two(), 101);
    std::size_t bx = 0, by = 0;
    for (std::size_t x = 0; x < 101; ++x)
        for (std::size_t y = 0; y < 101; ++y)
            if (s.values(x, y) > s.values(bx, by)) {
                bx = x;
                by = y;
            }
    EXPECT_EQ(bx, 50u);
    EXPECT_EQ(by, 50u);
    EXPECT_NEAR(s.values(bx, by), s.optimal.value, 1e-15);
    EXPECT_DOUBLE_EQ(s.optimal.x, 0.5);
    EXPECT_DOUBLE_EQ(s.autarky.x, 1.0);
    EXPECT_DOUBLE_EQ(s.autarky.y, 1.0);
}

TEST(FigureSurface, AntiDiagonalBelowMaximumOffCenter) {
    const auto s = figure_surface(two_by_two(), 101);
    const double top = s.optimal.value;
    for (std::size_t x = 0; x < 101; ++x) {
        const double v = s.values(x, 100 - x);
        if (x == 50)
            EXPECT_NEAR(v, top, 1e-15);
        else
            EXPECT_LT(v, top);
    }
}

TEST(FigureSurface, MarkedPointsMatchShareFunctions) {
    const auto p = two_by_two(1.4, 1.1, 1.0, 1.2, 2.0, 0.6);
    const auto s = figure_surface(p, 11, 2);
    const auto a = actual_shares(p);
    const auto o = optimal_shares(p);
    EXPECT_DOUBLE_EQ(s.actual.x, a(0, 0));
    EXPECT_DOUBLE_EQ(s.actual.y, a(0, 1));
    EXPECT_DOUBLE_EQ(s.optimal.x, o(0, 0));
    EXPECT_NEAR(s.optimal.value, diffusion_value(o, p, 0), 1e-14);
    EXPECT_NEAR(s.actual.value, diffusion_value(a, p, 0), 1e-14);
    EXPECT_GE(s.optimal.value, s.actual.value);
}

TEST(FigureSurface, DeterministicAcrossThreadCounts) {
    const auto p = two_by_two(1.4, 1.1, 1.0, 1.2, 2.0, 0.6);
    EXPECT_EQ(figure_surface(p, 41, 1).values, figure_surface(p, 41, 4).values);
}

TEST(DiffusionProblem, RejectsMismatchedGrids) {
    auto p = two_by_two();
    p.theta = {4.0};
    EXPECT_THROW(optimal_shares(p), Error);
    auto q = two_by_two();
    q.beta = 1.0;
    EXPECT_THROW(actual_shares(q), Error);
}

}  // namespace
}  // namespace tradediff
