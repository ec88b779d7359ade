#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fixtures.hpp"
#include "tradediff/errors.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff {
namespace {

using testing::random_calibrated_economy;
using testing::tight_solver;

TEST(UnitCost, LeontiefIsWeightedSum) { EXPECT_DOUBLE_EQ(unit_cost(2.0, 1.0, 0.4, 0.6, 0.0), 1.4); }

TEST(UnitCost, UnitPricesGiveUnitCost) {
    const std::vector<double> pm{1.0, 1.0, 1.0};
    const std::vector<double> eta{0.2, 0.3, 0.5};
    for (double rho : {0.0, 0.5, 1.0, 2.0})
        for (double nu : {0.3, 1.0, 1.7})
            EXPECT_NEAR(unit_cost(1.0, 1.0, pm, 0.35, 0.65, 0.6, 0.4, eta, rho, nu, 0.4), 1.0, 1e-15);
}

TEST(UnitCost, GeneralCesEvaluation) { EXPECT_NEAR(unit_cost(4.0, 1.0, 0.5, 0.5, 2.0), 1.6, 1e-14); }

TEST(UnitCost, CobbDouglasIsGeometricMean) {
    EXPECT_NEAR(unit_cost(4.0, 1.0, 0.5, 0.5, 1.0), 2.0, 1e-14);
}

TEST(LandedCost, Examples) {
    EXPECT_DOUBLE_EQ(landed_cost(1.0, 1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(landed_cost(2.0, 1.6, 1.0), 3.2);
    EXPECT_DOUBLE_EQ(landed_cost(1.0, 1.0, 1.32), 1.32);
}

TEST(LandedCost, RejectsBadInputs) {
    EXPECT_THROW(landed_cost(0.0, 1.0, 1.0), NonPositivePrice);
    EXPECT_THROW(landed_cost(1.0, 0.9, 1.0), Error);
}

TEST(PriceIndex, GammaConstantAtUnitPhi) {
    const std::vector<double> lambda{1.0}, landed{1.0};
    const double expected = 1.0 / ((1.0 - 0.25 + 0.25 * std::pow(2.0, -4.0)) * std::tgamma(0.75));
    EXPECT_NEAR(price_index(lambda, landed, 4.0, 2.0), expected, 1e-14);
    EXPECT_NEAR(price_index(lambda, landed, 4.0, 2.0), 1.0659, 5e-5);
}

TEST(PriceIndex, DoublingLambdaScalesByTwoToMinusOneOverTheta) {
    const std::vector<double> lambda{0.7, 1.9, 1.2}, landed{1.0, 1.4, 1.8};
    const std::vector<double> doubled{1.4, 3.8, 2.4};
    const double theta = 5.5, sigma = 3.0;
    EXPECT_NEAR(price_index(doubled, landed, theta, sigma) / price_index(lambda, landed, theta, sigma),
                std::pow(2.0, -1.0 / theta), 1e-14);
}

TEST(PriceIndex, ScalingCostsScalesPrice) {
    const std::vector<double> lambda{0.7, 1.9}, landed{1.0, 1.4};
    const std::vector<double> scaled{2.5, 3.5};
    EXPECT_NEAR(price_index(lambda, scaled, 4.0, 2.0) / price_index(lambda, landed, 4.0, 2.0), 2.5, 1e-14);
}

TEST(PriceIndex, DivergesWhenThetaTooSmall) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(price_index(one, one, 3.0, 4.0), DivergentIndex);
    EXPECT_THROW(price_constant(2.8, 4.0), DivergentIndex);
}

TEST(TradeShares, Symmetric) {
    const std::vector<double> lambda{1.3, 1.3}, landed{1.7, 1.7};
    const auto pi = trade_shares(lambda, landed, 6.0);
    EXPECT_DOUBLE_EQ(pi[0], 0.5);
    EXPECT_DOUBLE_EQ(pi[1], 0.5);
}

TEST(TradeShares, ClosedForm) {
    const std::vector<double> lambda{1.0, 1.0}, landed{1.0, 2.0};
    const auto pi = trade_shares(lambda, landed, 1.0);
    EXPECT_NEAR(pi[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(pi[1], 1.0 / 3.0, 1e-15);
}

TEST(TradeShares, AutarkyLimit) {
    const std::vector<double> lambda{1.0, 50.0};
    const double inf = std::numeric_limits<double>::infinity();
    for (double tau : {1e3, 1e6, 1e12}) {
        const std::vector<double> landed{1.0, tau};
        EXPECT_GT(trade_shares(lambda, landed, 4.0)[0], 1.0 - 50.0 * std::pow(tau, -4.0) - 1e-15);
    }
    const std::vector<double> closed{1.0, inf};
    const auto pi = trade_shares(lambda, closed, 4.0);
    EXPECT_DOUBLE_EQ(pi[0], 1.0);
    EXPECT_DOUBLE_EQ(pi[1], 0.0);
}

TEST(TradeShares, NoSupplierThrows) {
    const std::vector<double> lambda{0.0, 0.0}, landed{1.0, 1.0};
    EXPECT_THROW(trade_shares(lambda, landed, 4.0), DivergentIndex);
}

TEST(Profits, Examples) {
    const std::vector<double> one{1.0}, hundred{100.0};
    EXPECT_DOUBLE_EQ(profits(one, hundred, 4.0), 20.0);
    const std::vector<double> pi{0.7, 0.3}, e{50.0, 100.0};
    EXPECT_NEAR(profits(pi, e, 9.0), 6.5, 1e-14);
    EXPECT_LT(profits(one, hundred, 1e12), 1e-9);
}

TEST(ConsumerDemand, UniformKappaAtUnitPrices) {
    const std::vector<double> kappa{0.5, 0.5}, p{1.0, 1.0};
    const auto c = consumer_demand(100.0, 0.0, kappa, p);
    EXPECT_DOUBLE_EQ(c.quantity[0], 50.0);
    EXPECT_DOUBLE_EQ(c.quantity[1], 50.0);
    EXPECT_NEAR(c.cpi, 2.0, 1e-14);
}

TEST(ConsumerDemand, FullSavingMeansNoPurchases) {
    const std::vector<double> kappa{0.3, 0.7}, p{1.2, 0.8};
    const auto c = consumer_demand(100.0, 1.0, kappa, p);
    EXPECT_EQ(c.quantity[0], 0.0);
    EXPECT_EQ(c.quantity[1], 0.0);
}

TEST(ConsumerDemand, SpendsAfterSavingIncome) {
    const std::vector<double> kappa{0.3, 0.7}, p{1.2, 0.8};
    const auto c = consumer_demand(100.0, 0.25, kappa, p);
    EXPECT_NEAR(c.quantity[0] * p[0] + c.quantity[1] * p[1], 75.0, 1e-12);
}

TEST(InvestmentDemand, Examples) {
    const std::vector<double> uniform{0.5, 0.5}, ones{1.0, 1.0};
    EXPECT_NEAR(investment_demand(100.0, 0.2, 0.0, uniform, ones).real, 20.0, 1e-12);

    const std::vector<double> corner{1.0, 0.0}, p{2.0, 5.0};
    EXPECT_DOUBLE_EQ(investment_demand(100.0, 0.2, 0.0, corner, p).price, 2.0);

    const auto in = investment_demand(200.0, 0.25, 0.05, corner, p);
    EXPECT_NEAR(in.real, 20.0, 1e-12);
    EXPECT_NEAR(in.quantity[0], 20.0, 1e-12);
    EXPECT_EQ(in.quantity[1], 0.0);
}

TEST(InvestmentDemand, NegativeRateThrows) {
    const std::vector<double> chi{1.0}, p{1.0};
    EXPECT_THROW(investment_demand(100.0, 0.1, 0.2, chi, p), NegativeInvestment);
}

TEST(CesShares, SumToOne) {
    const std::vector<double> w{0.2, 0.5, 0.3}, p{1.5, 0.7, 2.2};
    for (double e : {0.0, 0.4, 1.0, 2.5}) {
        const auto s = ces_shares(w, p, e);
        EXPECT_NEAR(s[0] + s[1] + s[2], 1.0, 1e-14);
    }
}

// A single closed region producing one good.
Economy closed_economy() {
    Economy e;
    e.regions = {"home"};
    e.sectors = {"all"};
    e.horizon = 2;
    e.theta = {4.0};
    e.sigma = {3.0};
    e.nu = {1.0};
    e.rho = {0.0};
    e.mu = {0.0};
    e.kappa = Grid2(1, 1, 1.0);
    e.chi = Grid2(1, 1, 1.0);
    e.eta = Grid3(1, 1, 1, 1.0);
    e.psi_f = Grid2(1, 1, 0.6);
    e.psi_m = Grid2(1, 1, 0.4);
    e.psi_l = Grid2(1, 1, 0.6);
    e.psi_k = Grid2(1, 1, 0.4);
    e.savings_rate = {0.2};
    e.tb_rate = {0.0};
    e.delta = {0.05};
    e.tau0 = Grid3(1, 1, 1, 1.0);
    e.tm0 = Grid3(1, 1, 1, 1.0);
    e.beta = 0.4;
    e.alpha0 = 0.01;
    e.lambda0 = Grid2(1, 1, 1.0);
    e.k0 = {2.0};
    e.l_path = Grid2(2, 1, 3.0);
    e.base.wage = {1.0};
    e.base.rental = {1.0};
    e.base.price = Grid2(1, 1, 1.0);
    e.base.income = {1.0};
    e.base.world_factor_income = 5.0;
    return e;
}

TEST(SolveStatic, ClosedEconomyIsAutarky) {
    const auto e = closed_economy();
    ASSERT_TRUE(validate_economy(e).empty());
    const auto sol = solve_static(e, StateVector::initial(e), PolicyInputs::baseline(e), tight_solver());
    EXPECT_TRUE(sol.convergence.converged);
    EXPECT_DOUBLE_EQ(sol.trade_share(0, 0, 0), 1.0);
    const double factor = sol.wage[0] * sol.labor[0] + sol.rental[0] * sol.capital[0];
    EXPECT_NEAR(factor, 5.0, 1e-8);
    EXPECT_NEAR(sol.profits(0, 0), sol.sales(0, 0) / 5.0, 1e-9 * sol.sales(0, 0));
    EXPECT_NEAR(sol.income[0], factor + sol.profits(0, 0), 1e-9 * sol.income[0]);
}

TEST(SolveStatic, CalibratedEconomyReproducesFlows) {
    const auto c = random_calibrated_economy(2024);
    const auto& e = c.economy;
    const auto pol = PolicyInputs::baseline(e);
    const auto sol = solve_static(e, StateVector::initial(e), pol, tight_solver());
    const auto f = flows_from_solution(e, pol, sol);
    for (std::size_t s = 0; s < e.num_regions(); ++s)
        for (std::size_t d = 0; d < e.num_regions(); ++d)
            for (std::size_t i = 0; i < e.num_sectors(); ++i) {
                const double share = c.flows.trade(s, d, i) / c.flows.absorption(d, i);
                EXPECT_NEAR(sol.trade_share(s, d, i), share, 1e-6);
                EXPECT_NEAR(f.trade(s, d, i), c.flows.trade(s, d, i), 1e-6 * c.flows.trade(s, d, i));
            }
}

TEST(SolveStatic, SymmetricRegionsGetIdenticalSolutions) {
    std::mt19937_64 rng(77);
    testing::RandomEconomyOptions opts;
    opts.regions = 2;
    opts.imbalances = false;
    auto e = testing::random_raw_economy(rng, opts);
    for (auto* g : {&e.kappa, &e.chi, &e.psi_f, &e.psi_m, &e.psi_l, &e.psi_k, &e.lambda0})
        for (std::size_t i = 0; i < e.num_sectors(); ++i) (*g)(1, i) = (*g)(0, i);
    for (std::size_t i = 0; i < e.num_sectors(); ++i) {
        for (std::size_t j = 0; j < e.num_sectors(); ++j) e.eta(1, i, j) = e.eta(0, i, j);
        e.tau0(1, 0, i) = e.tau0(0, 1, i);
        e.tm0(1, 0, i) = e.tm0(0, 1, i);
    }
    e.savings_rate[1] = e.savings_rate[0];
    e.delta[1] = e.delta[0];
    e.k0[1] = e.k0[0];
    for (std::size_t t = 0; t < e.horizon; ++t) e.l_path(t, 1) = e.l_path(t, 0);
    ASSERT_TRUE(validate_economy(e).empty());

    const auto sol = solve_static(e, StateVector::initial(e), PolicyInputs::baseline(e), tight_solver());
    EXPECT_NEAR(sol.wage[0], sol.wage[1], 1e-9);
    EXPECT_NEAR(sol.rental[0], sol.rental[1], 1e-9);
    EXPECT_NEAR(sol.income[0], sol.income[1], 1e-9);
    for (std::size_t i = 0; i < e.num_sectors(); ++i) {
        EXPECT_NEAR(sol.price(0, i), sol.price(1, i), 1e-9);
        EXPECT_NEAR(sol.trade_share(0, 0, i), sol.trade_share(1, 1, i), 1e-9);
    }
}

TEST(SolveStatic, RecalibratedEconomyConvergesImmediately) {
    const auto c = random_calibrated_economy(5);
    const auto sol =
        solve_static(c.economy, StateVector::initial(c.economy), PolicyInputs::baseline(c.economy), tight_solver());
    EXPECT_LE(sol.convergence.iterations, 2u);
    EXPECT_LE(sol.convergence.walras_residual, 1e-9);
}

TEST(SolveStatic, WarmStartFromSolutionConverges) {
    const auto c = random_calibrated_economy(9);
    const auto& e = c.economy;
    auto pol = PolicyInputs::baseline(e);
    for (double& t : pol.tau.data())
        if (t > 1.0) t += 0.3;
    const auto cold = solve_static(e, StateVector::initial(e), pol, tight_solver());
    const auto warm = solve_static(e, StateVector::initial(e), pol, tight_solver(), &cold);
    EXPECT_LE(warm.convergence.iterations, 2u);
    for (std::size_t d = 0; d < e.num_regions(); ++d) EXPECT_NEAR(warm.wage[d], cold.wage[d], 1e-8 * cold.wage[d]);
}

TEST(SolveStatic, ReportsNoConvergence) {
    const auto c = random_calibrated_economy(10);
    auto pol = PolicyInputs::baseline(c.economy);
    for (double& t : pol.tau.data())
        if (t > 1.0) t *= 3.0;
    SolverOptions o;
    o.max_iter = 1;
    try {
        solve_static(c.economy, StateVector::initial(c.economy), pol, o);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& err) {
        EXPECT_EQ(err.iterations(), 1u);
        EXPECT_FALSE(err.worst_cell().empty());
    }
}

TEST(SolveStatic, RejectsMismatchedState) {
    const auto c = random_calibrated_economy(12);
    auto st = StateVector::initial(c.economy);
    st.capital.pop_back();
    EXPECT_THROW(solve_static(c.economy, st, PolicyInputs::baseline(c.economy)), InvalidEconomy);
}

TEST(SolveStatic, IcebergDissipatesWhatATariffRebates) {
    const auto c = random_calibrated_economy(31, {.tariffs = false, .imbalances = false});
    const auto& e = c.economy;
    auto with_tariff = PolicyInputs::baseline(e);
    auto with_iceberg = with_tariff;
    for (std::size_t s = 0; s < e.num_regions(); ++s)
        for (std::size_t i = 0; i < e.num_sectors(); ++i)
            if (s != 0) {
                with_tariff.tm(s, 0, i) *= 1.2;
                with_iceberg.tau(s, 0, i) *= 1.2;
            }
    const auto st = StateVector::initial(e);
    const auto a = solve_static(e, st, with_tariff, tight_solver());
    const auto b = solve_static(e, st, with_iceberg, tight_solver());
    EXPECT_GT(a.income[0], b.income[0]);
}

}  // namespace
}  // namespace tradediff
