#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tradediff/economy.hpp"
#include "tradediff/grid.hpp"

namespace tradediff {

struct PolicyInputs {
    Grid3 tau;  ///< source x destination x sector
    Grid3 tm;

    static PolicyInputs baseline(const Economy& e);
};

struct ConvergenceReport {
    std::size_t iterations = 0;
    double residual = 0.0;         ///< max relative factor excess demand
    double walras_residual = 0.0;  ///< value-weighted sum of factor excess demands / world factor income
    std::string worst_market;
    bool converged = false;
};

struct EquilibriumSolution {
    std::vector<double> wage;
    std::vector<double> rental;
    std::vector<double> labor;    ///< endowments used
    std::vector<double> capital;
    Grid2 unit_cost;              ///< region x sector
    Grid2 price;
    std::vector<double> cpi;
    std::vector<double> inv_price;
    Grid3 trade_share;            ///< source x destination x sector
    Grid2 cons_expenditure;       ///< destination x sector
    Grid2 inv_expenditure;
    Grid2 int_expenditure;
    Grid2 expenditure;            ///< total, including tariffs
    Grid2 sales;                  ///< source x sector, producer revenue net of tariffs
    Grid2 profits;
    std::vector<double> income;
    std::vector<double> transfers;
    std::vector<double> investment;  ///< real investment
    std::vector<double> tb_rate;     ///< effective, including the closure region
    ConvergenceReport convergence;

    double real_income(std::size_t d) const { return income[d] / cpi[d]; }
    double trade_value(std::size_t s, std::size_t d, std::size_t i) const {
        return trade_share(s, d, i) * expenditure(d, i);
    }
};

struct SolverOptions {
    double tol = 1e-8;
    double inner_tol = 1e-10;
    std::size_t max_iter = 10000;
    std::size_t max_inner_iter = 10000;
    double damping = 0.5;
    unsigned threads = 0;                  ///< 0: default_thread_count()
    std::size_t min_cells_per_thread = 8;  ///< parallel passes use at most cells / this many workers
};

/// CES price aggregate (sum_k w_k p_k^{1-e})^{1/(1-e)}; e = 0 gives the
/// weighted sum, e = 1 the Cobb-Douglas geometric mean with normalized weights.
double ces_price(std::span<const double> weights, std::span<const double> prices, double elasticity);

/// Value shares of each input in a CES aggregate at the given prices.
std::vector<double> ces_shares(std::span<const double> weights, std::span<const double> prices,
                               double elasticity);

/// c = [psi_f pf^{1-rho} + psi_m pm^{1-rho}]^{1/(1-rho)}.
double unit_cost(double pf, double pm, double psi_f, double psi_m, double rho);

/// Full bundle cost from factor prices and intermediate prices.
double unit_cost(double w, double r, std::span<const double> intermediate_prices, double psi_f, double psi_m,
                 double psi_l, double psi_k, std::span<const double> eta, double rho, double nu, double mu);

double landed_cost(double c, double tau, double tm);

/// The constant Gamma_1 of the price index; throws DivergentIndex when theta <= sigma - 1.
double price_constant(double theta, double sigma);

/// p = Gamma_1 * Phi^{-1/theta}, Phi = sum_s lambda_s x_s^{-theta}.
double price_index(std::span<const double> lambda, std::span<const double> landed, double theta, double sigma);

/// pi_s = lambda_s x_s^{-theta} / Phi.
std::vector<double> trade_shares(std::span<const double> lambda, std::span<const double> landed, double theta);

/// Profit of a source: (1/(1+theta)) sum_d pi_d e_d.
double profits(std::span<const double> pi, std::span<const double> e, double theta);

struct ConsumerDemand {
    std::vector<double> quantity;
    double cpi = 0.0;
};
ConsumerDemand consumer_demand(double income, double savings_rate, std::span<const double> kappa,
                               std::span<const double> prices);

struct InvestmentDemand {
    double real = 0.0;
    std::vector<double> quantity;
    double price = 0.0;
};
InvestmentDemand investment_demand(double income, double savings_rate, double tb_rate, std::span<const double> chi,
                                   std::span<const double> prices);

/// Factor markets at given factor prices, with the goods side solved exactly.
struct FactorMarketState {
    std::vector<double> labor_excess;    ///< demand value / supply value - 1
    std::vector<double> capital_excess;
    std::vector<double> labor_supply_value;
    std::vector<double> capital_supply_value;
};

FactorMarketState evaluate_factor_markets(const Economy& e, const StateVector& st, const PolicyInputs& pol,
                                          std::span<const double> wage, std::span<const double> rental,
                                          const SolverOptions& opts = {});

/// Solves one period's static equilibrium. A previous solution, when given,
/// seeds factor prices and commodity prices.
EquilibriumSolution solve_static(const Economy& e, const StateVector& st, const PolicyInputs& pol,
                                 const SolverOptions& opts = {}, const EquilibriumSolution* warm_start = nullptr);

}  // namespace tradediff
