#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tradediff/economy.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff {

/// Per-period solutions and the states that produced them.
struct SimulationPath {
    int base_year = 0;
    std::vector<StateVector> states;
    std::vector<EquilibriumSolution> solutions;

    std::size_t periods() const { return solutions.size(); }

    Grid2 real_income() const;                            ///< period x region, Y / P^c
    Grid2 nominal_income() const;                         ///< period x region
    Grid2 real_income_per_capita(const Economy& e) const; ///< population from the economy
    Grid3 lambda() const;                                 ///< period x region x sector
    Grid3 bilateral_trade() const;                        ///< period x source x destination, summed over sectors
};

/// Policy in force in a given period.
using PolicySchedule = std::function<PolicyInputs(std::size_t period)>;

struct SimulationOptions {
    SolverOptions solver;
    bool diffusion = true;  ///< false freezes lambda (alpha = 0)
};

double capital_step(double k_prev, double delta, double investment);

double alpha_step(double alpha_prev, double growth);

/// lambda_next(d,i) = lambda(d,i) + alpha Gamma(1-beta) sum_j eta(d,i,j) sum_s pi(s,d,j)^{1-beta} lambda(s,j)^beta.
/// pi is the lagged trade-share grid (source x destination x sector).
Grid2 diffusion_step(const Grid2& lambda_prev, const Grid3& eta, const Grid3& pi_prev, double alpha, double beta);

/// Derivative of the two-region gain of lambda_h with respect to the home
/// share pi_h of one supplying sector, holding pi_f = 1 - pi_h.
double diffusion_share_derivative(double lambda_h, double lambda_f, double pi_h, double eta, double alpha,
                                  double beta);

/// Runs the recursive sequence of static equilibria. An empty schedule
/// means the baseline policy in every period.
SimulationPath simulate(const Economy& e, const PolicySchedule& schedule, std::size_t horizon,
                        const SimulationOptions& opts = {});

struct LaborAnchor {
    std::string region;
    int year = 0;
    double value = 0.0;
};

/// Period x region path over [first_year, first_year + periods), geometric
/// between anchor years and extrapolated at the nearest segment's rate.
Grid2 interpolate_labor_path(const std::vector<LaborAnchor>& anchors, const std::vector<std::string>& regions,
                             int first_year, std::size_t periods);

}  // namespace tradediff
