#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tradediff/diffusion_analysis.hpp"
#include "tradediff/grid.hpp"

namespace tradediff::oracle {

/// One destination market served by several sources. Each source holds a
/// Poisson continuum of producers whose efficiencies have Frechet location
/// lambda and shape theta; landed is the delivered input-bundle cost.
struct BertrandMarket {
    std::vector<double> lambda;
    std::vector<double> landed;
    double theta = 4.0;
    double sigma = 2.0;
};

struct BertrandEstimate {
    std::size_t varieties = 0;
    std::vector<double> share;     ///< expenditure share won by each source
    std::vector<double> share_se;
    double profit_ratio = 0.0;     ///< profits / sales
    double profit_ratio_se = 0.0;
    double price_index = 0.0;      ///< (mean p^{1-sigma})^{1/(1-sigma)}
    double price_index_se = 0.0;
};

/// Simulates varieties one by one: the two most efficient producers of every
/// source are drawn, the lowest landed cost wins, and the price is the lower
/// of the monopoly markup over its own cost and the runner-up's cost.
BertrandEstimate simulate_bertrand(const BertrandMarket& market, std::size_t varieties, std::uint64_t seed);

/// Idea arrivals for one (destination, using sector) over one period.
struct ArrivalProblem {
    Grid2 lambda;                 ///< source x supplying sector, lagged
    Grid2 landed;                 ///< source x supplying sector, delivered to the destination
    std::vector<double> eta;      ///< weights over supplying sectors
    double theta = 4.0;
    double alpha = 0.1;
    double beta = 0.4;
};

struct ArrivalEstimate {
    std::size_t draws = 0;
    std::size_t insights = 0;  ///< per draw (largest original insights kept)
    double delta_lambda = 0.0;
    double se = 0.0;
};

/// Original insights arrive as a Poisson process with tail measure
/// alpha o^{-theta}. Each insight is paired with a derived insight z', the
/// efficiency of the winning supplier of a variety from a sector drawn with
/// weights eta. The best new idea o z'^beta of each draw is Frechet with
/// location delta lambda, which is estimated as 1 / mean(best^{-theta}).
ArrivalEstimate simulate_idea_arrivals(const ArrivalProblem& problem, std::size_t draws, std::size_t insights,
                                       std::uint64_t seed);

/// Spectral projected-gradient ascent over a product of probability simplices.
/// blocks lists the size of each simplex; x is laid out block after block.
struct SimplexProblem {
    std::vector<std::size_t> blocks;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

SimplexResult maximize_on_simplices(const SimplexProblem& problem, double tol = 1e-14, std::size_t max_iter = 200000);

/// Numerical maximum of diffusion_value for one using sector, with one
/// simplex of source shares per supplying sector. x is laid out sector by
/// sector: x[j * regions + s] = pi(s, j).
SimplexResult maximize_diffusion_value(const DiffusionProblem& problem, std::size_t using_sector);

/// Euclidean projection of v onto {x >= floor, sum x = 1}.
std::vector<double> project_to_simplex(std::span<const double> v, double floor = 0.0);

}  // namespace tradediff::oracle
