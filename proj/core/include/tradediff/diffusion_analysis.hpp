#pragma once

#include <cstddef>
#include <vector>

#include "tradediff/grid.hpp"

namespace tradediff {

/// Diffusion planner problem seen from one destination region.
struct DiffusionProblem {
    Grid2 lambda;                ///< source region x supplying sector
    Grid2 eta;                   ///< using sector x supplying sector
    Grid2 landed_cost;           ///< source region x supplying sector, delivered to the destination
    std::vector<double> theta;   ///< per supplying sector
    double beta = 0.0;

    std::size_t regions() const { return lambda.rows(); }
    std::size_t sectors() const { return lambda.cols(); }
};

/// sum_j eta(i,j) sum_s pi(s,j)^{1-beta} lambda(s,j)^beta for using sector i,
/// with shares pi (source x supplying sector) common to every using sector.
double diffusion_value(const Grid2& pi, const DiffusionProblem& problem, std::size_t using_sector);

/// Same objective with shares that may differ by using sector: pi(i, s, j) laid
/// out as using sector x source x supplying sector.
double diffusion_value(const Grid3& pi, const DiffusionProblem& problem, std::size_t using_sector);

/// Planner optimum pi*(s,j) = lambda(s,j) / sum_k lambda(k,j).
Grid2 optimal_shares(const DiffusionProblem& problem);

/// Market allocation pi(s,j) = lambda x^{-theta} / sum_k lambda x^{-theta}.
Grid2 actual_shares(const DiffusionProblem& problem);

/// Two-region, two-sector distortion statistic. Region 0 is home, region 1
/// foreign; landed_cost(1, j) is the delivered foreign cost tau^j x_f^j.
double aleph_two_by_two(const DiffusionProblem& problem, std::size_t sector, std::size_t other_sector);

/// Multi-region form: actual over planner ratio of shares on (s, j) relative to (n, p).
double aleph(const DiffusionProblem& problem, std::size_t s, std::size_t j, std::size_t n, std::size_t p);

struct SurfacePoint {
    double x = 0.0;  ///< home share in the own sector
    double y = 0.0;  ///< home share in the other sector
    double value = 0.0;
};

struct FigureSurface {
    std::vector<double> axis;  ///< common grid for x and y, endpoints included
    Grid2 values;              ///< values(ix, iy)
    SurfacePoint optimal;
    SurfacePoint actual;
    SurfacePoint autarky;
};

/// Tabulates diffusion_value for using sector 0 of a 2 x 2 problem over home
/// shares in both supplying sectors.
FigureSurface figure_surface(const DiffusionProblem& problem, std::size_t resolution = 101, unsigned threads = 1);

}  // namespace tradediff
