#include "tradediff/diffusion_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tradediff/errors.hpp"
#include "tradediff/parallel.hpp"

namespace tradediff {

namespace {

void check_problem(const DiffusionProblem& p) {
    const std::size_t N = p.regions();
    const std::size_t I = p.sectors();
    if (N == 0 || I == 0) throw Error("diffusion problem is empty");
    if (p.eta.rows() != I || p.eta.cols() != I || p.landed_cost.rows() != N || p.landed_cost.cols() != I ||
        p.theta.size() != I)
        throw Error("diffusion problem grids do not match");
    if (!(p.beta >= 0.0 && p.beta < 1.0)) throw Error("beta must lie in [0,1)");
}

double term(double pi, double lambda, double beta) {
    if (pi <= 0.0) return 0.0;
    return std::pow(pi, 1.0 - beta) * std::pow(lambda, beta);
}

double surface_value(const DiffusionProblem& p, double x, double y) {
    const double home[2] = {x, y};
    double total = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
        total += p.eta(0, j) * (term(home[j], p.lambda(0, j), p.beta) + term(1.0 - home[j], p.lambda(1, j), p.beta));
    return total;
}

}  // namespace

double diffusion_value(const Grid2& pi, const DiffusionProblem& p, std::size_t i) {
    check_problem(p);
    double total = 0.0;
    for (std::size_t j = 0; j < p.sectors(); ++j) {
        double inner = 0.0;
        for (std::size_t s = 0; s < p.regions(); ++s) inner += term(pi(s, j), p.lambda(s, j), p.beta);
        total += p.eta(i, j) * inner;
    }
    return total;
}

double diffusion_value(const Grid3& pi, const DiffusionProblem& p, std::size_t i) {
    check_problem(p);
    double total = 0.0;
    for (std::size_t j = 0; j < p.sectors(); ++j) {
        double inner = 0.0;
        for (std::size_t s = 0; s < p.regions(); ++s) inner += term(pi(i, s, j), p.lambda(s, j), p.beta);
        total += p.eta(i, j) * inner;
    }
    return total;
}

Grid2 optimal_shares(const DiffusionProblem& p) {
    check_problem(p);
    Grid2 out(p.regions(), p.sectors());
    for (std::size_t j = 0; j < p.sectors(); ++j) {
        double total = 0.0;
        for (std::size_t s = 0; s < p.regions(); ++s) total += p.lambda(s, j);
        if (!(total > 0.0)) throw Error("optimal_shares: lambda must be positive");
        for (std::size_t s = 0; s < p.regions(); ++s) out(s, j) = p.lambda(s, j) / total;
    }
    return out;
}

Grid2 actual_shares(const DiffusionProblem& p) {
    check_problem(p);
    Grid2 out(p.regions(), p.sectors());
    for (std::size_t j = 0; j < p.sectors(); ++j) {
        // Ratios against the cheapest effective source keep large theta finite.
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < p.regions(); ++s)
            if (p.lambda(s, j) > 0.0 && std::isfinite(p.landed_cost(s, j)))
                top = std::max(top, std::log(p.lambda(s, j)) - p.theta[j] * std::log(p.landed_cost(s, j)));
        if (!std::isfinite(top)) throw Error("actual_shares: no source is reachable");
        double total = 0.0;
        for (std::size_t s = 0; s < p.regions(); ++s) {
            double v = 0.0;
            if (p.lambda(s, j) > 0.0 && std::isfinite(p.landed_cost(s, j)))
                v = std::exp(std::log(p.lambda(s, j)) - p.theta[j] * std::log(p.landed_cost(s, j)) - top);
            out(s, j) = v;
            total += v;
        }
        for (std::size_t s = 0; s < p.regions(); ++s) out(s, j) /= total;
    }
    return out;
}

double aleph_two_by_two(const DiffusionProblem& p, std::size_t i, std::size_t k) {
    check_problem(p);
    if (p.regions() != 2) throw Error("aleph_two_by_two needs exactly two regions");
    auto deviation = [&](std::size_t j) {
        const double theta = p.theta[j];
        const double market = p.lambda(0, j) * std::pow(p.landed_cost(0, j), -theta) +
                              p.lambda(1, j) * std::pow(p.landed_cost(1, j), -theta);
        return market / (p.lambda(0, j) + p.lambda(1, j));
    };
    const double domestic_gap = std::pow(p.landed_cost(0, i), -p.theta[i]) / std::pow(p.landed_cost(0, k), -p.theta[k]);
    return domestic_gap / deviation(i) * deviation(k);
}

double aleph(const DiffusionProblem& p, std::size_t s, std::size_t j, std::size_t n, std::size_t q) {
    check_problem(p);
    auto ratio = [&](std::size_t sector) {
        double lambda_sum = 0.0;
        double market = 0.0;
        for (std::size_t k = 0; k < p.regions(); ++k) {
            lambda_sum += p.lambda(k, sector);
            market += p.lambda(k, sector) * std::pow(p.landed_cost(k, sector), -p.theta[sector]);
        }
        return lambda_sum / market;
    };
    const double cost_gap = std::pow(p.landed_cost(s, j), -p.theta[j]) / std::pow(p.landed_cost(n, q), -p.theta[q]);
    return cost_gap * ratio(j) / ratio(q);
}

FigureSurface figure_surface(const DiffusionProblem& p, std::size_t resolution, unsigned threads) {
    check_problem(p);
    if (p.regions() != 2 || p.sectors() != 2) throw Error("figure_surface needs a 2 x 2 problem");
    if (resolution < 2) throw Error("figure_surface resolution must be at least 2");
    FigureSurface out;
    out.axis.resize(resolution);
    for (std::size_t k = 0; k < resolution; ++k) out.axis[k] = static_cast<double>(k) / static_cast<double>(resolution - 1);
    out.values = Grid2(resolution, resolution);
    parallel_for(resolution, threads, [&](std::size_t ix) {
        for (std::size_t iy = 0; iy < resolution; ++iy) out.values(ix, iy) = surface_value(p, out.axis[ix], out.axis[iy]);
    });
    const Grid2 opt = optimal_shares(p);
    const Grid2 act = actual_shares(p);
    out.optimal = {opt(0, 0), opt(0, 1), surface_value(p, opt(0, 0), opt(0, 1))};
    out.actual = {act(0, 0), act(0, 1), surface_value(p, act(0, 0), act(0, 1))};
    out.autarky = {1.0, 1.0, surface_value(p, 1.0, 1.0)};
    return out;
}

}  // namespace tradediff
