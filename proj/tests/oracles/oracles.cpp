#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tradediff::oracle {

namespace {

struct RunningRatio {
    double sum_a = 0.0, sum_b = 0.0;
    std::vector<double> a, b;

    void push(double x, double y) {
        a.push_back(x);
        b.push_back(y);
        sum_a += x;
        sum_b += y;
    }
    double ratio() const { return sum_a / sum_b; }
    /// Delta-method standard error of sum_a / sum_b.
    double se() const {
        const double n = static_cast<double>(a.size());
        const double r = ratio(), mean_b = sum_b / n;
        double ss = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - r * b[k];
            ss += d * d;
        }
        return std::sqrt(ss / (n - 1.0) / n) / mean_b;
    }
};

}  // namespace

BertrandEstimate simulate_bertrand(const BertrandMarket& m, std::size_t varieties, std::uint64_t seed) {
    const std::size_t N = m.lambda.size();
    if (N == 0 || m.landed.size() != N || varieties < 2) throw std::invalid_argument("simulate_bertrand: bad market");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp1(1.0);
    const double markup = m.sigma / (m.sigma - 1.0);
    const double inv_theta = 1.0 / m.theta;

    std::vector<double> scale(N);
    for (std::size_t s = 0; s < N; ++s) scale[s] = m.landed[s] * std::pow(m.lambda[s], -inv_theta);

    // Per variety: b = p^{1-sigma} (expenditure weight), wins[s] = b if s won.
    std::vector<double> b(varieties);
    std::vector<std::size_t> winner(varieties);
    std::vector<double> profit(varieties);
    for (std::size_t v = 0; v < varieties; ++v) {
        double c1 = std::numeric_limits<double>::infinity(), c2 = c1;
        std::size_t best = 0;
        for (std::size_t s = 0; s < N; ++s) {
            // The two most efficient producers: Poisson arrival times E1 < E2.
            const double e1 = exp1(rng);
            const double e2 = e1 + exp1(rng);
            const double first = scale[s] * std::pow(e1, inv_theta);
            const double second = scale[s] * std::pow(e2, inv_theta);
            if (first < c1) {
                c2 = std::min(c1, second);
                c1 = first;
                best = s;
            } else {
                c2 = std::min(c2, first);
            }
        }
        const double p = std::min(c2, markup * c1);
        b[v] = std::pow(p, 1.0 - m.sigma);
        winner[v] = best;
        profit[v] = b[v] * (1.0 - c1 / p);
    }

    BertrandEstimate out;
    out.varieties = varieties;
    for (std::size_t s = 0; s < N; ++s) {
        RunningRatio r;
        for (std::size_t v = 0; v < varieties; ++v) r.push(winner[v] == s ? b[v] : 0.0, b[v]);
        out.share.push_back(r.ratio());
        out.share_se.push_back(r.se());
    }
    RunningRatio pr;
    for (std::size_t v = 0; v < varieties; ++v) pr.push(profit[v], b[v]);
    out.profit_ratio = pr.ratio();
    out.profit_ratio_se = pr.se();

    const double n = static_cast<double>(varieties);
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : b) ss += (x - mean_b) * (x - mean_b);
    const double se_mean = std::sqrt(ss / (n - 1.0) / n);
    out.price_index = std::pow(mean_b, 1.0 / (1.0 - m.sigma));
    out.price_index_se = std::abs(out.price_index / (1.0 - m.sigma)) * se_mean / mean_b;
    return out;
}

ArrivalEstimate simulate_idea_arrivals(const ArrivalProblem& p, std::size_t draws, std::size_t insights,
                                       std::uint64_t seed) {
    const std::size_t N = p.lambda.rows(), J = p.lambda.cols();
    if (N == 0 || J == 0 || p.landed.rows() != N || p.landed.cols() != J || p.eta.size() != J || draws < 2 ||
        insights == 0)
        throw std::invalid_argument("simulate_idea_arrivals: bad problem");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> exp1(1.0);
    std::discrete_distribution<std::size_t> pick_sector(p.eta.begin(), p.eta.end());

    // Work with y = best^{-theta}. An insight ranked k contributes
    // Gamma_k / alpha * (E / lambda)^beta of its winning supplier, where the
    // winner minimizes landed^theta * E / lambda, and y is the minimum over k.
    std::vector<double> cost_theta(N * J);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t j = 0; j < J; ++j) cost_theta[s * J + j] = std::pow(p.landed(s, j), p.theta) / p.lambda(s, j);

    double sum_y = 0.0, sum_y2 = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        double arrival = 0.0;
        double y = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < insights; ++k) {
            arrival += exp1(rng);
            const std::size_t j = pick_sector(rng);
            double lowest = std::numeric_limits<double>::infinity();
            double ratio = 0.0;
            for (std::size_t s = 0; s < N; ++s) {
                const double e = exp1(rng);
                const double c = cost_theta[s * J + j] * e;
                if (c < lowest) {
                    lowest = c;
                    ratio = e / p.lambda(s, j);
                }
            }
            y = std::min(y, arrival * std::pow(ratio, p.beta) / p.alpha);
        }
        sum_y += y;
        sum_y2 += y * y;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum_y / n;
    const double var = (sum_y2 - n * mean * mean) / (n - 1.0);
    ArrivalEstimate out;
    out.draws = draws;
    out.insights = insights;
    out.delta_lambda = 1.0 / mean;
    out.se = std::sqrt(var / n) / (mean * mean);
    return out;
}

std::vector<double> project_to_simplex(std::span<const double> v, double floor) {
    const std::size_t n = v.size();
    const double mass = 1.0 - floor * static_cast<double>(n);
    if (n == 0 || mass <= 0.0) throw std::invalid_argument("project_to_simplex: infeasible floor");
    std::vector<double> u(v.begin(), v.end());
    for (double& x : u) x -= floor;
    std::vector<double> sorted = u;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, shift = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cum += sorted[k];
        const double t = (cum - mass) / static_cast<double>(k + 1);
        if (k + 1 == n || sorted[k + 1] <= t) {
            shift = t;
            break;
        }
    }
    for (double& x : u) x = std::max(x - shift, 0.0) + floor;
    return u;
}

SimplexResult maximize_on_simplices(const SimplexProblem& p, double tol, std::size_t max_iter) {
    std::size_t n = 0;
    for (std::size_t b : p.blocks) n += b;
    std::vector<double> x;
    for (std::size_t b : p.blocks) x.insert(x.end(), b, 1.0 / static_cast<double>(b));
    constexpr double kFloor = 1e-15;

    auto project = [&](std::vector<double> y) {
        std::size_t off = 0;
        for (std::size_t b : p.blocks) {
            const auto part = project_to_simplex(std::span<const double>(y).subspan(off, b), kFloor);
            std::copy(part.begin(), part.end(), y.begin() + static_cast<std::ptrdiff_t>(off));
            off += b;
        }
        return y;
    };

    SimplexResult r;
    double fx = p.value(x);
    double step = 1.0;
    std::vector<double> g(n), gt(n), x_prev, g_prev;
    for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
        p.gradient(x, g);
        if (!x_prev.empty()) {
            // Barzilai-Borwein step for the minimization of -f.
            double ss = 0.0, sy = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double dx = x[k] - x_prev[k];
                ss += dx * dx;
                sy += dx * (g_prev[k] - g[k]);
            }
            if (sy > 0.0 && ss > 0.0) step = std::clamp(ss / sy, 1e-20, 1e20);
        }
        x_prev = x;
        g_prev = g;
        bool accepted = false;
        double change = 0.0;
        while (step > 1e-30) {
            std::vector<double> trial(n);
            for (std::size_t k = 0; k < n; ++k) trial[k] = x[k] + step * g[k];
            trial = project(std::move(trial));
            double ascent = 0.0;
            change = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                ascent += g[k] * (trial[k] - x[k]);
                change = std::max(change, std::abs(trial[k] - x[k]));
            }
            if (change < tol) break;
            const double ft = p.value(trial);
            bool ok = ft >= fx + 1e-4 * ascent;
            if (!ok && std::abs(ft - fx) <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx))) {
                // Values no longer resolve the step; for a concave objective a
                // non-negative slope at the trial point means no overshoot.
                p.gradient(trial, gt);
                double slope = 0.0;
                for (std::size_t k = 0; k < n; ++k) slope += gt[k] * (trial[k] - x[k]);
                ok = slope >= 0.0;
            }
            if (ok) {
                x = std::move(trial);
                fx = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (change < tol) {
            r.converged = true;
            break;
        }
        if (!accepted) break;
    }
    r.x = std::move(x);
    r.value = fx;
    return r;
}

SimplexResult maximize_diffusion_value(const DiffusionProblem& p, std::size_t using_sector) {
    const std::size_t N = p.regions(), I = p.sectors();
    auto to_grid = [&](std::span<const double> x) {
        Grid2 pi(N, I);
        for (std::size_t j = 0; j < I; ++j)
            for (std::size_t s = 0; s < N; ++s) pi(s, j) = x[j * N + s];
        return pi;
    };
    SimplexProblem prob;
    prob.blocks.assign(I, N);
    prob.value = [&](std::span<const double> x) { return diffusion_value(to_grid(x), p, using_sector); };
    prob.gradient = [&](std::span<const double> x, std::span<double> g) {
        for (std::size_t j = 0; j < I; ++j)
            for (std::size_t s = 0; s < N; ++s)
                g[j * N + s] = p.eta(using_sector, j) * (1.0 - p.beta) * std::pow(x[j * N + s], -p.beta) *
                               std::pow(p.lambda(s, j), p.beta);
    };
    return maximize_on_simplices(prob);
}

}  // namespace tradediff::oracle
