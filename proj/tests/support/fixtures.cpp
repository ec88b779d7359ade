#include "fixtures.hpp"

#include <cmath>
#include <numeric>
#include <span>

#include "tradediff/io.hpp"

namespace tradediff::testing {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

void fill_simplex(std::mt19937_64& rng, std::span<double> out) {
    double total = 0.0;
    for (double& x : out) total += (x = uniform(rng, 0.2, 1.0));
    for (double& x : out) x /= total;
}

}  // namespace

Economy random_raw_economy(std::mt19937_64& rng, const RandomEconomyOptions& opts) {
    const std::size_t N = opts.regions;
    const std::size_t I = opts.sectors;
    Economy e;
    for (std::size_t d = 0; d < N; ++d) e.regions.push_back("r" + std::to_string(d));
    for (std::size_t i = 0; i < I; ++i) e.sectors.push_back("s" + std::to_string(i));
    e.base_year = 2020;
    e.horizon = opts.horizon;

    for (std::size_t i = 0; i < I; ++i) {
        e.sigma.push_back(uniform(rng, 1.5, 3.5));
        e.theta.push_back(uniform(rng, std::max(3.0, e.sigma.back()), 9.0));
        e.nu.push_back(opts.general_elasticities ? uniform(rng, 0.5, 1.5) : 1.0);
        e.rho.push_back(opts.general_elasticities ? uniform(rng, 0.0, 0.9) : 0.0);
        e.mu.push_back(opts.general_elasticities ? uniform(rng, 0.0, 0.9) : 0.0);
    }

    e.kappa = Grid2(N, I);
    e.chi = Grid2(N, I);
    e.psi_f = Grid2(N, I);
    e.psi_m = Grid2(N, I);
    e.psi_l = Grid2(N, I);
    e.psi_k = Grid2(N, I);
    e.eta = Grid3(N, I, I);
    e.lambda0 = Grid2(N, I);
    for (std::size_t d = 0; d < N; ++d) {
        fill_simplex(rng, e.kappa.row(d));
        fill_simplex(rng, e.chi.row(d));
        for (std::size_t i = 0; i < I; ++i) {
            e.psi_f(d, i) = opts.intermediates ? uniform(rng, 0.4, 0.9) : 1.0;
            e.psi_m(d, i) = 1.0 - e.psi_f(d, i);
            e.psi_l(d, i) = uniform(rng, 0.4, 0.75);
            e.psi_k(d, i) = 1.0 - e.psi_l(d, i);
            fill_simplex(rng, e.eta.row(d, i));
            e.lambda0(d, i) = uniform(rng, 0.5, 2.0);
        }
    }

    e.savings_rate.resize(N);
    e.tb_rate.assign(N, 0.0);
    e.delta.resize(N);
    e.k0.resize(N);
    for (std::size_t d = 0; d < N; ++d) {
        e.savings_rate[d] = uniform(rng, 0.15, 0.3);
        if (opts.imbalances && d + 1 < N) e.tb_rate[d] = uniform(rng, -0.03, 0.03);
        e.delta[d] = uniform(rng, 0.04, 0.08);
        e.k0[d] = uniform(rng, 1.0, 4.0);
    }

    e.tau0 = Grid3(N, N, I, 1.0);
    e.tm0 = Grid3(N, N, I, 1.0);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                if (s == d) continue;
                e.tau0(s, d, i) = uniform(rng, 1.2, 2.0);
                if (opts.tariffs) e.tm0(s, d, i) = uniform(rng, 1.0, 1.15);
            }

    e.l_path = Grid2(e.horizon, N);
    for (std::size_t d = 0; d < N; ++d) {
        const double l0 = uniform(rng, 1.0, 4.0);
        const double growth = uniform(rng, -0.005, 0.02);
        for (std::size_t t = 0; t < e.horizon; ++t) e.l_path(t, d) = l0 * std::pow(1.0 + growth, static_cast<double>(t));
    }

    e.beta = uniform(rng, 0.2, 0.6);
    e.alpha0 = uniform(rng, 0.005, 0.03);
    e.alpha_growth = uniform(rng, -0.01, 0.02);

    e.base.wage.assign(N, 1.0);
    e.base.rental.assign(N, 1.0);
    e.base.price = Grid2(N, I, 1.0);
    e.base.income.assign(N, 1.0);
    e.base.world_factor_income = 0.0;
    for (std::size_t d = 0; d < N; ++d) e.base.world_factor_income += e.l_path(0, d) + e.k0[d];
    return e;
}

CalibratedCase calibrate_raw(const Economy& raw) {
    CalibratedCase c;
    c.raw = raw;
    const auto pol = PolicyInputs::baseline(c.raw);
    const auto sol = solve_static(c.raw, StateVector::initial(c.raw), pol, tight_solver());
    c.flows = flows_from_solution(c.raw, pol, sol);

    CalibrationParameters p;
    p.theta = c.raw.theta;
    p.sigma = c.raw.sigma;
    p.nu = c.raw.nu;
    p.rho = c.raw.rho;
    p.mu = c.raw.mu;
    p.delta = c.raw.delta;
    p.beta = c.raw.beta;
    p.alpha0 = c.raw.alpha0;
    p.alpha_growth = c.raw.alpha_growth;
    p.horizon = c.raw.horizon;
    p.base_year = c.raw.base_year;
    p.lambda0 = c.raw.lambda0;
    for (std::size_t s = 0; s < c.raw.num_regions(); ++s)
        for (std::size_t i = 0; i < c.raw.num_sectors(); ++i)
            p.lambda0(s, i) *= std::pow(sol.unit_cost(s, i), -c.raw.theta[i]);
    p.k0 = c.raw.k0;
    p.l_path = c.raw.l_path;
    p.population = c.raw.population;
    c.economy = calibrate_shares(c.flows, p);
    return c;
}

CalibratedCase random_calibrated_economy(std::uint64_t seed, const RandomEconomyOptions& opts) {
    std::mt19937_64 rng(seed);
    return calibrate_raw(random_raw_economy(rng, opts));
}

std::filesystem::path data_dir() { return TRADEDIFF_TEST_DATA_DIR; }

Economy toy_economy() {
    const auto dir = data_dir() / "toy";
    return calibrate_from_files(dir, load_calibration_config(dir / "calibration.json"));
}

PolicyShock toy_preset(const std::string& name) { return load_shock(data_dir() / "presets" / (name + ".json")); }

SolverOptions tight_solver() {
    SolverOptions o;
    o.tol = 1e-10;
    o.inner_tol = 1e-12;
    return o;
}

}  // namespace tradediff::testing
