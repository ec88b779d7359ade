// Regenerates data/toy from a designed parameterization: the economy is
// solved once and its flows are written with profits folded into capital.
// Recalibrating with the designed productivities re-expresses base-year
// cost gaps as iceberg costs.
//
//   tradediff_make_toy <output-dir>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "tradediff/io.hpp"
#include "tradediff/scenario.hpp"
#include "tradediff/static_eq.hpp"

using namespace tradediff;

namespace {

constexpr int kBaseYear = 2019;
constexpr std::size_t kHorizon = 22;

Economy design() {
    Economy e;
    e.regions = {"usa", "lac", "chn", "ind"};
    e.sectors = {"pri", "hmn", "elm"};
    e.base_year = kBaseYear;
    e.horizon = kHorizon;
    const std::size_t N = 4, I = 3;
    e.theta = {10.09, 5.99, 7.80};
    e.sigma = {3.0, 3.0, 3.0};
    e.nu = {0.27, 1.26, 1.26};
    e.rho = {0.0, 0.0, 0.0};
    e.mu = {0.0, 0.0, 0.0};

    const double lambda[4][3] = {{2.0, 3.0, 3.5}, {1.2, 0.9, 0.8}, {0.8, 1.0, 1.4}, {0.6, 0.45, 0.4}};
    const double kappa[3] = {0.85, 0.0825, 0.0675};
    const double chi[3] = {0.10, 0.60, 0.30};
    e.kappa = Grid2(N, I);
    e.chi = Grid2(N, I);
    e.lambda0 = Grid2(N, I);
    e.psi_f = Grid2(N, I);
    e.psi_m = Grid2(N, I);
    e.psi_l = Grid2(N, I);
    e.psi_k = Grid2(N, I);
    e.eta = Grid3(N, I, I);
    const double va_share[3] = {0.60, 0.45, 0.40};
    const double labor_share[3] = {0.45, 0.60, 0.55};
    const double mix[3][3] = {{0.05, 0.38, 0.57}, {0.05, 0.57, 0.38}, {0.05, 0.38, 0.57}};
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            e.kappa(d, i) = kappa[i];
            e.chi(d, i) = chi[i];
            e.lambda0(d, i) = lambda[d][i];
            e.psi_f(d, i) = va_share[i];
            e.psi_m(d, i) = 1.0 - va_share[i];
            e.psi_l(d, i) = labor_share[i];
            e.psi_k(d, i) = 1.0 - labor_share[i];
            for (std::size_t j = 0; j < I; ++j) e.eta(d, i, j) = mix[i][j];
        }

    e.savings_rate = {0.20, 0.22, 0.40, 0.30};
    e.tb_rate = {0.0, 0.0, 0.02, 0.0};
    e.delta = {0.05, 0.05, 0.05, 0.05};
    e.k0 = {3.0, 1.5, 4.0, 2.0};

    // Symmetric bilateral iceberg costs; usa-lac and chn-ind are close pairs.
    const double tau[4][4] = {{1.0, 1.35, 1.75, 1.90}, {1.35, 1.0, 1.85, 1.95}, {1.75, 1.85, 1.0, 1.50},
                              {1.90, 1.95, 1.50, 1.0}};
    const double sector_tau[3] = {1.05, 1.0, 0.95};
    e.tau0 = Grid3(N, N, I, 1.0);
    e.tm0 = Grid3(N, N, I, 1.0);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                if (s == d) continue;
                e.tau0(s, d, i) = std::max(1.3, tau[s][d] * sector_tau[i]);
                e.tm0(s, d, i) = 1.05;
            }

    const double labor0[4] = {1.0, 1.1, 3.0, 3.2};
    const double labor_growth[4] = {0.005, 0.010, -0.002, 0.012};
    e.l_path = Grid2(kHorizon, N);
    for (std::size_t t = 0; t < kHorizon; ++t)
        for (std::size_t d = 0; d < N; ++d)
            e.l_path(t, d) = labor0[d] * std::pow(1.0 + labor_growth[d], static_cast<double>(t));

    e.base.wage.assign(N, 1.0);
    e.base.rental.assign(N, 1.0);
    e.base.price = Grid2(N, I, 1.0);
    e.base.income.assign(N, 1.0);
    e.base.world_factor_income = 0.0;
    for (std::size_t d = 0; d < N; ++d) e.base.world_factor_income += e.l_path(0, d) + e.k0[d];
    return e;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
        return 2;
    }
    const std::filesystem::path out = argv[1];
    const Economy e = design();
    const PolicyInputs pol = PolicyInputs::baseline(e);
    SolverOptions opts;
    opts.tol = 1e-13;
    opts.inner_tol = 1e-14;
    const EquilibriumSolution sol = solve_static(e, StateVector::initial(e), pol, opts);
    BaselineFlows flows = flows_from_solution(e, pol, sol);
    for (std::size_t d = 0; d < e.num_regions(); ++d)
        for (std::size_t i = 0; i < e.num_sectors(); ++i) {
            flows.capital(d, i) += flows.profit(d, i);
            flows.profit(d, i) = 0.0;
        }
    save_flows(flows, out);

    // Labor in the flows is measured in base-year wage units.
    std::ostringstream prod, labor, pop;
    prod << "region,sector,value\n";
    labor << "region,year,value\n";
    pop << "region,year,value\n";
    for (std::size_t d = 0; d < e.num_regions(); ++d) {
        for (std::size_t i = 0; i < e.num_sectors(); ++i)
            prod << e.regions[d] << ',' << e.sectors[i] << ','
                 << format_double(e.lambda0(d, i), 12) << '\n';
        for (int year : {kBaseYear, kBaseYear + static_cast<int>(kHorizon) - 1}) {
            const std::size_t t = static_cast<std::size_t>(year - kBaseYear);
            labor << e.regions[d] << ',' << year << ',' << format_double(e.l_path(t, d) * sol.wage[d], 12) << '\n';
            pop << e.regions[d] << ',' << year << ',' << format_double(e.l_path(t, d), 12) << '\n';
        }
    }
    write_text(out / "productivity.csv", prod.str());
    write_text(out / "labor.csv", labor.str());
    write_text(out / "population.csv", pop.str());
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}
