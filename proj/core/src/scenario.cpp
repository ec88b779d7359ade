#include "tradediff/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <sstream>

#include "tradediff/dynamics.hpp"
#include "tradediff/errors.hpp"

namespace tradediff {

const char* to_string(ShockKind k) { return k == ShockKind::Iceberg ? "iceberg" : "tariff"; }

ShockKind shock_kind_from_string(const std::string& s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "iceberg") return ShockKind::Iceberg;
    if (lower == "tariff") return ShockKind::Tariff;
    throw ParseError("unknown shock kind '" + s + "' (expected iceberg or tariff)");
}

std::size_t shock_start_period(const Economy& e, const PolicyShock& shock) {
    if (!shock.start_year) return 1;
    const int offset = *shock.start_year - e.base_year;
    if (offset < 0) {
        std::ostringstream msg;
        msg << "shock starts in " << *shock.start_year << ", before the base year " << e.base_year;
        throw Error(msg.str());
    }
    return static_cast<std::size_t>(offset);
}

namespace {

std::vector<Bloc> resolve_blocs(const Economy& e, const std::map<std::string, Bloc>& blocs) {
    std::vector<Bloc> out(e.num_regions());
    for (std::size_t d = 0; d < e.num_regions(); ++d) {
        auto it = blocs.find(e.regions[d]);
        if (it == blocs.end()) throw UnknownRegion("region '" + e.regions[d] + "' has no bloc in the bloc map");
        out[d] = it->second;
    }
    return out;
}

std::vector<bool> resolve_scope(const Economy& e, const std::vector<std::string>& sectors) {
    std::vector<bool> out(e.num_sectors(), sectors.empty());
    for (const auto& id : sectors) out[e.sector_index(id)] = true;
    return out;
}

}  // namespace

PolicyInputs apply_shock(const Economy& e, const PolicyInputs& pol, const PolicyShock& shock, std::size_t t) {
    if (!(shock.magnitude_pp >= 0.0)) throw Error("shock magnitude must be nonnegative");
    const auto blocs = resolve_blocs(e, shock.blocs);
    const auto scope = resolve_scope(e, shock.sectors);
    const std::size_t start = shock_start_period(e, shock);
    PolicyInputs out = pol;
    const bool active = shock.permanent ? t >= start : t == start;
    if (!active) return out;
    const double add = shock.magnitude_pp / 100.0;
    Grid3& grid = shock.kind == ShockKind::Iceberg ? out.tau : out.tm;
    const std::size_t N = e.num_regions();
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d) {
            if (s == d || blocs[s] == blocs[d]) continue;
            for (std::size_t i = 0; i < e.num_sectors(); ++i)
                if (scope[i]) grid(s, d, i) += add;
        }
    return out;
}

double cumulative_change(std::span<const double> shocked, std::span<const double> baseline, std::size_t start) {
    if (shocked.size() != baseline.size()) throw Error("cumulative_change: series lengths differ");
    double diff = 0.0;
    double base = 0.0;
    for (std::size_t t = start; t < baseline.size(); ++t) {
        diff += shocked[t] - baseline[t];
        base += baseline[t];
    }
    if (base == 0.0) throw ZeroBaseline("cumulative_change: baseline sums to zero from the start period on");
    return diff / base;
}

double ComparisonReport::value(const std::string& variable, const std::string& region, const std::string& sector) const {
    for (const auto& entry : entries)
        if (entry.variable == variable && entry.region == region && entry.sector == sector) return entry.value;
    throw Error("report has no entry " + variable + "/" + region + (sector.empty() ? "" : "/" + sector));
}

namespace {

struct RunSeries {
    Grid2 real_income;  // period x region
    Grid3 lambda;       // period x region x sector
    Grid3 trade;        // period x source x destination
    Grid2 sales0;       // region x sector, first period
};

RunSeries extract(const SimulationPath& path) {
    return {path.real_income(), path.lambda(), path.bilateral_trade(), path.solutions.front().sales};
}

std::vector<double> weighted_lambda(const Grid3& g, std::size_t d, const Grid2& weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.dim2(); ++i) total += weights(d, i);
    std::vector<double> out(g.dim0(), 0.0);
    for (std::size_t t = 0; t < g.dim0(); ++t)
        for (std::size_t i = 0; i < g.dim2(); ++i) out[t] += weights(d, i) / total * g(t, d, i);
    return out;
}

std::vector<double> column(const Grid2& g, std::size_t c) {
    std::vector<double> out(g.rows());
    for (std::size_t t = 0; t < g.rows(); ++t) out[t] = g(t, c);
    return out;
}

std::vector<double> lambda_series(const Grid3& g, std::size_t d, std::size_t i) {
    std::vector<double> out(g.dim0());
    for (std::size_t t = 0; t < g.dim0(); ++t) out[t] = g(t, d, i);
    return out;
}

std::vector<double> two_way_trade(const Grid3& trade, std::size_t d, const std::vector<bool>& partners) {
    std::vector<double> out(trade.dim0(), 0.0);
    for (std::size_t t = 0; t < trade.dim0(); ++t)
        for (std::size_t n = 0; n < trade.dim1(); ++n)
            if (partners[n] && n != d) out[t] += trade(t, d, n) + trade(t, n, d);
    return out;
}

std::vector<double> world_cross_trade(const Grid3& trade, const std::vector<Bloc>& blocs) {
    std::vector<double> out(trade.dim0(), 0.0);
    for (std::size_t t = 0; t < trade.dim0(); ++t)
        for (std::size_t s = 0; s < trade.dim1(); ++s)
            for (std::size_t d = 0; d < trade.dim2(); ++d)
                if (blocs[s] != blocs[d]) out[t] += trade(t, s, d);
    return out;
}

void append_series(ComparisonReport& report, const std::string& run, const std::string& variable,
                   const std::string& region, const std::string& sector, const std::vector<double>& values) {
    for (std::size_t t = 0; t < values.size(); ++t) report.series.push_back({run, variable, region, sector, t, values[t]});
}

}  // namespace

ComparisonReport run_experiment(const Economy& e_in, const PolicyShock& shock_in, const ExperimentOptions& opts) {
    const Economy e = opts.single_sector ? collapse_to_single_sector(e_in, opts.solver) : e_in;
    PolicyShock shock = shock_in;
    for (const auto& [region, bloc] : opts.bloc_overrides) shock.blocs[region] = bloc;
    if (opts.single_sector) shock.sectors.clear();
    const std::vector<Bloc> blocs = resolve_blocs(e, shock.blocs);
    const std::size_t horizon = opts.horizon ? opts.horizon : e.horizon;
    const std::size_t start = shock_start_period(e, shock);
    if (start >= horizon) throw Error("shock starts after the simulation horizon");

    SimulationOptions sim;
    sim.solver = opts.solver;
    sim.diffusion = opts.diffusion;
    const PolicyInputs baseline = PolicyInputs::baseline(e);
    PolicySchedule shocked = [&](std::size_t t) { return apply_shock(e, baseline, shock, t); };

    auto with_context = [&](const char* run, auto&& body) {
        try {
            return body();
        } catch (const NoConvergence& ex) {
            throw NoConvergence(ex.iterations(), ex.residual(), ex.worst_cell(),
                                "scenario '" + shock.name + "' " + run + " run, " + ex.what());
        }
    };
    auto base_future = std::async(std::launch::async, [&] {
        return with_context("baseline", [&] { return extract(simulate(e, {}, horizon, sim)); });
    });
    RunSeries shock_run = with_context("shock", [&] { return extract(simulate(e, shocked, horizon, sim)); });
    RunSeries base_run = base_future.get();

    ComparisonReport report;
    report.scenario = shock.name;
    report.diffusion = opts.diffusion;
    report.single_sector = opts.single_sector;
    report.base_year = e.base_year;
    report.horizon = horizon;
    report.start = start;

    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();
    for (std::size_t d = 0; d < N; ++d) {
        const auto base = column(base_run.real_income, d);
        const auto shocked_series = column(shock_run.real_income, d);
        report.entries.push_back({"real_income", e.regions[d], "", cumulative_change(shocked_series, base, start)});
        append_series(report, "baseline", "real_income", e.regions[d], "", base);
        append_series(report, "shock", "real_income", e.regions[d], "", shocked_series);
    }
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            const auto base = lambda_series(base_run.lambda, d, i);
            const auto shocked_series = lambda_series(shock_run.lambda, d, i);
            report.entries.push_back({"lambda", e.regions[d], e.sectors[i], cumulative_change(shocked_series, base, start)});
            append_series(report, "baseline", "lambda", e.regions[d], e.sectors[i], base);
            append_series(report, "shock", "lambda", e.regions[d], e.sectors[i], shocked_series);
        }
    for (std::size_t d = 0; d < N; ++d) {
        const auto base = weighted_lambda(base_run.lambda, d, base_run.sales0);
        const auto shocked_series = weighted_lambda(shock_run.lambda, d, base_run.sales0);
        report.entries.push_back({"lambda", e.regions[d], "", cumulative_change(shocked_series, base, start)});
        append_series(report, "baseline", "lambda", e.regions[d], "", base);
        append_series(report, "shock", "lambda", e.regions[d], "", shocked_series);
    }
    for (std::size_t d = 0; d < N; ++d) {
        std::vector<bool> other(N);
        for (std::size_t n = 0; n < N; ++n) other[n] = blocs[n] != blocs[d];
        const auto base = two_way_trade(base_run.trade, d, other);
        const auto shocked_series = two_way_trade(shock_run.trade, d, other);
        report.entries.push_back({"cross_bloc_trade", e.regions[d], "", cumulative_change(shocked_series, base, start)});
        append_series(report, "baseline", "cross_bloc_trade", e.regions[d], "", base);
        append_series(report, "shock", "cross_bloc_trade", e.regions[d], "", shocked_series);
    }
    {
        const auto base = world_cross_trade(base_run.trade, blocs);
        const auto shocked_series = world_cross_trade(shock_run.trade, blocs);
        report.entries.push_back({"cross_bloc_trade", "world", "", cumulative_change(shocked_series, base, start)});
        append_series(report, "baseline", "cross_bloc_trade", "world", "", base);
        append_series(report, "shock", "cross_bloc_trade", "world", "", shocked_series);
    }
    for (const auto& anchor : opts.anchors) {
        const auto a = e.find_region(anchor);
        if (!a) continue;
        std::vector<bool> partner(N, false);
        partner[*a] = true;
        const std::string variable = "trade_with_" + anchor;
        for (std::size_t d = 0; d < N; ++d) {
            if (d == *a) continue;
            const auto base = two_way_trade(base_run.trade, d, partner);
            const auto shocked_series = two_way_trade(shock_run.trade, d, partner);
            report.entries.push_back({variable, e.regions[d], "", cumulative_change(shocked_series, base, start)});
            append_series(report, "baseline", variable, e.regions[d], "", base);
            append_series(report, "shock", variable, e.regions[d], "", shocked_series);
        }
    }
    return report;
}

BaselineFlows flows_from_solution(const Economy& e, const PolicyInputs& pol, const EquilibriumSolution& sol) {
    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();
    BaselineFlows f = BaselineFlows::zeros(e.regions, e.sectors);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                const double value = sol.trade_value(s, d, i);
                f.trade(s, d, i) = value;
                f.tariff_revenue(s, d, i) = s == d ? 0.0 : (1.0 - 1.0 / pol.tm(s, d, i)) * value;
            }
    for (std::size_t d = 0; d < N; ++d) {
        std::vector<double> prel(I);
        for (std::size_t j = 0; j < I; ++j) prel[j] = sol.price(d, j) / e.base.price(d, j);
        const double wrel = sol.wage[d] / e.base.wage[d];
        const double rrel = sol.rental[d] / e.base.rental[d];
        for (std::size_t i = 0; i < I; ++i) {
            const double fw[2] = {e.psi_l(d, i), e.psi_k(d, i)};
            const double fp[2] = {wrel, rrel};
            const double pf = ces_price(fw, fp, e.nu[i]);
            const double pm = e.psi_m(d, i) > 0.0 ? ces_price(e.eta.row(d, i), prel, e.mu[i]) : 1.0;
            const double tw[2] = {e.psi_f(d, i), e.psi_m(d, i)};
            const double tp[2] = {pf, pm};
            const auto top = ces_shares(tw, tp, e.rho[i]);
            const auto factors = ces_shares(fw, fp, e.nu[i]);
            const double cost = e.theta[i] / (1.0 + e.theta[i]) * sol.sales(d, i);
            f.labor(d, i) = cost * top[0] * factors[0];
            f.capital(d, i) = cost * top[0] * factors[1];
            f.profit(d, i) = sol.sales(d, i) - cost;
            if (top[1] > 0.0) {
                const auto mix = ces_shares(e.eta.row(d, i), prel, e.mu[i]);
                for (std::size_t j = 0; j < I; ++j) f.intermediates(d, i, j) = cost * top[1] * mix[j];
            }
            f.consumption(d, i) = sol.cons_expenditure(d, i);
            f.investment(d, i) = sol.inv_expenditure(d, i);
        }
    }
    return f;
}

BaselineFlows aggregate_sectors(const BaselineFlows& f, const std::string& label) {
    const std::size_t N = f.regions.size();
    const std::size_t I = f.sectors.size();
    BaselineFlows out = BaselineFlows::zeros(f.regions, {label});
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                out.trade(s, d, 0) += f.trade(s, d, i);
                out.tariff_revenue(s, d, 0) += f.tariff_revenue(s, d, i);
            }
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            out.labor(d, 0) += f.labor(d, i);
            out.capital(d, 0) += f.capital(d, i);
            out.profit(d, 0) += f.profit(d, i);
            out.consumption(d, 0) += f.consumption(d, i);
            out.investment(d, 0) += f.investment(d, i);
            for (std::size_t j = 0; j < I; ++j) out.intermediates(d, 0, 0) += f.intermediates(d, i, j);
        }
    return out;
}

Economy collapse_to_single_sector(const Economy& e, const SolverOptions& opts) {
    if (e.num_sectors() == 1) return e;
    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();
    const PolicyInputs pol = PolicyInputs::baseline(e);
    const EquilibriumSolution sol = solve_static(e, StateVector::initial(e), pol, opts);
    const BaselineFlows flows = aggregate_sectors(flows_from_solution(e, pol, sol), "all");

    double spend_total = 0.0;
    double theta = 0.0;
    double sales_total = 0.0;
    double sigma = 0.0, nu = 0.0, rho = 0.0, mu = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
        double spend = 0.0;
        double sales = 0.0;
        for (std::size_t d = 0; d < N; ++d) {
            spend += sol.expenditure(d, i);
            sales += sol.sales(d, i);
        }
        spend_total += spend;
        theta += spend * e.theta[i];
        sales_total += sales;
        sigma += sales * e.sigma[i];
        nu += sales * e.nu[i];
        rho += sales * e.rho[i];
        mu += sales * e.mu[i];
    }

    CalibrationParameters params;
    params.theta = {theta / spend_total};
    params.sigma = {sigma / sales_total};
    params.nu = {nu / sales_total};
    params.rho = {rho / sales_total};
    params.mu = {mu / sales_total};
    params.delta = e.delta;
    params.beta = e.beta;
    params.alpha0 = e.alpha0;
    params.alpha_growth = e.alpha_growth;
    params.horizon = e.horizon;
    params.base_year = e.base_year;
    params.k0 = e.k0;
    params.l_path = e.l_path;
    params.population = e.population;
    params.lambda0 = Grid2(N, 1);
    for (std::size_t d = 0; d < N; ++d) {
        double weighted = 0.0;
        double weight = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            weighted += sol.sales(d, i) * e.lambda0(d, i);
            weight += sol.sales(d, i);
        }
        params.lambda0(d, 0) = weight > 0.0 ? weighted / weight : 0.0;
    }

    RebalanceOptions rebalance;
    rebalance.shift_capital = false;
    return calibrate_shares(profit_rebalance(flows, params.theta, rebalance), params);
}

}  // namespace tradediff
