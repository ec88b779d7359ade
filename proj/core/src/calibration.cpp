#include "tradediff/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "tradediff/errors.hpp"
#include "tradediff/parallel.hpp"

namespace tradediff {

Grid2 lambda0_from_productivity(const std::vector<std::string>& regions, const std::vector<std::string>& sectors,
                                const std::vector<ProductivityRecord>& records) {
    std::map<std::pair<std::string, std::string>, double> table;
    for (const auto& r : records) {
        if (!(r.value > 0.0) || !std::isfinite(r.value)) {
            std::ostringstream msg;
            msg << "productivity for (" << r.region << ", " << r.sector << ") must be positive, found " << r.value;
            throw Error(msg.str());
        }
        table[{r.region, r.sector}] = r.value;
    }
    Grid2 out(regions.size(), sectors.size());
    std::vector<std::string> missing;
    for (std::size_t d = 0; d < regions.size(); ++d)
        for (std::size_t i = 0; i < sectors.size(); ++i) {
            auto it = table.find({regions[d], sectors[i]});
            if (it == table.end()) {
                missing.push_back("(" + regions[d] + ", " + sectors[i] + ")");
                continue;
            }
            out(d, i) = it->second;
        }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "productivity table lacks " << missing.size() << " cell(s):";
        for (const auto& m : missing) msg << ' ' << m;
        throw MissingCell(msg.str());
    }
    for (std::size_t i = 0; i < sectors.size(); ++i) {
        double mean = 0.0;
        for (std::size_t d = 0; d < regions.size(); ++d) mean += out(d, i);
        mean /= static_cast<double>(regions.size());
        for (std::size_t d = 0; d < regions.size(); ++d) out(d, i) /= mean;
    }
    return out;
}

BaselineFlows profit_rebalance(const BaselineFlows& flows, const std::vector<double>& theta,
                               const RebalanceOptions& opts) {
    const std::size_t N = flows.regions.size();
    const std::size_t I = flows.sectors.size();
    if (theta.size() != I) throw Error("profit_rebalance: theta must have one value per sector");
    if (auto v = check_flows(flows, opts.tol); !v.empty())
        throw UnbalancedFlows("profit_rebalance needs balanced flows: " + describe(v.front()));

    BaselineFlows out = flows;
    if (opts.shift_capital) {
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                const double moved = opts.shifted_share * out.capital(d, i);
                out.capital(d, i) -= moved;
                out.profit(d, i) += moved;
            }
    }

    Grid2 target(N, I);
    std::vector<std::string> infeasible;
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            target(d, i) = out.sales(d, i) / (1.0 + theta[i]);
            const double available = out.capital(d, i) + out.profit(d, i);
            if (target(d, i) > available * (1.0 + 1e-12)) {
                std::ostringstream cell;
                cell << flows.regions[d] << '/' << flows.sectors[i] << " (needs " << target(d, i) << ", has "
                     << available << ")";
                infeasible.push_back(cell.str());
            }
        }
    if (!infeasible.empty()) {
        std::ostringstream msg;
        msg << "profit target exceeds capital plus profit in " << infeasible.size() << " cell(s):";
        for (const auto& c : infeasible) msg << ' ' << c << ';';
        throw InfeasibleTarget(msg.str(), infeasible);
    }

    // Each pass scales profit toward its target and lets capital absorb the
    // change, which keeps the output row identity exact.
    for (std::size_t pass = 0; pass < opts.max_passes; ++pass) {
        double worst = 0.0;
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                const double gap = target(d, i) - out.profit(d, i);
                const double scale = std::max(target(d, i), 1e-300);
                worst = std::max(worst, std::abs(gap) / scale);
                out.capital(d, i) = std::max(0.0, out.capital(d, i) - gap);
                out.profit(d, i) = target(d, i);
            }
        if (worst <= opts.tol) break;
    }
    return out;
}

namespace {

double sample_sd(const std::vector<double>& x, double mean) {
    if (x.size() < 2) return 0.0;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double mean_of(const std::vector<double>& x) {
    double total = 0.0;
    for (double v : x) total += v;
    return x.empty() ? 0.0 : total / static_cast<double>(x.size());
}

double annual_growth_percent(double first, double last, std::size_t years) {
    if (!(first > 0.0) || !(last > 0.0)) throw Error("growth series must be positive");
    return 100.0 * (std::pow(last / first, 1.0 / static_cast<double>(years)) - 1.0);
}

}  // namespace

MomentSet growth_moments(const Grid2& gdp, const Grid2& population) {
    if (gdp.rows() < 2) throw Error("growth_moments needs at least two periods");
    if (population.rows() != gdp.rows() || population.cols() != gdp.cols())
        throw Error("growth_moments: gdp and population shapes differ");
    const std::size_t T = gdp.rows();
    std::vector<double> growth(gdp.cols());
    std::vector<double> growth_pc(gdp.cols());
    for (std::size_t d = 0; d < gdp.cols(); ++d) {
        growth[d] = annual_growth_percent(gdp(0, d), gdp(T - 1, d), T - 1);
        growth_pc[d] = annual_growth_percent(gdp(0, d) / population(0, d), gdp(T - 1, d) / population(T - 1, d), T - 1);
    }
    MomentSet m;
    m.gdp_mean = mean_of(growth);
    m.gdp_sd = sample_sd(growth, m.gdp_mean);
    m.gdppc_mean = mean_of(growth_pc);
    m.gdppc_sd = sample_sd(growth_pc, m.gdppc_mean);
    return m;
}

MomentSet growth_moments(const SimulationPath& path, const Economy& e) {
    const Grid2 gdp = path.real_income();
    Grid2 pop(gdp.rows(), gdp.cols());
    for (std::size_t t = 0; t < gdp.rows(); ++t)
        for (std::size_t d = 0; d < gdp.cols(); ++d) pop(t, d) = e.population_at(t, d);
    return growth_moments(gdp, pop);
}

MomentSet growth_moments(const std::vector<HistoricalRecord>& records, const std::vector<std::string>& regions,
                         int first_year, int last_year) {
    if (last_year <= first_year) throw Error("growth_moments: window must span at least two years");
    const std::size_t T = static_cast<std::size_t>(last_year - first_year + 1);
    Grid2 gdp(T, regions.size(), -1.0);
    Grid2 pop(T, regions.size(), -1.0);
    std::map<std::string, std::size_t> index;
    for (std::size_t d = 0; d < regions.size(); ++d) index[regions[d]] = d;
    for (const auto& r : records) {
        auto it = index.find(r.region);
        if (it == index.end() || r.year < first_year || r.year > last_year) continue;
        gdp(static_cast<std::size_t>(r.year - first_year), it->second) = r.gdp;
        pop(static_cast<std::size_t>(r.year - first_year), it->second) = r.population;
    }
    for (std::size_t d = 0; d < regions.size(); ++d)
        for (std::size_t t : {std::size_t{0}, T - 1})
            if (gdp(t, d) <= 0.0 || pop(t, d) <= 0.0) {
                std::ostringstream msg;
                msg << "historical series lack a positive value for '" << regions[d] << "' in "
                    << first_year + static_cast<int>(t);
                throw MissingCell(msg.str());
            }
    // Interior years do not enter the compound rate; fill them to satisfy positivity.
    for (std::size_t d = 0; d < regions.size(); ++d)
        for (std::size_t t = 1; t + 1 < T; ++t) {
            if (gdp(t, d) <= 0.0) gdp(t, d) = gdp(0, d);
            if (pop(t, d) <= 0.0) pop(t, d) = pop(0, d);
        }
    return growth_moments(gdp, pop);
}

LossComponents beta_loss_components(const MomentSet& sim, const MomentSet& hist, double w) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error("beta_loss: weight must lie in [0,1]");
    LossComponents c;
    c.gdp = std::pow(sim.gdp_mean - hist.gdp_mean, 2) + std::pow(sim.gdp_sd - hist.gdp_sd, 2);
    c.gdppc = std::pow(sim.gdppc_mean - hist.gdppc_mean, 2) + std::pow(sim.gdppc_sd - hist.gdppc_sd, 2);
    c.loss = w * c.gdppc + (1.0 - w) * c.gdp;
    return c;
}

double beta_loss(const MomentSet& sim, const MomentSet& hist, double w) {
    return beta_loss_components(sim, hist, w).loss;
}

namespace {
void pick_best(BetaSearchResult& result) {
    bool found = false;
    double best = 0.0;
    for (const auto& row : result.table) {
        if (!row.ok) continue;
        const bool better = !found || row.components.loss < best ||
                            (row.components.loss == best && row.beta < result.best_beta);
        if (better) {
            found = true;
            best = row.components.loss;
            result.best_beta = row.beta;
        }
    }
    if (!found) throw Error("beta search: every grid point failed");
}
}  // namespace

BetaSearchResult select_beta(const std::vector<std::pair<double, MomentSet>>& rows, const MomentSet& hist, double w) {
    if (rows.empty()) throw Error("beta search: empty grid");
    BetaSearchResult result;
    for (const auto& [beta, moments] : rows) {
        LossRow row;
        row.beta = beta;
        row.ok = true;
        row.moments = moments;
        row.components = beta_loss_components(moments, hist, w);
        result.table.push_back(row);
    }
    pick_best(result);
    return result;
}

BetaSearchResult beta_grid_search(const Economy& e, const MomentSet& hist, const std::vector<double>& grid, double w,
                                  const BetaSearchOptions& opts) {
    if (grid.empty()) throw Error("beta search: empty grid");
    if (!(w >= 0.0 && w <= 1.0)) throw Error("beta_loss: weight must lie in [0,1]");
    const std::size_t horizon = opts.horizon ? opts.horizon : e.horizon;
    if (horizon < 2) throw Error("beta search: the simulation horizon must cover at least two periods");
    BetaSearchResult result;
    result.table.resize(grid.size());
    SimulationOptions sim = opts.simulation;
    const unsigned threads = opts.threads ? opts.threads : default_thread_count();
    sim.solver.threads = 1;
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        LossRow& row = result.table[k];
        row.beta = grid[k];
        try {
            Economy trial = e;
            trial.beta = grid[k];
            const SimulationPath path = simulate(trial, {}, horizon, sim);
            row.moments = growth_moments(path, trial);
            row.components = beta_loss_components(row.moments, hist, w);
            row.ok = true;
        } catch (const std::exception& ex) {
            row.ok = false;
            row.error = ex.what();
        }
    });
    pick_best(result);
    return result;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw Error("grid needs lo <= hi and a positive step");
    std::vector<double> out;
    for (std::size_t k = 0;; ++k) {
        const double v = lo + static_cast<double>(k) * step;
        if (v > hi + step * 1e-3) break;
        out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
}

double calibrate_alpha_scale(const Economy& e, double target, std::size_t horizon, const SimulationOptions& opts,
                             double growth_tol) {
    auto mean_growth = [&](double alpha0) {
        Economy trial = e;
        trial.alpha0 = alpha0;
        return growth_moments(simulate(trial, {}, horizon, opts), trial).gdp_mean;
    };
    double lo = 0.0;
    double f_lo = mean_growth(lo) - target;
    if (f_lo >= 0.0) return 0.0;
    double hi = e.alpha0 > 0.0 ? e.alpha0 : 0.01;
    double f_hi = mean_growth(hi) - target;
    for (int k = 0; f_hi < 0.0 && k < 40; ++k) {
        lo = hi;
        hi *= 2.0;
        f_hi = mean_growth(hi) - target;
    }
    if (f_hi < 0.0) throw CalibrationError("alpha scale: target growth not reachable");
    for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = mean_growth(mid) - target;
        if (std::abs(f_mid) <= growth_tol) return mid;
        (f_mid < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double fps_index(const Grid2& joint, std::span<const double> p) {
    const std::size_t k = joint.rows();
    if (joint.cols() != k || p.size() != k) throw Error("fps_index: joint matrix must be square and match marginals");
    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t m = 0; m < k; ++m)
        for (std::size_t n = 0; n < k; ++n) {
            if (m == n) continue;
            if (joint(m, n) < 0.0) throw Error("fps_index: joint shares must be nonnegative");
            observed += joint(m, n);
            expected += p[m] * p[n];
        }
    if (!(expected > 0.0)) throw DegenerateMarginals("fps_index: expected disagreement is zero");
    return 1.0 - observed / expected;
}

SimilarityMatrix similarity_from_votes(const std::vector<VoteRecord>& votes) {
    SimilarityMatrix out;
    std::map<std::string, std::size_t> country_index;
    std::map<std::string, std::size_t> option_index;
    std::map<std::string, std::map<std::size_t, std::size_t>> ballots;
    for (const auto& v : votes) {
        if (!country_index.count(v.country)) {
            country_index[v.country] = out.ids.size();
            out.ids.push_back(v.country);
        }
        if (!option_index.count(v.position)) option_index.emplace(v.position, option_index.size());
        ballots[v.vote][country_index[v.country]] = option_index[v.position];
    }
    const std::size_t C = out.ids.size();
    const std::size_t K = option_index.size();
    out.values = Grid2(C, C, 1.0);
    for (std::size_t a = 0; a < C; ++a)
        for (std::size_t b = a + 1; b < C; ++b) {
            Grid2 joint(K, K);
            std::vector<double> marginal(K, 0.0);
            double count = 0.0;
            for (const auto& [vote, cast] : ballots) {
                auto ia = cast.find(a);
                auto ib = cast.find(b);
                if (ia == cast.end() || ib == cast.end()) continue;
                joint(ia->second, ib->second) += 1.0;
                marginal[ia->second] += 0.5;
                marginal[ib->second] += 0.5;
                count += 1.0;
            }
            if (count == 0.0)
                throw DegenerateMarginals("no common votes between '" + out.ids[a] + "' and '" + out.ids[b] + "'");
            for (double& x : joint.data()) x /= count;
            for (double& x : marginal) x /= count;
            const double kappa = fps_index(joint, marginal);
            out.values(a, b) = kappa;
            out.values(b, a) = kappa;
        }
    return out;
}

const char* to_string(Bloc b) { return b == Bloc::West ? "West" : "East"; }

Bloc bloc_from_string(const std::string& s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "west") return Bloc::West;
    if (lower == "east") return Bloc::East;
    throw ParseError("unknown bloc '" + s + "' (expected West or East)");
}

std::vector<BlocAssignment> assign_blocs(const SimilarityMatrix& sim, const std::string& west, const std::string& east) {
    auto find = [&](const std::string& id) {
        auto it = std::find(sim.ids.begin(), sim.ids.end(), id);
        if (it == sim.ids.end()) throw UnknownRegion("anchor '" + id + "' has no votes");
        return static_cast<std::size_t>(it - sim.ids.begin());
    };
    const std::size_t w = find(west);
    const std::size_t e = find(east);
    std::vector<BlocAssignment> out;
    double scale = 0.0;
    for (std::size_t k = 0; k < sim.ids.size(); ++k) {
        const double diff = sim.values(k, w) - sim.values(k, e);
        out.push_back({sim.ids[k], diff, Bloc::West});
        scale = std::max(scale, std::abs(diff));
    }
    for (auto& a : out) {
        if (scale > 0.0) a.index /= scale;
        a.bloc = a.index > 0.0 ? Bloc::West : Bloc::East;
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.index > y.index; });
    return out;
}

}  // namespace tradediff
