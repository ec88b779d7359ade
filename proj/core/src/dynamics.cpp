#include "tradediff/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "tradediff/errors.hpp"

namespace tradediff {

Grid2 SimulationPath::real_income() const {
    if (solutions.empty()) return {};
    const std::size_t N = solutions.front().income.size();
    Grid2 out(periods(), N);
    for (std::size_t t = 0; t < periods(); ++t)
        for (std::size_t d = 0; d < N; ++d) out(t, d) = solutions[t].real_income(d);
    return out;
}

Grid2 SimulationPath::nominal_income() const {
    if (solutions.empty()) return {};
    const std::size_t N = solutions.front().income.size();
    Grid2 out(periods(), N);
    for (std::size_t t = 0; t < periods(); ++t)
        for (std::size_t d = 0; d < N; ++d) out(t, d) = solutions[t].income[d];
    return out;
}

Grid2 SimulationPath::real_income_per_capita(const Economy& e) const {
    Grid2 out = real_income();
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t d = 0; d < out.cols(); ++d) out(t, d) /= e.population_at(t, d);
    return out;
}

Grid3 SimulationPath::lambda() const {
    if (states.empty()) return {};
    const std::size_t N = states.front().lambda.rows();
    const std::size_t I = states.front().lambda.cols();
    Grid3 out(states.size(), N, I);
    for (std::size_t t = 0; t < states.size(); ++t)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) out(t, d, i) = states[t].lambda(d, i);
    return out;
}

Grid3 SimulationPath::bilateral_trade() const {
    if (solutions.empty()) return {};
    const std::size_t N = solutions.front().trade_share.dim0();
    const std::size_t I = solutions.front().trade_share.dim2();
    Grid3 out(periods(), N, N);
    for (std::size_t t = 0; t < periods(); ++t)
        for (std::size_t s = 0; s < N; ++s)
            for (std::size_t d = 0; d < N; ++d) {
                double total = 0.0;
                for (std::size_t i = 0; i < I; ++i) total += solutions[t].trade_value(s, d, i);
                out(t, s, d) = total;
            }
    return out;
}

double capital_step(double k_prev, double delta, double investment) { return (1.0 - delta) * k_prev + investment; }

double alpha_step(double alpha_prev, double growth) { return alpha_prev * (1.0 + growth); }

Grid2 diffusion_step(const Grid2& lambda_prev, const Grid3& eta, const Grid3& pi_prev, double alpha, double beta) {
    const std::size_t N = lambda_prev.rows();
    const std::size_t I = lambda_prev.cols();
    if (eta.dim0() != N || eta.dim1() != I || eta.dim2() != I || pi_prev.dim0() != N || pi_prev.dim1() != N ||
        pi_prev.dim2() != I)
        throw Error("diffusion_step: grid dimensions do not match");
    if (!(beta >= 0.0 && beta < 1.0)) throw Error("diffusion_step: beta must lie in [0,1)");

    // Per destination and supplying sector, the insight flow does not depend on the using sector.
    Grid2 inflow(N, I);
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t j = 0; j < I; ++j) {
            double total = 0.0;
            for (std::size_t s = 0; s < N; ++s) {
                const double pi = pi_prev(s, d, j);
                if (pi <= 0.0) continue;
                total += std::pow(pi, 1.0 - beta) * std::pow(lambda_prev(s, j), beta);
            }
            inflow(d, j) = total;
        }

    const double scale = alpha * std::tgamma(1.0 - beta);
    Grid2 next = lambda_prev;
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            double gain = 0.0;
            for (std::size_t j = 0; j < I; ++j) gain += eta(d, i, j) * inflow(d, j);
            next(d, i) += scale * gain;
        }
    return next;
}

double diffusion_share_derivative(double lambda_h, double lambda_f, double pi_h, double eta, double alpha,
                                  double beta) {
    const double pi_f = 1.0 - pi_h;
    return alpha * std::tgamma(1.0 - beta) * eta * (1.0 - beta) *
           (std::pow(pi_h, -beta) * std::pow(lambda_h, beta) - std::pow(pi_f, -beta) * std::pow(lambda_f, beta));
}

SimulationPath simulate(const Economy& e, const PolicySchedule& schedule, std::size_t horizon,
                        const SimulationOptions& opts) {
    if (horizon == 0) throw Error("simulate: horizon must be at least 1");
    if (e.l_path.rows() < horizon) {
        std::ostringstream msg;
        msg << "simulate: labor path covers " << e.l_path.rows() << " periods, horizon is " << horizon;
        throw InvalidEconomy(msg.str());
    }
    SimulationPath path;
    path.base_year = e.base_year;
    path.states.reserve(horizon);
    path.solutions.reserve(horizon);

    StateVector state = StateVector::initial(e);
    if (!opts.diffusion) state.alpha = 0.0;
    const PolicyInputs baseline = PolicyInputs::baseline(e);

    for (std::size_t t = 0; t < horizon; ++t) {
        state.period = t;
        for (std::size_t d = 0; d < e.num_regions(); ++d) state.labor[d] = e.l_path(t, d);
        const PolicyInputs policy = schedule ? schedule(t) : baseline;
        const EquilibriumSolution* warm = path.solutions.empty() ? nullptr : &path.solutions.back();
        try {
            path.solutions.push_back(solve_static(e, state, policy, opts.solver, warm));
        } catch (const NoConvergence& ex) {
            std::ostringstream ctx;
            ctx << "period " << t << " (year " << e.base_year + static_cast<int>(t) << ")";
            throw NoConvergence(ex.iterations(), ex.residual(), ex.worst_cell(), ctx.str());
        }
        path.states.push_back(state);
        if (t + 1 == horizon) break;

        const EquilibriumSolution& sol = path.solutions.back();
        StateVector next = state;
        for (std::size_t d = 0; d < e.num_regions(); ++d)
            next.capital[d] = capital_step(state.capital[d], e.delta[d], sol.investment[d]);
        next.alpha = alpha_step(state.alpha, e.alpha_growth);
        next.lambda = diffusion_step(state.lambda, e.eta, sol.trade_share, next.alpha, e.beta);
        state = std::move(next);
    }
    return path;
}

Grid2 interpolate_labor_path(const std::vector<LaborAnchor>& anchors, const std::vector<std::string>& regions,
                             int first_year, std::size_t periods) {
    std::map<std::string, std::map<int, double>> by_region;
    for (const auto& a : anchors) {
        if (!(a.value > 0.0)) {
            std::ostringstream msg;
            msg << "labor anchor for '" << a.region << "' in " << a.year << " must be positive";
            throw Error(msg.str());
        }
        by_region[a.region][a.year] = a.value;
    }
    Grid2 out(periods, regions.size());
    for (std::size_t d = 0; d < regions.size(); ++d) {
        auto it = by_region.find(regions[d]);
        if (it == by_region.end()) throw MissingCell("no labor anchors for region '" + regions[d] + "'");
        const auto& pts = it->second;
        for (std::size_t t = 0; t < periods; ++t) {
            const int year = first_year + static_cast<int>(t);
            if (pts.size() == 1) {
                out(t, d) = pts.begin()->second;
                continue;
            }
            auto hi = pts.lower_bound(year);
            if (hi != pts.end() && hi->first == year) {
                out(t, d) = hi->second;
                continue;
            }
            if (hi == pts.begin()) ++hi;
            if (hi == pts.end()) --hi;
            auto lo = std::prev(hi);
            const double span = static_cast<double>(hi->first - lo->first);
            const double frac = static_cast<double>(year - lo->first) / span;
            out(t, d) = lo->second * std::pow(hi->second / lo->second, frac);
        }
    }
    return out;
}

}  // namespace tradediff
