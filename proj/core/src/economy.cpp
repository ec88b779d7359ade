#include "tradediff/economy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tradediff/errors.hpp"
#include "tradediff/log.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff {

namespace {

constexpr double kShareTol = 1e-9;

double relative_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

class ViolationSink {
public:
    explicit ViolationSink(std::vector<Violation>& out) : out_(out) {}

    void add(std::string field, std::vector<std::size_t> index, double deviation, std::string message) {
        out_.push_back({std::move(field), std::move(index), deviation, std::move(message)});
    }

private:
    std::vector<Violation>& out_;
};

bool check_size(ViolationSink& sink, const std::string& field, std::size_t actual, std::size_t expected) {
    if (actual == expected) return true;
    std::ostringstream msg;
    msg << "expected " << expected << " entries, found " << actual;
    sink.add(field, {}, static_cast<double>(actual) - static_cast<double>(expected), msg.str());
    return false;
}

bool grid_shape_ok(ViolationSink& sink, const std::string& field, const Grid2& g, std::size_t r, std::size_t c) {
    if (g.rows() == r && g.cols() == c) return true;
    std::ostringstream msg;
    msg << "expected shape " << r << "x" << c << ", found " << g.rows() << "x" << g.cols();
    sink.add(field, {}, 0.0, msg.str());
    return false;
}

bool grid_shape_ok(ViolationSink& sink, const std::string& field, const Grid3& g, std::size_t a, std::size_t b,
                   std::size_t c) {
    if (g.dim0() == a && g.dim1() == b && g.dim2() == c) return true;
    std::ostringstream msg;
    msg << "expected shape " << a << "x" << b << "x" << c << ", found " << g.dim0() << "x" << g.dim1() << "x"
        << g.dim2();
    sink.add(field, {}, 0.0, msg.str());
    return false;
}

void check_unit_rows(ViolationSink& sink, const std::string& field, const Grid2& g) {
    for (std::size_t r = 0; r < g.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) {
            if (!(g(r, c) >= 0.0)) sink.add(field, {r, c}, g(r, c), "share must be nonnegative");
            sum += g(r, c);
        }
        if (std::abs(sum - 1.0) > kShareTol) {
            std::ostringstream msg;
            msg << "row sum " << sum << " != 1";
            sink.add(field, {r}, sum - 1.0, msg.str());
        }
    }
}

void check_pair_sum(ViolationSink& sink, const std::string& field, const Grid2& a, const Grid2& b) {
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) {
            if (!(a(r, c) >= 0.0) || !(b(r, c) >= 0.0))
                sink.add(field, {r, c}, std::min(a(r, c), b(r, c)), "weights must be nonnegative");
            const double sum = a(r, c) + b(r, c);
            if (std::abs(sum - 1.0) > kShareTol) {
                std::ostringstream msg;
                msg << "weights sum to " << sum << " != 1";
                sink.add(field, {r, c}, sum - 1.0, msg.str());
            }
        }
}

std::vector<double> broadcast(const std::vector<double>& v, std::size_t n, double fallback, const char* name) {
    if (v.empty()) return std::vector<double>(n, fallback);
    if (v.size() == 1) return std::vector<double>(n, v.front());
    if (v.size() != n) {
        std::ostringstream msg;
        msg << name << ": expected " << n << " values, found " << v.size();
        throw CalibrationError(msg.str());
    }
    return v;
}

}  // namespace

std::optional<std::size_t> Economy::find_region(const std::string& id) const {
    auto it = std::find(regions.begin(), regions.end(), id);
    if (it == regions.end()) return std::nullopt;
    return static_cast<std::size_t>(it - regions.begin());
}

std::optional<std::size_t> Economy::find_sector(const std::string& id) const {
    auto it = std::find(sectors.begin(), sectors.end(), id);
    if (it == sectors.end()) return std::nullopt;
    return static_cast<std::size_t>(it - sectors.begin());
}

std::size_t Economy::region_index(const std::string& id) const {
    if (auto k = find_region(id)) return *k;
    throw UnknownRegion("unknown region '" + id + "'");
}

std::size_t Economy::sector_index(const std::string& id) const {
    if (auto k = find_sector(id)) return *k;
    throw Error("unknown sector '" + id + "'");
}

double Economy::population_at(std::size_t t, std::size_t d) const {
    if (!population.empty()) return population(std::min(t, population.rows() - 1), d);
    return l_path(std::min(t, l_path.rows() - 1), d);
}

StateVector StateVector::initial(const Economy& e) {
    StateVector st;
    st.lambda = e.lambda0;
    st.capital = e.k0;
    st.labor.resize(e.num_regions());
    for (std::size_t d = 0; d < e.num_regions(); ++d) st.labor[d] = e.l_path(0, d);
    st.alpha = e.alpha0;
    st.period = 0;
    return st;
}

std::string describe(const Violation& v) {
    std::ostringstream out;
    out << v.field;
    if (!v.index.empty()) {
        out << '[';
        for (std::size_t k = 0; k < v.index.size(); ++k) out << (k ? "," : "") << v.index[k];
        out << ']';
    }
    out << ": " << v.message << " (deviation " << v.deviation << ')';
    return out.str();
}

std::vector<Violation> validate_economy(const Economy& e) {
    std::vector<Violation> out;
    ViolationSink sink(out);
    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();

    if (N == 0) sink.add("regions", {}, 0.0, "no regions");
    if (I == 0) sink.add("sectors", {}, 0.0, "no sectors");
    if (N == 0 || I == 0) return out;

    bool sector_ok = check_size(sink, "theta", e.theta.size(), I);
    sector_ok &= check_size(sink, "sigma", e.sigma.size(), I);
    sector_ok &= check_size(sink, "nu", e.nu.size(), I);
    sector_ok &= check_size(sink, "rho", e.rho.size(), I);
    sector_ok &= check_size(sink, "mu", e.mu.size(), I);
    if (sector_ok) {
        for (std::size_t i = 0; i < I; ++i) {
            if (!(e.theta[i] > 0.0)) sink.add("theta", {i}, e.theta[i], "theta must be positive");
            if (!(e.sigma[i] > 1.0)) sink.add("sigma", {i}, e.sigma[i] - 1.0, "sigma must exceed 1");
            if (!(e.theta[i] > e.sigma[i] - 1.0)) {
                std::ostringstream msg;
                msg << "theta <= sigma-1 (" << e.theta[i] << " <= " << e.sigma[i] - 1.0 << ")";
                sink.add("theta", {i}, e.theta[i] - (e.sigma[i] - 1.0), msg.str());
            }
            if (!(e.nu[i] >= 0.0)) sink.add("nu", {i}, e.nu[i], "nu must be nonnegative");
            if (!(e.rho[i] >= 0.0)) sink.add("rho", {i}, e.rho[i], "rho must be nonnegative");
            if (!(e.mu[i] >= 0.0)) sink.add("mu", {i}, e.mu[i], "mu must be nonnegative");
        }
    }

    if (grid_shape_ok(sink, "kappa", e.kappa, N, I)) check_unit_rows(sink, "kappa", e.kappa);
    if (grid_shape_ok(sink, "chi", e.chi, N, I)) check_unit_rows(sink, "chi", e.chi);
    if (grid_shape_ok(sink, "eta", e.eta, N, I, I)) {
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < I; ++j) {
                    if (!(e.eta(d, i, j) >= 0.0)) sink.add("eta", {d, i, j}, e.eta(d, i, j), "share must be nonnegative");
                    sum += e.eta(d, i, j);
                }
                if (std::abs(sum - 1.0) > kShareTol) {
                    std::ostringstream msg;
                    msg << "row sum " << sum << " != 1";
                    sink.add("eta", {d, i}, sum - 1.0, msg.str());
                }
            }
    }
    if (grid_shape_ok(sink, "psi_f", e.psi_f, N, I) && grid_shape_ok(sink, "psi_m", e.psi_m, N, I))
        check_pair_sum(sink, "psi_f+psi_m", e.psi_f, e.psi_m);
    if (grid_shape_ok(sink, "psi_k", e.psi_k, N, I) && grid_shape_ok(sink, "psi_l", e.psi_l, N, I))
        check_pair_sum(sink, "psi_k+psi_l", e.psi_k, e.psi_l);

    bool region_ok = check_size(sink, "savings_rate", e.savings_rate.size(), N);
    region_ok &= check_size(sink, "tb_rate", e.tb_rate.size(), N);
    region_ok &= check_size(sink, "delta", e.delta.size(), N);
    if (region_ok) {
        for (std::size_t d = 0; d < N; ++d) {
            const double s = e.savings_rate[d];
            if (!(s > 0.0 && s < 1.0)) sink.add("savings_rate", {d}, s, "savings rate must lie in (0,1)");
            if (!(e.delta[d] > 0.0 && e.delta[d] < 1.0)) sink.add("delta", {d}, e.delta[d], "delta must lie in (0,1)");
            if (!(s - e.tb_rate[d] >= 0.0))
                sink.add("tb_rate", {d}, s - e.tb_rate[d], "investment rate s - tb is negative");
        }
    }

    if (grid_shape_ok(sink, "tau0", e.tau0, N, N, I) && grid_shape_ok(sink, "tm0", e.tm0, N, N, I)) {
        for (std::size_t s = 0; s < N; ++s)
            for (std::size_t d = 0; d < N; ++d)
                for (std::size_t i = 0; i < I; ++i) {
                    const double tau = e.tau0(s, d, i);
                    const double tm = e.tm0(s, d, i);
                    if (!(tau >= 1.0)) sink.add("tau0", {s, d, i}, tau - 1.0, "iceberg cost below 1");
                    if (!(tm >= 1.0) || std::isinf(tm)) sink.add("tm0", {s, d, i}, tm - 1.0, "tariff factor must be finite and >= 1");
                    if (s == d && tau != 1.0) sink.add("tau0", {s, d, i}, tau - 1.0, "domestic iceberg cost must be 1");
                    if (s == d && tm != 1.0) sink.add("tm0", {s, d, i}, tm - 1.0, "domestic tariff factor must be 1");
                }
    }

    if (!(e.beta >= 0.0 && e.beta < 1.0)) sink.add("beta", {}, e.beta, "beta must lie in [0,1)");
    if (!(e.alpha0 >= 0.0)) sink.add("alpha0", {}, e.alpha0, "alpha0 must be nonnegative");
    if (!std::isfinite(e.alpha_growth) || e.alpha_growth <= -1.0)
        sink.add("alpha_growth", {}, e.alpha_growth, "alpha growth must be finite and > -1");
    if (e.horizon == 0) sink.add("horizon", {}, 0.0, "horizon must be at least 1");

    if (grid_shape_ok(sink, "lambda0", e.lambda0, N, I)) {
        for (std::size_t d = 0; d < N; ++d) {
            double row = 0.0;
            for (std::size_t i = 0; i < I; ++i) {
                if (!(e.lambda0(d, i) >= 0.0) || !std::isfinite(e.lambda0(d, i)))
                    sink.add("lambda0", {d, i}, e.lambda0(d, i), "lambda must be finite and nonnegative");
                row += e.lambda0(d, i);
            }
            if (!(row > 0.0)) sink.add("lambda0", {d}, row, "lambda is zero in every sector");
        }
        for (std::size_t i = 0; i < I; ++i) {
            double col = 0.0;
            for (std::size_t d = 0; d < N; ++d) col += e.lambda0(d, i);
            if (!(col > 0.0)) sink.add("lambda0", {i}, col, "no region has a positive lambda in this sector");
        }
    }

    if (check_size(sink, "k0", e.k0.size(), N))
        for (std::size_t d = 0; d < N; ++d)
            if (!(e.k0[d] > 0.0)) sink.add("k0", {d}, e.k0[d], "initial capital must be positive");

    if (e.l_path.cols() != N || e.l_path.rows() < e.horizon) {
        std::ostringstream msg;
        msg << "labor path must cover " << e.horizon << " periods x " << N << " regions, found " << e.l_path.rows()
            << "x" << e.l_path.cols();
        sink.add("l_path", {}, 0.0, msg.str());
    } else {
        for (std::size_t t = 0; t < e.l_path.rows(); ++t)
            for (std::size_t d = 0; d < N; ++d)
                if (!(e.l_path(t, d) > 0.0)) sink.add("l_path", {t, d}, e.l_path(t, d), "labor must be positive");
    }
    if (!e.population.empty() && (e.population.cols() != N || e.population.rows() < e.horizon))
        sink.add("population", {}, 0.0, "population path must cover the horizon for every region");

    const auto& b = e.base;
    bool base_ok = check_size(sink, "base.wage", b.wage.size(), N);
    base_ok &= check_size(sink, "base.rental", b.rental.size(), N);
    base_ok &= check_size(sink, "base.income", b.income.size(), N);
    base_ok &= grid_shape_ok(sink, "base.price", b.price, N, I);
    if (base_ok) {
        for (std::size_t d = 0; d < N; ++d) {
            if (!(b.wage[d] > 0.0)) sink.add("base.wage", {d}, b.wage[d], "base wage must be positive");
            if (!(b.rental[d] > 0.0)) sink.add("base.rental", {d}, b.rental[d], "base rental must be positive");
            for (std::size_t i = 0; i < I; ++i)
                if (!(b.price(d, i) > 0.0) || !std::isfinite(b.price(d, i)))
                    sink.add("base.price", {d, i}, b.price(d, i), "base price must be finite and positive");
        }
        if (!(b.world_factor_income > 0.0))
            sink.add("base.world_factor_income", {}, b.world_factor_income, "numeraire must be positive");
        if (region_ok) {
            double balance = 0.0;
            double scale = 0.0;
            for (std::size_t d = 0; d < N; ++d) {
                balance += e.tb_rate[d] * b.income[d];
                scale += std::abs(b.income[d]);
            }
            if (scale > 0.0 && std::abs(balance) > 1e-8 * scale) {
                std::ostringstream msg;
                msg << "world trade balance sum tb*Y = " << balance << " != 0";
                sink.add("tb_rate", {}, balance / scale, msg.str());
            }
        }
    }
    return out;
}

BaselineFlows BaselineFlows::zeros(std::vector<std::string> regions, std::vector<std::string> sectors) {
    BaselineFlows f;
    const std::size_t N = regions.size();
    const std::size_t I = sectors.size();
    f.regions = std::move(regions);
    f.sectors = std::move(sectors);
    f.trade = Grid3(N, N, I);
    f.tariff_revenue = Grid3(N, N, I);
    f.labor = Grid2(N, I);
    f.capital = Grid2(N, I);
    f.profit = Grid2(N, I);
    f.intermediates = Grid3(N, I, I);
    f.consumption = Grid2(N, I);
    f.investment = Grid2(N, I);
    return f;
}

double BaselineFlows::sales(std::size_t s, std::size_t i) const {
    double total = 0.0;
    for (std::size_t d = 0; d < regions.size(); ++d) total += trade(s, d, i) - tariff_revenue(s, d, i);
    return total;
}

double BaselineFlows::absorption(std::size_t d, std::size_t j) const {
    double total = 0.0;
    for (std::size_t s = 0; s < regions.size(); ++s) total += trade(s, d, j);
    return total;
}

double BaselineFlows::income(std::size_t d) const {
    double total = 0.0;
    for (std::size_t i = 0; i < sectors.size(); ++i) total += labor(d, i) + capital(d, i) + profit(d, i);
    for (std::size_t s = 0; s < regions.size(); ++s)
        for (std::size_t i = 0; i < sectors.size(); ++i) total += tariff_revenue(s, d, i);
    return total;
}

std::vector<Violation> check_flows(const BaselineFlows& f, double rel_tol, const std::vector<double>* theta) {
    std::vector<Violation> out;
    ViolationSink sink(out);
    const std::size_t N = f.regions.size();
    const std::size_t I = f.sectors.size();
    bool ok = grid_shape_ok(sink, "trade", f.trade, N, N, I);
    ok &= grid_shape_ok(sink, "tariff_revenue", f.tariff_revenue, N, N, I);
    ok &= grid_shape_ok(sink, "labor", f.labor, N, I);
    ok &= grid_shape_ok(sink, "capital", f.capital, N, I);
    ok &= grid_shape_ok(sink, "profit", f.profit, N, I);
    ok &= grid_shape_ok(sink, "intermediates", f.intermediates, N, I, I);
    ok &= grid_shape_ok(sink, "consumption", f.consumption, N, I);
    ok &= grid_shape_ok(sink, "investment", f.investment, N, I);
    if (theta) ok &= check_size(sink, "theta", theta->size(), I);
    if (!ok) return out;

    auto nonneg = [&](const std::string& name, const std::vector<double>& values) {
        for (std::size_t k = 0; k < values.size(); ++k)
            if (!(values[k] >= 0.0) || !std::isfinite(values[k])) sink.add(name, {k}, values[k], "flow must be finite and nonnegative");
    };
    nonneg("trade", f.trade.data());
    nonneg("tariff_revenue", f.tariff_revenue.data());
    nonneg("labor", f.labor.data());
    nonneg("capital", f.capital.data());
    nonneg("profit", f.profit.data());
    nonneg("intermediates", f.intermediates.data());
    nonneg("consumption", f.consumption.data());
    nonneg("investment", f.investment.data());

    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                const double rev = f.tariff_revenue(s, d, i);
                if (s == d && rev != 0.0) sink.add("tariff_revenue", {s, d, i}, rev, "domestic tariff revenue must be zero");
                if (rev > 0.0 && !(rev < f.trade(s, d, i)))
                    sink.add("tariff_revenue", {s, d, i}, rev - f.trade(s, d, i), "tariff revenue must be below the trade value");
            }

    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t j = 0; j < I; ++j) {
            double uses = f.consumption(d, j) + f.investment(d, j);
            for (std::size_t i = 0; i < I; ++i) uses += f.intermediates(d, i, j);
            const double supply = f.absorption(d, j);
            const double gap = relative_gap(supply, uses);
            if (gap > rel_tol) {
                std::ostringstream msg;
                msg << "purchases " << supply << " != consumption + investment + intermediates " << uses;
                sink.add("absorption", {d, j}, gap, msg.str());
            }
        }

    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t i = 0; i < I; ++i) {
            double cost = f.labor(s, i) + f.capital(s, i) + f.profit(s, i);
            for (std::size_t j = 0; j < I; ++j) cost += f.intermediates(s, i, j);
            const double sales = f.sales(s, i);
            const double gap = relative_gap(sales, cost);
            if (gap > rel_tol) {
                std::ostringstream msg;
                msg << "sales " << sales << " != factor payments + profit + intermediates " << cost;
                sink.add("output", {s, i}, gap, msg.str());
            }
            if (theta) {
                const double target = sales / (1.0 + (*theta)[i]);
                const double pgap = relative_gap(f.profit(s, i), target);
                if (pgap > rel_tol) {
                    std::ostringstream msg;
                    msg << "profit " << f.profit(s, i) << " != sales/(1+theta) " << target;
                    sink.add("profit", {s, i}, pgap, msg.str());
                }
            }
        }

    double balance = 0.0;
    double scale = 0.0;
    for (std::size_t d = 0; d < N; ++d) {
        double absorb = 0.0;
        for (std::size_t j = 0; j < I; ++j) absorb += f.consumption(d, j) + f.investment(d, j);
        balance += f.income(d) - absorb;
        scale += f.income(d);
    }
    if (scale > 0.0 && std::abs(balance) > rel_tol * scale) {
        std::ostringstream msg;
        msg << "world income minus final demand " << balance << " != 0";
        sink.add("world_balance", {}, balance / scale, msg.str());
    }
    return out;
}

Economy calibrate_shares(const BaselineFlows& f, const CalibrationParameters& p) {
    const std::size_t N = f.regions.size();
    const std::size_t I = f.sectors.size();
    if (N == 0 || I == 0) throw CalibrationError("flows have no regions or no sectors");
    if (p.theta.size() != I) throw CalibrationError("theta must have one value per sector");

    if (auto v = check_flows(f, 1e-6, &p.theta); !v.empty()) {
        std::ostringstream msg;
        msg << v.size() << " flow identity violation(s)";
        for (std::size_t k = 0; k < std::min<std::size_t>(v.size(), 10); ++k) msg << "\n  " << describe(v[k]);
        throw UnbalancedFlows(msg.str());
    }

    Economy e;
    e.regions = f.regions;
    e.sectors = f.sectors;
    e.base_year = p.base_year;
    e.horizon = std::max<std::size_t>(1, p.horizon);
    e.theta = p.theta;
    e.sigma = broadcast(p.sigma, I, 3.0, "sigma");
    e.nu = broadcast(p.nu, I, 1.0, "nu");
    e.rho = broadcast(p.rho, I, 0.0, "rho");
    e.mu = broadcast(p.mu, I, 0.0, "mu");
    e.delta = broadcast(p.delta, N, 0.05, "delta");
    e.beta = p.beta;
    e.alpha0 = p.alpha0;
    e.alpha_growth = p.alpha_growth;

    std::vector<double> income(N), cons(N, 0.0), inv(N, 0.0), labor_income(N, 0.0), capital_income(N, 0.0);
    for (std::size_t d = 0; d < N; ++d) {
        income[d] = f.income(d);
        for (std::size_t i = 0; i < I; ++i) {
            cons[d] += f.consumption(d, i);
            inv[d] += f.investment(d, i);
            labor_income[d] += f.labor(d, i);
            capital_income[d] += f.capital(d, i);
        }
        if (!(income[d] > 0.0)) throw CalibrationError("region '" + f.regions[d] + "' has no income");
        if (!(labor_income[d] > 0.0)) throw CalibrationError("region '" + f.regions[d] + "' has no labor income");
    }

    e.savings_rate.resize(N);
    e.tb_rate.resize(N);
    e.kappa = Grid2(N, I);
    e.chi = Grid2(N, I);
    for (std::size_t d = 0; d < N; ++d) {
        e.savings_rate[d] = 1.0 - cons[d] / income[d];
        e.tb_rate[d] = (income[d] - cons[d] - inv[d]) / income[d];
        for (std::size_t i = 0; i < I; ++i) {
            e.kappa(d, i) = cons[d] > 0.0 ? f.consumption(d, i) / cons[d] : 1.0 / static_cast<double>(I);
            e.chi(d, i) = inv[d] > 0.0 ? f.investment(d, i) / inv[d] : 1.0 / static_cast<double>(I);
        }
    }

    e.psi_f = Grid2(N, I);
    e.psi_m = Grid2(N, I);
    e.psi_k = Grid2(N, I);
    e.psi_l = Grid2(N, I);
    e.eta = Grid3(N, I, I);
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            const double va = f.labor(d, i) + f.capital(d, i);
            double m = 0.0;
            for (std::size_t j = 0; j < I; ++j) m += f.intermediates(d, i, j);
            const double cost = va + m;
            e.psi_f(d, i) = cost > 0.0 ? va / cost : 1.0;
            e.psi_m(d, i) = cost > 0.0 ? m / cost : 0.0;
            e.psi_l(d, i) = va > 0.0 ? f.labor(d, i) / va : 1.0;
            e.psi_k(d, i) = va > 0.0 ? f.capital(d, i) / va : 0.0;
            for (std::size_t j = 0; j < I; ++j)
                e.eta(d, i, j) = m > 0.0 ? f.intermediates(d, i, j) / m : 1.0 / static_cast<double>(I);
        }

    e.lambda0 = p.lambda0.empty() ? Grid2(N, I, 1.0) : p.lambda0;
    if (e.lambda0.rows() != N || e.lambda0.cols() != I) throw CalibrationError("lambda0 must be regions x sectors");
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            const double sales = f.sales(d, i);
            if (sales <= 0.0 && e.lambda0(d, i) > 0.0) {
                log_warn("region '" + f.regions[d] + "' does not produce '" + f.sectors[i] + "': lambda set to 0");
                e.lambda0(d, i) = 0.0;
            } else if (sales > 0.0 && !(e.lambda0(d, i) > 0.0)) {
                throw CalibrationError("region '" + f.regions[d] + "' produces '" + f.sectors[i] +
                                       "' but has a zero lambda");
            }
        }

    e.tau0 = Grid3(N, N, I, 1.0);
    e.tm0 = Grid3(N, N, I, 1.0);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                const double value = f.trade(s, d, i);
                if (s != d && value > 0.0) e.tm0(s, d, i) = value / (value - f.tariff_revenue(s, d, i));
            }

    e.base.price = Grid2(N, I);
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            const double theta = e.theta[i];
            const double absorb = f.absorption(d, i);
            double phi = 0.0;
            if (absorb <= 0.0) {
                for (std::size_t s = 0; s < N; ++s) phi += e.lambda0(s, i) * std::pow(e.tm0(s, d, i), -theta);
            } else {
                const double own = f.trade(d, d, i) / absorb;
                if (own > 0.0) {
                    phi = e.lambda0(d, i) / own;
                } else {
                    if (e.lambda0(d, i) > 0.0)
                        throw CalibrationError("region '" + f.regions[d] + "' produces '" + f.sectors[i] +
                                               "' but buys none of its own output");
                    std::size_t anchor = 0;
                    for (std::size_t s = 1; s < N; ++s)
                        if (f.trade(s, d, i) > f.trade(anchor, d, i)) anchor = s;
                    phi = e.lambda0(anchor, i) * std::pow(e.tm0(anchor, d, i), -theta) /
                          (f.trade(anchor, d, i) / absorb);
                }
                for (std::size_t s = 0; s < N; ++s) {
                    if (s == d) continue;
                    const double share = f.trade(s, d, i) / absorb;
                    if (share <= 0.0) {
                        e.tau0(s, d, i) = std::numeric_limits<double>::infinity();
                        continue;
                    }
                    double tau = std::pow(e.lambda0(s, i) / (share * phi), 1.0 / theta) / e.tm0(s, d, i);
                    if (tau < 1.0 - 1e-9) {
                        std::ostringstream msg;
                        msg << "implied iceberg cost " << tau << " < 1 for " << f.regions[s] << "->" << f.regions[d]
                            << " in sector '" << f.sectors[i] << "'; the productivity and trade data are inconsistent";
                        throw CalibrationError(msg.str());
                    }
                    e.tau0(s, d, i) = std::max(tau, 1.0);
                }
            }
            e.base.price(d, i) = price_constant(theta, e.sigma[i]) * std::pow(phi, -1.0 / theta);
        }

    e.k0 = p.k0;
    if (e.k0.empty()) {
        e.k0.resize(N);
        for (std::size_t d = 0; d < N; ++d) e.k0[d] = inv[d] > 0.0 ? inv[d] / e.delta[d] : capital_income[d];
    }
    if (e.k0.size() != N) throw CalibrationError("k0 must have one value per region");

    if (p.l_path.empty()) {
        e.l_path = Grid2(e.horizon, N);
        for (std::size_t t = 0; t < e.horizon; ++t)
            for (std::size_t d = 0; d < N; ++d) e.l_path(t, d) = labor_income[d];
    } else {
        e.l_path = p.l_path;
    }
    if (e.l_path.cols() != N) throw CalibrationError("labor path must have one column per region");
    e.population = p.population;

    e.base.wage.resize(N);
    e.base.rental.resize(N);
    e.base.income = income;
    e.base.world_factor_income = 0.0;
    for (std::size_t d = 0; d < N; ++d) {
        e.base.wage[d] = labor_income[d] / e.l_path(0, d);
        e.base.rental[d] = capital_income[d] > 0.0 ? capital_income[d] / e.k0[d] : 1.0;
        e.base.world_factor_income += labor_income[d] + capital_income[d];
    }
    return e;
}

}  // namespace tradediff
