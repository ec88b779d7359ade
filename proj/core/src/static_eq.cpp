#include "tradediff/static_eq.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "tradediff/errors.hpp"
#include "tradediff/parallel.hpp"

namespace tradediff {

namespace {

constexpr double kCobbDouglasBand = 1e-12;

bool is_cobb_douglas(double elasticity) { return std::abs(elasticity - 1.0) < kCobbDouglasBand; }

void require_positive(std::span<const double> weights, std::span<const double> prices) {
    for (std::size_t k = 0; k < prices.size(); ++k) {
        if (weights[k] > 0.0 && !(prices[k] > 0.0)) {
            std::ostringstream msg;
            msg << "input price " << k << " is " << prices[k] << ", must be positive";
            throw NonPositivePrice(msg.str());
        }
    }
}

/// log Phi = log sum_s lambda_s x_s^{-theta}, computed with a max shift.
double log_phi(std::span<const double> lambda, std::span<const double> log_landed, double theta) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < lambda.size(); ++s) {
        if (lambda[s] > 0.0 && std::isfinite(log_landed[s]))
            top = std::max(top, std::log(lambda[s]) - theta * log_landed[s]);
    }
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (std::size_t s = 0; s < lambda.size(); ++s) {
        if (lambda[s] > 0.0 && std::isfinite(log_landed[s]))
            sum += std::exp(std::log(lambda[s]) - theta * log_landed[s] - top);
    }
    return top + std::log(sum);
}

std::vector<double> log_of(std::span<const double> landed) {
    std::vector<double> out(landed.size());
    for (std::size_t s = 0; s < landed.size(); ++s) {
        if (!(landed[s] > 0.0)) throw NonPositivePrice("landed cost must be positive");
        out[s] = std::log(landed[s]);
    }
    return out;
}

}  // namespace

PolicyInputs PolicyInputs::baseline(const Economy& e) { return {e.tau0, e.tm0}; }

double ces_price(std::span<const double> weights, std::span<const double> prices, double elasticity) {
    if (weights.size() != prices.size()) throw Error("ces_price: weights and prices differ in length");
    require_positive(weights, prices);
    if (elasticity == 0.0) {
        double total = 0.0;
        for (std::size_t k = 0; k < prices.size(); ++k)
            if (weights[k] > 0.0) total += weights[k] * prices[k];
        return total;
    }
    if (is_cobb_douglas(elasticity)) {
        double wsum = 0.0;
        double log_total = 0.0;
        for (std::size_t k = 0; k < prices.size(); ++k) {
            if (weights[k] > 0.0) {
                wsum += weights[k];
                log_total += weights[k] * std::log(prices[k]);
            }
        }
        return wsum > 0.0 ? std::exp(log_total / wsum) : 0.0;
    }
    const double one_minus = 1.0 - elasticity;
    double total = 0.0;
    for (std::size_t k = 0; k < prices.size(); ++k)
        if (weights[k] > 0.0) total += weights[k] * std::pow(prices[k], one_minus);
    return std::pow(total, 1.0 / one_minus);
}

std::vector<double> ces_shares(std::span<const double> weights, std::span<const double> prices, double elasticity) {
    std::vector<double> out(prices.size(), 0.0);
    if (is_cobb_douglas(elasticity)) {
        double wsum = 0.0;
        for (double w : weights) wsum += std::max(w, 0.0);
        for (std::size_t k = 0; k < prices.size(); ++k)
            if (weights[k] > 0.0) out[k] = weights[k] / wsum;
        return out;
    }
    const double aggregate = ces_price(weights, prices, elasticity);
    const double one_minus = 1.0 - elasticity;
    for (std::size_t k = 0; k < prices.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        out[k] = elasticity == 0.0 ? weights[k] * prices[k] / aggregate
                                   : weights[k] * std::pow(prices[k] / aggregate, one_minus);
    }
    return out;
}

double unit_cost(double pf, double pm, double psi_f, double psi_m, double rho) {
    const double weights[2] = {psi_f, psi_m};
    const double prices[2] = {pf, pm};
    return ces_price(weights, prices, rho);
}

double unit_cost(double w, double r, std::span<const double> intermediate_prices, double psi_f, double psi_m,
                 double psi_l, double psi_k, std::span<const double> eta, double rho, double nu, double mu) {
    const double fw[2] = {psi_l, psi_k};
    const double fp[2] = {w, r};
    const double pf = ces_price(fw, fp, nu);
    const double pm = psi_m > 0.0 ? ces_price(eta, intermediate_prices, mu) : 1.0;
    return unit_cost(pf, pm, psi_f, psi_m, rho);
}

double landed_cost(double c, double tau, double tm) {
    if (!(c > 0.0)) throw NonPositivePrice("unit cost must be positive");
    if (!(tau >= 1.0) || !(tm >= 1.0)) throw Error("iceberg and tariff factors must be at least 1");
    return tm * tau * c;
}

double price_constant(double theta, double sigma) {
    if (!(theta > sigma - 1.0)) {
        std::ostringstream msg;
        msg << "price index diverges: theta " << theta << " <= sigma-1 " << sigma - 1.0;
        throw DivergentIndex(msg.str());
    }
    const double a = (sigma - 1.0) / theta;
    const double bracket = 1.0 - a + a * std::pow(sigma / (sigma - 1.0), -theta);
    const double gamma = std::tgamma((1.0 - sigma + theta) / theta);
    return std::pow(bracket * gamma, 1.0 / (1.0 - sigma));
}

double price_index(std::span<const double> lambda, std::span<const double> landed, double theta, double sigma) {
    const double constant = price_constant(theta, sigma);
    const double lp = log_phi(lambda, log_of(landed), theta);
    if (!std::isfinite(lp)) throw DivergentIndex("Phi is zero: no source supplies this market");
    return constant * std::exp(-lp / theta);
}

std::vector<double> trade_shares(std::span<const double> lambda, std::span<const double> landed, double theta) {
    const auto logs = log_of(landed);
    const double lp = log_phi(lambda, logs, theta);
    if (!std::isfinite(lp)) throw DivergentIndex("Phi is zero: no source supplies this market");
    std::vector<double> out(lambda.size(), 0.0);
    for (std::size_t s = 0; s < lambda.size(); ++s)
        if (lambda[s] > 0.0 && std::isfinite(logs[s])) out[s] = std::exp(std::log(lambda[s]) - theta * logs[s] - lp);
    return out;
}

double profits(std::span<const double> pi, std::span<const double> e, double theta) {
    double sales = 0.0;
    for (std::size_t d = 0; d < pi.size(); ++d) sales += pi[d] * e[d];
    return sales / (1.0 + theta);
}

ConsumerDemand consumer_demand(double income, double savings_rate, std::span<const double> kappa,
                               std::span<const double> prices) {
    require_positive(kappa, prices);
    ConsumerDemand out;
    out.quantity.resize(prices.size(), 0.0);
    double log_index = 0.0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (kappa[i] <= 0.0) continue;
        out.quantity[i] = (1.0 - savings_rate) * kappa[i] * income / prices[i];
        log_index += kappa[i] * (std::log(prices[i]) - std::log(kappa[i]));
    }
    out.cpi = std::exp(log_index);
    return out;
}

InvestmentDemand investment_demand(double income, double savings_rate, double tb_rate, std::span<const double> chi,
                                   std::span<const double> prices) {
    const double rate = savings_rate - tb_rate;
    if (rate < 0.0) {
        std::ostringstream msg;
        msg << "investment rate s - tb = " << rate << " is negative";
        throw NegativeInvestment(msg.str());
    }
    require_positive(chi, prices);
    InvestmentDemand out;
    for (std::size_t i = 0; i < prices.size(); ++i) out.price += chi[i] * prices[i];
    out.real = rate * income / out.price;
    out.quantity.resize(prices.size());
    for (std::size_t i = 0; i < prices.size(); ++i) out.quantity[i] = chi[i] * out.real;
    return out;
}

namespace {

/// Working state of one static solve. Prices are stored relative to the
/// base-year anchors; unit costs are absolute (one at the base year).
class StaticSystem {
public:
    StaticSystem(const Economy& e, const StateVector& st, const PolicyInputs& pol, const SolverOptions& opts)
        : e_(e), st_(st), pol_(pol), opts_(opts), N_(e.num_regions()), I_(e.num_sectors()) {
        const unsigned requested = opts.threads ? opts.threads : default_thread_count();
        const std::size_t cells = N_ * I_;
        const std::size_t cap = std::max<std::size_t>(1, cells / std::max<std::size_t>(1, opts.min_cells_per_thread));
        threads_ = static_cast<unsigned>(std::min<std::size_t>(requested, cap));

        log_trade_cost_ = Grid3(N_, N_, I_);
        for (std::size_t s = 0; s < N_; ++s)
            for (std::size_t d = 0; d < N_; ++d)
                for (std::size_t i = 0; i < I_; ++i) {
                    const double tau = pol.tau(s, d, i);
                    const double tm = pol.tm(s, d, i);
                    if (!(tau >= 1.0) || !(tm >= 1.0) || std::isnan(tau) || std::isnan(tm)) {
                        std::ostringstream msg;
                        msg << "policy cell " << e.regions[s] << "->" << e.regions[d] << " sector '" << e.sectors[i]
                            << "' has tau " << tau << ", tm " << tm << "; both must be >= 1";
                        throw Error(msg.str());
                    }
                    log_trade_cost_(s, d, i) = std::log(tau) + std::log(tm);
                }
        constant_.resize(I_);
        for (std::size_t i = 0; i < I_; ++i) constant_[i] = price_constant(e.theta[i], e.sigma[i]);

        wage_.resize(N_);
        rental_.resize(N_);
        cost_ = Grid2(N_, I_, 1.0);
        prel_ = Grid2(N_, I_, 1.0);
        log_phi_ = Grid2(N_, I_);
        pf_rel_ = Grid2(N_, I_, 1.0);
        pm_rel_ = Grid2(N_, I_, 1.0);
        share_ = Grid3(N_, N_, I_);
        expenditure_ = Grid2(N_, I_);
        sales_ = Grid2(N_, I_);
        income_.resize(N_);
        invest_value_.resize(N_);
    }

    std::size_t regions() const { return N_; }

    void seed(const EquilibriumSolution* warm) {
        if (warm && warm->wage.size() == N_ && warm->price.rows() == N_ && warm->price.cols() == I_) {
            wage_ = warm->wage;
            rental_ = warm->rental;
            cost_ = warm->unit_cost;
            for (std::size_t d = 0; d < N_; ++d)
                for (std::size_t i = 0; i < I_; ++i) prel_(d, i) = warm->price(d, i) / e_.base.price(d, i);
        } else {
            wage_ = e_.base.wage;
            rental_ = e_.base.rental;
        }
        normalize();
    }

    void set_factor_prices(std::span<const double> w, std::span<const double> r) {
        wage_.assign(w.begin(), w.end());
        rental_.assign(r.begin(), r.end());
    }

    /// Log factor prices stacked as (log w, log r).
    Eigen::VectorXd log_factor_prices() const {
        Eigen::VectorXd x(2 * N_);
        for (std::size_t d = 0; d < N_; ++d) {
            x[static_cast<Eigen::Index>(d)] = std::log(wage_[d]);
            x[static_cast<Eigen::Index>(N_ + d)] = std::log(rental_[d]);
        }
        return x;
    }

    void set_log_factor_prices(const Eigen::VectorXd& x) {
        for (std::size_t d = 0; d < N_; ++d) {
            wage_[d] = std::exp(x[static_cast<Eigen::Index>(d)]);
            rental_[d] = std::exp(x[static_cast<Eigen::Index>(N_ + d)]);
        }
        normalize();
    }

    /// Multiplicative update w <- w (1+z)^damp, then rescale to the numeraire.
    void update(const FactorMarketState& fm, double damp) {
        for (std::size_t d = 0; d < N_; ++d) {
            wage_[d] *= std::pow(std::max(1.0 + fm.labor_excess[d], 1e-3), damp);
            rental_[d] *= std::pow(std::max(1.0 + fm.capital_excess[d], 1e-3), damp);
        }
        normalize();
    }

    void solve_prices() {
        for (std::size_t d = 0; d < N_; ++d)
            for (std::size_t i = 0; i < I_; ++i) {
                const double fw[2] = {e_.psi_l(d, i), e_.psi_k(d, i)};
                const double fp[2] = {wage_[d] / e_.base.wage[d], rental_[d] / e_.base.rental[d]};
                pf_rel_(d, i) = ces_price(fw, fp, e_.nu[i]);
            }
        const std::size_t cells = N_ * I_;
        Grid2 next(N_, I_);
        for (std::size_t iter = 0; iter < opts_.max_inner_iter; ++iter) {
            parallel_for(cells, threads_, [&](std::size_t k) {
                const std::size_t d = k / I_;
                const std::size_t i = k % I_;
                const double pm = e_.psi_m(d, i) > 0.0 ? ces_price(e_.eta.row(d, i), prel_.row(d), e_.mu[i]) : 1.0;
                pm_rel_(d, i) = pm;
                next(d, i) = unit_cost(pf_rel_(d, i), pm, e_.psi_f(d, i), e_.psi_m(d, i), e_.rho[i]);
            });
            double change = 0.0;
            for (std::size_t k = 0; k < cells; ++k)
                change = std::max(change, std::abs(next.data()[k] / cost_.data()[k] - 1.0));
            cost_ = next;
            update_price_indices();
            if (change < opts_.inner_tol) return;
        }
        throw NoConvergence(opts_.max_inner_iter, 0.0, "price system", "inner price loop");
    }

    void update_price_indices() {
        parallel_for(N_ * I_, threads_, [&](std::size_t k) {
            const std::size_t d = k / I_;
            const std::size_t i = k % I_;
            const double theta = e_.theta[i];
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < N_; ++s) {
                const double lam = st_.lambda(s, i);
                const double lx = log_trade_cost_(s, d, i);
                if (lam > 0.0 && std::isfinite(lx))
                    top = std::max(top, std::log(lam) - theta * (lx + std::log(cost_(s, i))));
            }
            if (!std::isfinite(top)) {
                throw DivergentIndex("no source supplies sector '" + e_.sectors[i] + "' in region '" + e_.regions[d] +
                                     "'");
            }
            double sum = 0.0;
            for (std::size_t s = 0; s < N_; ++s) {
                const double lam = st_.lambda(s, i);
                const double lx = log_trade_cost_(s, d, i);
                if (lam > 0.0 && std::isfinite(lx))
                    sum += std::exp(std::log(lam) - theta * (lx + std::log(cost_(s, i))) - top);
            }
            log_phi_(d, i) = top + std::log(sum);
            const double price = constant_[i] * std::exp(-log_phi_(d, i) / theta);
            prel_(d, i) = price / e_.base.price(d, i);
        });
    }

    void compute_shares() {
        parallel_for(N_ * I_, threads_, [&](std::size_t k) {
            const std::size_t d = k / I_;
            const std::size_t i = k % I_;
            const double theta = e_.theta[i];
            for (std::size_t s = 0; s < N_; ++s) {
                const double lam = st_.lambda(s, i);
                const double lx = log_trade_cost_(s, d, i);
                share_(s, d, i) = (lam > 0.0 && std::isfinite(lx))
                                      ? std::exp(std::log(lam) - theta * (lx + std::log(cost_(s, i))) - log_phi_(d, i))
                                      : 0.0;
            }
        });
    }

    /// Solves the linear system in (e, Y) given prices and shares.
    void solve_demand() {
        const std::size_t NI = N_ * I_;
        const std::size_t dim = NI + N_;
        const std::size_t last = N_ - 1;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        auto ix = [](std::size_t k) { return static_cast<Eigen::Index>(k); };

        int_share_ = Grid3(N_, I_, I_);
        inv_share_ = Grid2(N_, I_);
        for (std::size_t d = 0; d < N_; ++d) {
            double pin = 0.0;
            for (std::size_t j = 0; j < I_; ++j) pin += e_.chi(d, j) * prel_(d, j);
            for (std::size_t j = 0; j < I_; ++j) inv_share_(d, j) = e_.chi(d, j) * prel_(d, j) / pin;
            for (std::size_t i = 0; i < I_; ++i) {
                const double tw[2] = {e_.psi_f(d, i), e_.psi_m(d, i)};
                const double tp[2] = {pf_rel_(d, i), pm_rel_(d, i)};
                const double sm = ces_shares(tw, tp, e_.rho[i])[1];
                if (sm <= 0.0) continue;
                const auto mix = ces_shares(e_.eta.row(d, i), prel_.row(d), e_.mu[i]);
                const double cost_share = e_.theta[i] / (1.0 + e_.theta[i]);
                for (std::size_t j = 0; j < I_; ++j) int_share_(d, i, j) = cost_share * sm * mix[j];
            }
        }

        for (std::size_t d = 0; d < N_; ++d) {
            for (std::size_t j = 0; j < I_; ++j) {
                const std::size_t row = d * I_ + j;
                A(ix(row), ix(row)) += 1.0;
                for (std::size_t i = 0; i < I_; ++i) {
                    const double coef = int_share_(d, i, j);
                    if (coef == 0.0) continue;
                    for (std::size_t n = 0; n < N_; ++n)
                        A(ix(row), ix(n * I_ + i)) -= coef * share_(d, n, i) / pol_.tm(d, n, i);
                }
                A(ix(row), ix(NI + d)) -= (1.0 - e_.savings_rate[d]) * e_.kappa(d, j);
                if (d != last) {
                    A(ix(row), ix(NI + d)) -= inv_share_(d, j) * (e_.savings_rate[d] - e_.tb_rate[d]);
                } else {
                    A(ix(row), ix(NI + last)) -= inv_share_(last, j) * e_.savings_rate[last];
                    for (std::size_t n = 0; n < last; ++n) A(ix(row), ix(NI + n)) -= inv_share_(last, j) * e_.tb_rate[n];
                }
            }
            const std::size_t row = NI + d;
            A(ix(row), ix(row)) += 1.0;
            for (std::size_t i = 0; i < I_; ++i) {
                const double profit_share = 1.0 / (1.0 + e_.theta[i]);
                for (std::size_t n = 0; n < N_; ++n)
                    A(ix(row), ix(n * I_ + i)) -= profit_share * share_(d, n, i) / pol_.tm(d, n, i);
                double tariff = 0.0;
                for (std::size_t s = 0; s < N_; ++s)
                    tariff += (1.0 - 1.0 / pol_.tm(s, d, i)) * share_(s, d, i);
                A(ix(row), ix(d * I_ + i)) -= tariff;
            }
            b(ix(row)) = wage_[d] * st_.labor[d] + rental_[d] * st_.capital[d];
        }

        const Eigen::VectorXd x = A.partialPivLu().solve(b);
        for (std::size_t d = 0; d < N_; ++d) {
            for (std::size_t j = 0; j < I_; ++j) expenditure_(d, j) = x(ix(d * I_ + j));
            income_[d] = x(ix(NI + d));
        }
        for (std::size_t s = 0; s < N_; ++s)
            for (std::size_t i = 0; i < I_; ++i) {
                double total = 0.0;
                for (std::size_t d = 0; d < N_; ++d) total += share_(s, d, i) / pol_.tm(s, d, i) * expenditure_(d, i);
                sales_(s, i) = total;
            }
        double tb_transfer = 0.0;
        for (std::size_t d = 0; d < last; ++d) {
            invest_value_[d] = (e_.savings_rate[d] - e_.tb_rate[d]) * income_[d];
            tb_transfer += e_.tb_rate[d] * income_[d];
        }
        invest_value_[last] = e_.savings_rate[last] * income_[last] + tb_transfer;
    }

    FactorMarketState factor_markets() const {
        FactorMarketState fm;
        fm.labor_excess.resize(N_);
        fm.capital_excess.resize(N_);
        fm.labor_supply_value.resize(N_);
        fm.capital_supply_value.resize(N_);
        for (std::size_t d = 0; d < N_; ++d) {
            double labor_demand = 0.0;
            double capital_demand = 0.0;
            const double wrel = wage_[d] / e_.base.wage[d];
            const double rrel = rental_[d] / e_.base.rental[d];
            for (std::size_t i = 0; i < I_; ++i) {
                const double tw[2] = {e_.psi_f(d, i), e_.psi_m(d, i)};
                const double tp[2] = {pf_rel_(d, i), pm_rel_(d, i)};
                const double sf = ces_shares(tw, tp, e_.rho[i])[0];
                const double fw[2] = {e_.psi_l(d, i), e_.psi_k(d, i)};
                const double fp[2] = {wrel, rrel};
                const auto split = ces_shares(fw, fp, e_.nu[i]);
                const double va = e_.theta[i] / (1.0 + e_.theta[i]) * sales_(d, i) * sf;
                labor_demand += va * split[0];
                capital_demand += va * split[1];
            }
            fm.labor_supply_value[d] = wage_[d] * st_.labor[d];
            fm.capital_supply_value[d] = rental_[d] * st_.capital[d];
            fm.labor_excess[d] = labor_demand / fm.labor_supply_value[d] - 1.0;
            fm.capital_excess[d] = capital_demand / fm.capital_supply_value[d] - 1.0;
        }
        return fm;
    }

    void evaluate() {
        solve_prices();
        compute_shares();
        solve_demand();
    }

    EquilibriumSolution assemble(const ConvergenceReport& report) const {
        EquilibriumSolution sol;
        sol.wage = wage_;
        sol.rental = rental_;
        sol.labor = st_.labor;
        sol.capital = st_.capital;
        sol.unit_cost = cost_;
        sol.price = Grid2(N_, I_);
        for (std::size_t d = 0; d < N_; ++d)
            for (std::size_t i = 0; i < I_; ++i) sol.price(d, i) = prel_(d, i) * e_.base.price(d, i);
        sol.trade_share = share_;
        sol.expenditure = expenditure_;
        sol.sales = sales_;
        sol.income = income_;
        sol.cpi.resize(N_);
        sol.inv_price.resize(N_);
        sol.investment.resize(N_);
        sol.transfers.assign(N_, 0.0);
        sol.tb_rate.resize(N_);
        sol.cons_expenditure = Grid2(N_, I_);
        sol.inv_expenditure = Grid2(N_, I_);
        sol.int_expenditure = Grid2(N_, I_);
        sol.profits = Grid2(N_, I_);
        const std::size_t last = N_ - 1;
        double tb_sum = 0.0;
        for (std::size_t d = 0; d < last; ++d) tb_sum += e_.tb_rate[d] * income_[d];
        for (std::size_t d = 0; d < N_; ++d) {
            sol.tb_rate[d] = d == last ? -tb_sum / income_[last] : e_.tb_rate[d];
            const auto consumer = consumer_demand(income_[d], e_.savings_rate[d], e_.kappa.row(d), sol.price.row(d));
            sol.cpi[d] = consumer.cpi;
            std::vector<double> chi_q(I_);
            for (std::size_t j = 0; j < I_; ++j) chi_q[j] = e_.chi(d, j) / e_.base.price(d, j);
            const auto inv = investment_demand(income_[d], e_.savings_rate[d], sol.tb_rate[d], chi_q, sol.price.row(d));
            sol.inv_price[d] = inv.price;
            sol.investment[d] = inv.real;
            for (std::size_t j = 0; j < I_; ++j) {
                sol.cons_expenditure(d, j) = consumer.quantity[j] * sol.price(d, j);
                sol.inv_expenditure(d, j) = inv.quantity[j] * sol.price(d, j);
                double intermediate = 0.0;
                for (std::size_t i = 0; i < I_; ++i) intermediate += int_share_(d, i, j) * sales_(d, i);
                sol.int_expenditure(d, j) = intermediate;
                sol.profits(d, j) = sales_(d, j) / (1.0 + e_.theta[j]);
                for (std::size_t s = 0; s < N_; ++s)
                    sol.transfers[d] += (1.0 - 1.0 / pol_.tm(s, d, j)) * share_(s, d, j) * expenditure_(d, j);
            }
        }
        sol.convergence = report;
        return sol;
    }

    double world_factor_income() const {
        double total = 0.0;
        for (std::size_t d = 0; d < N_; ++d) total += wage_[d] * st_.labor[d] + rental_[d] * st_.capital[d];
        return total;
    }

private:
    void normalize() {
        const double scale = e_.base.world_factor_income / world_factor_income();
        for (std::size_t d = 0; d < N_; ++d) {
            wage_[d] *= scale;
            rental_[d] *= scale;
        }
    }

    const Economy& e_;
    const StateVector& st_;
    const PolicyInputs& pol_;
    const SolverOptions& opts_;
    std::size_t N_;
    std::size_t I_;
    unsigned threads_ = 1;

    Grid3 log_trade_cost_;
    std::vector<double> constant_;
    std::vector<double> wage_;
    std::vector<double> rental_;
    Grid2 cost_;
    Grid2 prel_;
    Grid2 log_phi_;
    Grid2 pf_rel_;
    Grid2 pm_rel_;
    Grid3 share_;
    Grid3 int_share_;
    Grid2 inv_share_;
    Grid2 expenditure_;
    Grid2 sales_;
    std::vector<double> income_;
    std::vector<double> invest_value_;
};

void check_inputs(const Economy& e, const StateVector& st, const PolicyInputs& pol) {
    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();
    if (N == 0 || I == 0) throw InvalidEconomy("economy has no regions or sectors");
    if (st.lambda.rows() != N || st.lambda.cols() != I || st.capital.size() != N || st.labor.size() != N)
        throw InvalidEconomy("state vector does not match the economy dimensions");
    if (pol.tau.dim0() != N || pol.tau.dim1() != N || pol.tau.dim2() != I || pol.tm.dim0() != N ||
        pol.tm.dim1() != N || pol.tm.dim2() != I)
        throw InvalidEconomy("policy grids do not match the economy dimensions");
    for (std::size_t d = 0; d < N; ++d) {
        if (!(st.capital[d] > 0.0)) throw InvalidEconomy("capital of '" + e.regions[d] + "' must be positive");
        if (!(st.labor[d] > 0.0)) throw InvalidEconomy("labor of '" + e.regions[d] + "' must be positive");
    }
}

std::string market_name(const Economy& e, bool labor, std::size_t d) {
    return std::string(labor ? "labor[" : "capital[") + e.regions[d] + "]";
}

}  // namespace

FactorMarketState evaluate_factor_markets(const Economy& e, const StateVector& st, const PolicyInputs& pol,
                                          std::span<const double> wage, std::span<const double> rental,
                                          const SolverOptions& opts) {
    check_inputs(e, st, pol);
    StaticSystem sys(e, st, pol, opts);
    sys.set_factor_prices(wage, rental);
    sys.evaluate();
    return sys.factor_markets();
}

EquilibriumSolution solve_static(const Economy& e, const StateVector& st, const PolicyInputs& pol,
                                 const SolverOptions& opts, const EquilibriumSolution* warm_start) {
    check_inputs(e, st, pol);
    if (!(opts.tol > 0.0)) throw Error("solver tolerance must be positive");
    StaticSystem sys(e, st, pol, opts);
    sys.seed(warm_start);

    ConvergenceReport report;
    double damp = opts.damping;
    double previous = std::numeric_limits<double>::infinity();
    std::size_t improving = 0;
    constexpr std::size_t kAndersonMemory = 5;
    std::deque<Eigen::VectorXd> d_f, d_g;
    constexpr std::size_t kMaxRollbacks = 50;
    Eigen::VectorXd f_prev, g_prev;
    bool accelerate = true;
    bool mixed_last = false;
    std::size_t rollbacks = 0;
    for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
        sys.evaluate();
        const FactorMarketState fm = sys.factor_markets();
        double residual = 0.0;
        double value_sum = 0.0;
        for (std::size_t d = 0; d < sys.regions(); ++d) {
            value_sum += fm.labor_excess[d] * fm.labor_supply_value[d] + fm.capital_excess[d] * fm.capital_supply_value[d];
            if (std::abs(fm.labor_excess[d]) > residual) {
                residual = std::abs(fm.labor_excess[d]);
                report.worst_market = market_name(e, true, d);
            }
            if (std::abs(fm.capital_excess[d]) > residual) {
                residual = std::abs(fm.capital_excess[d]);
                report.worst_market = market_name(e, false, d);
            }
        }
        report.iterations = iter;
        report.residual = residual;
        report.walras_residual = std::abs(value_sum) / e.base.world_factor_income;
        if (!std::isfinite(residual)) break;
        if (residual <= opts.tol) {
            report.converged = true;
            return sys.assemble(report);
        }
        const bool rose = residual > previous;
        if (rose && mixed_last) {
            // Back off to the plain damped point and restart the history.
            sys.set_log_factor_prices(g_prev);
            d_f.clear();
            d_g.clear();
            f_prev.resize(0);
            mixed_last = false;
            if (++rollbacks >= kMaxRollbacks) accelerate = false;
            continue;
        }
        if (rose) {
            damp = std::max(damp * 0.5, 1e-4);
            improving = 0;
        } else if (++improving >= 8 && damp < opts.damping) {
            damp = std::min(opts.damping, damp * 1.5);
            improving = 0;
        }
        previous = residual;

        // Anderson mixing over the last few damped steps, restarted whenever
        // the residual rises.
        const Eigen::VectorXd x = sys.log_factor_prices();
        sys.update(fm, damp);
        const Eigen::VectorXd g = sys.log_factor_prices();
        const Eigen::VectorXd f = g - x;
        if (rose) {
            d_f.clear();
            d_g.clear();
        } else if (f_prev.size() == f.size()) {
            d_f.push_back(f - f_prev);
            d_g.push_back(g - g_prev);
            if (d_f.size() > kAndersonMemory) {
                d_f.pop_front();
                d_g.pop_front();
            }
        }
        f_prev = f;
        g_prev = g;
        mixed_last = false;
        if (accelerate && !d_f.empty()) {
            const auto m = static_cast<Eigen::Index>(d_f.size());
            Eigen::MatrixXd F(f.size(), m), G(f.size(), m);
            for (Eigen::Index k = 0; k < m; ++k) {
                F.col(k) = d_f[static_cast<std::size_t>(k)];
                G.col(k) = d_g[static_cast<std::size_t>(k)];
            }
            const Eigen::VectorXd gamma = F.colPivHouseholderQr().solve(f);
            const Eigen::VectorXd mixed = g - G * gamma;
            if (mixed.allFinite()) {
                sys.set_log_factor_prices(mixed);
                mixed_last = true;
            }
        }
    }
    throw NoConvergence(report.iterations, report.residual, report.worst_market, "static equilibrium");
}

}  // namespace tradediff
