#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tradediff/grid.hpp"

namespace tradediff {

/// Base-year anchors of the calibrated-share form. Relative prices p/p0,
/// w/w0 and r/r0 enter the CES aggregators; at the base year all unit costs
/// equal one.
struct BaseAnchors {
    std::vector<double> wage;         ///< w0 per region
    std::vector<double> rental;       ///< r0 per region
    Grid2 price;                      ///< p0 per region x sector
    std::vector<double> income;       ///< Y0 per region
    double world_factor_income = 0.0; ///< numeraire: sum of w l + r k
};

/// Immutable model definition. Grids are indexed by position; identifiers
/// are opaque strings whose order is fixed at load.
struct Economy {
    std::vector<std::string> regions;
    std::vector<std::string> sectors;
    int base_year = 0;
    std::size_t horizon = 1;

    std::vector<double> theta;  ///< per sector
    std::vector<double> sigma;
    std::vector<double> nu;
    std::vector<double> rho;
    std::vector<double> mu;

    Grid2 kappa;  ///< region x sector
    Grid3 eta;    ///< region x using sector x supplying sector
    Grid2 psi_f;
    Grid2 psi_m;
    Grid2 psi_k;
    Grid2 psi_l;
    Grid2 chi;

    std::vector<double> savings_rate;  ///< per region
    std::vector<double> tb_rate;
    std::vector<double> delta;

    Grid3 tau0;  ///< source x destination x sector
    Grid3 tm0;

    double beta = 0.0;
    double alpha0 = 0.0;
    double alpha_growth = 0.0;

    Grid2 lambda0;           ///< region x sector
    std::vector<double> k0;  ///< per region
    Grid2 l_path;            ///< period x region
    Grid2 population;        ///< period x region; empty means "same as labor"

    BaseAnchors base;

    std::size_t num_regions() const { return regions.size(); }
    std::size_t num_sectors() const { return sectors.size(); }
    std::size_t region_index(const std::string& id) const;  ///< throws UnknownRegion
    std::size_t sector_index(const std::string& id) const;  ///< throws Error
    std::optional<std::size_t> find_region(const std::string& id) const;
    std::optional<std::size_t> find_sector(const std::string& id) const;

    /// Population in period t, falling back to the labor path.
    double population_at(std::size_t t, std::size_t d) const;
};

/// One period's endogenous state.
struct StateVector {
    Grid2 lambda;                 ///< region x sector
    std::vector<double> capital;  ///< per region
    std::vector<double> labor;    ///< per region
    double alpha = 0.0;
    std::size_t period = 0;

    static StateVector initial(const Economy& e);
};

/// A single failed invariant, with the offending field, indices and the
/// size of the deviation.
struct Violation {
    std::string field;
    std::vector<std::size_t> index;
    double deviation = 0.0;
    std::string message;
};

std::string describe(const Violation& v);

/// Reports every failed Economy invariant; never throws.
std::vector<Violation> validate_economy(const Economy& e);

/// Base-year social accounting snapshot. Trade values are at destination
/// (purchaser) prices, so they include tariff revenue.
struct BaselineFlows {
    std::vector<std::string> regions;
    std::vector<std::string> sectors;
    Grid3 trade;           ///< source x destination x sector
    Grid3 tariff_revenue;  ///< source x destination x sector
    Grid2 labor;           ///< region x sector
    Grid2 capital;
    Grid2 profit;
    Grid3 intermediates;   ///< region x using sector x supplying sector
    Grid2 consumption;     ///< region x sector (purchases by the household)
    Grid2 investment;

    static BaselineFlows zeros(std::vector<std::string> regions, std::vector<std::string> sectors);

    /// Producer revenue of (s, i): sum over destinations of trade net of tariffs.
    double sales(std::size_t s, std::size_t i) const;
    /// Total purchases by destination d of sector j goods.
    double absorption(std::size_t d, std::size_t j) const;
    /// Household income: factor payments, profits and tariff revenue collected.
    double income(std::size_t d) const;
};

/// Balance identities of the flows, each relative deviation above rel_tol
/// reported as a violation. When theta is given, the profit share target
/// profit = sales/(1+theta) is checked as well.
std::vector<Violation> check_flows(const BaselineFlows& flows, double rel_tol = 1e-6,
                                   const std::vector<double>* theta = nullptr);

struct CalibrationParameters {
    std::vector<double> theta;
    std::vector<double> sigma;  ///< default 3 for every sector
    std::vector<double> nu;     ///< default 1 (Cobb-Douglas factors)
    std::vector<double> rho;    ///< default 0 (Leontief)
    std::vector<double> mu;     ///< default 0 (Leontief)
    std::vector<double> delta;  ///< per region, default 0.05
    double beta = 0.0;
    double alpha0 = 0.0;
    double alpha_growth = 0.0;
    std::size_t horizon = 1;
    int base_year = 0;
    Grid2 lambda0;               ///< empty: all ones
    std::vector<double> k0;      ///< empty: investment / delta
    Grid2 l_path;                ///< empty: constant, base wage of one
    Grid2 population;
};

/// Reads calibrated shares off the flows. Throws UnbalancedFlows when any
/// balance identity or the profit share target fails beyond 1e-6 relative.
Economy calibrate_shares(const BaselineFlows& flows, const CalibrationParameters& params);

}  // namespace tradediff
