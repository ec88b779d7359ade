#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradediff/calibration.hpp"
#include "tradediff/economy.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff {

enum class ShockKind { Iceberg, Tariff };

const char* to_string(ShockKind k);
ShockKind shock_kind_from_string(const std::string& s);

struct PolicyShock {
    std::string name;
    ShockKind kind = ShockKind::Iceberg;
    std::map<std::string, Bloc> blocs;
    double magnitude_pp = 160.0;       ///< percentage points added to tau or tm
    std::vector<std::string> sectors;  ///< empty: every sector
    std::optional<int> start_year;     ///< empty: first year after the base year
    bool permanent = true;
};

/// Period index at which the shock starts for this economy.
std::size_t shock_start_period(const Economy& e, const PolicyShock& shock);

/// Cross-bloc cells in scope get magnitude/100 added to tau (iceberg) or tm
/// (tariff) from the start period on (only at the start period when the
/// shock is temporary). Every economy region must have a bloc; bloc entries
/// for regions outside the economy are ignored.
PolicyInputs apply_shock(const Economy& e, const PolicyInputs& pol, const PolicyShock& shock, std::size_t t);

/// sum_{t>=start} (x'_t - x_t) / sum_{t>=start} x_t. Throws ZeroBaseline.
double cumulative_change(std::span<const double> shocked, std::span<const double> baseline, std::size_t start);

struct ExperimentOptions {
    bool diffusion = true;
    bool single_sector = false;
    std::map<std::string, Bloc> bloc_overrides;
    std::vector<std::string> anchors{"usa", "chn"};
    SolverOptions solver;
    std::size_t horizon = 0;  ///< 0: the economy's horizon
};

struct ReportEntry {
    std::string variable;
    std::string region;
    std::string sector;  ///< empty when the variable has no sector
    double value = 0.0;

    bool operator==(const ReportEntry&) const = default;
};

struct SeriesRecord {
    std::string run;  ///< "baseline" or "shock"
    std::string variable;
    std::string region;
    std::string sector;
    std::size_t period = 0;
    double value = 0.0;

    bool operator==(const SeriesRecord&) const = default;
};

struct ComparisonReport {
    std::string scenario;
    bool diffusion = true;
    bool single_sector = false;
    int base_year = 0;
    std::size_t horizon = 0;
    std::size_t start = 0;
    std::vector<ReportEntry> entries;
    std::vector<SeriesRecord> series;

    /// Cumulative change for (variable, region, sector); throws when absent.
    double value(const std::string& variable, const std::string& region, const std::string& sector = {}) const;

    bool operator==(const ComparisonReport&) const = default;
};

/// Paired baseline and shocked simulations sharing every other input; both
/// run concurrently.
ComparisonReport run_experiment(const Economy& e, const PolicyShock& shock, const ExperimentOptions& opts = {});

/// Flows implied by a solved period: trade at purchaser prices, factor,
/// profit and intermediate payments, final demand.
BaselineFlows flows_from_solution(const Economy& e, const PolicyInputs& pol, const EquilibriumSolution& sol);

/// Sums every sector of the flows into one sector.
BaselineFlows aggregate_sectors(const BaselineFlows& flows, const std::string& label);

/// One-sector economy built from the sector sums of the baseline solution,
/// with an expenditure-weighted theta and sales-weighted lambda, sigma, nu,
/// rho and mu.
Economy collapse_to_single_sector(const Economy& e, const SolverOptions& opts = {});

}  // namespace tradediff
