#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tradediff/dynamics.hpp"
#include "tradediff/economy.hpp"
#include "tradediff/grid.hpp"

namespace tradediff {

struct ProductivityRecord {
    std::string region;
    std::string sector;
    double value = 0.0;
};

/// lambda0 proportional to productivity, scaled so every sector's mean across
/// regions equals one. Throws MissingCell for absent (region, sector) pairs.
Grid2 lambda0_from_productivity(const std::vector<std::string>& regions, const std::vector<std::string>& sectors,
                                const std::vector<ProductivityRecord>& records);

struct RebalanceOptions {
    bool shift_capital = true;   ///< step 1: move a share of capital payments to profit
    double shifted_share = 0.5;
    double tol = 1e-6;
    std::size_t max_passes = 50;
};

/// Two-step profit-income rebalancing. The profit of each (region, sector)
/// reaches sales/(1+theta); capital payments absorb the difference, so gross
/// output and every other flow are untouched. Throws InfeasibleTarget with
/// the offending cells when capital plus profit cannot cover the target.
BaselineFlows profit_rebalance(const BaselineFlows& flows, const std::vector<double>& theta,
                               const RebalanceOptions& opts = {});

/// Cross-region moments of average annual growth rates, in percent.
struct MomentSet {
    double gdp_mean = 0.0;
    double gdp_sd = 0.0;
    double gdppc_mean = 0.0;
    double gdppc_sd = 0.0;
};

/// Moments from period x region series. Average annual growth is the
/// compound rate between the first and last period; sd is the sample sd.
MomentSet growth_moments(const Grid2& gdp, const Grid2& population);

/// Moments of real income and real income per capita along a path.
MomentSet growth_moments(const SimulationPath& path, const Economy& e);

struct HistoricalRecord {
    std::string region;
    int year = 0;
    double gdp = 0.0;
    double population = 0.0;
};

/// Moments over [first_year, last_year] for the listed regions.
MomentSet growth_moments(const std::vector<HistoricalRecord>& records, const std::vector<std::string>& regions,
                         int first_year, int last_year);

struct LossComponents {
    double gdp = 0.0;    ///< sum over mean and sd of squared GDP gaps
    double gdppc = 0.0;  ///< same for GDP per capita
    double loss = 0.0;   ///< w * gdppc + (1 - w) * gdp
};

LossComponents beta_loss_components(const MomentSet& sim, const MomentSet& hist, double w);
double beta_loss(const MomentSet& sim, const MomentSet& hist, double w);

struct LossRow {
    double beta = 0.0;
    bool ok = false;
    std::string error;
    MomentSet moments;
    LossComponents components;
};

struct BetaSearchResult {
    double best_beta = 0.0;
    std::vector<LossRow> table;
};

/// Arg-min over precomputed moment rows; ties go to the smaller beta.
BetaSearchResult select_beta(const std::vector<std::pair<double, MomentSet>>& rows, const MomentSet& hist, double w);

struct BetaSearchOptions {
    SimulationOptions simulation;
    std::size_t horizon = 0;  ///< 0: the economy's horizon
    unsigned threads = 0;     ///< 0: default_thread_count()
};

/// Simulates every grid point (in parallel) and picks the arg-min. Failed
/// points are recorded in the table and skipped.
BetaSearchResult beta_grid_search(const Economy& e, const MomentSet& hist, const std::vector<double>& grid, double w,
                                  const BetaSearchOptions& opts = {});

/// Inclusive grid lo, lo+step, ..., hi (hi included when within step/1000).
std::vector<double> make_grid(double lo, double hi, double step);

/// Bisection on alpha0 so the baseline cross-region mean of real GDP growth
/// (percent per year) hits the target.
double calibrate_alpha_scale(const Economy& e, double target_mean_growth, std::size_t horizon,
                             const SimulationOptions& opts = {}, double growth_tol = 1e-4);

/// kappa = 1 - sum_{m != n} P_mn / sum_{m != n} p_m p_n.
double fps_index(const Grid2& joint, std::span<const double> marginals);

struct SimilarityMatrix {
    std::vector<std::string> ids;
    Grid2 values;
};

struct VoteRecord {
    std::string country;
    std::string vote;
    std::string position;
};

/// Pairwise index over commonly cast votes, with marginals pooled across the
/// pair; the diagonal is one.
SimilarityMatrix similarity_from_votes(const std::vector<VoteRecord>& votes);

enum class Bloc { West, East };

const char* to_string(Bloc b);
Bloc bloc_from_string(const std::string& s);

struct BlocAssignment {
    std::string region;
    double index = 0.0;  ///< (kappa with west - kappa with east), scaled into [-1, 1]
    Bloc bloc = Bloc::West;
};

/// Ranks regions by their differential similarity to the two anchors;
/// positive indices join the West. Sorted by decreasing index.
std::vector<BlocAssignment> assign_blocs(const SimilarityMatrix& sim, const std::string& west_anchor,
                                         const std::string& east_anchor);

}  // namespace tradediff
