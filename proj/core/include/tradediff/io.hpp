#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tradediff/calibration.hpp"
#include "tradediff/diffusion_analysis.hpp"
#include "tradediff/dynamics.hpp"
#include "tradediff/economy.hpp"
#include "tradediff/log.hpp"
#include "tradediff/scenario.hpp"
#include "tradediff/static_eq.hpp"

namespace tradediff {

namespace fs = std::filesystem;

// ---- numbers -------------------------------------------------------------

/// Shortest decimal text that round-trips; digits > 0 rounds to that many
/// significant digits. Infinity is written as "inf".
std::string format_double(double v, int digits = 0);

/// Strict parse of a decimal number ("inf" allowed only when allow_inf).
double parse_double(std::string_view text, const std::string& context, bool allow_inf = false);

// ---- CSV -----------------------------------------------------------------

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws ParseError naming the file when absent.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    /// "file:line" for row r (line 1 is the header).
    std::string where(std::size_t r) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// ---- economy and flows ---------------------------------------------------

std::string economy_to_json(const Economy& e);
Economy economy_from_json(std::string_view text, const std::string& source = "economy");
Economy load_economy(const fs::path& path);
void save_economy(const Economy& e, const fs::path& path);

/// Reads trade.csv, factors.csv, finaldemand.csv, investment.csv and the
/// optional intermediates.csv and tariffs.csv. Identifier order comes from
/// the given lists, or from first appearance in factors.csv.
BaselineFlows load_flows(const fs::path& dir, const std::vector<std::string>& regions = {},
                         const std::vector<std::string>& sectors = {});
void save_flows(const BaselineFlows& flows, const fs::path& dir);

struct CalibrationConfig {
    CalibrationParameters params;
    std::vector<std::string> regions;
    std::vector<std::string> sectors;
    std::optional<fs::path> productivity;  ///< relative paths resolve against the config file
    std::optional<fs::path> labor;
    std::optional<fs::path> population;
    bool rebalance_profits = false;
    /// Parameter block (theta, sigma, nu, rho, mu, delta, k0), each a scalar,
    /// a list in identifier order, or an object keyed by identifier.
    std::string parameters_json = "{}";
};

CalibrationConfig load_calibration_config(const fs::path& path);

/// Reads the config and flows, optionally rebalances profits, and calibrates.
Economy calibrate_from_files(const fs::path& flows_dir, const CalibrationConfig& config);

std::vector<ProductivityRecord> load_productivity(const fs::path& path);
std::vector<LaborAnchor> load_labor_anchors(const fs::path& path);
std::vector<HistoricalRecord> load_historical(const fs::path& path);
std::vector<VoteRecord> load_votes(const fs::path& path);

/// Published moment rows: beta, gdp_mean, gdp_sd, gdppc_mean, gdppc_sd.
std::vector<std::pair<double, MomentSet>> load_moment_table(const fs::path& path);

// ---- scenarios and run configuration -------------------------------------

PolicyShock shock_from_json(std::string_view text, const std::string& source = "scenario");
std::string shock_to_json(const PolicyShock& shock);
PolicyShock load_shock(const fs::path& path);

struct RunConfig {
    std::optional<fs::path> economy;
    std::optional<fs::path> flows;
    std::optional<fs::path> scenario;
    std::optional<fs::path> historical;
    SolverOptions solver;
    fs::path output_dir = ".";
    unsigned long long seed = 20240101ULL;
    Verbosity verbosity = Verbosity::Warn;
};

/// Relative paths resolve against `base` when it is non-empty. load_run_config
/// passes the config file's directory.
RunConfig run_config_from_json(std::string_view text, const std::string& source = "config",
                               const fs::path& base = {});
RunConfig load_run_config(const fs::path& path);

// ---- solutions, paths and reports ----------------------------------------

std::string solution_to_json(const Economy& e, const EquilibriumSolution& sol);

struct PathRecord {
    std::size_t period = 0;
    int year = 0;
    std::string variable;
    std::string region;
    std::string sector;
    double value = 0.0;
};

/// Long-format rows: period, year, variable, region, sector, value.
std::vector<PathRecord> path_records(const Economy& e, const SimulationPath& path);
void write_path_csv(const Economy& e, const SimulationPath& path, const fs::path& file, int digits = 0);
void write_path_json(const Economy& e, const SimulationPath& path, const fs::path& file);
std::vector<PathRecord> read_path_csv(const fs::path& file);

/// Region x period table of one variable (sector-free rows only).
std::string path_variable_table(const std::vector<PathRecord>& records, const std::string& variable, int digits = 0);

/// period, source, dest, sector, value dumps of trade shares and trade values.
void write_trade_dumps(const Economy& e, const SimulationPath& path, const fs::path& dir, int digits = 0);

struct EmitOptions {
    int digits = 0;  ///< 0 keeps full round-trip precision
};

/// report.csv (variable, region, sector, value), series.csv and summary.json.
void emit_report(const ComparisonReport& report, const fs::path& dir, const EmitOptions& opts = {});
ComparisonReport parse_report(const fs::path& dir);
std::string report_entries_csv(const ComparisonReport& report, int digits = 0);
/// Real-income table: region, value.
std::string welfare_table_csv(const ComparisonReport& report, int digits = 0);

DiffusionProblem diffusion_problem_from_json(std::string_view text, const std::string& source = "problem");
std::string surface_csv(const FigureSurface& surface, int digits = 0);

}  // namespace tradediff
