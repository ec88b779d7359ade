#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tradediff/calibration.hpp"
#include "tradediff/diffusion_analysis.hpp"
#include "tradediff/dynamics.hpp"
#include "tradediff/economy.hpp"
#include "tradediff/errors.hpp"
#include "tradediff/io.hpp"
#include "tradediff/log.hpp"
#include "tradediff/parallel.hpp"
#include "tradediff/scenario.hpp"
#include "tradediff/static_eq.hpp"

#ifndef TRADEDIFF_DEFAULT_DATA_DIR
#define TRADEDIFF_DEFAULT_DATA_DIR "data"
#endif

namespace tradediff::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

fs::path data_dir() {
    if (const char* env = std::getenv("TRADEDIFF_DATA_DIR"); env && *env) return env;
    return TRADEDIFF_DEFAULT_DATA_DIR;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(data_dir() / "presets", ec))
        if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::string join(const std::vector<std::string>& items, const char* sep = ", ") {
    std::string s;
    for (const auto& item : items) s += (s.empty() ? "" : sep) + item;
    return s;
}

PolicyShock load_preset(const std::string& name) {
    const fs::path file = data_dir() / "presets" / (name + ".json");
    if (!fs::exists(file)) throw UsageError("unknown preset '" + name + "' (available: " + join(preset_names()) + ")");
    return load_shock(file);
}

/// "lo:hi:step" or a comma-separated list of values.
std::vector<double> parse_grid(const std::string& text) {
    auto number = [&](const std::string& s) { return parse_double(s, "--grid"); };
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw UsageError("--grid expects lo:hi:step, got '" + text + "'");
        const double lo = number(parts[0]), hi = number(parts[1]), step = number(parts[2]);
        if (!(step > 0.0) || hi < lo) throw UsageError("--grid needs lo <= hi and a positive step");
        return make_grid(lo, hi, step);
    }
    std::vector<double> values;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) values.push_back(number(part));
    if (values.empty()) throw UsageError("--grid is empty");
    return values;
}

std::pair<int, int> parse_year_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw UsageError("--years expects first:last, got '" + text + "'");
    int a = 0, b = 0;
    const std::string first = text.substr(0, colon), last = text.substr(colon + 1);
    auto [p1, e1] = std::from_chars(first.data(), first.data() + first.size(), a);
    auto [p2, e2] = std::from_chars(last.data(), last.data() + last.size(), b);
    if (e1 != std::errc{} || e2 != std::errc{} || p1 != first.data() + first.size() ||
        p2 != last.data() + last.size() || b <= a)
        throw UsageError("--years expects first:last with first < last, got '" + text + "'");
    return {a, b};
}

bool on_off(const std::string& v) { return v == "on"; }

void emit(const std::string& text, const std::string& file, std::ostream& out) {
    if (file.empty()) {
        out << text;
    } else {
        const fs::path p = file;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_text(p, text);
    }
}

MomentSet read_target_moments(const fs::path& file) {
    const CsvTable t = read_csv(file);
    if (t.rows.size() != 1) throw ParseError(t.source + ": expected exactly one row of moments");
    auto cell = [&](const char* name) { return parse_double(t.rows[0][t.column(name)], t.where(0) + ": " + name); };
    return {cell("gdp_mean"), cell("gdp_sd"), cell("gdppc_mean"), cell("gdppc_sd")};
}

struct EconomySource {
    std::string economy;
    std::string flows;
    std::string calibration;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--economy", economy, "Calibrated economy JSON")->check(CLI::ExistingFile);
        cmd->add_option("--flows", flows, "Directory of base-year flow CSVs (calibrated on the fly)")
            ->check(CLI::ExistingDirectory);
        cmd->add_option("--calibration", calibration, "Calibration config for --flows (default <flows>/calibration.json)")
            ->check(CLI::ExistingFile);
    }
    bool given() const { return !economy.empty() || !flows.empty(); }
};

struct Session {
    std::ostream& out;
    std::ostream& err;
    RunConfig run;

    std::optional<Economy> economy(const EconomySource& src, bool required = true) const {
        std::string economy_file = src.economy, flows_dir = src.flows;
        if (economy_file.empty() && flows_dir.empty()) {
            if (run.economy) economy_file = run.economy->string();
            else if (run.flows) flows_dir = run.flows->string();
        }
        if (!economy_file.empty()) return load_economy(economy_file);
        if (!flows_dir.empty()) {
            fs::path cfg = src.calibration.empty() ? fs::path(flows_dir) / "calibration.json" : fs::path(src.calibration);
            if (!fs::exists(cfg)) throw UsageError("--flows needs a calibration config; pass --calibration");
            return calibrate_from_files(flows_dir, load_calibration_config(cfg));
        }
        if (required) throw UsageError("an economy is required: pass --economy or --flows (or set one in --config)");
        return std::nullopt;
    }

    void require_valid(const Economy& e) const {
        const auto violations = validate_economy(e);
        if (violations.empty()) return;
        for (const auto& v : violations) err << "  " << describe(v) << '\n';
        throw InvalidEconomy(std::to_string(violations.size()) + " economy invariant violation(s)");
    }

    fs::path output_dir(const std::string& flag) const { return flag.empty() ? run.output_dir : fs::path(flag); }
};

// ---- validate --------------------------------------------------------------

struct ValidateCmd {
    EconomySource src;
    std::string scenario;
    double flow_tol = 1e-6;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("validate", "Check an economy, flow directory or scenario for invariant violations");
        src.add_to(cmd);
        cmd->add_option("--scenario", scenario, "Scenario JSON to check against the economy")->check(CLI::ExistingFile);
        cmd->add_option("--flow-tol", flow_tol, "Relative tolerance for flow balance identities")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }

    int run(Session& s) const {
        std::vector<Violation> violations;
        std::optional<Economy> e;
        if (!src.flows.empty() && src.economy.empty()) {
            violations = check_flows(load_flows(src.flows), flow_tol);
            const bool has_config = !src.calibration.empty() || fs::exists(fs::path(src.flows) / "calibration.json");
            if (violations.empty() && has_config) e = s.economy(src);
        } else {
            e = s.economy(src, scenario.empty());
        }
        if (e) {
            const auto more = validate_economy(*e);
            violations.insert(violations.end(), more.begin(), more.end());
        }
        if (!scenario.empty()) {
            const PolicyShock shock = load_shock(scenario);
            if (e && violations.empty()) apply_shock(*e, PolicyInputs::baseline(*e), shock, shock_start_period(*e, shock));
        }
        for (const auto& v : violations) s.out << describe(v) << '\n';
        s.out << violations.size() << " violations\n";
        return violations.empty() ? kOk : kDomainError;
    }
};

// ---- calibrate ---------------------------------------------------------------

struct CalibrateCmd {
    std::string flows;
    std::string calibration;
    std::string out;
    std::optional<double> growth_target;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("calibrate", "Calibrate an economy from base-year flows");
        cmd->add_option("--flows", flows, "Directory of base-year flow CSVs")->required()->check(CLI::ExistingDirectory);
        cmd->add_option("--calibration", calibration, "Calibration config (default <flows>/calibration.json)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "Economy JSON to write")->required();
        cmd->add_option("--growth-target", growth_target,
                        "Rescale alpha0 so mean baseline real GDP growth hits this many percent per year");
    }

    int run(Session& s) const {
        const fs::path cfg_file = calibration.empty() ? fs::path(flows) / "calibration.json" : fs::path(calibration);
        if (!fs::exists(cfg_file)) throw UsageError("calibration config '" + cfg_file.string() + "' not found");
        Economy e = calibrate_from_files(flows, load_calibration_config(cfg_file));
        s.require_valid(e);
        const EquilibriumSolution base =
            solve_static(e, StateVector::initial(e), PolicyInputs::baseline(e), s.run.solver);
        s.out << "base year " << e.base_year << ": " << base.convergence.iterations << " iterations, residual "
              << format_double(base.convergence.residual, 3) << '\n';
        if (growth_target) {
            SimulationOptions sim;
            sim.solver = s.run.solver;
            e.alpha0 = calibrate_alpha_scale(e, *growth_target, e.horizon, sim);
            s.out << "alpha0 = " << format_double(e.alpha0, 8) << '\n';
        }
        save_economy(e, out);
        s.out << "wrote " << out << '\n';
        return kOk;
    }
};

// ---- calibrate-beta ------------------------------------------------------------

struct CalibrateBetaCmd {
    EconomySource src;
    std::string moments;
    std::string grid = "0.40:0.50:0.01";
    double weight = 0.5;
    std::string target;
    std::string historical;
    std::string years;
    std::size_t horizon = 0;
    std::string out;
    CLI::Option* grid_opt = nullptr;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("calibrate-beta", "Pick the diffusion parameter beta by matching growth moments");
        src.add_to(cmd);
        cmd->add_option("--moments", moments, "Precomputed simulated moments per beta (beta,gdp_mean,...)")
            ->check(CLI::ExistingFile);
        grid_opt = cmd->add_option("--grid", grid, "Beta grid, lo:hi:step or a comma list")->capture_default_str();
        cmd->add_option("--weight", weight, "Weight on the GDP-per-capita moments")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--target", target, "Historical moments CSV (one row)")->check(CLI::ExistingFile);
        cmd->add_option("--historical", historical, "Historical series CSV (region,year,gdp,population)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--years", years, "Year window first:last for --historical");
        cmd->add_option("--horizon", horizon, "Simulated periods per grid point (default: the economy's horizon)");
        cmd->add_option("--out", out, "Write the loss table here instead of stdout");
    }

    int run(Session& s) const {
        if (!target.empty() && !historical.empty()) throw UsageError("pass only one of --target and --historical");
        const bool simulate_grid = src.given() || (moments.empty() && (s.run.economy || s.run.flows));
        if (moments.empty() == !simulate_grid) throw UsageError("pass either --moments or an economy");
        const std::optional<Economy> e = simulate_grid ? s.economy(src) : std::nullopt;

        MomentSet hist;
        std::string hist_file = historical;
        if (hist_file.empty() && target.empty() && s.run.historical) hist_file = s.run.historical->string();
        if (!target.empty()) {
            hist = read_target_moments(target);
        } else if (!hist_file.empty()) {
            const auto records = load_historical(hist_file);
            std::vector<std::string> regions;
            if (e) {
                regions = e->regions;
            } else {
                for (const auto& r : records)
                    if (std::find(regions.begin(), regions.end(), r.region) == regions.end()) regions.push_back(r.region);
            }
            int first = 0, last = 0;
            if (!years.empty()) {
                std::tie(first, last) = parse_year_range(years);
            } else {
                if (records.empty()) throw ParseError(hist_file + ": no records");
                const auto [lo, hi] = std::minmax_element(records.begin(), records.end(),
                                                          [](const auto& a, const auto& b) { return a.year < b.year; });
                first = lo->year;
                last = hi->year;
            }
            hist = growth_moments(records, regions, first, last);
        } else {
            throw UsageError("historical moments are required: pass --target or --historical");
        }

        BetaSearchResult result;
        if (e) {
            BetaSearchOptions opts;
            opts.simulation.solver = s.run.solver;
            opts.horizon = horizon;
            opts.threads = s.run.solver.threads;
            result = beta_grid_search(*e, hist, parse_grid(grid), weight, opts);
        } else {
            auto rows = load_moment_table(moments);
            if (grid_opt->count() > 0) {
                const auto keep = parse_grid(grid);
                std::erase_if(rows, [&](const auto& row) {
                    return std::none_of(keep.begin(), keep.end(), [&](double b) { return std::abs(b - row.first) < 1e-9; });
                });
            }
            if (rows.empty()) throw CalibrationError("no moment rows inside the requested grid");
            result = select_beta(rows, hist, weight);
        }

        std::ostringstream table;
        table << "beta,gdp_mean,gdp_sd,gdppc_mean,gdppc_sd,gdp,gdppc,loss,status\n";
        for (const auto& row : result.table) {
            table << format_double(row.beta, 6);
            if (row.ok) {
                for (double v : {row.moments.gdp_mean, row.moments.gdp_sd, row.moments.gdppc_mean, row.moments.gdppc_sd,
                                 row.components.gdp, row.components.gdppc, row.components.loss})
                    table << ',' << format_double(v, 10);
                table << ",ok\n";
            } else {
                table << ",,,,,,,,\"" << row.error << "\"\n";
            }
        }
        emit(table.str(), out, s.out);
        s.out << "best_beta," << format_double(result.best_beta, 6) << '\n';
        return kOk;
    }
};

// ---- assign-blocs ------------------------------------------------------------

struct AssignBlocsCmd {
    std::string votes;
    std::string west = "usa";
    std::string east = "chn";
    std::string out;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("assign-blocs", "Rank regions by foreign-policy similarity to two anchors");
        cmd->add_option("--votes", votes, "Vote records CSV (country,vote,position)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--west", west, "West anchor")->capture_default_str();
        cmd->add_option("--east", east, "East anchor")->capture_default_str();
        cmd->add_option("--out", out, "Also write a {\"blocs\": ...} JSON map here");
    }

    int run(Session& s) const {
        const auto ranking = assign_blocs(similarity_from_votes(load_votes(votes)), west, east);
        s.out << "region,index,bloc\n";
        json map = json::object();
        for (const auto& a : ranking) {
            s.out << a.region << ',' << format_double(a.index, 10) << ',' << to_string(a.bloc) << '\n';
            map[a.region] = to_string(a.bloc);
        }
        if (!out.empty()) write_text(out, json{{"blocs", map}}.dump(2) + "\n");
        return kOk;
    }
};

// ---- simulate ------------------------------------------------------------------

struct SimulateCmd {
    EconomySource src;
    std::size_t horizon = 0;
    std::string diffusion = "on";
    std::string out;
    std::string format = "csv";
    bool trade = false;
    int digits = 0;
    std::string scenario;
    std::string preset;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("simulate", "Run the recursive dynamic path and write it to <out>/path.csv");
        src.add_to(cmd);
        cmd->add_option("--horizon", horizon, "Number of periods (default: the economy's horizon)");
        cmd->add_option("--diffusion", diffusion, "Idea diffusion on or off")
            ->check(CLI::IsMember({"on", "off"}))
            ->capture_default_str();
        cmd->add_option("--out", out, "Output directory (default: the config's output_dir or .)");
        cmd->add_option("--format", format, "Path file format")
            ->check(CLI::IsMember({"csv", "json", "both"}))
            ->capture_default_str();
        cmd->add_flag("--trade", trade, "Also write trade_shares.csv and trade_values.csv");
        cmd->add_option("--digits", digits, "Significant digits (0 keeps full precision)")->check(CLI::NonNegativeNumber);
        auto* sc = cmd->add_option("--scenario", scenario, "Apply this shock along the path")->check(CLI::ExistingFile);
        cmd->add_option("--preset", preset, "Apply a bundled shock preset along the path")->excludes(sc);
    }

    int run(Session& s) const {
        const Economy e = *s.economy(src);
        s.require_valid(e);
        const std::size_t periods = horizon == 0 ? e.horizon : horizon;
        PolicySchedule schedule;
        std::optional<PolicyShock> shock;
        if (!scenario.empty()) shock = load_shock(scenario);
        if (!preset.empty()) shock = load_preset(preset);
        if (shock) {
            const PolicyInputs base = PolicyInputs::baseline(e);
            schedule = [&e, base, shock = *shock](std::size_t t) { return apply_shock(e, base, shock, t); };
        }
        SimulationOptions opts;
        opts.solver = s.run.solver;
        opts.diffusion = on_off(diffusion);
        const SimulationPath path = simulate(e, schedule, periods, opts);

        const fs::path dir = s.output_dir(out);
        fs::create_directories(dir);
        if (format != "json") write_path_csv(e, path, dir / "path.csv", digits);
        if (format != "csv") write_path_json(e, path, dir / "path.json");
        if (trade) write_trade_dumps(e, path, dir, digits);
        s.out << "simulated " << path.periods() << " periods (" << e.base_year << " to "
              << e.base_year + static_cast<int>(path.periods()) - 1 << "), wrote " << dir.string() << '\n';
        return kOk;
    }
};

// ---- scenario --------------------------------------------------------------------

struct ScenarioCmd {
    CLI::App* cmd = nullptr;
    CLI::App* run_cmd = nullptr;
    CLI::App* list_cmd = nullptr;
    EconomySource src;
    std::string scenario;
    std::string preset;
    std::string diffusion = "on";
    bool single_sector = false;
    std::string out;
    std::size_t horizon = 0;
    std::vector<std::string> blocs;
    int digits = 0;

    void add(CLI::App& app) {
        cmd = app.add_subcommand("scenario", "Run or list decoupling scenarios");
        cmd->require_subcommand(1);
        run_cmd = cmd->add_subcommand("run", "Run a shocked and a baseline path and emit the comparison report");
        src.add_to(run_cmd);
        auto* sc = run_cmd->add_option("--scenario", scenario, "Scenario JSON")->check(CLI::ExistingFile);
        run_cmd->add_option("--preset", preset, "Bundled scenario preset (see `scenario list`)")->excludes(sc);
        run_cmd->add_option("--diffusion", diffusion, "Idea diffusion on or off")
            ->check(CLI::IsMember({"on", "off"}))
            ->capture_default_str();
        run_cmd->add_flag("--single-sector", single_sector, "Run on the one-sector collapse of the economy");
        run_cmd->add_option("--out", out, "Report directory (default: the config's output_dir or .)");
        run_cmd->add_option("--horizon", horizon, "Number of periods (default: the economy's horizon)");
        run_cmd->add_option("--bloc", blocs, "Bloc override region=West|East (repeatable)");
        run_cmd->add_option("--digits", digits, "Significant digits in the report (0 keeps full precision)")
            ->check(CLI::NonNegativeNumber);
        list_cmd = cmd->add_subcommand("list", "List the bundled scenario presets");
    }

    int run(Session& s) const {
        if (list_cmd->parsed()) {
            for (const auto& name : preset_names()) {
                const PolicyShock shock = load_preset(name);
                s.out << name << ": " << to_string(shock.kind) << ", " << format_double(shock.magnitude_pp) << "pp, "
                      << (shock.sectors.empty() ? std::string("all sectors") : join(shock.sectors)) << '\n';
            }
            return kOk;
        }
        PolicyShock shock;
        if (!scenario.empty()) shock = load_shock(scenario);
        else if (!preset.empty()) shock = load_preset(preset);
        else if (s.run.scenario) shock = load_shock(*s.run.scenario);
        else throw UsageError("scenario run: --scenario or --preset is required");

        ExperimentOptions opts;
        opts.diffusion = on_off(diffusion);
        opts.single_sector = single_sector;
        opts.solver = s.run.solver;
        opts.horizon = horizon;
        for (const auto& b : blocs) {
            const auto eq = b.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--bloc expects region=West|East, got '" + b + "'");
            try {
                opts.bloc_overrides[b.substr(0, eq)] = bloc_from_string(b.substr(eq + 1));
            } catch (const Error& ex) {
                throw UsageError(std::string("--bloc: ") + ex.what());
            }
        }
        const Economy e = *s.economy(src);
        s.require_valid(e);
        const ComparisonReport report = run_experiment(e, shock, opts);
        const fs::path dir = s.output_dir(out);
        EmitOptions emit_opts;
        emit_opts.digits = digits;
        emit_report(report, dir, emit_opts);
        s.out << welfare_table_csv(report, digits);
        s.out << "wrote " << dir.string() << '\n';
        return kOk;
    }
};

// ---- analyze-diffusion --------------------------------------------------------------

json grid_to_json(const Grid2& g) {
    json rows = json::array();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(g(r, c));
        rows.push_back(row);
    }
    return rows;
}

struct AnalyzeDiffusionCmd {
    std::string problem;
    std::string op = "all";
    std::size_t resolution = 101;
    std::string surface;
    int digits = 0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("analyze-diffusion",
                                       "Diffusion value, planner and market shares, distortion statistic, surface");
        cmd->add_option("--problem", problem, "Problem JSON (lambda, eta, landed_cost, theta, beta)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--op", op, "Operation")
            ->check(CLI::IsMember({"all", "value", "optimal", "actual", "aleph", "surface"}))
            ->capture_default_str();
        cmd->add_option("--resolution", resolution, "Surface grid points per axis")
            ->check(CLI::Range(std::size_t{2}, std::size_t{10001}))
            ->capture_default_str();
        cmd->add_option("--surface", surface, "Write the surface CSV here");
        cmd->add_option("--digits", digits, "Significant digits for the surface CSV")->check(CLI::NonNegativeNumber);
    }

    int run(Session& s) const {
        const DiffusionProblem p = diffusion_problem_from_json(read_text(problem), problem);
        const Grid2 opt = optimal_shares(p);
        const Grid2 act = actual_shares(p);
        const bool two_by_two = p.regions() == 2 && p.sectors() == 2;
        if (op == "surface") {
            if (!two_by_two) throw UsageError("the surface needs a 2-region, 2-sector problem");
            emit(surface_csv(figure_surface(p, resolution, s.run.solver.threads), digits), surface, s.out);
            return kOk;
        }
        json j = json::object();
        if (op == "all" || op == "optimal") j["optimal_shares"] = grid_to_json(opt);
        if (op == "all" || op == "actual") j["actual_shares"] = grid_to_json(act);
        if (op == "all" || op == "value") {
            json v = json::array();
            for (std::size_t i = 0; i < p.eta.rows(); ++i)
                v.push_back({{"using_sector", i}, {"optimal", diffusion_value(opt, p, i)}, {"actual", diffusion_value(act, p, i)}});
            j["value"] = v;
        }
        if (op == "all" || op == "aleph") {
            if (two_by_two) {
                j["aleph"] = {aleph_two_by_two(p, 0, 1), aleph_two_by_two(p, 1, 0)};
            } else {
                Grid2 a(p.regions(), p.sectors());
                for (std::size_t r = 0; r < p.regions(); ++r)
                    for (std::size_t c = 0; c < p.sectors(); ++c) a(r, c) = aleph(p, r, c, 0, 0);
                j["aleph_vs_first_cell"] = grid_to_json(a);
            }
        }
        if (!surface.empty()) {
            if (!two_by_two) throw UsageError("the surface needs a 2-region, 2-sector problem");
            emit(surface_csv(figure_surface(p, resolution, s.run.solver.threads), digits), surface, s.out);
        }
        s.out << j.dump(2) << '\n';
        return kOk;
    }
};

// ---- report ------------------------------------------------------------------

struct ReportCmd {
    std::string path;
    std::string var = "real_income";
    std::string sector;
    std::string report;
    std::string table = "welfare";
    std::string out;
    int digits = 0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("report", "Tabulate a simulated path or a scenario report");
        auto* p = cmd->add_option("--path", path, "Path CSV written by simulate (default <output_dir>/path.csv)");
        cmd->add_option("--var", var, "Variable for the region x period table")->capture_default_str();
        cmd->add_option("--sector", sector, "Sector for sectoral variables (lambda, price, sales)");
        cmd->add_option("--report", report, "Scenario report directory written by `scenario run`")
            ->check(CLI::ExistingDirectory)
            ->excludes(p);
        cmd->add_option("--table", table, "Table to print from --report")
            ->check(CLI::IsMember({"welfare", "entries"}))
            ->capture_default_str();
        cmd->add_option("--out", out, "Write the table here instead of stdout");
        cmd->add_option("--digits", digits, "Significant digits (0 keeps full precision)")->check(CLI::NonNegativeNumber);
    }

    int run(Session& s) const {
        if (!report.empty()) {
            const ComparisonReport r = parse_report(report);
            emit(table == "welfare" ? welfare_table_csv(r, digits) : report_entries_csv(r, digits), out, s.out);
            return kOk;
        }
        const fs::path file = path.empty() ? s.run.output_dir / "path.csv" : fs::path(path);
        if (!fs::exists(file)) throw UsageError("path file '" + file.string() + "' not found; run simulate first or pass --path");
        std::vector<PathRecord> records = read_path_csv(file);
        std::set<std::string> available;
        for (const auto& r : records)
            if (r.sector.empty() == sector.empty()) available.insert(r.variable);
        if (!available.count(var))
            throw UsageError("no " + std::string(sector.empty() ? "region-level" : "sectoral") + " variable '" + var +
                             "' in " + file.string() + " (available: " +
                             join(std::vector<std::string>(available.begin(), available.end())) + ")");
        if (!sector.empty()) {
            std::erase_if(records, [&](const PathRecord& r) { return r.sector != sector; });
            if (records.empty()) throw UsageError("no rows for sector '" + sector + "'");
            for (auto& r : records) r.sector.clear();
        }
        emit(path_variable_table(records, var, digits), out, s.out);
        return kOk;
    }
};

int run_app(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"tradediff: multi-sector trade and idea-diffusion simulator", "tradediff"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "tradediff 0.1.0");
    std::string config;
    unsigned threads = 0;
    bool quiet = false;
    int verbose = 0;
    std::optional<double> tol;
    std::optional<std::size_t> max_iter;
    app.add_option("--config", config, "Run configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--threads", threads, "Worker threads (overrides TRADEDIFF_THREADS and the config)");
    app.add_option("--tol", tol, "Solver tolerance on factor-market excess demand")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", max_iter, "Solver iteration cap")->check(CLI::PositiveNumber);
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");
    app.add_flag("-v,--verbose", verbose, "More log output (repeat for debug)");
    app.footer("Exit status: 0 success, 1 domain error, 2 usage error.\n"
               "Environment: TRADEDIFF_THREADS sets the default thread count; TRADEDIFF_DATA_DIR locates presets.");

    ValidateCmd validate;
    CalibrateCmd calibrate;
    CalibrateBetaCmd calibrate_beta;
    AssignBlocsCmd assign;
    SimulateCmd simulate_cmd;
    ScenarioCmd scenario;
    AnalyzeDiffusionCmd analyze;
    ReportCmd report;
    validate.add(app);
    calibrate.add(app);
    calibrate_beta.add(app);
    assign.add(app);
    simulate_cmd.add(app);
    scenario.add(app);
    analyze.add(app);
    report.add(app);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    Session session{out, err, {}};
    try {
        if (!config.empty()) session.run = load_run_config(config);
    } catch (const Error& e) {
        err << "error: --config: " << e.what() << '\n';
        return kUsageError;
    }
    if (const char* env = std::getenv("TRADEDIFF_THREADS"); env && *env) session.run.solver.threads = default_thread_count();
    if (threads > 0) session.run.solver.threads = threads;
    if (tol) session.run.solver.tol = *tol;
    if (max_iter) session.run.solver.max_iter = *max_iter;
    Verbosity v = session.run.verbosity;
    if (quiet) v = Verbosity::Quiet;
    if (verbose > 0) v = verbose > 1 ? Verbosity::Debug : Verbosity::Info;
    set_verbosity(v);

    try {
        if (app.got_subcommand("validate")) return validate.run(session);
        if (app.got_subcommand("calibrate")) return calibrate.run(session);
        if (app.got_subcommand("calibrate-beta")) return calibrate_beta.run(session);
        if (app.got_subcommand("assign-blocs")) return assign.run(session);
        if (app.got_subcommand("simulate")) return simulate_cmd.run(session);
        if (app.got_subcommand("scenario")) return scenario.run(session);
        if (app.got_subcommand("analyze-diffusion")) return analyze.run(session);
        if (app.got_subcommand("report")) return report.run(session);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return kUsageError;
    } catch (const NoConvergence& e) {
        err << "error: " << e.what() << '\n';
        return kDomainError;
    } catch (const InfeasibleTarget& e) {
        err << "error: " << e.what() << '\n';
        for (const auto& cell : e.cells()) err << "  " << cell << '\n';
        return kDomainError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDomainError;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kDomainError;
    }
    err << "usage error: no subcommand\n";
    return kUsageError;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return run_app(args, out, err);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_app(std::move(args), out, err);
}

}  // namespace tradediff::cli
