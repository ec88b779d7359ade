#include "tradediff/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include "tradediff/errors.hpp"

namespace tradediff {

using nlohmann::json;

// ---- numbers -------------------------------------------------------------

std::string format_double(double v, int digits) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";
    char buf[64];
    std::to_chars_result res = digits > 0 ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits)
                                          : std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context, bool allow_inf) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (allow_inf && (text == "inf" || text == "Inf" || text == "infinity" || text == "+inf"))
        return std::numeric_limits<double>::infinity();
    double value = 0.0;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ParseError(context + ": '" + std::string(text) + "' is not a number");
    if (std::isnan(value) || (std::isinf(value) && !allow_inf)) throw ParseError(context + ": value must be finite");
    return value;
}

// ---- CSV -----------------------------------------------------------------

std::size_t CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::string CsvTable::where(std::size_t r) const { return source + ":" + std::to_string(r + 2); }

namespace {

std::vector<std::string> split_csv_line(std::string_view line, const std::string& where) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(where + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
    }
    return fields;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable table;
    table.source = source;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        auto fields = split_csv_line(line, source + ":" + std::to_string(line_no));
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                std::ostringstream msg;
                msg << source << ":" << line_no << ": expected " << table.header.size() << " fields, found "
                    << fields.size();
                throw ParseError(msg.str());
            }
            table.rows.push_back(std::move(fields));
        }
        if (end == text.size()) break;
    }
    if (table.header.empty()) throw ParseError(source + ": file is empty");
    return table;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoFailure("failed writing '" + path.string() + "'");
}

CsvTable read_csv(const fs::path& path) {
    // Row numbers in diagnostics count physical lines, so keep blank lines out of inputs.
    return parse_csv(read_text(path), path.string());
}

namespace {

double cell_number(const CsvTable& t, std::size_t r, std::size_t c, bool allow_inf = false) {
    return parse_double(t.rows[r][c], t.where(r) + ": column '" + t.header[c] + "'", allow_inf);
}

double cell_nonnegative(const CsvTable& t, std::size_t r, std::size_t c) {
    const double v = cell_number(t, r, c);
    if (v < 0.0) throw ParseError(t.where(r) + ": column '" + t.header[c] + "': negative value " + format_double(v));
    return v;
}

double cell_positive(const CsvTable& t, std::size_t r, std::size_t c) {
    const double v = cell_number(t, r, c);
    if (!(v > 0.0))
        throw ParseError(t.where(r) + ": column '" + t.header[c] + "': value must be positive, found " + format_double(v));
    return v;
}

int cell_int(const CsvTable& t, std::size_t r, std::size_t c) {
    const std::string& s = t.rows[r][c];
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(t.where(r) + ": column '" + t.header[c] + "': '" + s + "' is not an integer");
    return v;
}

// ---- JSON helpers --------------------------------------------------------

json number_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

double json_number(const json& j, const std::string& where, bool allow_inf = false) {
    if (j.is_number()) {
        const double v = j.get<double>();
        if (std::isnan(v)) throw ParseError(where + ": NaN is not allowed");
        return v;
    }
    if (j.is_string()) return parse_double(j.get<std::string>(), where, allow_inf);
    throw ParseError(where + ": expected a number");
}

json vec_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(number_json(x));
    return out;
}

json grid_json(const Grid2& g) {
    json out = json::array();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < g.cols(); ++c) row.push_back(number_json(g(r, c)));
        out.push_back(std::move(row));
    }
    return out;
}

json grid_json(const Grid3& g) {
    json out = json::array();
    for (std::size_t a = 0; a < g.dim0(); ++a) {
        json mid = json::array();
        for (std::size_t b = 0; b < g.dim1(); ++b) {
            json row = json::array();
            for (std::size_t c = 0; c < g.dim2(); ++c) row.push_back(number_json(g(a, b, c)));
            mid.push_back(std::move(row));
        }
        out.push_back(std::move(mid));
    }
    return out;
}

const json& member(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    return j.at(key);
}

std::vector<double> json_vec(const json& j, const std::string& where, bool allow_inf = false) {
    if (!j.is_array()) throw ParseError(where + ": expected an array");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(json_number(j[k], where + "[" + std::to_string(k) + "]", allow_inf));
    return out;
}

Grid2 json_grid2(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected a 2-D array");
    if (j.empty()) return {};
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Grid2 g(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = json_vec(j[r], where + "[" + std::to_string(r) + "]");
        if (row.size() != cols) throw ParseError(where + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) g(r, c) = row[c];
    }
    return g;
}

Grid3 json_grid3(const json& j, const std::string& where, bool allow_inf = false) {
    if (!j.is_array()) throw ParseError(where + ": expected a 3-D array");
    if (j.empty()) return {};
    const std::size_t n0 = j.size();
    const std::size_t n1 = j[0].is_array() ? j[0].size() : 0;
    const std::size_t n2 = (n1 > 0 && j[0][0].is_array()) ? j[0][0].size() : 0;
    Grid3 g(n0, n1, n2);
    for (std::size_t a = 0; a < n0; ++a) {
        if (!j[a].is_array() || j[a].size() != n1) throw ParseError(where + ": ragged array");
        for (std::size_t b = 0; b < n1; ++b) {
            const auto row = json_vec(j[a][b], where + "[" + std::to_string(a) + "][" + std::to_string(b) + "]", allow_inf);
            if (row.size() != n2) throw ParseError(where + ": ragged array");
            for (std::size_t c = 0; c < n2; ++c) g(a, b, c) = row[c];
        }
    }
    return g;
}

std::vector<std::string> json_strings(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : j) {
        if (!x.is_string()) throw ParseError(where + ": expected strings");
        out.push_back(x.get<std::string>());
    }
    return out;
}

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ParseError(source + ": invalid JSON: " + ex.what());
    }
}

void normalize_weight_pair(Grid2& a, Grid2& b, const std::string& name) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return;
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) {
            const double sum = a(r, c) + b(r, c);
            const double drift = std::abs(sum - 1.0);
            if (drift > 1e-13 && drift < 1e-9 && sum > 0.0) {
                log_warn(name + " weights at [" + std::to_string(r) + "," + std::to_string(c) + "] sum to " +
                         format_double(sum) + "; normalized");
                a(r, c) /= sum;
                b(r, c) /= sum;
            }
        }
}

/// Scalar, list in the order of ids, or map keyed by id.
std::vector<double> per_id(const json& cfg, const char* key, const std::vector<std::string>& ids,
                           const std::string& where, std::optional<double> fallback) {
    if (!cfg.contains(key)) {
        if (!fallback) throw ParseError(where + ": missing field '" + key + "'");
        return std::vector<double>(ids.size(), *fallback);
    }
    const json& j = cfg.at(key);
    const std::string at = where + ": field '" + key + "'";
    if (j.is_number() || j.is_string()) return std::vector<double>(ids.size(), json_number(j, at));
    if (j.is_array()) {
        auto v = json_vec(j, at);
        if (v.size() != ids.size()) throw ParseError(at + ": expected " + std::to_string(ids.size()) + " values");
        return v;
    }
    if (j.is_object()) {
        std::vector<double> out(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (j.contains(ids[k])) {
                out[k] = json_number(j.at(ids[k]), at + "." + ids[k]);
            } else if (fallback) {
                out[k] = *fallback;
            } else {
                throw ParseError(at + ": no value for '" + ids[k] + "'");
            }
        }
        return out;
    }
    throw ParseError(at + ": expected a number, list or object");
}

}  // namespace

// ---- economy -------------------------------------------------------------

std::string economy_to_json(const Economy& e) {
    json j;
    j["format"] = "tradediff-economy";
    j["version"] = 1;
    j["regions"] = e.regions;
    j["sectors"] = e.sectors;
    j["base_year"] = e.base_year;
    j["horizon"] = e.horizon;
    j["elasticities"] = {{"theta", vec_json(e.theta)}, {"sigma", vec_json(e.sigma)}, {"nu", vec_json(e.nu)},
                         {"rho", vec_json(e.rho)},     {"mu", vec_json(e.mu)}};
    j["kappa"] = grid_json(e.kappa);
    j["eta"] = grid_json(e.eta);
    j["psi_f"] = grid_json(e.psi_f);
    j["psi_m"] = grid_json(e.psi_m);
    j["psi_k"] = grid_json(e.psi_k);
    j["psi_l"] = grid_json(e.psi_l);
    j["chi"] = grid_json(e.chi);
    j["savings_rate"] = vec_json(e.savings_rate);
    j["tb_rate"] = vec_json(e.tb_rate);
    j["delta"] = vec_json(e.delta);
    j["tau0"] = grid_json(e.tau0);
    j["tm0"] = grid_json(e.tm0);
    j["diffusion"] = {{"beta", e.beta}, {"alpha0", e.alpha0}, {"alpha_growth", e.alpha_growth}};
    j["lambda0"] = grid_json(e.lambda0);
    j["k0"] = vec_json(e.k0);
    j["l_path"] = grid_json(e.l_path);
    if (!e.population.empty()) j["population"] = grid_json(e.population);
    j["base"] = {{"wage", vec_json(e.base.wage)},
                 {"rental", vec_json(e.base.rental)},
                 {"price", grid_json(e.base.price)},
                 {"income", vec_json(e.base.income)},
                 {"world_factor_income", e.base.world_factor_income}};
    return j.dump(1) + "\n";
}

Economy economy_from_json(std::string_view text, const std::string& source) {
    const json j = parse_json(text, source);
    auto at = [&](const char* key) { return source + ": " + key; };
    Economy e;
    e.regions = json_strings(member(j, "regions", source), at("regions"));
    e.sectors = json_strings(member(j, "sectors", source), at("sectors"));
    for (const auto* ids : {&e.regions, &e.sectors}) {
        std::set<std::string> seen(ids->begin(), ids->end());
        if (seen.size() != ids->size()) throw ParseError(source + ": duplicate identifiers");
    }
    e.base_year = j.value("base_year", 0);
    e.horizon = j.value("horizon", std::size_t{1});
    const json& el = member(j, "elasticities", source);
    e.theta = json_vec(member(el, "theta", at("elasticities")), at("elasticities.theta"));
    e.sigma = el.contains("sigma") ? json_vec(el.at("sigma"), at("elasticities.sigma"))
                                   : std::vector<double>(e.sectors.size(), 3.0);
    e.nu = el.contains("nu") ? json_vec(el.at("nu"), at("elasticities.nu")) : std::vector<double>(e.sectors.size(), 1.0);
    e.rho = el.contains("rho") ? json_vec(el.at("rho"), at("elasticities.rho")) : std::vector<double>(e.sectors.size(), 0.0);
    e.mu = el.contains("mu") ? json_vec(el.at("mu"), at("elasticities.mu")) : std::vector<double>(e.sectors.size(), 0.0);
    e.kappa = json_grid2(member(j, "kappa", source), at("kappa"));
    e.eta = json_grid3(member(j, "eta", source), at("eta"));
    e.psi_f = json_grid2(member(j, "psi_f", source), at("psi_f"));
    e.psi_m = json_grid2(member(j, "psi_m", source), at("psi_m"));
    e.psi_k = json_grid2(member(j, "psi_k", source), at("psi_k"));
    e.psi_l = json_grid2(member(j, "psi_l", source), at("psi_l"));
    normalize_weight_pair(e.psi_f, e.psi_m, "psi_f/psi_m");
    normalize_weight_pair(e.psi_k, e.psi_l, "psi_k/psi_l");
    e.chi = json_grid2(member(j, "chi", source), at("chi"));
    e.savings_rate = json_vec(member(j, "savings_rate", source), at("savings_rate"));
    e.tb_rate = json_vec(member(j, "tb_rate", source), at("tb_rate"));
    e.delta = json_vec(member(j, "delta", source), at("delta"));
    e.tau0 = json_grid3(member(j, "tau0", source), at("tau0"), true);
    e.tm0 = json_grid3(member(j, "tm0", source), at("tm0"));
    const json& diff = member(j, "diffusion", source);
    e.beta = json_number(member(diff, "beta", at("diffusion")), at("diffusion.beta"));
    e.alpha0 = json_number(member(diff, "alpha0", at("diffusion")), at("diffusion.alpha0"));
    e.alpha_growth = diff.contains("alpha_growth") ? json_number(diff.at("alpha_growth"), at("diffusion.alpha_growth")) : 0.0;
    e.lambda0 = json_grid2(member(j, "lambda0", source), at("lambda0"));
    e.k0 = json_vec(member(j, "k0", source), at("k0"));
    e.l_path = json_grid2(member(j, "l_path", source), at("l_path"));
    if (j.contains("population")) e.population = json_grid2(j.at("population"), at("population"));
    const json& base = member(j, "base", source);
    e.base.wage = json_vec(member(base, "wage", at("base")), at("base.wage"));
    e.base.rental = json_vec(member(base, "rental", at("base")), at("base.rental"));
    e.base.price = json_grid2(member(base, "price", at("base")), at("base.price"));
    e.base.income = json_vec(member(base, "income", at("base")), at("base.income"));
    e.base.world_factor_income = json_number(member(base, "world_factor_income", at("base")), at("base.world_factor_income"));
    return e;
}

Economy load_economy(const fs::path& path) { return economy_from_json(read_text(path), path.string()); }

void save_economy(const Economy& e, const fs::path& path) { write_text(path, economy_to_json(e)); }

// ---- flows ---------------------------------------------------------------

namespace {

class IdIndex {
public:
    IdIndex(std::vector<std::string> ids, bool frozen) : ids_(std::move(ids)), frozen_(frozen) {
        for (std::size_t k = 0; k < ids_.size(); ++k) map_[ids_[k]] = k;
    }
    std::size_t get(const std::string& id, const std::string& where, const char* kind) {
        auto it = map_.find(id);
        if (it != map_.end()) return it->second;
        if (frozen_) throw ParseError(where + ": unknown " + kind + " '" + id + "'");
        map_[id] = ids_.size();
        ids_.push_back(id);
        return ids_.size() - 1;
    }
    void add(const std::string& id) {
        if (!map_.count(id)) {
            map_[id] = ids_.size();
            ids_.push_back(id);
        }
    }
    const std::vector<std::string>& ids() const { return ids_; }
    void freeze() { frozen_ = true; }

private:
    std::vector<std::string> ids_;
    std::map<std::string, std::size_t> map_;
    bool frozen_;
};

}  // namespace

BaselineFlows load_flows(const fs::path& dir, const std::vector<std::string>& regions,
                         const std::vector<std::string>& sectors) {
    const CsvTable factors = read_csv(dir / "factors.csv");
    IdIndex rix(regions, !regions.empty());
    IdIndex six(sectors, !sectors.empty());
    {
        const auto rc = factors.column("region");
        const auto sc = factors.column("sector");
        for (std::size_t r = 0; r < factors.rows.size(); ++r) {
            rix.get(factors.rows[r][rc], factors.where(r), "region");
            six.get(factors.rows[r][sc], factors.where(r), "sector");
        }
    }
    rix.freeze();
    six.freeze();
    BaselineFlows f = BaselineFlows::zeros(rix.ids(), six.ids());

    {
        const auto rc = factors.column("region");
        const auto sc = factors.column("sector");
        const auto fc = factors.column("factor");
        const auto vc = factors.column("value");
        for (std::size_t r = 0; r < factors.rows.size(); ++r) {
            const auto d = rix.get(factors.rows[r][rc], factors.where(r), "region");
            const auto i = six.get(factors.rows[r][sc], factors.where(r), "sector");
            const double v = cell_nonnegative(factors, r, vc);
            const std::string& kind = factors.rows[r][fc];
            if (kind == "labor") f.labor(d, i) += v;
            else if (kind == "capital") f.capital(d, i) += v;
            else if (kind == "profit") f.profit(d, i) += v;
            else throw ParseError(factors.where(r) + ": factor must be labor, capital or profit, found '" + kind + "'");
        }
    }
    {
        const CsvTable t = read_csv(dir / "trade.csv");
        const auto sc = t.column("source"), dc = t.column("dest"), ic = t.column("sector"), vc = t.column("value");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            f.trade(rix.get(t.rows[r][sc], t.where(r), "region"), rix.get(t.rows[r][dc], t.where(r), "region"),
                    six.get(t.rows[r][ic], t.where(r), "sector")) += cell_nonnegative(t, r, vc);
    }
    auto region_sector = [&](const char* file, Grid2& target) {
        const CsvTable t = read_csv(dir / file);
        const auto rc = t.column("region"), ic = t.column("sector"), vc = t.column("value");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            target(rix.get(t.rows[r][rc], t.where(r), "region"), six.get(t.rows[r][ic], t.where(r), "sector")) +=
                cell_nonnegative(t, r, vc);
    };
    region_sector("finaldemand.csv", f.consumption);
    region_sector("investment.csv", f.investment);
    if (fs::exists(dir / "intermediates.csv")) {
        const CsvTable t = read_csv(dir / "intermediates.csv");
        const auto rc = t.column("region"), uc = t.column("using_sector"), sc = t.column("supplying_sector"),
                   vc = t.column("value");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            f.intermediates(rix.get(t.rows[r][rc], t.where(r), "region"), six.get(t.rows[r][uc], t.where(r), "sector"),
                            six.get(t.rows[r][sc], t.where(r), "sector")) += cell_nonnegative(t, r, vc);
    }
    if (fs::exists(dir / "tariffs.csv")) {
        const CsvTable t = read_csv(dir / "tariffs.csv");
        const auto sc = t.column("source"), dc = t.column("dest"), ic = t.column("sector"), vc = t.column("revenue");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            f.tariff_revenue(rix.get(t.rows[r][sc], t.where(r), "region"), rix.get(t.rows[r][dc], t.where(r), "region"),
                             six.get(t.rows[r][ic], t.where(r), "sector")) += cell_nonnegative(t, r, vc);
    }
    return f;
}

void save_flows(const BaselineFlows& f, const fs::path& dir) {
    fs::create_directories(dir);
    const std::size_t N = f.regions.size();
    const std::size_t I = f.sectors.size();
    std::ostringstream trade, tariffs, factors, cons, inv, inter;
    trade << "source,dest,sector,value\n";
    tariffs << "source,dest,sector,revenue\n";
    factors << "region,sector,factor,value\n";
    cons << "region,sector,value\n";
    inv << "region,sector,value\n";
    inter << "region,using_sector,supplying_sector,value\n";
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                trade << f.regions[s] << ',' << f.regions[d] << ',' << f.sectors[i] << ','
                      << format_double(f.trade(s, d, i)) << '\n';
                if (f.tariff_revenue(s, d, i) != 0.0)
                    tariffs << f.regions[s] << ',' << f.regions[d] << ',' << f.sectors[i] << ','
                            << format_double(f.tariff_revenue(s, d, i)) << '\n';
            }
    for (std::size_t d = 0; d < N; ++d)
        for (std::size_t i = 0; i < I; ++i) {
            factors << f.regions[d] << ',' << f.sectors[i] << ",labor," << format_double(f.labor(d, i)) << '\n';
            factors << f.regions[d] << ',' << f.sectors[i] << ",capital," << format_double(f.capital(d, i)) << '\n';
            factors << f.regions[d] << ',' << f.sectors[i] << ",profit," << format_double(f.profit(d, i)) << '\n';
            cons << f.regions[d] << ',' << f.sectors[i] << ',' << format_double(f.consumption(d, i)) << '\n';
            inv << f.regions[d] << ',' << f.sectors[i] << ',' << format_double(f.investment(d, i)) << '\n';
            for (std::size_t j = 0; j < I; ++j)
                inter << f.regions[d] << ',' << f.sectors[i] << ',' << f.sectors[j] << ','
                      << format_double(f.intermediates(d, i, j)) << '\n';
        }
    write_text(dir / "trade.csv", trade.str());
    write_text(dir / "tariffs.csv", tariffs.str());
    write_text(dir / "factors.csv", factors.str());
    write_text(dir / "finaldemand.csv", cons.str());
    write_text(dir / "investment.csv", inv.str());
    write_text(dir / "intermediates.csv", inter.str());
}

// ---- calibration inputs --------------------------------------------------

CalibrationConfig load_calibration_config(const fs::path& path) {
    const std::string source = path.string();
    const json j = parse_json(read_text(path), source);
    if (!j.is_object()) throw ParseError(source + ": expected a JSON object");
    CalibrationConfig cfg;
    if (j.contains("regions")) cfg.regions = json_strings(j.at("regions"), source + ": regions");
    if (j.contains("sectors")) cfg.sectors = json_strings(j.at("sectors"), source + ": sectors");
    auto& p = cfg.params;
    p.beta = j.contains("beta") ? json_number(j.at("beta"), source + ": beta") : 0.0;
    p.alpha0 = j.contains("alpha0") ? json_number(j.at("alpha0"), source + ": alpha0") : 0.0;
    p.alpha_growth = j.contains("alpha_growth") ? json_number(j.at("alpha_growth"), source + ": alpha_growth") : 0.0;
    p.horizon = j.value("horizon", std::size_t{1});
    p.base_year = j.value("base_year", 0);
    cfg.rebalance_profits = j.value("rebalance_profits", false);
    const fs::path base = path.parent_path();
    auto file = [&](const char* key) -> std::optional<fs::path> {
        if (!j.contains(key)) return std::nullopt;
        fs::path f = j.at(key).get<std::string>();
        return f.is_absolute() ? f : base / f;
    };
    cfg.productivity = file("productivity");
    cfg.labor = file("labor");
    cfg.population = file("population");
    cfg.parameters_json = j.dump();
    return cfg;
}

Economy calibrate_from_files(const fs::path& flows_dir, const CalibrationConfig& cfg) {
    BaselineFlows flows = load_flows(flows_dir, cfg.regions, cfg.sectors);
    const json j = parse_json(cfg.parameters_json, "calibration parameters");
    const std::string where = "calibration config";
    CalibrationParameters p = cfg.params;
    p.theta = per_id(j, "theta", flows.sectors, where, std::nullopt);
    p.sigma = per_id(j, "sigma", flows.sectors, where, 3.0);
    p.nu = per_id(j, "nu", flows.sectors, where, 1.0);
    p.rho = per_id(j, "rho", flows.sectors, where, 0.0);
    p.mu = per_id(j, "mu", flows.sectors, where, 0.0);
    p.delta = per_id(j, "delta", flows.regions, where, 0.05);
    if (j.contains("k0")) p.k0 = per_id(j, "k0", flows.regions, where, std::nullopt);
    if (cfg.productivity)
        p.lambda0 = lambda0_from_productivity(flows.regions, flows.sectors, load_productivity(*cfg.productivity));
    const std::size_t periods = std::max<std::size_t>(1, p.horizon);
    if (cfg.labor)
        p.l_path = interpolate_labor_path(load_labor_anchors(*cfg.labor), flows.regions, p.base_year, periods);
    if (cfg.population)
        p.population = interpolate_labor_path(load_labor_anchors(*cfg.population), flows.regions, p.base_year, periods);
    if (cfg.rebalance_profits) flows = profit_rebalance(flows, p.theta);
    return calibrate_shares(flows, p);
}

std::vector<ProductivityRecord> load_productivity(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const auto rc = t.column("region"), sc = t.column("sector"), vc = t.column("value");
    std::vector<ProductivityRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back({t.rows[r][rc], t.rows[r][sc], cell_positive(t, r, vc)});
    return out;
}

std::vector<LaborAnchor> load_labor_anchors(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const auto rc = t.column("region"), yc = t.column("year"), vc = t.column("value");
    std::vector<LaborAnchor> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back({t.rows[r][rc], cell_int(t, r, yc), cell_positive(t, r, vc)});
    return out;
}

std::vector<HistoricalRecord> load_historical(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const auto rc = t.column("region"), yc = t.column("year"), gc = t.column("gdp"), pc = t.column("population");
    std::vector<HistoricalRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.push_back({t.rows[r][rc], cell_int(t, r, yc), cell_positive(t, r, gc), cell_positive(t, r, pc)});
    return out;
}

std::vector<VoteRecord> load_votes(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const auto cc = t.column("country"), vc = t.column("vote"), pc = t.column("position");
    std::vector<VoteRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][pc].empty()) throw ParseError(t.where(r) + ": empty position");
        out.push_back({t.rows[r][cc], t.rows[r][vc], t.rows[r][pc]});
    }
    return out;
}

std::vector<std::pair<double, MomentSet>> load_moment_table(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const auto bc = t.column("beta"), gm = t.column("gdp_mean"), gs = t.column("gdp_sd"), pm = t.column("gdppc_mean"),
               ps = t.column("gdppc_sd");
    std::vector<std::pair<double, MomentSet>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        MomentSet m{cell_number(t, r, gm), cell_nonnegative(t, r, gs), cell_number(t, r, pm), cell_nonnegative(t, r, ps)};
        out.emplace_back(cell_nonnegative(t, r, bc), m);
    }
    return out;
}

// ---- scenarios -----------------------------------------------------------

PolicyShock shock_from_json(std::string_view text, const std::string& source) {
    const json j = parse_json(text, source);
    if (!j.is_object()) throw ParseError(source + ": expected a JSON object");
    PolicyShock s;
    s.name = j.value("name", std::string{});
    s.kind = shock_kind_from_string(member(j, "kind", source).get<std::string>());
    s.magnitude_pp = j.contains("magnitude_pp") ? json_number(j.at("magnitude_pp"), source + ": magnitude_pp") : 160.0;
    if (s.magnitude_pp < 0.0) throw ParseError(source + ": magnitude_pp must be nonnegative");
    const json& blocs = member(j, "blocs", source);
    if (!blocs.is_object()) throw ParseError(source + ": blocs must map region to West or East");
    for (const auto& [region, bloc] : blocs.items()) s.blocs[region] = bloc_from_string(bloc.get<std::string>());
    if (j.contains("sectors")) {
        const json& sec = j.at("sectors");
        if (sec.is_string() && sec.get<std::string>() == "all") s.sectors.clear();
        else s.sectors = json_strings(sec, source + ": sectors");
    }
    if (j.contains("start") && !j.at("start").is_null()) s.start_year = j.at("start").get<int>();
    s.permanent = j.value("permanent", true);
    return s;
}

std::string shock_to_json(const PolicyShock& s) {
    json j;
    j["name"] = s.name;
    j["kind"] = to_string(s.kind);
    j["magnitude_pp"] = s.magnitude_pp;
    json blocs = json::object();
    for (const auto& [region, bloc] : s.blocs) blocs[region] = to_string(bloc);
    j["blocs"] = blocs;
    j["sectors"] = s.sectors;
    j["start"] = s.start_year ? json(*s.start_year) : json(nullptr);
    j["permanent"] = s.permanent;
    return j.dump(1) + "\n";
}

PolicyShock load_shock(const fs::path& path) {
    PolicyShock s = shock_from_json(read_text(path), path.string());
    if (s.name.empty()) s.name = path.stem().string();
    return s;
}

RunConfig run_config_from_json(std::string_view text, const std::string& source, const fs::path& base) {
    const json j = parse_json(text, source);
    if (!j.is_object()) throw ParseError(source + ": expected a JSON object");
    RunConfig c;
    auto path_of = [&](const char* key) -> std::optional<fs::path> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        const fs::path p = j.at(key).get<std::string>();
        return p.is_absolute() || base.empty() ? p : base / p;
    };
    c.economy = path_of("economy");
    c.flows = path_of("flows");
    c.scenario = path_of("scenario");
    c.historical = path_of("historical");
    if (auto out = path_of("output_dir")) c.output_dir = *out;
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        if (s.contains("tol")) c.solver.tol = json_number(s.at("tol"), source + ": solver.tol");
        if (s.contains("inner_tol")) c.solver.inner_tol = json_number(s.at("inner_tol"), source + ": solver.inner_tol");
        if (s.contains("max_iter")) c.solver.max_iter = s.at("max_iter").get<std::size_t>();
        if (s.contains("damping")) c.solver.damping = json_number(s.at("damping"), source + ": solver.damping");
        if (s.contains("threads")) c.solver.threads = s.at("threads").get<unsigned>();
    }
    if (!(c.solver.tol > 0.0) || !(c.solver.inner_tol > 0.0)) throw ParseError(source + ": tolerances must be positive");
    c.seed = j.value("seed", c.seed);
    if (j.contains("verbosity")) {
        const std::string v = j.at("verbosity").get<std::string>();
        if (v == "quiet") c.verbosity = Verbosity::Quiet;
        else if (v == "warn") c.verbosity = Verbosity::Warn;
        else if (v == "info") c.verbosity = Verbosity::Info;
        else if (v == "debug") c.verbosity = Verbosity::Debug;
        else throw ParseError(source + ": verbosity must be quiet, warn, info or debug");
    }
    for (const auto* p : {&c.economy, &c.flows, &c.scenario, &c.historical})
        if (*p && !fs::exists(**p)) throw ParseError(source + ": referenced file '" + (*p)->string() + "' does not exist");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    return run_config_from_json(read_text(path), path.string(), path.parent_path());
}

// ---- solutions and paths -------------------------------------------------

std::string solution_to_json(const Economy& e, const EquilibriumSolution& s) {
    json j;
    j["regions"] = e.regions;
    j["sectors"] = e.sectors;
    j["wage"] = vec_json(s.wage);
    j["rental"] = vec_json(s.rental);
    j["unit_cost"] = grid_json(s.unit_cost);
    j["price"] = grid_json(s.price);
    j["cpi"] = vec_json(s.cpi);
    j["inv_price"] = vec_json(s.inv_price);
    j["trade_share"] = grid_json(s.trade_share);
    j["expenditure"] = {{"total", grid_json(s.expenditure)},
                        {"consumption", grid_json(s.cons_expenditure)},
                        {"investment", grid_json(s.inv_expenditure)},
                        {"intermediates", grid_json(s.int_expenditure)}};
    j["sales"] = grid_json(s.sales);
    j["profits"] = grid_json(s.profits);
    j["income"] = vec_json(s.income);
    j["transfers"] = vec_json(s.transfers);
    j["investment"] = vec_json(s.investment);
    j["tb_rate"] = vec_json(s.tb_rate);
    j["convergence"] = {{"iterations", s.convergence.iterations},
                        {"residual", s.convergence.residual},
                        {"walras_residual", s.convergence.walras_residual},
                        {"worst_market", s.convergence.worst_market},
                        {"converged", s.convergence.converged}};
    return j.dump(1) + "\n";
}

std::vector<PathRecord> path_records(const Economy& e, const SimulationPath& path) {
    std::vector<PathRecord> out;
    const std::size_t N = e.num_regions();
    const std::size_t I = e.num_sectors();
    for (std::size_t t = 0; t < path.periods(); ++t) {
        const auto& sol = path.solutions[t];
        const auto& st = path.states[t];
        const int year = path.base_year + static_cast<int>(t);
        auto add = [&](const char* var, std::size_t d, const std::string& sector, double v) {
            out.push_back({t, year, var, e.regions[d], sector, v});
        };
        for (std::size_t d = 0; d < N; ++d) {
            add("real_income", d, "", sol.real_income(d));
            add("real_income_per_capita", d, "", sol.real_income(d) / e.population_at(t, d));
            add("income", d, "", sol.income[d]);
            add("cpi", d, "", sol.cpi[d]);
            add("wage", d, "", sol.wage[d]);
            add("rental", d, "", sol.rental[d]);
            add("labor", d, "", st.labor[d]);
            add("capital", d, "", st.capital[d]);
            add("investment", d, "", sol.investment[d]);
            add("transfers", d, "", sol.transfers[d]);
        }
        for (std::size_t d = 0; d < N; ++d)
            for (std::size_t i = 0; i < I; ++i) {
                add("lambda", d, e.sectors[i], st.lambda(d, i));
                add("price", d, e.sectors[i], sol.price(d, i));
                add("sales", d, e.sectors[i], sol.sales(d, i));
            }
    }
    return out;
}

void write_path_csv(const Economy& e, const SimulationPath& path, const fs::path& file, int digits) {
    std::ostringstream out;
    out << "period,year,variable,region,sector,value\n";
    for (const auto& r : path_records(e, path))
        out << r.period << ',' << r.year << ',' << r.variable << ',' << csv_field(r.region) << ','
            << csv_field(r.sector) << ',' << format_double(r.value, digits) << '\n';
    write_text(file, out.str());
}

void write_path_json(const Economy& e, const SimulationPath& path, const fs::path& file) {
    json periods = json::array();
    for (std::size_t t = 0; t < path.periods(); ++t) {
        json record;
        record["period"] = t;
        record["year"] = path.base_year + static_cast<int>(t);
        record["alpha"] = path.states[t].alpha;
        record["lambda"] = grid_json(path.states[t].lambda);
        record["capital"] = vec_json(path.states[t].capital);
        record["labor"] = vec_json(path.states[t].labor);
        record["solution"] = json::parse(solution_to_json(e, path.solutions[t]));
        periods.push_back(std::move(record));
    }
    json j;
    j["regions"] = e.regions;
    j["sectors"] = e.sectors;
    j["periods"] = periods;
    write_text(file, j.dump(1) + "\n");
}

std::vector<PathRecord> read_path_csv(const fs::path& file) {
    const CsvTable t = read_csv(file);
    const auto pc = t.column("period"), yc = t.column("year"), vc = t.column("variable"), rc = t.column("region"),
               sc = t.column("sector"), xc = t.column("value");
    std::vector<PathRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int period = cell_int(t, r, pc);
        if (period < 0) throw ParseError(t.where(r) + ": negative period");
        out.push_back({static_cast<std::size_t>(period), cell_int(t, r, yc), t.rows[r][vc], t.rows[r][rc], t.rows[r][sc],
                       cell_number(t, r, xc, true)});
    }
    return out;
}

std::string path_variable_table(const std::vector<PathRecord>& records, const std::string& variable, int digits) {
    std::vector<std::string> regions;
    std::map<int, std::size_t> years;
    std::map<std::pair<std::string, int>, double> values;
    for (const auto& r : records) {
        if (r.variable != variable || !r.sector.empty()) continue;
        if (std::find(regions.begin(), regions.end(), r.region) == regions.end()) regions.push_back(r.region);
        years[r.year] = r.period;
        values[{r.region, r.year}] = r.value;
    }
    if (regions.empty()) throw Error("path has no region-level variable '" + variable + "'");
    std::ostringstream out;
    out << "region";
    for (const auto& [year, period] : years) out << ',' << year;
    out << '\n';
    for (const auto& region : regions) {
        out << csv_field(region);
        for (const auto& [year, period] : years) {
            auto it = values.find({region, year});
            out << ',' << (it == values.end() ? std::string{} : format_double(it->second, digits));
        }
        out << '\n';
    }
    return out.str();
}

void write_trade_dumps(const Economy& e, const SimulationPath& path, const fs::path& dir, int digits) {
    std::ostringstream shares, values;
    shares << "period,source,dest,sector,value\n";
    values << "period,source,dest,sector,value\n";
    for (std::size_t t = 0; t < path.periods(); ++t) {
        const auto& sol = path.solutions[t];
        for (std::size_t s = 0; s < e.num_regions(); ++s)
            for (std::size_t d = 0; d < e.num_regions(); ++d)
                for (std::size_t i = 0; i < e.num_sectors(); ++i) {
                    const std::string key = std::to_string(t) + ',' + e.regions[s] + ',' + e.regions[d] + ',' + e.sectors[i] + ',';
                    shares << key << format_double(sol.trade_share(s, d, i), digits) << '\n';
                    values << key << format_double(sol.trade_value(s, d, i), digits) << '\n';
                }
    }
    write_text(dir / "trade_shares.csv", shares.str());
    write_text(dir / "trade_values.csv", values.str());
}

// ---- reports -------------------------------------------------------------

std::string report_entries_csv(const ComparisonReport& report, int digits) {
    std::ostringstream out;
    out << "variable,region,sector,value\n";
    for (const auto& e : report.entries)
        out << e.variable << ',' << csv_field(e.region) << ',' << csv_field(e.sector) << ','
            << format_double(e.value, digits) << '\n';
    return out.str();
}

std::string welfare_table_csv(const ComparisonReport& report, int digits) {
    std::ostringstream out;
    out << "region,real_income_change\n";
    for (const auto& e : report.entries)
        if (e.variable == "real_income") out << csv_field(e.region) << ',' << format_double(e.value, digits) << '\n';
    return out.str();
}

void emit_report(const ComparisonReport& report, const fs::path& dir, const EmitOptions& opts) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create output directory '" + dir.string() + "': " + ec.message());
    write_text(dir / "report.csv", report_entries_csv(report, opts.digits));
    std::ostringstream series;
    series << "run,variable,region,sector,period,value\n";
    for (const auto& s : report.series)
        series << s.run << ',' << s.variable << ',' << csv_field(s.region) << ',' << csv_field(s.sector) << ',' << s.period
               << ',' << format_double(s.value, opts.digits) << '\n';
    write_text(dir / "series.csv", series.str());
    json summary;
    summary["scenario"] = report.scenario;
    summary["diffusion"] = report.diffusion;
    summary["single_sector"] = report.single_sector;
    summary["base_year"] = report.base_year;
    summary["horizon"] = report.horizon;
    summary["start"] = report.start;
    summary["digits"] = opts.digits;
    json welfare = json::object();
    for (const auto& e : report.entries)
        if (e.variable == "real_income") welfare[e.region] = json::parse(format_double(e.value, opts.digits));
    summary["real_income_change"] = welfare;
    write_text(dir / "summary.json", summary.dump(1) + "\n");
}

ComparisonReport parse_report(const fs::path& dir) {
    ComparisonReport report;
    const std::string source = (dir / "summary.json").string();
    const json summary = parse_json(read_text(dir / "summary.json"), source);
    report.scenario = summary.value("scenario", std::string{});
    report.diffusion = summary.value("diffusion", true);
    report.single_sector = summary.value("single_sector", false);
    report.base_year = summary.value("base_year", 0);
    report.horizon = summary.value("horizon", std::size_t{0});
    report.start = summary.value("start", std::size_t{0});
    const CsvTable entries = read_csv(dir / "report.csv");
    {
        const auto vc = entries.column("variable"), rc = entries.column("region"), sc = entries.column("sector"),
                   xc = entries.column("value");
        for (std::size_t r = 0; r < entries.rows.size(); ++r)
            report.entries.push_back(
                {entries.rows[r][vc], entries.rows[r][rc], entries.rows[r][sc], cell_number(entries, r, xc)});
    }
    const CsvTable series = read_csv(dir / "series.csv");
    {
        const auto uc = series.column("run"), vc = series.column("variable"), rc = series.column("region"),
                   sc = series.column("sector"), pc = series.column("period"), xc = series.column("value");
        for (std::size_t r = 0; r < series.rows.size(); ++r)
            report.series.push_back({series.rows[r][uc], series.rows[r][vc], series.rows[r][rc], series.rows[r][sc],
                                     static_cast<std::size_t>(cell_int(series, r, pc)), cell_number(series, r, xc)});
    }
    return report;
}

DiffusionProblem diffusion_problem_from_json(std::string_view text, const std::string& source) {
    const json j = parse_json(text, source);
    DiffusionProblem p;
    p.lambda = json_grid2(member(j, "lambda", source), source + ": lambda");
    p.eta = json_grid2(member(j, "eta", source), source + ": eta");
    p.landed_cost = json_grid2(member(j, "landed_cost", source), source + ": landed_cost");
    const json& theta = member(j, "theta", source);
    p.theta = theta.is_array() ? json_vec(theta, source + ": theta")
                               : std::vector<double>(p.lambda.cols(), json_number(theta, source + ": theta"));
    p.beta = json_number(member(j, "beta", source), source + ": beta");
    for (double v : p.lambda.data())
        if (!(v > 0.0)) throw ParseError(source + ": lambda entries must be positive");
    for (double v : p.landed_cost.data())
        if (!(v > 0.0)) throw ParseError(source + ": landed costs must be positive");
    return p;
}

std::string surface_csv(const FigureSurface& s, int digits) {
    std::ostringstream out;
    out << "x,y,value\n";
    for (std::size_t ix = 0; ix < s.axis.size(); ++ix)
        for (std::size_t iy = 0; iy < s.axis.size(); ++iy)
            out << format_double(s.axis[ix], digits) << ',' << format_double(s.axis[iy], digits) << ','
                << format_double(s.values(ix, iy), digits) << '\n';
    return out.str();
}

}  // namespace tradediff
