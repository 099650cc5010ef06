#include "icecontour/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "icecontour/errors.hpp"
#include "icecontour/io.hpp"
#include "icecontour/mixture.hpp"
#include "icecontour/parallel.hpp"
#include "icecontour/reference.hpp"
#include "icecontour/rng.hpp"
#include "icecontour/shift.hpp"
#include "icecontour/stats.hpp"
#include "icecontour/verify.hpp"

namespace icecontour {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::set<std::string> kMethods = {"mcf", "contour", "climatology", "ensemble",
                                        "persistence"};
const std::set<std::string> kProbMethods = {"mcf", "contour", "climatology", "ensemble"};

int log_level() {
    static const int lvl = [] {
        const char* e = std::getenv("ICECONTOUR_LOG");
        if (!e) return 1;
        const std::string s = e;
        if (s == "quiet") return 0;
        if (s == "debug") return 2;
        return 1;
    }();
    return lvl;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[icecontour] " << msg << std::endl;
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[icecontour] " << msg << std::endl;
}

std::string month_dir(int month) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", month);
    return buf;
}

std::string tuple_label(int year, int month, double lead) {
    return std::to_string(year) + "/" + month_dir(month) + "/" + lead_label(lead);
}

// deterministic u64 for a derived stream
std::uint64_t seed_for(const PipelineConfig& cfg, std::initializer_list<std::uint64_t> path) {
    Rng r = Rng(cfg.seed).derive(path);
    return r.next_u64();
}

std::filesystem::path sim_dir(const PipelineConfig& cfg) { return cfg.out / "sim"; }

// ---- config parsing ------------------------------------------------------

struct Val {
    std::vector<std::string> items;
    void add(std::string s) { items.push_back(std::move(s)); }
};

const json* need(const json& j, const char* key, const std::string& ctx, Val& val) {
    if (!j.is_object() || !j.contains(key)) {
        val.add(ctx + ": missing key '" + key + "'");
        return nullptr;
    }
    return &j.at(key);
}

double jnum(const json& j, const char* key, const std::string& ctx, Val& val, double dflt,
            bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
        if (required) val.add(ctx + ": missing key '" + key + "'");
        return dflt;
    }
    if (!j.at(key).is_number()) {
        val.add(ctx + ": '" + key + "' must be a number");
        return dflt;
    }
    return j.at(key).get<double>();
}

long jint(const json& j, const char* key, const std::string& ctx, Val& val, long dflt,
          bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
        if (required) val.add(ctx + ": missing key '" + key + "'");
        return dflt;
    }
    if (!j.at(key).is_number_integer()) {
        val.add(ctx + ": '" + key + "' must be an integer");
        return dflt;
    }
    return j.at(key).get<long>();
}

std::string jstr(const json& j, const char* key, const std::string& ctx, Val& val,
                 const std::string& dflt, bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
        if (required) val.add(ctx + ": missing key '" + key + "'");
        return dflt;
    }
    if (!j.at(key).is_string()) {
        val.add(ctx + ": '" + key + "' must be a string");
        return dflt;
    }
    return j.at(key).get<std::string>();
}

bool jpoint(const json& j, Point& p) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) return false;
    p = {j[0].get<double>(), j[1].get<double>()};
    return true;
}

GridSpec parse_grid(const json& j, Val& val) {
    GridSpec g;
    g.nrows = static_cast<int>(jint(j, "nrows", "grid", val, 0, true));
    g.ncols = static_cast<int>(jint(j, "ncols", "grid", val, 0, true));
    g.dx_km = jnum(j, "dx_km", "grid", val, 0.0, true);
    g.dy_km = jnum(j, "dy_km", "grid", val, 0.0, true);
    if (const json* o = need(j, "origin", "grid", val)) {
        Point p;
        if (jpoint(*o, p)) {
            g.origin_x = p.x;
            g.origin_y = p.y;
        } else {
            val.add("grid: 'origin' must be [x, y]");
        }
    }
    if (g.nrows < 2 || g.ncols < 2) val.add("grid: needs at least 2x2 cells");
    if (!(g.dx_km > 0.0) || !(g.dy_km > 0.0)) val.add("grid: cell edges must be positive");
    return g;
}

RegionSpec parse_region(const json& j, std::size_t idx, Val& val) {
    const std::string ctx = "regions[" + std::to_string(idx) + "]";
    RegionSpec r;
    r.id = static_cast<int>(jint(j, "id", ctx, val, -1, true));
    if (r.id < 0) val.add(ctx + ": id must be nonnegative");
    const std::string kind = jstr(j, "kind", ctx, val, "", true);
    if (kind == "radial") {
        r.kind = RegionKind::Radial;
        if (const json* c = need(j, "center", ctx, val))
            if (!jpoint(*c, r.center)) val.add(ctx + ": 'center' must be [x, y]");
    } else if (kind == "coastal") {
        r.kind = RegionKind::Coastal;
        if (const json* b = need(j, "base", ctx, val)) {
            if (!b->is_array() || b->size() != 2 || !jpoint((*b)[0], r.base0) ||
                !jpoint((*b)[1], r.base1))
                val.add(ctx + ": 'base' must be [[x,y],[x,y]]");
            else if (r.base0.x == r.base1.x && r.base0.y == r.base1.y)
                val.add(ctx + ": baseline endpoints coincide");
        }
        r.angle = jnum(j, "angle_deg", ctx, val, 0.0, true) * std::acos(-1.0) / 180.0;
    } else if (!kind.empty()) {
        val.add(ctx + ": kind must be 'radial' or 'coastal'");
    }
    r.n_lines = static_cast<int>(jint(j, "n_lines", ctx, val, 0));
    if (r.n_lines < 0 || r.n_lines == 1)
        val.add(ctx + ": n_lines must be 0 (auto) or at least 2");
    r.snap_km = jnum(j, "snap_km", ctx, val, -1.0);
    r.delta1 = jnum(j, "delta1", ctx, val, -1.0);
    r.delta2 = jnum(j, "delta2", ctx, val, -1.0);
    if (j.contains("fixed")) {
        if (!j.at("fixed").is_array()) {
            val.add(ctx + ": 'fixed' must be an array of [line, value]");
        } else {
            for (const auto& e : j.at("fixed")) {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                    !e[1].is_number_integer()) {
                    val.add(ctx + ": 'fixed' entries must be [line, value]");
                    continue;
                }
                r.fixed_overrides.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
    }
    return r;
}

template <typename T>
std::vector<T> parse_list(const json& j, const char* key, const std::string& ctx, Val& val,
                          bool required) {
    std::vector<T> out;
    if (!j.contains(key)) {
        if (required) val.add(ctx + ": missing key '" + key + "'");
        return out;
    }
    if (!j.at(key).is_array()) {
        val.add(ctx + ": '" + key + "' must be an array");
        return out;
    }
    for (const auto& e : j.at(key)) {
        if (!e.is_number()) {
            val.add(ctx + ": '" + key + "' entries must be numbers");
            return {};
        }
        out.push_back(e.get<T>());
    }
    return out;
}

SyntheticScenario parse_scenario(const json& j, Val& val) {
    SyntheticScenario s;
    if (const json* y = need(j, "years", "scenario", val)) {
        if (y->is_array() && y->size() == 2 && (*y)[0].is_number_integer() &&
            (*y)[1].is_number_integer()) {
            s.year_lo = (*y)[0].get<int>();
            s.year_hi = (*y)[1].get<int>();
        } else {
            val.add("scenario: 'years' must be [first, last]");
        }
    }
    s.truth_months = parse_list<int>(j, "truth_months", "scenario", val, true);
    s.forecast_months = parse_list<int>(j, "forecast_months", "scenario", val, true);
    s.leads = parse_list<double>(j, "leads", "scenario", val, true);
    s.members = static_cast<int>(jint(j, "members", "scenario", val, 25));
    s.polynya_rate = jnum(j, "polynya_rate", "scenario", val, 0.0);

    if (const json* m = need(j, "mask", "scenario", val)) {
        auto rect = [&](const json& e, std::array<int, 4>& r) {
            if (!e.is_array() || e.size() != 4) return false;
            for (int k = 0; k < 4; ++k)
                if (!e[k].is_number_integer()) return false;
            r = {e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()};
            return true;
        };
        if (m->contains("land") && m->at("land").is_array()) {
            for (const auto& e : m->at("land")) {
                std::array<int, 4> r;
                if (rect(e, r)) s.mask.land.push_back(r);
                else val.add("scenario.mask: land entries must be [r0,c0,r1,c1]");
            }
        }
        if (const json* rg = need(*m, "regions", "scenario.mask", val)) {
            if (rg->is_array()) {
                for (const auto& e : *rg) {
                    std::array<int, 4> r;
                    Val tmp;
                    const int id = static_cast<int>(jint(e, "id", "scenario.mask.region", tmp,
                                                         -1, true));
                    if (!tmp.items.empty() || !e.contains("rect") || !rect(e.at("rect"), r))
                        val.add("scenario.mask: regions need 'id' and 'rect' [r0,c0,r1,c1]");
                    else
                        s.mask.regions.emplace_back(id, r);
                }
            } else {
                val.add("scenario.mask: 'regions' must be an array");
            }
        }
    }

    if (const json* t = need(j, "truth", "scenario", val)) {
        if (t->is_array()) {
            for (const auto& e : *t) {
                RegionTruth rt;
                const std::string ctx = "scenario.truth";
                rt.region = static_cast<int>(jint(e, "region", ctx, val, -1, true));
                rt.base_logit = jnum(e, "base_logit", ctx, val, 0.5);
                rt.line_wiggle = jnum(e, "line_wiggle", ctx, val, 0.5);
                rt.sigma_star = jnum(e, "sigma_star", ctx, val, 0.5);
                rt.kappa_star = jnum(e, "kappa_star", ctx, val, 3.0);
                rt.trend_per_year = jnum(e, "trend_per_year", ctx, val, 0.0);
                rt.seasonal_amp = jnum(e, "seasonal_amp", ctx, val, 0.0);
                rt.anomaly_sd = jnum(e, "anomaly_sd", ctx, val, 0.0);
                rt.month_jitter = jnum(e, "month_jitter", ctx, val, 0.0);
                if (!(rt.sigma_star > 0.0)) val.add(ctx + ": sigma_star must be positive");
                if (!(rt.kappa_star > 0.0)) val.add(ctx + ": kappa_star must be positive");
                s.truth.push_back(rt);
            }
        } else {
            val.add("scenario: 'truth' must be an array");
        }
    }

    if (const json* e = need(j, "ensemble", "scenario", val)) {
        s.ens.bias_km = jnum(*e, "bias_km", "scenario.ensemble", val, 0.0);
        s.ens.bias_lead_km = jnum(*e, "bias_lead_km", "scenario.ensemble", val, 0.0);
        s.ens.err_km = jnum(*e, "err_km", "scenario.ensemble", val, 0.0);
        s.ens.err_lead_km = jnum(*e, "err_lead_km", "scenario.ensemble", val, 0.0);
        s.ens.dispersion_km = jnum(*e, "dispersion_km", "scenario.ensemble", val, 0.0);
        s.ens.dispersion_factor = jnum(*e, "dispersion_factor", "scenario.ensemble", val, 1.0);
    }
    return s;
}

ExperimentSpec parse_experiment(const json& j, Val& val) {
    ExperimentSpec e;
    if (const json* y = need(j, "eval_years", "experiment", val)) {
        if (y->is_array() && y->size() == 2 && (*y)[0].is_number_integer() &&
            (*y)[1].is_number_integer()) {
            e.eval_lo = (*y)[0].get<int>();
            e.eval_hi = (*y)[1].get<int>();
        } else {
            val.add("experiment: 'eval_years' must be [first, last]");
        }
    }
    e.months = parse_list<int>(j, "months", "experiment", val, true);
    e.leads = parse_list<double>(j, "leads", "experiment", val, true);
    e.contour_window = static_cast<int>(jint(j, "contour_window", "experiment", val, 10));
    e.weight_window = static_cast<int>(jint(j, "weight_window", "experiment", val, 3));
    e.sweep_max = static_cast<int>(jint(j, "sweep_max", "experiment", val, 0));
    e.reliability_bins = static_cast<int>(jint(j, "reliability_bins", "experiment", val, 10));
    e.reliability_weighting =
        jstr(j, "reliability_weighting", "experiment", val, "equal");
    e.persistence_start_year =
        static_cast<int>(jint(j, "persistence_start_year", "experiment", val, 0));
    if (j.contains("methods")) {
        if (!j.at("methods").is_array()) {
            val.add("experiment: 'methods' must be an array of strings");
        } else {
            for (const auto& m : j.at("methods")) {
                if (!m.is_string()) val.add("experiment: method names must be strings");
                else e.methods.push_back(m.get<std::string>());
            }
        }
    } else {
        e.methods = {"mcf", "contour", "climatology", "ensemble", "persistence"};
    }
    if (j.contains("mcmc")) {
        const json& m = j.at("mcmc");
        e.mcmc.iterations =
            static_cast<int>(jint(m, "iterations", "experiment.mcmc", val, e.mcmc.iterations));
        e.mcmc.burnin = static_cast<int>(jint(m, "burnin", "experiment.mcmc", val,
                                              e.mcmc.burnin));
        e.mcmc.n_contours = static_cast<int>(jint(m, "n_contours", "experiment.mcmc", val,
                                                  e.mcmc.n_contours));
    }
    return e;
}

} // namespace

int first_generated_year(const PipelineConfig& cfg) {
    const auto& e = cfg.experiment;
    const int back = std::max(e.weight_window, e.sweep_max);
    return e.eval_lo - back;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw config_error({"cannot parse " + path.string() + ": " + e.what()});
    }

    Val val;
    PipelineConfig cfg;
    cfg.out = jstr(j, "out", "config", val, "out");
    const long seed = jint(j, "seed", "config", val, 1);
    cfg.seed = static_cast<std::uint64_t>(seed);

    if (const json* g = need(j, "grid", "config", val)) cfg.grid = parse_grid(*g, val);
    if (const json* r = need(j, "regions", "config", val)) {
        if (!r->is_array() || r->empty()) {
            val.add("config: 'regions' must be a nonempty array");
        } else {
            for (std::size_t i = 0; i < r->size(); ++i)
                cfg.regions.push_back(parse_region((*r)[i], i, val));
        }
    }
    if (const json* s = need(j, "scenario", "config", val))
        cfg.scenario = parse_scenario(*s, val);
    if (const json* e = need(j, "experiment", "config", val))
        cfg.experiment = parse_experiment(*e, val);

    // cross checks
    auto& scn = cfg.scenario;
    auto& ex = cfg.experiment;
    if (ex.sweep_max <= 0) ex.sweep_max = ex.weight_window;
    if (ex.persistence_start_year == 0) ex.persistence_start_year = scn.year_lo;

    std::set<int> ids;
    for (const auto& r : cfg.regions)
        if (!ids.insert(r.id).second)
            val.add("config: duplicate region id " + std::to_string(r.id));
    for (const auto& t : scn.truth)
        if (!ids.count(t.region))
            val.add("scenario.truth: region " + std::to_string(t.region) +
                    " is not in 'regions'");

    if (scn.year_hi < scn.year_lo) val.add("scenario: year range is inverted");
    if (ex.eval_hi < ex.eval_lo) val.add("experiment: eval year range is inverted");
    if (ex.eval_hi > scn.year_hi) val.add("experiment: eval years exceed simulated years");
    if (ex.contour_window < 2) val.add("experiment: contour_window must be at least 2");
    if (ex.weight_window < 1) val.add("experiment: weight_window must be at least 1");
    if (ex.sweep_max < ex.weight_window)
        val.add("experiment: sweep_max cannot be below weight_window");
    if (ex.reliability_bins < 2) val.add("experiment: reliability_bins must be at least 2");
    if (ex.reliability_weighting != "equal" && ex.reliability_weighting != "area")
        val.add("experiment: reliability_weighting must be 'equal' or 'area'");
    if (ex.mcmc.burnin < 0 || ex.mcmc.iterations <= ex.mcmc.burnin)
        val.add("experiment.mcmc: iterations must exceed burnin");
    if (ex.mcmc.n_contours < 1) val.add("experiment.mcmc: n_contours must be positive");
    if (ex.months.empty()) val.add("experiment: 'months' is empty");
    if (ex.leads.empty()) val.add("experiment: 'leads' is empty");
    for (const auto& m : ex.methods)
        if (!kMethods.count(m)) val.add("experiment: unknown method '" + m + "'");
    if (ex.methods.empty()) val.add("experiment: 'methods' is empty");

    for (int m : ex.months)
        if (std::find(scn.forecast_months.begin(), scn.forecast_months.end(), m) ==
            scn.forecast_months.end())
            val.add("experiment: month " + std::to_string(m) +
                    " has no simulated ensemble (scenario.forecast_months)");
    for (double l : ex.leads) {
        bool found = false;
        for (double sl : scn.leads) found = found || std::abs(sl - l) < 1e-9;
        if (!found)
            val.add("experiment: lead " + std::to_string(l) +
                    " has no simulated ensemble (scenario.leads)");
        try {
            lead_key(l);
        } catch (const config_error& e) {
            for (const auto& it : e.items) val.add("experiment: " + it);
        }
    }

    const int gen_lo = ex.eval_lo - std::max(ex.weight_window, ex.sweep_max);
    if (gen_lo - ex.contour_window < scn.year_lo)
        val.add("config: training coverage starts " +
                std::to_string(gen_lo - ex.contour_window) + " but simulation starts " +
                std::to_string(scn.year_lo));

    const bool wants_persistence =
        std::find(ex.methods.begin(), ex.methods.end(), "persistence") != ex.methods.end();
    if (wants_persistence) {
        if (ex.persistence_start_year < scn.year_lo)
            val.add("experiment: persistence_start_year precedes the simulation");
        if (ex.eval_lo - ex.persistence_start_year < 3)
            val.add("experiment: persistence needs at least 3 training years before " +
                    std::to_string(ex.eval_lo));
        for (int m : ex.months) {
            for (double l : ex.leads) {
                int i = 0;
                try {
                    i = persistence_init_month(m, l);
                } catch (const config_error&) {
                    continue;  // lead already reported
                }
                if (std::find(scn.truth_months.begin(), scn.truth_months.end(), i) ==
                    scn.truth_months.end())
                    val.add("experiment: persistence for month " + std::to_string(m) +
                            " lead " + std::to_string(l) + " needs truth month " +
                            std::to_string(i));
                if (persistence_init_year(m, i, ex.persistence_start_year) < scn.year_lo)
                    val.add("experiment: persistence initialization predates the simulation "
                            "for month " +
                            std::to_string(m));
            }
        }
    }

    if (!val.items.empty()) throw config_error(val.items);
    return cfg;
}

// ---- stage scaffolding ----------------------------------------------------

namespace {

void resolve_line_counts(std::vector<RegionSpec>& specs, const CellMask& mask) {
    std::vector<double> area(specs.size(), 0.0);
    double amax = 0.0;
    for (std::size_t r = 0; r < specs.size(); ++r) {
        for (std::size_t s = 0; s < mask.region.size(); ++s)
            if (mask.region[s] == specs[r].id) area[r] += mask.area[s];
        amax = std::max(amax, area[r]);
    }
    if (!(amax > 0.0)) throw config_error({"no region has any ocean cells"});
    for (std::size_t r = 0; r < specs.size(); ++r)
        if (specs[r].n_lines <= 0)
            specs[r].n_lines = static_cast<int>(
                std::max<long>(10, std::lround(90.0 * area[r] / amax)));
}

struct StageContext {
    CellMask mask;
    std::vector<RegionSpec> specs;
    std::vector<RegionGeometry> geoms;
};

StageContext make_context(const PipelineConfig& cfg) {
    const auto mpath = sim_mask_path(sim_dir(cfg));
    ByteField mf = io::read_byte_field(mpath);
    if (!(mf.grid == cfg.grid))
        throw mismatch_error("mask grid at " + mpath.string() + " differs from the config");
    StageContext ctx{CellMask::from_field(mf), cfg.regions, {}};
    resolve_line_counts(ctx.specs, ctx.mask);
    for (const auto& sp : ctx.specs) ctx.geoms.push_back(build_region_geometry(ctx.mask, sp));
    return ctx;
}

std::vector<double> lengths_from_binary(const RegionGeometry& geom, const ByteField& field) {
    const auto pi = proportions_from_field(geom, field);
    std::vector<double> len(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        len[i] = length_from_proportion(geom.lines[i], pi[i]);
    return len;
}

// per-region mean member edge, in km per line
std::vector<std::vector<double>> ensemble_mean_lengths(const PipelineConfig& cfg,
                                                       const StageContext& ctx, int year,
                                                       int month, double lead) {
    std::vector<std::vector<double>> mean(ctx.geoms.size());
    for (std::size_t r = 0; r < ctx.geoms.size(); ++r)
        mean[r].assign(ctx.geoms[r].lines.size(), 0.0);
    for (int k = 0; k < cfg.scenario.members; ++k) {
        const ByteField f =
            io::read_byte_field(member_path(sim_dir(cfg), year, month, lead, k));
        for (std::size_t r = 0; r < ctx.geoms.size(); ++r) {
            const auto len = lengths_from_binary(ctx.geoms[r], f);
            for (std::size_t i = 0; i < len.size(); ++i) mean[r][i] += len[i];
        }
    }
    for (auto& region : mean)
        for (double& x : region) x /= cfg.scenario.members;
    return mean;
}

std::vector<FixedLength> override_lengths(const RegionGeometry& geom) {
    std::vector<FixedLength> fx;
    for (auto [line, v] : geom.fixed_overrides) {
        if (line < 0 || static_cast<std::size_t>(line) >= geom.lines.size())
            throw config_error({"fixed override line " + std::to_string(line) +
                                " out of range"});
        fx.push_back({line, length_from_proportion(geom.lines[line], static_cast<double>(v))});
    }
    return fx;
}

} // namespace

std::vector<double> evaluation_weights(const CellMask& mask) {
    std::vector<double> w(mask.region.size(), 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s)
        if (mask.region[s] >= 0) total += mask.area[s];
    if (!(total > 0.0)) throw mismatch_error("no region ocean cells to evaluate");
    for (std::size_t s = 0; s < w.size(); ++s)
        if (mask.region[s] >= 0) w[s] = mask.area[s] / total;
    return w;
}

// ---- paths -----------------------------------------------------------------

std::filesystem::path shift_csv_path(const PipelineConfig& cfg, int year, int month, double lead,
                                     int region) {
    return cfg.out / "shift" / std::to_string(year) / month_dir(month) / lead_label(lead) /
           ("region_" + std::to_string(region) + ".csv");
}

std::filesystem::path posterior_json_path(const PipelineConfig& cfg, int year, int month,
                                          double lead, int region) {
    return cfg.out / "contour" / std::to_string(year) / month_dir(month) / lead_label(lead) /
           ("region_" + std::to_string(region)) / "posterior.json";
}

std::filesystem::path contour_prob_path(const PipelineConfig& cfg, int year, int month,
                                        double lead) {
    return cfg.out / "generate" / std::to_string(year) / month_dir(month) / lead_label(lead) /
           "contour_prob.json";
}

std::filesystem::path clim_prob_path(const PipelineConfig& cfg, int year, int month) {
    return cfg.out / "generate" / std::to_string(year) / month_dir(month) / "clim_prob.json";
}

std::filesystem::path clim_binary_path(const PipelineConfig& cfg, int year, int month) {
    return cfg.out / "generate" / std::to_string(year) / month_dir(month) / "clim_binary.json";
}

std::filesystem::path weights_csv_path(const PipelineConfig& cfg) {
    return cfg.out / "weights" / "weights.csv";
}

std::filesystem::path forecast_dir(const PipelineConfig& cfg, int year, int month, double lead) {
    return cfg.out / "forecast" / std::to_string(year) / month_dir(month) / lead_label(lead);
}

std::filesystem::path eval_dir(const PipelineConfig& cfg) { return cfg.out / "eval"; }

// ---- stages ----------------------------------------------------------------

void stage_simulate(const PipelineConfig& cfg) {
    log_info("simulate: writing synthetic fields under " + sim_dir(cfg).string());
    const ByteField mf = scenario_mask_field(cfg.scenario, cfg.grid);
    const CellMask mask = CellMask::from_field(mf);
    auto specs = cfg.regions;
    resolve_line_counts(specs, mask);
    run_simulation(cfg.scenario, cfg.grid, specs, sim_dir(cfg), cfg.seed);
    log_info("simulate: done");
}

void stage_fit_shift(const PipelineConfig& cfg) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const int P = ex.contour_window;
    const int gen_lo = first_generated_year(cfg);

    for (int m : ex.months) {
        std::map<int, std::vector<std::vector<double>>> obs_cache;  // year -> region -> line
        auto obs_for = [&](int year) -> const std::vector<std::vector<double>>& {
            auto it = obs_cache.find(year);
            if (it != obs_cache.end()) return it->second;
            const ByteField b = io::read_byte_field(truth_binary_path(sim_dir(cfg), year, m));
            std::vector<std::vector<double>> per;
            for (const auto& g : ctx.geoms) per.push_back(lengths_from_binary(g, b));
            return obs_cache.emplace(year, std::move(per)).first->second;
        };
        for (double lead : ex.leads) {
            std::map<int, std::vector<std::vector<double>>> ens_cache;
            auto ens_for = [&](int year) -> const std::vector<std::vector<double>>& {
                auto it = ens_cache.find(year);
                if (it != ens_cache.end()) return it->second;
                return ens_cache.emplace(year, ensemble_mean_lengths(cfg, ctx, year, m, lead))
                    .first->second;
            };
            for (int t = gen_lo; t <= ex.eval_hi; ++t) {
                log_debug("fit-shift " + tuple_label(t, m, lead));
                for (std::size_t r = 0; r < ctx.geoms.size(); ++r) {
                    const auto& geom = ctx.geoms[r];
                    LengthSeries train;
                    for (int ty = t - P; ty <= t - 1; ++ty) {
                        train.years.push_back(ty);
                        train.obs.push_back(obs_for(ty)[r]);
                        train.ens.push_back(ens_for(ty)[r]);
                    }
                    const auto& ens_now = ens_for(t)[r];
                    const auto shifted =
                        contour_shift(geom, train, ens_now, t, override_lengths(geom));
                    std::vector<std::vector<std::string>> rows;
                    for (std::size_t i = 0; i < shifted.size(); ++i)
                        rows.push_back(
                            {std::to_string(i), io::csv_double(ens_now[i]),
                             io::csv_double(shifted[i]),
                             io::csv_double(proportion_from_length(geom.lines[i], shifted[i]))});
                    io::write_csv(shift_csv_path(cfg, t, m, lead, ctx.specs[r].id),
                                  {"line", "ens_len_km", "shift_len_km", "pi_cs"}, rows);
                }
            }
        }
    }
    log_info("fit-shift: done");
}

void stage_fit_contour(const PipelineConfig& cfg) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const int P = ex.contour_window;
    const int gen_lo = first_generated_year(cfg);

    for (int m : ex.months) {
        std::map<int, std::vector<std::vector<double>>> pi_cache;  // year -> region -> line
        auto pi_for = [&](int year) -> const std::vector<std::vector<double>>& {
            auto it = pi_cache.find(year);
            if (it != pi_cache.end()) return it->second;
            const ByteField b = io::read_byte_field(truth_binary_path(sim_dir(cfg), year, m));
            std::vector<std::vector<double>> per;
            for (const auto& g : ctx.geoms) per.push_back(proportions_from_field(g, b));
            return pi_cache.emplace(year, std::move(per)).first->second;
        };
        for (double lead : ex.leads) {
            for (int t = gen_lo; t <= ex.eval_hi; ++t) {
                for (std::size_t r = 0; r < ctx.geoms.size(); ++r) {
                    const auto& geom = ctx.geoms[r];
                    const int id = ctx.specs[r].id;
                    log_debug("fit-contour " + tuple_label(t, m, lead) + " region " +
                              std::to_string(id));

                    std::vector<std::vector<double>> train_pi;
                    for (int ty = t - P; ty <= t - 1; ++ty) train_pi.push_back(pi_for(ty)[r]);
                    const FixedRegistry fixed = detect_fixed_lines(geom, train_pi);

                    const io::CsvTable shift =
                        io::read_csv(shift_csv_path(cfg, t, m, lead, id));
                    const std::size_t pcol = shift.column("pi_cs");
                    if (shift.rows.size() != geom.lines.size())
                        throw mismatch_error("shift table row count does not match lines");
                    std::vector<double> pi_cs(geom.lines.size());
                    for (std::size_t i = 0; i < pi_cs.size(); ++i)
                        pi_cs[i] = std::stod(shift.rows[i][pcol]);

                    const PriorSpec prior = build_prior(geom, fixed, pi_cs, ex.mcmc);
                    const std::uint64_t seed =
                        seed_for(cfg, {10, static_cast<std::uint64_t>(id),
                                       static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(m),
                                       static_cast<std::uint64_t>(lead_key(lead))});
                    const ContourPosterior post =
                        fit_posterior(geom, fixed, train_pi, prior, ex.mcmc, seed);

                    const auto jpath = posterior_json_path(cfg, t, m, lead, id);
                    ordered_json pj;
                    pj["region"] = id;
                    pj["year"] = t;
                    pj["month"] = m;
                    pj["lead"] = lead;
                    pj["kind"] =
                        post.kind == ContourPosterior::Kind::Fitted ? "fitted" : "constant";
                    pj["fixed"] = post.fixed.value;
                    pj["modeled"] = post.fixed.modeled;
                    pj["mu_mean"] = post.mu_mean;
                    pj["sigma_mean"] = post.sigma_mean;
                    pj["kappa_mean"] = post.kappa_mean;
                    pj["param_names"] = post.param_names;
                    pj["accept_rate"] = post.accept_rate;
                    pj["iterations"] = post.cfg.iterations;
                    pj["burnin"] = post.cfg.burnin;
                    pj["seed"] = post.seed;
                    io::write_text_atomic(jpath, pj.dump(2) + "\n");
                    export_traces(post, jpath.parent_path() / "traces");
                }
            }
        }
    }
    log_info("fit-contour: done");
}

namespace {

ContourPosterior load_posterior(const std::filesystem::path& jpath, const RegionGeometry& geom,
                                const ModelConfig& mc) {
    json pj;
    try {
        pj = json::parse(io::read_text(jpath));
    } catch (const json::exception& e) {
        throw io_error("cannot parse " + jpath.string() + ": " + e.what());
    }
    ContourPosterior post;
    post.geom = geom;
    post.cfg = mc;
    try {
        post.kind = pj.at("kind").get<std::string>() == "constant"
                        ? ContourPosterior::Kind::Constant
                        : ContourPosterior::Kind::Fitted;
        post.fixed.value = pj.at("fixed").get<std::vector<int>>();
        post.fixed.modeled = pj.at("modeled").get<std::vector<std::size_t>>();
        post.mu_mean = pj.at("mu_mean").get<std::vector<double>>();
        post.sigma_mean = pj.at("sigma_mean").get<std::vector<double>>();
        post.kappa_mean = pj.at("kappa_mean").get<double>();
    } catch (const json::exception& e) {
        throw io_error("posterior file " + jpath.string() + " is incomplete: " + e.what());
    }
    if (post.fixed.value.size() != geom.lines.size())
        throw mismatch_error("posterior at " + jpath.string() + " does not match the geometry");
    return post;
}

} // namespace

void stage_generate(const PipelineConfig& cfg) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const int P = ex.contour_window;
    const int gen_lo = first_generated_year(cfg);
    constexpr double qnan = std::numeric_limits<double>::quiet_NaN();

    for (int m : ex.months) {
        // climatology shares the contour training window and ignores lead
        std::map<int, ByteField> obs_cache;
        auto obs_for = [&](int year) -> const ByteField& {
            auto it = obs_cache.find(year);
            if (it != obs_cache.end()) return it->second;
            return obs_cache
                .emplace(year, io::read_byte_field(truth_binary_path(sim_dir(cfg), year, m)))
                .first->second;
        };
        for (int t = gen_lo; t <= ex.eval_hi; ++t) {
            std::vector<ByteField> window;
            for (int ty = t - P; ty <= t - 1; ++ty) window.push_back(obs_for(ty));
            const FieldTime time{t, m, 0.0};
            io::write_field(clim_prob_path(cfg, t, m), climatology_probability(window, time));
            io::write_field(clim_binary_path(cfg, t, m), climatology_binary(window, time));
        }

        for (double lead : ex.leads) {
            for (int t = gen_lo; t <= ex.eval_hi; ++t) {
                log_debug("generate " + tuple_label(t, m, lead));
                RealField prob;
                prob.grid = cfg.grid;
                prob.kind = FieldKind::Probability;
                prob.time = {t, m, lead};
                prob.v.assign(cfg.grid.size(), qnan);
                for (std::size_t s = 0; s < prob.v.size(); ++s)
                    if (ctx.mask.ocean(s)) prob.v[s] = 0.0;

                for (std::size_t r = 0; r < ctx.geoms.size(); ++r) {
                    const int id = ctx.specs[r].id;
                    ContourPosterior post =
                        load_posterior(posterior_json_path(cfg, t, m, lead, id), ctx.geoms[r],
                                       ex.mcmc);
                    if (post.fixed.all_fixed_at(0)) continue;  // nothing to draw
                    const std::uint64_t seed =
                        seed_for(cfg, {11, static_cast<std::uint64_t>(id),
                                       static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(m),
                                       static_cast<std::uint64_t>(lead_key(lead))});
                    const GeneratedContours gen =
                        generate_contours(post, ex.mcmc.n_contours, seed);
                    const RealField rp =
                        contour_probability_field(gen.contours, ctx.mask, prob.time);
                    for (std::size_t s = 0; s < prob.v.size(); ++s)
                        if (ctx.mask.region[s] == id) prob.v[s] = rp.v[s];
                }
                io::write_field(contour_prob_path(cfg, t, m, lead), prob);
            }
        }
    }
    log_info("generate: done");
}

namespace {

std::vector<Triple> weight_triples(const PipelineConfig& cfg, const CellMask& mask,
                                   const std::vector<double>& w, int month, double lead,
                                   int eval_year, int window) {
    std::vector<Triple> triples;
    for (int ty = eval_year - window; ty <= eval_year - 1; ++ty) {
        const RealField gp = io::read_real_field(contour_prob_path(cfg, ty, month, lead));
        const RealField gc = io::read_real_field(clim_prob_path(cfg, ty, month));
        const ByteField obs =
            io::read_byte_field(truth_binary_path(sim_dir(cfg), ty, month));
        if (!(gp.grid == mask.grid) || !(gc.grid == mask.grid) || !(obs.grid == mask.grid))
            throw mismatch_error("weight training fields on different grids");
        for (std::size_t s = 0; s < w.size(); ++s) {
            if (w[s] <= 0.0) continue;
            if (std::isnan(gp.v[s]) || std::isnan(gc.v[s]) || obs.v[s] == kByteSentinel)
                throw mismatch_error("weight training fields have gaps over region ocean");
            triples.push_back({gp.v[s], gc.v[s], obs.v[s] == 1 ? 1 : 0, w[s]});
        }
    }
    return triples;
}

} // namespace

void stage_fit_weights(const PipelineConfig& cfg) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const auto w = evaluation_weights(ctx.mask);

    std::vector<std::vector<std::string>> rows;
    for (int m : ex.months) {
        for (double lead : ex.leads) {
            for (int t = ex.eval_lo; t <= ex.eval_hi; ++t) {
                log_debug("fit-weights " + tuple_label(t, m, lead));
                const auto triples =
                    weight_triples(cfg, ctx.mask, w, m, lead, t, ex.weight_window);
                const WeightFit fit = fit_weight(triples);
                rows.push_back({std::to_string(m), io::csv_double(lead), std::to_string(t),
                                io::csv_double(fit.w), std::to_string(fit.n_used),
                                std::to_string(fit.iterations), io::csv_double(fit.loglik)});
            }
        }
    }
    io::write_csv(weights_csv_path(cfg),
                  {"month", "lead", "year", "w", "n_triples", "iterations", "final_loglik"},
                  rows);
    log_info("fit-weights: done");
}

namespace {

std::map<std::tuple<int, int, int>, double> read_weights(const PipelineConfig& cfg) {
    const io::CsvTable t = io::read_csv(weights_csv_path(cfg));
    const std::size_t mc = t.column("month"), lc = t.column("lead"), yc = t.column("year"),
                      wc = t.column("w");
    std::map<std::tuple<int, int, int>, double> out;
    for (const auto& row : t.rows)
        out[{std::stoi(row[mc]), lead_key(std::stod(row[lc])), std::stoi(row[yc])}] =
            std::stod(row[wc]);
    return out;
}

} // namespace

void stage_forecast(const PipelineConfig& cfg) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const auto weights = read_weights(cfg);
    const bool wants_persistence =
        std::find(ex.methods.begin(), ex.methods.end(), "persistence") != ex.methods.end();

    for (int m : ex.months) {
        for (double lead : ex.leads) {
            // persistence is refit per evaluation year on an expanding window
            const int init_m = persistence_init_month(m, lead);
            for (int t = ex.eval_lo; t <= ex.eval_hi; ++t) {
                log_debug("forecast " + tuple_label(t, m, lead));
                const auto dir = forecast_dir(cfg, t, m, lead);
                const FieldTime time{t, m, lead};

                RealField gp = io::read_real_field(contour_prob_path(cfg, t, m, lead));
                RealField gc = io::read_real_field(clim_prob_path(cfg, t, m));
                gp.time = time;
                gc.time = time;
                io::write_field(dir / "contour_prob.json", gp);
                io::write_field(dir / "clim_prob.json", gc);
                ByteField gcb = io::read_byte_field(clim_binary_path(cfg, t, m));
                gcb.time = time;
                io::write_field(dir / "clim_binary.json", gcb);

                const auto wit = weights.find({m, lead_key(lead), t});
                if (wit == weights.end())
                    throw io_error("no fitted weight for " + tuple_label(t, m, lead));
                RealField mcf = mixture_field(wit->second, gp, gc);
                mcf.time = time;
                io::write_field(dir / "mcf_prob.json", mcf);
                ByteField mcfb = probability_to_binary(mcf);
                io::write_field(dir / "mcf_binary.json", mcfb);

                std::vector<ByteField> members;
                for (int k = 0; k < cfg.scenario.members; ++k)
                    members.push_back(
                        io::read_byte_field(member_path(sim_dir(cfg), t, m, lead, k)));
                RealField ens_prob = ensemble_probability(members);
                ens_prob.time = time;
                io::write_field(dir / "ens_prob.json", ens_prob);
                io::write_field(dir / "ens_binary.json", ensemble_binary(members, time));

                if (!wants_persistence) continue;
                std::vector<RealField> cm, ci;
                std::vector<int> ym, yi;
                for (int ty = ex.persistence_start_year; ty <= t - 1; ++ty) {
                    const int tyi = persistence_init_year(m, init_m, ty);
                    cm.push_back(
                        io::read_real_field(truth_conc_path(sim_dir(cfg), ty, m)));
                    ci.push_back(
                        io::read_real_field(truth_conc_path(sim_dir(cfg), tyi, init_m)));
                    ym.push_back(ty);
                    yi.push_back(tyi);
                }
                const PersistenceFit fit = fit_persistence(cm, ym, ci, yi, m, init_m);
                const int ti = persistence_init_year(m, init_m, t);
                const RealField obs_init =
                    io::read_real_field(truth_conc_path(sim_dir(cfg), ti, init_m));
                RealField pc = predict_persistence_concentration(fit, obs_init, t);
                pc.time = time;
                io::write_field(dir / "persist_conc.json", pc);
                ByteField pb = threshold_concentration(pc, 0.15);
                pb.time = time;
                io::write_field(dir / "persist_binary.json", pb);
                for (const auto& [name, field] : persistence_fit_fields(fit))
                    io::write_field(dir / "persist_fit" / (name + ".json"), field);
            }
        }
    }
    log_info("forecast: done");
}

namespace {

struct ScoreKey {
    std::string method;
    int month;
    int lead2;  // doubled lead
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / v.size();
}

} // namespace

void stage_evaluate(const PipelineConfig& cfg, SweepRange sweep) {
    const StageContext ctx = make_context(cfg);
    const auto& ex = cfg.experiment;
    const auto w = evaluation_weights(ctx.mask);
    const auto edir = eval_dir(cfg);
    std::vector<std::string> gaps;

    // probability forecast file per method
    auto prob_file = [](const std::string& method) -> const char* {
        if (method == "mcf") return "mcf_prob.json";
        if (method == "contour") return "contour_prob.json";
        if (method == "climatology") return "clim_prob.json";
        if (method == "ensemble") return "ens_prob.json";
        return nullptr;
    };
    auto binary_file = [](const std::string& method) -> const char* {
        if (method == "mcf") return "mcf_binary.json";
        if (method == "climatology") return "clim_binary.json";
        if (method == "ensemble") return "ens_binary.json";
        if (method == "persistence") return "persist_binary.json";
        return nullptr;  // contour binary is derived below
    };

    std::vector<std::vector<std::string>> score_rows, binary_rows, rel_rows;
    std::map<std::pair<int, int>, std::map<std::string, std::vector<double>>> by_tuple,
        by_tuple_bin;  // (month, lead2) -> method -> yearly scores
    std::map<std::pair<int, int>, std::vector<double>> tuple_weights;

    for (int m : ex.months) {
        for (double lead : ex.leads) {
            const int l2 = lead_key(lead);
            std::map<std::string, ReliabilityAccumulator> rel;
            for (const auto& method : ex.methods)
                if (kProbMethods.count(method))
                    rel.emplace(method,
                                ReliabilityAccumulator(ex.reliability_bins,
                                                       ex.reliability_weighting == "area"));
            for (int t = ex.eval_lo; t <= ex.eval_hi; ++t) {
                const auto dir = forecast_dir(cfg, t, m, lead);
                ByteField obs;
                try {
                    obs = io::read_byte_field(truth_binary_path(sim_dir(cfg), t, m));
                } catch (const error& e) {
                    gaps.push_back(tuple_label(t, m, lead) + ": " + e.what());
                    continue;
                }
                for (const auto& method : ex.methods) {
                    try {
                        double score_prob = std::numeric_limits<double>::quiet_NaN();
                        double score_bin = std::numeric_limits<double>::quiet_NaN();
                        if (const char* pf = prob_file(method)) {
                            const RealField f = io::read_real_field(dir / pf);
                            score_prob = brier(f, obs, w);
                            rel.at(method).add(f, obs, w);
                            if (method == "contour")
                                score_bin = brier(probability_to_binary(f), obs, w);
                        }
                        if (const char* bf = binary_file(method)) {
                            const ByteField f = io::read_byte_field(dir / bf);
                            score_bin = brier(f, obs, w);
                            if (method == "persistence") score_prob = score_bin;
                        }
                        score_rows.push_back({method, std::to_string(m), io::csv_double(lead),
                                              std::to_string(t), io::csv_double(score_prob)});
                        binary_rows.push_back({method, std::to_string(m), io::csv_double(lead),
                                               std::to_string(t), io::csv_double(score_bin)});
                        by_tuple[{m, l2}][method].push_back(score_prob);
                        by_tuple_bin[{m, l2}][method].push_back(score_bin);
                    } catch (const error& e) {
                        gaps.push_back(tuple_label(t, m, lead) + " " + method + ": " +
                                       e.what());
                    }
                }
            }
            for (const auto& [method, acc] : rel) {
                for (const auto& b : acc.bins())
                    rel_rows.push_back({method, std::to_string(m), io::csv_double(lead),
                                        io::csv_double(b.lo), io::csv_double(b.hi),
                                        io::csv_double(b.mean_p), io::csv_double(b.freq),
                                        io::csv_double(b.weight), std::to_string(b.count)});
                try {
                    svg_reliability(edir / "svg" /
                                        ("reliability_" + method + "_m" + month_dir(m) + "_" +
                                         lead_label(lead) + ".svg"),
                                    method + " month " + std::to_string(m) + " lead " +
                                        lead_label(lead),
                                    acc.bins());
                } catch (const error& e) {
                    gaps.push_back(std::string("svg ") + method + ": " + e.what());
                }
            }
        }
    }

    io::write_csv(edir / "scores.csv", {"method", "month", "lead", "year", "brier"}, score_rows);
    io::write_csv(edir / "scores_binary.csv", {"method", "month", "lead", "year", "brier"},
                  binary_rows);
    io::write_csv(edir / "reliability.csv",
                  {"method", "month", "lead", "bin_lo", "bin_hi", "mean_p", "freq", "weight",
                   "count"},
                  rel_rows);

    // weights summary for the heatmap
    std::map<std::pair<int, int>, std::vector<double>> wsum;
    try {
        const auto weights = read_weights(cfg);
        for (const auto& [key, value] : weights)
            wsum[{std::get<0>(key), std::get<1>(key)}].push_back(value);
    } catch (const error& e) {
        gaps.push_back(std::string("weights: ") + e.what());
    }

    ordered_json summary;
    summary["eval_years"] = {ex.eval_lo, ex.eval_hi};
    summary["months"] = ex.months;
    summary["leads"] = ex.leads;
    summary["methods"] = ex.methods;
    summary["brier_prob"] = ordered_json::object();
    summary["brier_binary"] = ordered_json::object();
    for (const auto& method : ex.methods) {
        ordered_json per, per_bin;
        std::vector<double> all, all_bin;
        ordered_json tuples = ordered_json::array(), tuples_bin = ordered_json::array();
        std::map<std::pair<int, int>, std::vector<double>> season, season_bin;
        for (const auto& [key, methods] : by_tuple) {
            auto it = methods.find(method);
            if (it == methods.end()) continue;
            const double mn = mean_of(it->second);
            tuples.push_back({{"month", key.first},
                              {"lead", key.second / 2.0},
                              {"mean_brier", mn}});
            all.insert(all.end(), it->second.begin(), it->second.end());
            auto& sv = season[{season_of(key.first), key.second}];
            sv.insert(sv.end(), it->second.begin(), it->second.end());
        }
        for (const auto& [key, methods] : by_tuple_bin) {
            auto it = methods.find(method);
            if (it == methods.end()) continue;
            tuples_bin.push_back({{"month", key.first},
                                  {"lead", key.second / 2.0},
                                  {"mean_brier", mean_of(it->second)}});
            all_bin.insert(all_bin.end(), it->second.begin(), it->second.end());
        }
        per["overall"] = mean_of(all);
        per["by_tuple"] = tuples;
        ordered_json seasons = ordered_json::array();
        for (const auto& [key, v] : season)
            seasons.push_back({{"season", season_name(key.first)},
                               {"lead", key.second / 2.0},
                               {"mean_brier", mean_of(v)}});
        per["by_season"] = seasons;
        per_bin["overall"] = mean_of(all_bin);
        per_bin["by_tuple"] = tuples_bin;
        summary["brier_prob"][method] = per;
        summary["brier_binary"][method] = per_bin;
    }
    ordered_json wj = ordered_json::array();
    for (const auto& [key, v] : wsum)
        wj.push_back({{"month", key.first}, {"lead", key.second / 2.0}, {"mean_w", mean_of(v)}});
    summary["mean_weight"] = wj;
    summary["gaps"] = gaps;

    // training-window sweep for the blend weight
    if (sweep.active()) {
        if (sweep.hi > ex.sweep_max)
            throw config_error({"window sweep exceeds sweep_max; regenerate with a larger "
                                "sweep_max"});
        std::vector<std::vector<std::string>> sweep_rows;
        for (int win = sweep.lo; win <= sweep.hi; ++win) {
            std::vector<double> scores;
            for (int m : ex.months) {
                for (double lead : ex.leads) {
                    for (int t = ex.eval_lo; t <= ex.eval_hi; ++t) {
                        const auto triples =
                            weight_triples(cfg, ctx.mask, w, m, lead, t, win);
                        const WeightFit fit = fit_weight(triples);
                        RealField gp =
                            io::read_real_field(contour_prob_path(cfg, t, m, lead));
                        RealField gc = io::read_real_field(clim_prob_path(cfg, t, m));
                        const RealField mcf = mixture_field(fit.w, gp, gc);
                        const ByteField obs =
                            io::read_byte_field(truth_binary_path(sim_dir(cfg), t, m));
                        scores.push_back(brier(mcf, obs, w));
                    }
                }
            }
            sweep_rows.push_back(
                {std::to_string(win), io::csv_double(mean_of(scores))});
        }
        io::write_csv(edir / "window_sweep.csv", {"window", "mean_brier"}, sweep_rows);
        summary["window_sweep"] = {{"lo", sweep.lo}, {"hi", sweep.hi}};
    }

    io::write_text_atomic(edir / "summary.json", summary.dump(2) + "\n");

    // brier-vs-lead curves per month
    for (int m : ex.months) {
        std::vector<Series> series;
        for (const auto& method : ex.methods) {
            Series s{method, {}};
            for (double lead : ex.leads) {
                const auto it = by_tuple.find({m, lead_key(lead)});
                if (it == by_tuple.end()) continue;
                const auto mit = it->second.find(method);
                if (mit == it->second.end()) continue;
                s.second.emplace_back(lead, mean_of(mit->second));
            }
            if (!s.second.empty()) series.push_back(std::move(s));
        }
        if (!series.empty())
            svg_lines(edir / "svg" / ("brier_vs_lead_m" + month_dir(m) + ".svg"),
                      "mean score by lead, month " + std::to_string(m), "lead (months)",
                      "mean score", series);
    }
    if (!wsum.empty()) {
        std::vector<std::string> row_labels, col_labels;
        for (int m : ex.months) row_labels.push_back("m" + month_dir(m));
        for (double l : ex.leads) col_labels.push_back(lead_label(l));
        std::vector<std::vector<double>> vals;
        for (int m : ex.months) {
            std::vector<double> row;
            for (double l : ex.leads) {
                const auto it = wsum.find({m, lead_key(l)});
                row.push_back(it == wsum.end() ? 0.0 : mean_of(it->second));
            }
            vals.push_back(std::move(row));
        }
        svg_heatmap(edir / "svg" / "weights_heatmap.svg", "blend weight on the edge model",
                    row_labels, col_labels, vals);
    }

    log_info("evaluate: done (" + std::to_string(score_rows.size()) + " scores, " +
             std::to_string(gaps.size()) + " gaps)");
}

// ---- CLI -------------------------------------------------------------------

namespace {

SweepRange parse_sweep(const std::string& s) {
    const auto pos = s.find("..");
    if (pos == std::string::npos)
        throw config_error({"--window-sweep expects A..B (e.g. 1..5)"});
    SweepRange r;
    try {
        r.lo = std::stoi(s.substr(0, pos));
        r.hi = std::stoi(s.substr(pos + 2));
    } catch (const std::exception&) {
        throw config_error({"--window-sweep expects integer bounds"});
    }
    if (!r.active()) throw config_error({"--window-sweep bounds must satisfy 1 <= A <= B"});
    return r;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"contour-based probabilistic sea ice edge forecasting"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "run configuration JSON")->required();
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--seed", seed, "override the configured seed")
        ->each([&](const std::string&) { seed_set = true; });
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (default: all cores)");
    std::string out_override;
    app.add_option("--out", out_override, "override the configured output directory");
    std::string methods_csv;
    app.add_option("--methods", methods_csv, "comma-separated method list");
    std::string sweep_arg;

    const std::vector<std::string> stages = {"simulate",    "fit-shift", "fit-contour",
                                             "generate",    "fit-weights", "forecast",
                                             "evaluate",    "all"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& name : stages) {
        CLI::App* sc = app.add_subcommand(name);
        sc->fallthrough();
        if (name == "evaluate" || name == "all")
            sc->add_option("--window-sweep", sweep_arg, "blend-weight window sweep A..B");
        subs[name] = sc;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "{\"error\":\"cli\",\"message\":" << json(std::string(e.what())).dump()
                  << "}" << std::endl;
        return 2;
    }

    try {
        PipelineConfig cfg = load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_override.empty()) cfg.out = out_override;
        if (!methods_csv.empty()) {
            cfg.experiment.methods = split_csv(methods_csv);
            for (const auto& m : cfg.experiment.methods)
                if (!kMethods.count(m)) throw config_error({"unknown method '" + m + "'"});
        }
        if (jobs > 0) par::set_threads(jobs);
        SweepRange sweep;
        if (!sweep_arg.empty()) sweep = parse_sweep(sweep_arg);

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate" || cmd == "all") stage_simulate(cfg);
        if (cmd == "fit-shift" || cmd == "all") stage_fit_shift(cfg);
        if (cmd == "fit-contour" || cmd == "all") stage_fit_contour(cfg);
        if (cmd == "generate" || cmd == "all") stage_generate(cfg);
        if (cmd == "fit-weights" || cmd == "all") stage_fit_weights(cfg);
        if (cmd == "forecast" || cmd == "all") stage_forecast(cfg);
        if (cmd == "evaluate" || cmd == "all") stage_evaluate(cfg, sweep);
        return 0;
    } catch (const config_error& e) {
        std::cerr << "{\"error\":\"config\",\"message\":" << json(std::string(e.what())).dump()
                  << "}" << std::endl;
        return 2;
    } catch (const error& e) {
        std::cerr << "{\"error\":\"run\",\"message\":" << json(std::string(e.what())).dump()
                  << "}" << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"internal\",\"message\":"
                  << json(std::string(e.what())).dump() << "}" << std::endl;
        return 1;
    }
}

} // namespace icecontour
