#include "icecontour/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icecontour/errors.hpp"
#include "icecontour/parallel.hpp"
#include "icecontour/stats.hpp"

namespace icecontour {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_binary_stack(const std::vector<ByteField>& fields, const char* what) {
    if (fields.empty()) throw mismatch_error(std::string(what) + " needs at least one field");
    const auto& first = fields.front();
    for (const auto& f : fields) {
        if (!(f.grid == first.grid)) throw mismatch_error(std::string(what) + ": grid mismatch");
        if (f.v.size() != first.v.size())
            throw mismatch_error(std::string(what) + ": size mismatch");
        for (std::size_t s = 0; s < f.v.size(); ++s) {
            if (f.v[s] != 0 && f.v[s] != 1 && f.v[s] != kByteSentinel)
                throw mismatch_error(std::string(what) + ": value outside {0,1,sentinel}");
            if ((f.v[s] == kByteSentinel) != (first.v[s] == kByteSentinel))
                throw mismatch_error(std::string(what) + ": fields disagree on coverage");
        }
    }
}

} // namespace

RealField climatology_probability(const std::vector<ByteField>& window, FieldTime time) {
    check_binary_stack(window, "climatology");
    RealField out;
    out.grid = window.front().grid;
    out.kind = FieldKind::Probability;
    out.time = time;
    out.v.assign(window.front().v.size(), kNaN);
    for (std::size_t s = 0; s < out.v.size(); ++s) {
        if (window.front().v[s] == kByteSentinel) continue;
        int cnt = 0;
        for (const auto& f : window) cnt += f.v[s];
        out.v[s] = static_cast<double>(cnt) / static_cast<double>(window.size());
    }
    return out;
}

ByteField climatology_binary(const std::vector<ByteField>& window, FieldTime time) {
    check_binary_stack(window, "climatology");
    const std::size_t P = window.size();
    const std::size_t need = (P + 1) / 2;  // ceil(P/2)
    ByteField out;
    out.grid = window.front().grid;
    out.kind = FieldKind::Binary;
    out.time = time;
    out.v.assign(window.front().v.size(), kByteSentinel);
    for (std::size_t s = 0; s < out.v.size(); ++s) {
        if (window.front().v[s] == kByteSentinel) continue;
        std::size_t cnt = 0;
        for (const auto& f : window) cnt += f.v[s];
        out.v[s] = cnt >= need ? 1 : 0;
    }
    return out;
}

ByteField ensemble_binary(const std::vector<ByteField>& members, FieldTime time) {
    check_binary_stack(members, "ensemble");
    const std::size_t M = members.size();
    ByteField out;
    out.grid = members.front().grid;
    out.kind = FieldKind::Binary;
    out.time = time;
    out.v.assign(members.front().v.size(), kByteSentinel);
    for (std::size_t s = 0; s < out.v.size(); ++s) {
        if (members.front().v[s] == kByteSentinel) continue;
        std::size_t cnt = 0;
        for (const auto& f : members) cnt += f.v[s];
        out.v[s] = 2 * cnt >= M ? 1 : 0;  // tie is ice
    }
    return out;
}

ByteField probability_to_binary(const RealField& prob) {
    if (prob.kind != FieldKind::Probability)
        throw mismatch_error("binary conversion expects a probability field");
    ByteField out;
    out.grid = prob.grid;
    out.kind = FieldKind::Binary;
    out.time = prob.time;
    out.v.assign(prob.v.size(), kByteSentinel);
    for (std::size_t s = 0; s < prob.v.size(); ++s)
        if (!std::isnan(prob.v[s])) out.v[s] = prob.v[s] >= 0.5 ? 1 : 0;
    return out;
}

int persistence_init_month(int month, double lead) {
    if (month < 1 || month > 12) throw config_error({"month must lie in 1..12"});
    if (!(lead >= 0.5)) throw config_error({"lead must be at least 0.5 months"});
    // Initialization happens (lead - 0.5) whole months before the start of
    // the forecast month; the last complete month is one earlier still.
    const int back = static_cast<int>(std::lround(lead - 0.5)) + 1;
    int i = month - back;
    while (i < 1) i += 12;
    return i;
}

int persistence_init_year(int month, int init_month, int year) {
    return init_month <= month ? year : year - 1;
}

namespace {

PersistenceFit fit_persistence_impl(const std::vector<RealField>& conc_m,
                                    const std::vector<int>& years_m,
                                    const std::vector<RealField>& conc_i,
                                    const std::vector<int>& years_i, int month, int init_month,
                                    bool parallel) {
    if (conc_m.size() < 3) throw fit_error("persistence needs at least 3 training years");
    if (conc_m.size() != years_m.size() || conc_i.size() != years_i.size() ||
        conc_m.size() != conc_i.size())
        throw mismatch_error("persistence series are not paired");
    const GridSpec grid = conc_m.front().grid;
    for (const auto& f : conc_m)
        if (!(f.grid == grid)) throw mismatch_error("persistence fields on different grids");
    for (const auto& f : conc_i)
        if (!(f.grid == grid)) throw mismatch_error("persistence fields on different grids");
    for (std::size_t k = 1; k < years_m.size(); ++k)
        if (years_m[k] <= years_m[k - 1])
            throw mismatch_error("persistence training years must increase");

    const std::size_t T = conc_m.size();
    PersistenceFit fit;
    fit.grid = grid;
    fit.month = month;
    fit.init_month = init_month;
    fit.year_lo = years_m.front();
    fit.year_hi = years_m.back();
    fit.alpha_m.assign(grid.size(), kNaN);
    fit.beta_m.assign(grid.size(), kNaN);
    fit.alpha_i.assign(grid.size(), kNaN);
    fit.beta_i.assign(grid.size(), kNaN);
    fit.rho.assign(grid.size(), kNaN);

    std::vector<double> xm(years_m.begin(), years_m.end());
    std::vector<double> xi(years_i.begin(), years_i.end());

    auto body = [&](std::size_t s) {
        bool covered = true;
        for (std::size_t k = 0; k < T && covered; ++k)
            covered = !std::isnan(conc_m[k].v[s]) && !std::isnan(conc_i[k].v[s]);
        if (!covered) return;
        std::vector<double> ym(T), yi(T);
        for (std::size_t k = 0; k < T; ++k) {
            ym[k] = conc_m[k].v[s];
            yi[k] = conc_i[k].v[s];
        }
        const auto fm = stats::ols_fit(xm, ym);
        const auto fi = stats::ols_fit(xi, yi);
        std::vector<double> em(T), ei(T);
        for (std::size_t k = 0; k < T; ++k) {
            em[k] = ym[k] - fm.at(xm[k]);
            ei[k] = yi[k] - fi.at(xi[k]);
        }
        double r = 0.0;
        try {
            r = stats::pearson(em, ei);
        } catch (const fit_error&) {
            r = 0.0;  // constant residuals: correlation undefined
        }
        if (!std::isfinite(r)) r = 0.0;
        fit.alpha_m[s] = fm.intercept;
        fit.beta_m[s] = fm.slope;
        fit.alpha_i[s] = fi.intercept;
        fit.beta_i[s] = fi.slope;
        fit.rho[s] = std::clamp(r, -1.0, 1.0);
    };
    if (parallel) par::parallel_for(grid.size(), body);
    else par::serial_for(grid.size(), body);
    return fit;
}

} // namespace

PersistenceFit fit_persistence(const std::vector<RealField>& conc_m,
                               const std::vector<int>& years_m,
                               const std::vector<RealField>& conc_i,
                               const std::vector<int>& years_i, int month, int init_month) {
    return fit_persistence_impl(conc_m, years_m, conc_i, years_i, month, init_month, true);
}

PersistenceFit fit_persistence_serial(const std::vector<RealField>& conc_m,
                                      const std::vector<int>& years_m,
                                      const std::vector<RealField>& conc_i,
                                      const std::vector<int>& years_i, int month,
                                      int init_month) {
    return fit_persistence_impl(conc_m, years_m, conc_i, years_i, month, init_month, false);
}

RealField predict_persistence_concentration(const PersistenceFit& fit,
                                            const RealField& obs_init, int year) {
    if (!(obs_init.grid == fit.grid)) throw mismatch_error("initialization field grid mismatch");
    const int ti = persistence_init_year(fit.month, fit.init_month, year);
    RealField out;
    out.grid = fit.grid;
    out.kind = FieldKind::Concentration;
    out.time = {year, fit.month, 0.0};
    out.v.assign(fit.grid.size(), kNaN);
    for (std::size_t s = 0; s < out.v.size(); ++s) {
        if (std::isnan(fit.rho[s])) continue;
        if (std::isnan(obs_init.v[s]))
            throw mismatch_error("initialization field missing an ocean cell");
        const double trend = fit.alpha_m[s] + fit.beta_m[s] * year;
        const double anom = obs_init.v[s] - (fit.alpha_i[s] + fit.beta_i[s] * ti);
        out.v[s] = std::clamp(trend + anom * fit.rho[s], 0.0, 1.0);
    }
    return out;
}

ByteField predict_persistence(const PersistenceFit& fit, const RealField& obs_init, int year,
                              double tau) {
    return threshold_concentration(predict_persistence_concentration(fit, obs_init, year), tau);
}

std::vector<std::pair<std::string, RealField>> persistence_fit_fields(const PersistenceFit& fit) {
    auto make = [&](const std::vector<double>& v) {
        RealField f;
        f.grid = fit.grid;
        f.kind = FieldKind::Diagnostic;
        f.time = {fit.year_hi, fit.month, 0.0};
        f.v = v;
        return f;
    };
    return {{"alpha_m", make(fit.alpha_m)},
            {"beta_m", make(fit.beta_m)},
            {"alpha_i", make(fit.alpha_i)},
            {"beta_i", make(fit.beta_i)},
            {"rho", make(fit.rho)}};
}

} // namespace icecontour
