#include "icecontour/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include <json.hpp>

#include "icecontour/errors.hpp"
#include "icecontour/io.hpp"
#include "icecontour/model.hpp"
#include "icecontour/rng.hpp"
#include "icecontour/stats.hpp"

namespace icecontour {

namespace {

// RNG stream tags; every draw hangs off (seed, tag, region, year, month, ...)
enum : std::uint64_t {
    kStreamAnomaly = 1,
    kStreamJitter = 2,
    kStreamTruth = 3,
    kStreamConc = 4,
    kStreamPolynya = 5,
    kStreamShared = 6,
    kStreamMember = 7,
};

std::string month_dir(int month) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", month);
    return buf;
}

void check_rect(const std::array<int, 4>& r, const GridSpec& grid,
                std::vector<std::string>& bad) {
    if (r[0] < 0 || r[1] < 0 || r[2] >= static_cast<int>(grid.nrows) ||
        r[3] >= static_cast<int>(grid.ncols) || r[0] > r[2] || r[1] > r[3])
        bad.push_back("rectangle out of bounds or inverted");
}

} // namespace

int lead_key(double lead) {
    const long k = std::lround(lead * 2.0);
    if (std::abs(lead * 2.0 - static_cast<double>(k)) > 1e-9 || k < 1 || k % 2 == 0)
        throw config_error({"leads must be positive half-months (0.5, 1.5, ...)"});
    return static_cast<int>(k);
}

std::string lead_label(double lead) {
    const int k = lead_key(lead);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%dp%d", k / 2, (k % 2) * 5);
    return buf;
}

std::filesystem::path sim_mask_path(const std::filesystem::path& sim_dir) {
    return sim_dir / "mask.json";
}

std::filesystem::path truth_conc_path(const std::filesystem::path& sim_dir, int year, int month) {
    return sim_dir / "truth" / std::to_string(year) / month_dir(month) / "conc.json";
}

std::filesystem::path truth_binary_path(const std::filesystem::path& sim_dir, int year,
                                        int month) {
    return sim_dir / "truth" / std::to_string(year) / month_dir(month) / "binary.json";
}

std::filesystem::path member_path(const std::filesystem::path& sim_dir, int year, int month,
                                  double lead, int member) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "member_%03d", member);
    return sim_dir / "ens" / std::to_string(year) / month_dir(month) / lead_label(lead) /
           (std::string(buf) + ".json");
}

ByteField scenario_mask_field(const SyntheticScenario& scn, const GridSpec& grid) {
    std::vector<std::string> bad;
    for (const auto& r : scn.mask.land) check_rect(r, grid, bad);
    for (const auto& [id, r] : scn.mask.regions) {
        check_rect(r, grid, bad);
        if (id < 0 || id > 200) bad.push_back("region id out of range");
    }
    if (!bad.empty()) throw config_error(bad);

    ByteField f;
    f.grid = grid;
    f.kind = FieldKind::Mask;
    f.v.assign(grid.size(), kMaskOcean);
    for (const auto& r : scn.mask.land)
        for (int row = r[0]; row <= r[2]; ++row)
            for (int col = r[1]; col <= r[3]; ++col) f.v[grid.idx(row, col)] = kMaskLand;
    std::vector<int> owner(grid.size(), -1);
    for (const auto& [id, r] : scn.mask.regions) {
        for (int row = r[0]; row <= r[2]; ++row)
            for (int col = r[1]; col <= r[3]; ++col) {
                const std::size_t s = grid.idx(row, col);
                if (f.v[s] != kMaskOcean && f.v[s] < kMaskRegionBase) continue;
                if (owner[s] >= 0 && owner[s] != id)
                    bad.push_back("regions " + std::to_string(owner[s]) + " and " +
                                  std::to_string(id) + " overlap");
                owner[s] = id;
                f.v[s] = static_cast<std::uint8_t>(kMaskRegionBase + id);
            }
    }
    if (!bad.empty()) throw config_error(bad);
    return f;
}

namespace {

struct RegionSim {
    RegionGeometry geom;
    RegionTruth truth;
    std::vector<double> base;          // per-line mean curve
    std::vector<double> chol;          // correlation Cholesky, row-major n x n
    std::vector<std::size_t> cells;    // mask indices owned by the region
};

// Lower-triangular Cholesky of exp(-d/kappa) over all lines.
std::vector<double> correlation_chol(const RegionGeometry& geom, double kappa) {
    const std::size_t n = geom.lines.size();
    FixedRegistry allmod;
    allmod.value.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) allmod.modeled.push_back(i);
    auto dist = line_distances(geom, allmod);
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n * n; ++i) a[i] = std::exp(-dist[i] / kappa);
    // plain in-place Cholesky; matrix is tiny
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw fit_error("truth correlation is not positive definite");
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
    return a;
}

std::vector<double> correlated_draw(const std::vector<double>& chol, std::size_t n, Rng& rng) {
    std::vector<double> z(n), x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.next_normal();
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += chol[i * n + j] * z[j];
        x[i] = s;
    }
    return x;
}

std::vector<double> truth_lengths(const RegionSim& rs, const SyntheticScenario& scn, int year,
                                  int month, const Rng& root) {
    const std::size_t n = rs.geom.lines.size();
    const auto& tp = rs.truth;
    const auto rid = static_cast<std::uint64_t>(tp.region);
    const auto y = static_cast<std::uint64_t>(year);
    const auto m = static_cast<std::uint64_t>(month);

    Rng ra = root.derive({kStreamAnomaly, rid, y});
    Rng rj = root.derive({kStreamJitter, rid, y, m});
    Rng rt = root.derive({kStreamTruth, rid, y, m});
    const double anomaly = tp.anomaly_sd * ra.next_normal();
    const double jitter = tp.month_jitter * rj.next_normal();
    const double season =
        -tp.seasonal_amp * std::cos(2.0 * std::numbers::pi * (month - 9) / 12.0);
    const double trend = tp.trend_per_year * (year - scn.year_lo);
    const auto eta = correlated_draw(rs.chol, n, rt);

    std::vector<double> len(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rs.base[i] + season + trend + anomaly + jitter + tp.sigma_star * eta[i];
        len[i] = length_from_proportion(rs.geom.lines[i], stats::ilogit(x));
    }
    return len;
}

// lengths -> snapped, closed, repaired, rasterized; the result is OR-ed into
// `ice` over the region's own cells only
void render_edge(const RegionSim& rs, std::vector<double> len, const CellMask& mask,
                 std::vector<std::uint8_t>& ice) {
    len = snap_to_boundary(rs.geom, std::move(len));
    Contour c = repair_self_intersections(contour_from_lengths(rs.geom, len), rs.geom);
    ByteField r = rasterize(c, mask);
    for (std::size_t s : rs.cells)
        if (r.v[s] == 1) ice[s] = 1;
}

} // namespace

SimulationOutput run_simulation(const SyntheticScenario& scn, const GridSpec& grid,
                                const std::vector<RegionSpec>& regions,
                                const std::filesystem::path& out_dir, std::uint64_t seed) {
    std::vector<std::string> bad;
    if (scn.year_hi < scn.year_lo) bad.push_back("year range is inverted");
    if (scn.truth_months.empty()) bad.push_back("truth_months is empty");
    for (int m : scn.truth_months)
        if (m < 1 || m > 12) bad.push_back("truth month out of 1..12");
    for (int m : scn.forecast_months)
        if (std::find(scn.truth_months.begin(), scn.truth_months.end(), m) ==
            scn.truth_months.end())
            bad.push_back("forecast month " + std::to_string(m) + " has no truth series");
    if (scn.members < 1) bad.push_back("members must be positive");
    if (!(scn.polynya_rate >= 0.0 && scn.polynya_rate <= 1.0))
        bad.push_back("polynya_rate must lie in [0,1]");
    if (!(scn.ens.dispersion_factor > 0.0)) bad.push_back("dispersion_factor must be positive");
    for (const auto& rspec : regions) {
        bool found = false;
        for (const auto& t : scn.truth) found = found || t.region == rspec.id;
        if (!found) bad.push_back("region " + std::to_string(rspec.id) + " has no truth process");
    }
    if (!bad.empty()) throw config_error(bad);
    for (double l : scn.leads) lead_key(l);  // validates

    SimulationOutput out;
    const ByteField mask_field = scenario_mask_field(scn, grid);
    const CellMask mask = CellMask::from_field(mask_field);
    out.mask_path = sim_mask_path(out_dir);
    io::write_field(out.mask_path, mask_field);

    std::vector<RegionSim> sims;
    for (const auto& rspec : regions) {
        RegionSim rs;
        rs.geom = build_region_geometry(mask, rspec);
        for (const auto& t : scn.truth)
            if (t.region == rspec.id) rs.truth = t;
        rs.chol = correlation_chol(rs.geom, rs.truth.kappa_star);
        const std::size_t n = rs.geom.lines.size();
        rs.base.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            rs.base[i] = rs.truth.base_logit +
                         rs.truth.line_wiggle *
                             std::cos(4.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(n));
        for (std::size_t s = 0; s < mask.region.size(); ++s)
            if (mask.region[s] == rspec.id) rs.cells.push_back(s);
        sims.push_back(std::move(rs));
    }

    const Rng root(seed);
    constexpr double qnan = std::numeric_limits<double>::quiet_NaN();

    for (int year = scn.year_lo; year <= scn.year_hi; ++year) {
        for (int month : scn.truth_months) {
            std::vector<std::uint8_t> ice(grid.size(), 0);
            std::vector<std::vector<double>> lengths_by_region;
            for (const auto& rs : sims) {
                auto len = truth_lengths(rs, scn, year, month, root);
                lengths_by_region.push_back(len);
                render_edge(rs, std::move(len), mask, ice);
            }

            // polynya holes: a small opening inside the ice pack
            for (const auto& rs : sims) {
                Rng rp = root.derive({kStreamPolynya, static_cast<std::uint64_t>(rs.truth.region),
                                      static_cast<std::uint64_t>(year),
                                      static_cast<std::uint64_t>(month)});
                if (rp.next_uniform() >= scn.polynya_rate) continue;
                std::vector<std::size_t> icy;
                for (std::size_t s : rs.cells)
                    if (ice[s]) icy.push_back(s);
                if (icy.empty()) continue;
                const std::size_t center = icy[rp.next_below(icy.size())];
                const auto row = static_cast<int>(center / grid.ncols);
                const auto col = static_cast<int>(center % grid.ncols);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (!grid.in_bounds(row + dr, col + dc)) continue;
                        const std::size_t s = grid.idx(row + dr, col + dc);
                        if (mask.region[s] == rs.truth.region) ice[s] = 0;
                    }
            }

            ByteField binary;
            binary.grid = grid;
            binary.kind = FieldKind::Binary;
            binary.time = {year, month, 0.0};
            binary.v.assign(grid.size(), kByteSentinel);
            RealField conc;
            conc.grid = grid;
            conc.kind = FieldKind::Concentration;
            conc.time = {year, month, 0.0};
            conc.v.assign(grid.size(), qnan);
            Rng rc = root.derive({kStreamConc, static_cast<std::uint64_t>(year),
                                  static_cast<std::uint64_t>(month)});
            for (std::size_t s = 0; s < grid.size(); ++s) {
                if (mask.label[s] != CellLabel::Ocean) continue;
                const double u = rc.next_uniform();
                binary.v[s] = ice[s];
                conc.v[s] = ice[s] ? 0.7 + 0.25 * u : 0.12 * u;
            }
            const auto cpath = truth_conc_path(out_dir, year, month);
            const auto bpath = truth_binary_path(out_dir, year, month);
            io::write_field(cpath, conc);
            io::write_field(bpath, binary);
            out.truth_paths.push_back(cpath);
            out.truth_paths.push_back(bpath);

            // ensemble members for the forecast months
            if (std::find(scn.forecast_months.begin(), scn.forecast_months.end(), month) ==
                scn.forecast_months.end())
                continue;
            for (double lead : scn.leads) {
                const auto lk = static_cast<std::uint64_t>(lead_key(lead));
                const double bias = scn.ens.bias_km + scn.ens.bias_lead_km * (lead - 0.5);
                const double err = scn.ens.err_km + scn.ens.err_lead_km * (lead - 0.5);
                const double disp = scn.ens.dispersion_km * scn.ens.dispersion_factor;

                std::vector<std::vector<double>> shared;
                for (std::size_t ri = 0; ri < sims.size(); ++ri) {
                    Rng re = root.derive({kStreamShared,
                                          static_cast<std::uint64_t>(sims[ri].truth.region),
                                          static_cast<std::uint64_t>(year),
                                          static_cast<std::uint64_t>(month), lk});
                    shared.push_back(correlated_draw(sims[ri].chol, sims[ri].geom.lines.size(),
                                                     re));
                }
                for (int k = 0; k < scn.members; ++k) {
                    std::vector<std::uint8_t> mice(grid.size(), 0);
                    for (std::size_t ri = 0; ri < sims.size(); ++ri) {
                        const auto& rs = sims[ri];
                        const std::size_t n = rs.geom.lines.size();
                        Rng rk = root.derive({kStreamMember,
                                              static_cast<std::uint64_t>(rs.truth.region),
                                              static_cast<std::uint64_t>(year),
                                              static_cast<std::uint64_t>(month), lk,
                                              static_cast<std::uint64_t>(k)});
                        auto noise = correlated_draw(rs.chol, n, rk);
                        std::vector<double> len(n);
                        for (std::size_t i = 0; i < n; ++i)
                            len[i] = std::clamp(lengths_by_region[ri][i] + bias +
                                                    err * shared[ri][i] + disp * noise[i],
                                                0.0, rs.geom.lines[i].line_len);
                        render_edge(rs, std::move(len), mask, mice);
                    }
                    ByteField member;
                    member.grid = grid;
                    member.kind = FieldKind::Binary;
                    member.time = {year, month, lead};
                    member.v.assign(grid.size(), kByteSentinel);
                    for (std::size_t s = 0; s < grid.size(); ++s)
                        if (mask.label[s] == CellLabel::Ocean) member.v[s] = mice[s];
                    const auto mpath = member_path(out_dir, year, month, lead, k);
                    io::write_field(mpath, member);
                    out.ensemble_paths.push_back(mpath);
                }
            }
        }
    }

    nlohmann::ordered_json man;
    man["format"] = "icegrid-sim v1";
    man["seed"] = seed;
    man["grid"] = {{"nrows", grid.nrows}, {"ncols", grid.ncols}, {"dx_km", grid.dx_km},
                   {"dy_km", grid.dy_km}, {"origin", {grid.origin_x, grid.origin_y}}};
    man["years"] = {scn.year_lo, scn.year_hi};
    man["truth_months"] = scn.truth_months;
    man["forecast_months"] = scn.forecast_months;
    man["leads"] = scn.leads;
    man["members"] = scn.members;
    man["polynya_rate"] = scn.polynya_rate;
    man["ensemble"] = {{"bias_km", scn.ens.bias_km},
                       {"bias_lead_km", scn.ens.bias_lead_km},
                       {"err_km", scn.ens.err_km},
                       {"err_lead_km", scn.ens.err_lead_km},
                       {"dispersion_km", scn.ens.dispersion_km},
                       {"dispersion_factor", scn.ens.dispersion_factor}};
    man["truth"] = nlohmann::ordered_json::array();
    for (const auto& t : scn.truth)
        man["truth"].push_back({{"region", t.region},
                                {"base_logit", t.base_logit},
                                {"line_wiggle", t.line_wiggle},
                                {"sigma_star", t.sigma_star},
                                {"kappa_star", t.kappa_star},
                                {"trend_per_year", t.trend_per_year},
                                {"seasonal_amp", t.seasonal_amp},
                                {"anomaly_sd", t.anomaly_sd},
                                {"month_jitter", t.month_jitter}});
    out.manifest_path = out_dir / "manifest.json";
    io::write_text_atomic(out.manifest_path, man.dump(2) + "\n");
    return out;
}

} // namespace icecontour
