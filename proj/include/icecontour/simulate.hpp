#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "icecontour/geometry.hpp"
#include "icecontour/grid.hpp"

namespace icecontour {

// Truth process for one region, in logit-proportion space. Per (year, month)
// the modeled edge is mean curve + year anomaly + month jitter + a correlated
// draw with spread sigma_star and range kappa_star.
struct RegionTruth {
    int region = 0;
    double base_logit = 0.5;
    double line_wiggle = 0.5;      // smooth across-line modulation
    double sigma_star = 0.5;
    double kappa_star = 3.0;
    double trend_per_year = 0.0;
    double seasonal_amp = 0.0;     // least ice in month 9
    double anomaly_sd = 0.0;       // shared within a year, links months
    double month_jitter = 0.0;
};

// Ensemble quality knobs, in kilometers along each line. The shared error is
// redrawn per (year, month, lead) and invisible to the members, whose own
// spread is dispersion_km * dispersion_factor; factors below 1 make the
// ensemble overconfident.
struct EnsembleError {
    double bias_km = 0.0;
    double bias_lead_km = 0.0;       // extra bias per month of lead
    double err_km = 0.0;             // shared forecast error
    double err_lead_km = 0.0;        // growth per month of lead
    double dispersion_km = 0.0;
    double dispersion_factor = 1.0;
};

// Rectangles are {row0, col0, row1, col1}, inclusive.
struct ScenarioMask {
    std::vector<std::array<int, 4>> land;
    std::vector<std::pair<int, std::array<int, 4>>> regions;  // (region id, rect)
};

struct SyntheticScenario {
    int year_lo = 2000, year_hi = 2011;
    std::vector<int> truth_months;     // observed months written per year
    std::vector<int> forecast_months;  // months that get ensemble forecasts
    std::vector<double> leads;         // months, half-month convention
    int members = 25;
    double polynya_rate = 0.0;         // chance of a hole per (region, year, month)
    ScenarioMask mask;
    std::vector<RegionTruth> truth;
    EnsembleError ens;
};

// Mask field assembled from the scenario rectangles: land painted first, then
// region ids over the remaining ocean.
ByteField scenario_mask_field(const SyntheticScenario& scn, const GridSpec& grid);

struct SimulationOutput {
    std::filesystem::path mask_path;
    std::vector<std::filesystem::path> truth_paths;
    std::vector<std::filesystem::path> ensemble_paths;
    std::filesystem::path manifest_path;
};

// Writes mask, per-(year, month) truth concentration and binary fields,
// per-(year, month, lead) ensemble member binaries, and a manifest recording
// the generating parameters. Deterministic in (scenario, grid, regions, seed).
SimulationOutput run_simulation(const SyntheticScenario& scn, const GridSpec& grid,
                                const std::vector<RegionSpec>& regions,
                                const std::filesystem::path& out_dir, std::uint64_t seed);

// Layout helpers shared with the downstream stages.
std::filesystem::path truth_conc_path(const std::filesystem::path& sim_dir, int year, int month);
std::filesystem::path truth_binary_path(const std::filesystem::path& sim_dir, int year,
                                        int month);
std::filesystem::path member_path(const std::filesystem::path& sim_dir, int year, int month,
                                  double lead, int member);
std::filesystem::path sim_mask_path(const std::filesystem::path& sim_dir);

// Stable integer key for a half-month lead, used in paths and RNG streams.
int lead_key(double lead);
std::string lead_label(double lead);

} // namespace icecontour
