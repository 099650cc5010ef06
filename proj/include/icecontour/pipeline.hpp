#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "icecontour/geometry.hpp"
#include "icecontour/grid.hpp"
#include "icecontour/model.hpp"
#include "icecontour/simulate.hpp"

namespace icecontour {

struct ExperimentSpec {
    int eval_lo = 0, eval_hi = 0;
    std::vector<int> months;
    std::vector<double> leads;
    int contour_window = 10;   // training years for shifting, the edge model,
                               // and climatology
    int weight_window = 3;     // years of forecasts behind each weight fit
    int sweep_max = 0;         // widest window the harness may sweep; 0 means
                               // weight_window
    std::vector<std::string> methods;
    int reliability_bins = 10;
    std::string reliability_weighting = "equal";  // or "area"
    int persistence_start_year = 0;  // 0: scenario start
    ModelConfig mcmc;
};

struct PipelineConfig {
    std::filesystem::path out;
    std::uint64_t seed = 1;
    GridSpec grid;
    std::vector<RegionSpec> regions;
    SyntheticScenario scenario;
    ExperimentSpec experiment;
};

// Parses and validates the run configuration, reporting every violation at
// once. Region line counts left at zero are resolved later against the mask:
// 90 lines for the largest region, smaller regions in proportion with a floor
// of 10.
PipelineConfig load_config(const std::filesystem::path& path);

// First year that needs generated forecasts: weight fitting looks back up to
// max(weight_window, sweep_max) years behind the first evaluation year.
int first_generated_year(const PipelineConfig& cfg);

// Normalized cell-area weights over the union of region ocean cells.
std::vector<double> evaluation_weights(const CellMask& mask);

void stage_simulate(const PipelineConfig& cfg);
void stage_fit_shift(const PipelineConfig& cfg);
void stage_fit_contour(const PipelineConfig& cfg);
void stage_generate(const PipelineConfig& cfg);
void stage_fit_weights(const PipelineConfig& cfg);
void stage_forecast(const PipelineConfig& cfg);

struct SweepRange {
    int lo = 0, hi = 0;
    bool active() const { return lo >= 1 && hi >= lo; }
};
void stage_evaluate(const PipelineConfig& cfg, SweepRange sweep = {});

// Stage output paths, shared with the tests.
std::filesystem::path shift_csv_path(const PipelineConfig& cfg, int year, int month, double lead,
                                     int region);
std::filesystem::path posterior_json_path(const PipelineConfig& cfg, int year, int month,
                                          double lead, int region);
std::filesystem::path contour_prob_path(const PipelineConfig& cfg, int year, int month,
                                        double lead);
std::filesystem::path clim_prob_path(const PipelineConfig& cfg, int year, int month);
std::filesystem::path clim_binary_path(const PipelineConfig& cfg, int year, int month);
std::filesystem::path weights_csv_path(const PipelineConfig& cfg);
std::filesystem::path forecast_dir(const PipelineConfig& cfg, int year, int month, double lead);
std::filesystem::path eval_dir(const PipelineConfig& cfg);

// CLI entry: subcommand + flags, returns the process exit status. Errors are
// reported as one JSON line on stderr.
int run_cli(int argc, const char* const* argv);

} // namespace icecontour
