#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "icecontour/grid.hpp"

namespace icecontour {

// Area-weighted quadratic score for one year: sum of w_s * (f_s - o_s)^2 over
// the cells the weights cover. Weights must sum to 1.
double brier(const RealField& forecast, const ByteField& obs, const std::vector<double>& weights);
double brier(const ByteField& forecast, const ByteField& obs, const std::vector<double>& weights);

struct ReliabilityBin {
    double lo = 0.0, hi = 0.0;  // forecasts fall in (lo, hi]; the first bin takes p <= lo too
    double mean_p = 0.0;        // NaN when the bin is empty
    double freq = 0.0;          // NaN when the bin is empty
    double weight = 0.0;
    long count = 0;
};

// Pools forecast/observation cells across any number of field pairs into
// equal-width probability bins. Area weighting uses the supplied weights;
// equal weighting counts every covered cell the same.
class ReliabilityAccumulator {
  public:
    explicit ReliabilityAccumulator(int bins = 10, bool area_weighted = true);
    void add(const RealField& forecast, const ByteField& obs, const std::vector<double>& weights);
    std::vector<ReliabilityBin> bins() const;

  private:
    int nbins_;
    bool area_;
    std::vector<double> psum_, osum_, wsum_;
    std::vector<long> n_;
};

// Largest |observed frequency - mean forecast| over nonempty bins.
double max_calibration_deviation(const std::vector<ReliabilityBin>& bins);

// Weight-weighted least-squares slope of frequency against mean forecast.
double reliability_slope(const std::vector<ReliabilityBin>& bins);

// Calendar quarters: months 1-3 map to season 0, .., 10-12 to season 3.
int season_of(int month);
const char* season_name(int season);

// Minimal static SVG emitters for the evaluation stage.
void svg_reliability(const std::filesystem::path& path, const std::string& title,
                     const std::vector<ReliabilityBin>& bins);
using Series = std::pair<std::string, std::vector<std::pair<double, double>>>;
void svg_lines(const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series);
void svg_heatmap(const std::filesystem::path& path, const std::string& title,
                 const std::vector<std::string>& row_labels,
                 const std::vector<std::string>& col_labels,
                 const std::vector<std::vector<double>>& values);

} // namespace icecontour
