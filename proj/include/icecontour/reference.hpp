#pragma once

#include <string>
#include <vector>

#include "icecontour/grid.hpp"

namespace icecontour {

// Per-cell fraction of window years showing ice.
RealField climatology_probability(const std::vector<ByteField>& window, FieldTime time);

// Ice wherever at least half the window years (majority, ties up) show ice.
ByteField climatology_binary(const std::vector<ByteField>& window, FieldTime time);

// Ice wherever at least half the members show ice (ties resolve to ice).
ByteField ensemble_binary(const std::vector<ByteField>& members, FieldTime time);

// Probability >= 0.5 becomes ice. Matches ensemble_binary when fed the
// ensemble probability field.
ByteField probability_to_binary(const RealField& prob);

// Damped persistence: per-cell affine year trends for the forecast month m
// and the initialization month i, plus the correlation of their residuals.
// rho is exactly 0 where either detrended series is constant.
struct PersistenceFit {
    GridSpec grid;
    int month = 0;       // m
    int init_month = 0;  // i
    int year_lo = 0, year_hi = 0;
    std::vector<double> alpha_m, beta_m, alpha_i, beta_i, rho;  // NaN off ocean
};

// Which calendar month is fully observed when a forecast for `month` at
// `lead` months (half-month convention: lead measured to the month midpoint)
// is initialized. Result wrapped into 1..12.
int persistence_init_month(int month, double lead);

// Year the initialization month belongs to: same year when i <= m, previous
// year otherwise.
int persistence_init_year(int month, int init_month, int year);

// Rows are paired: conc_m[k] observed in years_m[k], conc_i[k] in years_i[k].
PersistenceFit fit_persistence(const std::vector<RealField>& conc_m,
                               const std::vector<int>& years_m,
                               const std::vector<RealField>& conc_i,
                               const std::vector<int>& years_i, int month, int init_month);
PersistenceFit fit_persistence_serial(const std::vector<RealField>& conc_m,
                                      const std::vector<int>& years_m,
                                      const std::vector<RealField>& conc_i,
                                      const std::vector<int>& years_i, int month,
                                      int init_month);

// Trend value for year t plus the damped initialization anomaly, clamped to
// [0,1].
RealField predict_persistence_concentration(const PersistenceFit& fit,
                                            const RealField& obs_init, int year);

// The concentration prediction thresholded at tau (inclusive).
ByteField predict_persistence(const PersistenceFit& fit, const RealField& obs_init, int year,
                              double tau = 0.15);

// Fit surfaces as named rasters for the diagnostic dump.
std::vector<std::pair<std::string, RealField>> persistence_fit_fields(const PersistenceFit& fit);

} // namespace icecontour
