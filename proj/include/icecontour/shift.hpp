#pragma once

#include <vector>

#include "icecontour/geometry.hpp"

namespace icecontour {

struct HuberFit {
    double intercept = 0.0;
    double slope = 0.0;
    int iterations = 0;
    double at(double x) const { return intercept + slope * x; }
};

// Robust line via IRLS with Huber weights; the residual scale (MAD-based) is
// re-estimated every iteration. Converges when coefficients move less than
// tol, or stops at max_iter. Collinear data reduces to least squares.
HuberFit huber_fit(const std::vector<double>& x, const std::vector<double>& y,
                   double tuning = 1.345, double tol = 1e-8, int max_iter = 100);

// Training series of per-line edge distances, one row per year. Years must
// be consecutive; gaps raise an error naming the missing years.
struct LengthSeries {
    std::vector<int> years;
    std::vector<std::vector<double>> obs;  // [year index][line]
    std::vector<std::vector<double>> ens;  // [year index][line]
};

struct FixedLength {
    int line = 0;
    double length = 0.0;
};

// Bias-corrected forecast-year edge distances: the forecast-year ensemble
// length plus the gap between the robust observed and ensemble trends
// evaluated at the forecast year. Results are clamped to [0, ||L||]; fixed
// lines bypass the regression and take their given value.
std::vector<double> contour_shift(const RegionGeometry& geom, const LengthSeries& train,
                                  const std::vector<double>& ens_now, int year,
                                  const std::vector<FixedLength>& fixed = {});

} // namespace icecontour
