#pragma once

#include <cstddef>
#include <vector>

namespace icecontour::stats {

// Logistic transforms. logit expects p in (0,1); logit_clamped first pulls p
// into [eps, 1-eps] so proportions of exactly 0 or 1 stay finite.
double logit(double p);
double ilogit(double x);
double logit_clamped(double p, double eps);

// Standard normal CDF and its inverse (Wichura's AS241, double precision).
double norm_cdf(double x);
double norm_quantile(double p);

// Standard deviation of a normal that puts central mass `gamma` on [m, M]
// when centered at the midpoint. Requires M > m and 0 < gamma < 1.
double sigma_for_mass(double m, double M, double gamma);

double mean(const std::vector<double>& v);
double sample_var(const std::vector<double>& v);  // n-1 denominator
double sample_sd(const std::vector<double>& v);
double median(std::vector<double> v);
// Median absolute deviation about the median, unscaled.
double mad(std::vector<double> v);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double at(double x) const { return intercept + slope * x; }
};

// Least squares line. Throws fit_error when x is degenerate (all equal).
LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

// Monte Carlo standard error of the chain mean via non-overlapping batch
// means; robust to autocorrelation. n_batches must divide into len(v) with
// at least 2 points per batch.
double batch_means_se(const std::vector<double>& v, std::size_t n_batches);

} // namespace icecontour::stats
