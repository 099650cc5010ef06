#include "icecontour/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icecontour/errors.hpp"

namespace icecontour::stats {

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) throw error("logit: argument must lie in (0,1)");
    return std::log(p / (1.0 - p));
}

double ilogit(double x) {
    // Branch keeps exp() argument nonpositive, avoiding overflow either side.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit_clamped(double p, double eps) {
    if (!(eps > 0.0 && eps < 0.5)) throw error("logit_clamped: eps must lie in (0,0.5)");
    return logit(std::min(std::max(p, eps), 1.0 - eps));
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_quantile(double p) {
    // AS241 PPND16 rational approximations, |relative error| < 1e-15.
    if (!(p > 0.0 && p < 1.0)) throw error("norm_quantile: argument must lie in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        const double den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                             4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                                 2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                               3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                             4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                               6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                             2.05319162663775882187e+0) * r + 1.0);
        z = num / den;
    } else {
        r -= 5.0;
        const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                               2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                             5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                             5.99832206555887937690e-1) * r + 1.0);
        z = num / den;
    }
    return (q < 0.0) ? -z : z;
}

double sigma_for_mass(double m, double M, double gamma) {
    if (!(M > m)) throw error("sigma_for_mass: requires M > m");
    if (!(gamma > 0.0 && gamma < 1.0)) throw error("sigma_for_mass: gamma must lie in (0,1)");
    return ((M - m) / 2.0) / norm_quantile((1.0 + gamma) / 2.0);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw error("mean: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    if (v.size() < 2) throw error("sample_var: need at least two values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double sample_sd(const std::vector<double>& v) { return std::sqrt(sample_var(v)); }

double median(std::vector<double> v) {
    if (v.empty()) throw error("median: empty input");
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    return 0.5 * (v[n / 2 - 1] + hi);
}

double mad(std::vector<double> v) {
    const double med = median(v);
    for (double& x : v) x = std::fabs(x - med);
    return median(std::move(v));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw error("pearson: need matched series, n >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw fit_error("pearson: constant series");
    return sxy / std::sqrt(sxx * syy);
}

LinearFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw fit_error("ols_fit: need matched series, n >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw fit_error("ols_fit: degenerate design (all x equal)");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

double batch_means_se(const std::vector<double>& v, std::size_t n_batches) {
    if (n_batches < 2) throw error("batch_means_se: need at least 2 batches");
    const std::size_t bs = v.size() / n_batches;
    if (bs < 2) throw error("batch_means_se: batches too small");
    std::vector<double> bm(n_batches, 0.0);
    for (std::size_t b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < bs; ++k) s += v[b * bs + k];
        bm[b] = s / static_cast<double>(bs);
    }
    return sample_sd(bm) / std::sqrt(static_cast<double>(n_batches));
}

} // namespace icecontour::stats
