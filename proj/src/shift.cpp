#include "icecontour/shift.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icecontour/stats.hpp"

namespace icecontour {

HuberFit huber_fit(const std::vector<double>& x, const std::vector<double>& y, double tuning,
                   double tol, int max_iter) {
    if (!(tuning > 0.0)) throw fit_error("huber_fit: tuning constant must be positive");
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw fit_error("huber_fit: need matched series, n >= 2");

    const stats::LinearFit start = stats::ols_fit(x, y);
    HuberFit fit{start.intercept, start.slope, 0};
    const double mad_to_sd = 1.0 / stats::norm_quantile(0.75);

    std::vector<double> r(n), w(n);
    double scale0 = 0.0;
    for (double yi : y) scale0 = std::max(scale0, std::fabs(yi));
    scale0 = std::max(scale0, 1.0);

    for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;
        for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - fit.at(x[i]);
        const double s = stats::mad(r) * mad_to_sd;
        if (s <= 1e-12 * scale0) {
            // zero spread about the median residual: a majority of the points
            // sits exactly median(r) off the current line, so recenter on
            // that majority (a no-op when the fit is already perfect)
            fit.intercept += stats::median(r);
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            const double z = std::fabs(r[i]) / s;
            w[i] = z <= tuning ? 1.0 : tuning / z;
        }
        double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            swx += w[i] * x[i];
            swy += w[i] * y[i];
            swxx += w[i] * x[i] * x[i];
            swxy += w[i] * x[i] * y[i];
        }
        const double det = sw * swxx - swx * swx;
        if (std::fabs(det) <= 1e-12 * std::max(1.0, sw * swxx))
            throw fit_error("huber_fit: degenerate design");
        const double slope = (sw * swxy - swx * swy) / det;
        const double intercept = (swy - slope * swx) / sw;
        const double move = std::max(std::fabs(slope - fit.slope), std::fabs(intercept - fit.intercept));
        fit.slope = slope;
        fit.intercept = intercept;
        if (move < tol * std::max(1.0, std::fabs(slope) + std::fabs(intercept))) break;
    }
    return fit;
}

std::vector<double> contour_shift(const RegionGeometry& geom, const LengthSeries& train,
                                  const std::vector<double>& ens_now, int year,
                                  const std::vector<FixedLength>& fixed) {
    const std::size_t n = geom.lines.size();
    if (ens_now.size() != n) throw mismatch_error("contour_shift: one forecast length per line required");
    const std::size_t ny = train.years.size();
    if (ny < 2) throw fit_error("contour_shift: need at least two training years");
    if (train.obs.size() != ny || train.ens.size() != ny)
        throw mismatch_error("contour_shift: training rows must match the year list");
    for (std::size_t t = 0; t < ny; ++t)
        if (train.obs[t].size() != n || train.ens[t].size() != n)
            throw mismatch_error("contour_shift: training row has wrong line count");

    std::string gaps;
    for (std::size_t t = 0; t + 1 < ny; ++t) {
        if (train.years[t + 1] <= train.years[t])
            throw fit_error("contour_shift: training years must be strictly increasing");
        for (int m = train.years[t] + 1; m < train.years[t + 1]; ++m)
            gaps += (gaps.empty() ? "" : ", ") + std::to_string(m);
    }
    if (!gaps.empty()) throw fit_error("contour_shift: missing training years: " + gaps);
    if (train.years.back() >= year)
        throw fit_error("contour_shift: training years must precede the forecast year");

    std::vector<char> is_fixed(n, 0);
    std::vector<double> out(n, 0.0);
    for (const FixedLength& f : fixed) {
        if (f.line < 0 || static_cast<std::size_t>(f.line) >= n)
            throw mismatch_error("contour_shift: fixed line index out of range");
        is_fixed[f.line] = 1;
        out[f.line] = std::clamp(f.length, 0.0, geom.lines[f.line].line_len);
    }

    std::vector<double> ty(ny);
    for (std::size_t t = 0; t < ny; ++t) ty[t] = static_cast<double>(train.years[t]);

    std::vector<double> yo(ny), ye(ny);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_fixed[i]) continue;
        for (std::size_t t = 0; t < ny; ++t) {
            yo[t] = train.obs[t][i];
            ye[t] = train.ens[t][i];
        }
        const HuberFit fo = huber_fit(ty, yo);
        const HuberFit fe = huber_fit(ty, ye);
        const double shifted = ens_now[i] + (fo.at(year) - fe.at(year));
        out[i] = std::clamp(shifted, 0.0, geom.lines[i].line_len);
    }
    return out;
}

} // namespace icecontour
