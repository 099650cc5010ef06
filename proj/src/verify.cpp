#include "icecontour/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "icecontour/errors.hpp"
#include "icecontour/io.hpp"

namespace icecontour {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_weights(const GridSpec& grid, const std::vector<double>& w) {
    if (w.size() != grid.size()) throw mismatch_error("weights do not match the grid");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw mismatch_error("weights must be nonnegative");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw mismatch_error("weights must sum to 1");
}

double brier_impl(const GridSpec& fgrid, const ByteField& obs, const std::vector<double>& w,
                  auto forecast_at) {
    if (!(fgrid == obs.grid)) throw mismatch_error("forecast and observation grids differ");
    check_weights(fgrid, w);
    double score = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) {
        if (w[s] <= 0.0) continue;
        if (obs.v[s] != 0 && obs.v[s] != 1)
            throw mismatch_error("observation missing over a weighted cell");
        const double f = forecast_at(s);
        if (!(f >= 0.0 && f <= 1.0))
            throw mismatch_error("forecast missing or out of range over a weighted cell");
        const double d = f - static_cast<double>(obs.v[s]);
        score += w[s] * d * d;
    }
    return score;
}

} // namespace

double brier(const RealField& forecast, const ByteField& obs, const std::vector<double>& weights) {
    return brier_impl(forecast.grid, obs, weights,
                      [&](std::size_t s) { return forecast.v[s]; });
}

double brier(const ByteField& forecast, const ByteField& obs, const std::vector<double>& weights) {
    return brier_impl(forecast.grid, obs, weights, [&](std::size_t s) {
        return forecast.v[s] == kByteSentinel ? kNaN : static_cast<double>(forecast.v[s]);
    });
}

ReliabilityAccumulator::ReliabilityAccumulator(int bins, bool area_weighted)
    : nbins_(bins), area_(area_weighted) {
    if (bins < 2) throw config_error({"reliability needs at least 2 bins"});
    psum_.assign(bins, 0.0);
    osum_.assign(bins, 0.0);
    wsum_.assign(bins, 0.0);
    n_.assign(bins, 0);
}

void ReliabilityAccumulator::add(const RealField& forecast, const ByteField& obs,
                                 const std::vector<double>& weights) {
    if (!(forecast.grid == obs.grid)) throw mismatch_error("forecast and observation grids differ");
    check_weights(forecast.grid, weights);
    for (std::size_t s = 0; s < weights.size(); ++s) {
        if (weights[s] <= 0.0) continue;
        const double p = forecast.v[s];
        if (!(p >= 0.0 && p <= 1.0))
            throw mismatch_error("forecast missing or out of range over a weighted cell");
        if (obs.v[s] != 0 && obs.v[s] != 1)
            throw mismatch_error("observation missing over a weighted cell");
        // right-inclusive bins; exact zeros join the first bin
        int b = p <= 0.0 ? 0 : static_cast<int>(std::ceil(p * nbins_)) - 1;
        b = std::clamp(b, 0, nbins_ - 1);
        const double w = area_ ? weights[s] : 1.0;
        psum_[b] += w * p;
        osum_[b] += w * obs.v[s];
        wsum_[b] += w;
        n_[b]++;
    }
}

std::vector<ReliabilityBin> ReliabilityAccumulator::bins() const {
    std::vector<ReliabilityBin> out(nbins_);
    for (int b = 0; b < nbins_; ++b) {
        out[b].lo = static_cast<double>(b) / nbins_;
        out[b].hi = static_cast<double>(b + 1) / nbins_;
        out[b].weight = wsum_[b];
        out[b].count = n_[b];
        if (n_[b] > 0) {
            out[b].mean_p = psum_[b] / wsum_[b];
            out[b].freq = osum_[b] / wsum_[b];
        } else {
            out[b].mean_p = kNaN;
            out[b].freq = kNaN;
        }
    }
    return out;
}

double max_calibration_deviation(const std::vector<ReliabilityBin>& bins) {
    double worst = 0.0;
    for (const auto& b : bins)
        if (b.count > 0) worst = std::max(worst, std::abs(b.freq - b.mean_p));
    return worst;
}

double reliability_slope(const std::vector<ReliabilityBin>& bins) {
    double wsum = 0.0, xb = 0.0, yb = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        wsum += b.weight;
        xb += b.weight * b.mean_p;
        yb += b.weight * b.freq;
    }
    if (!(wsum > 0.0)) throw fit_error("reliability slope needs populated bins");
    xb /= wsum;
    yb /= wsum;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        sxx += b.weight * (b.mean_p - xb) * (b.mean_p - xb);
        sxy += b.weight * (b.mean_p - xb) * (b.freq - yb);
    }
    if (!(sxx > 0.0)) throw fit_error("reliability slope is undefined for one distinct forecast");
    return sxy / sxx;
}

int season_of(int month) {
    if (month < 1 || month > 12) throw config_error({"month must lie in 1..12"});
    return (month - 1) / 3;
}

const char* season_name(int season) {
    static const char* names[4] = {"JFM", "AMJ", "JAS", "OND"};
    if (season < 0 || season > 3) throw config_error({"season must lie in 0..3"});
    return names[season];
}

namespace {

// Shared plot scaffolding: fixed 640x480 canvas with a 60px margin.
constexpr int kW = 640, kH = 480, kM = 60;

double px(double x, double lo, double hi) { return kM + (x - lo) / (hi - lo) * (kW - 2 * kM); }
double py(double y, double lo, double hi) {
    return kH - kM - (y - lo) / (hi - lo) * (kH - 2 * kM);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

const char* kPalette[6] = {"#1f6fb4", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#666666"};

void svg_open(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
       << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
          "font-family=\"sans-serif\">"
       << title << "</text>\n";
}

void svg_axes(std::ostringstream& os, const std::string& xlabel, const std::string& ylabel,
              double xlo, double xhi, double ylo, double yhi) {
    os << "<rect x=\"" << kM << "\" y=\"" << kM << "\" width=\"" << kW - 2 * kM << "\" height=\""
       << kH - 2 * kM << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = xlo + (xhi - xlo) * t / 4.0;
        const double fy = ylo + (yhi - ylo) * t / 4.0;
        os << "<text x=\"" << px(fx, xlo, xhi) << "\" y=\"" << kH - kM + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fx)
           << "</text>\n";
        os << "<text x=\"" << kM - 8 << "\" y=\"" << py(fy, ylo, yhi) + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 16
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << xlabel
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << kH / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 16 "
       << kH / 2 << ")\">" << ylabel << "</text>\n";
}

} // namespace

void svg_reliability(const std::filesystem::path& path, const std::string& title,
                     const std::vector<ReliabilityBin>& bins) {
    std::ostringstream os;
    svg_open(os, title);
    svg_axes(os, "forecast probability", "observed frequency", 0, 1, 0, 1);
    os << "<line x1=\"" << px(0, 0, 1) << "\" y1=\"" << py(0, 0, 1) << "\" x2=\"" << px(1, 0, 1)
       << "\" y2=\"" << py(1, 0, 1) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    for (const auto& b : bins) {
        if (b.count == 0) continue;
        os << "<circle cx=\"" << px(b.mean_p, 0, 1) << "\" cy=\"" << py(b.freq, 0, 1)
           << "\" r=\"4\" fill=\"" << kPalette[0] << "\"/>\n";
    }
    os << "</svg>\n";
    io::write_text_atomic(path, os.str());
}

void svg_lines(const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series) {
    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& [name, pts] : series) {
        for (auto [x, y] : pts) {
            if (first) {
                xlo = xhi = x;
                ylo = yhi = y;
                first = false;
            }
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    if (xhi <= xlo) xhi = xlo + 1;
    if (yhi <= ylo) yhi = ylo + 1;
    std::ostringstream os;
    svg_open(os, title);
    svg_axes(os, xlabel, ylabel, xlo, xhi, ylo, yhi);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& [name, pts] = series[k];
        const char* color = kPalette[k % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : pts) os << px(x, xlo, xhi) << "," << py(y, ylo, yhi) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << kW - kM + 4 << "\" y=\"" << kM + 16 * (k + 1)
           << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << color << "\">" << name
           << "</text>\n";
    }
    os << "</svg>\n";
    io::write_text_atomic(path, os.str());
}

void svg_heatmap(const std::filesystem::path& path, const std::string& title,
                 const std::vector<std::string>& row_labels,
                 const std::vector<std::string>& col_labels,
                 const std::vector<std::vector<double>>& values) {
    const std::size_t R = row_labels.size(), C = col_labels.size();
    if (values.size() != R) throw mismatch_error("heatmap rows do not match labels");
    for (const auto& row : values)
        if (row.size() != C) throw mismatch_error("heatmap columns do not match labels");
    std::ostringstream os;
    svg_open(os, title);
    const double cw = (kW - 2.0 * kM) / std::max<std::size_t>(1, C);
    const double ch = (kH - 2.0 * kM) / std::max<std::size_t>(1, R);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            const double raw = values[r][c];
            const bool missing = std::isnan(raw);
            const double v = missing ? 0.0 : std::clamp(raw, 0.0, 1.0);
            std::string fill = "#eee";
            if (!missing) {
                // white through mid-blue
                const int other = static_cast<int>(std::lround(255.0 * (1.0 - v)));
                fill = "rgb(" + std::to_string(other) + "," + std::to_string(other) + ",255)";
            }
            os << "<rect x=\"" << kM + c * cw << "\" y=\"" << kM + r * ch << "\" width=\"" << cw
               << "\" height=\"" << ch << "\" fill=\"" << fill << "\" stroke=\"#ccc\"/>\n";
            os << "<text x=\"" << kM + c * cw + cw / 2 << "\" y=\"" << kM + r * ch + ch / 2 + 4
               << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\" fill=\""
               << (v > 0.6 ? "white" : "#333") << "\">" << (missing ? std::string("n/a") : fmt(raw))
               << "</text>\n";
        }
    }
    for (std::size_t r = 0; r < R; ++r)
        os << "<text x=\"" << kM - 6 << "\" y=\"" << kM + r * ch + ch / 2 + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << row_labels[r]
           << "</text>\n";
    for (std::size_t c = 0; c < C; ++c)
        os << "<text x=\"" << kM + c * cw + cw / 2 << "\" y=\"" << kM - 8
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << col_labels[c] << "</text>\n";
    os << "</svg>\n";
    io::write_text_atomic(path, os.str());
}

} // namespace icecontour
