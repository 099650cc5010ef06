#include "icecontour/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icecontour/errors.hpp"

namespace icecontour {

namespace {

constexpr double kProbClamp = 1e-6;

double clamp_prob(double g) { return std::clamp(g, kProbClamp, 1.0 - kProbClamp); }

} // namespace

double mixture_probability(double w, double g_p, double g_c) {
    return w * g_p + (1.0 - w) * g_c;
}

WeightFit fit_weight(const std::vector<Triple>& triples, double w0, double tol, int max_iter) {
    if (!(w0 > 0.0 && w0 < 1.0)) throw config_error({"initial weight must lie in (0, 1)"});
    if (!(tol > 0.0) || max_iter < 1)
        throw config_error({"weight fit needs positive tol and max_iter"});

    // Per-case component likelihoods of the observed outcome.
    std::vector<double> fp, fc, wa;
    fp.reserve(triples.size());
    fc.reserve(triples.size());
    wa.reserve(triples.size());
    std::size_t excluded = 0;
    for (const auto& t : triples) {
        if (t.gamma != 0 && t.gamma != 1) throw mismatch_error("outcome must be 0 or 1");
        if (!(t.a >= 0.0) || !std::isfinite(t.g_p) || !std::isfinite(t.g_c))
            throw mismatch_error("weight fit given a non-finite case");
        const double gp = clamp_prob(t.g_p);
        const double gc = clamp_prob(t.g_c);
        if (gp == gc) {  // identical components: likelihood is flat in w
            ++excluded;
            continue;
        }
        fp.push_back(t.gamma == 1 ? gp : 1.0 - gp);
        fc.push_back(t.gamma == 1 ? gc : 1.0 - gc);
        wa.push_back(t.a);
    }

    WeightFit fit;
    fit.n_used = fp.size();
    fit.n_excluded = excluded;
    fit.w = w0;
    if (fp.empty()) return fit;

    double asum = 0.0;
    for (double a : wa) asum += a;
    if (!(asum > 0.0)) throw mismatch_error("weight fit needs positive total area");

    auto loglik = [&](double w) {
        // compensated sum: plain accumulation drifts by ~n*eps*|ll|, enough
        // to make a mathematically monotone iteration look non-monotone
        long double ll = 0.0L, carry = 0.0L;
        for (std::size_t i = 0; i < fp.size(); ++i) {
            const long double term =
                static_cast<long double>(wa[i]) *
                std::log(static_cast<long double>(w) * fp[i] + (1.0L - w) * fc[i]);
            const long double y = term - carry;
            const long double t = ll + y;
            carry = (t - ll) - y;
            ll = t;
        }
        return static_cast<double>(ll);
    };

    double w = w0;
    fit.ll_path.push_back(loglik(w));
    for (int it = 0; it < max_iter; ++it) {
        double num = 0.0;
        for (std::size_t i = 0; i < fp.size(); ++i) {
            const double mix = w * fp[i] + (1.0 - w) * fc[i];
            num += wa[i] * (w * fp[i] / mix);
        }
        const double w_new = num / asum;
        fit.iterations = it + 1;
        fit.ll_path.push_back(loglik(w_new));
        const bool done = std::abs(w_new - w) <= tol;
        w = w_new;
        if (done) break;
    }
    fit.w = w;
    fit.loglik = fit.ll_path.back();
    return fit;
}

RealField mixture_field(double w, const RealField& g_p, const RealField& g_c) {
    if (!(g_p.grid == g_c.grid)) throw mismatch_error("mixture components on different grids");
    if (g_p.v.size() != g_c.v.size())
        throw mismatch_error("mixture components differ in size");
    RealField out;
    out.grid = g_p.grid;
    out.kind = FieldKind::Probability;
    out.time = g_p.time;
    out.v.assign(g_p.v.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t s = 0; s < out.v.size(); ++s) {
        const double a = g_p.v[s];
        const double b = g_c.v[s];
        if (std::isnan(a) != std::isnan(b))
            throw mismatch_error("mixture components disagree on coverage");
        if (!std::isnan(a)) out.v[s] = mixture_probability(w, a, b);
    }
    return out;
}

std::vector<Triple> triples_from_fields(const CellMask& mask, const RealField& g_p,
                                        const RealField& g_c, const ByteField& obs,
                                        int region) {
    if (!(mask.grid == g_p.grid) || !(mask.grid == g_c.grid) || !(mask.grid == obs.grid))
        throw mismatch_error("triple collection inputs on different grids");
    const std::vector<double> w = region < 0 ? area_weights(mask) : area_weights(mask, region);
    std::vector<Triple> out;
    for (std::size_t s = 0; s < w.size(); ++s) {
        if (w[s] <= 0.0) continue;
        if (std::isnan(g_p.v[s]) || std::isnan(g_c.v[s]) || obs.v[s] == kByteSentinel)
            throw mismatch_error("triple collection hit a gap over ocean");
        out.push_back({g_p.v[s], g_c.v[s], obs.v[s] == 1 ? 1 : 0, w[s]});
    }
    return out;
}

} // namespace icecontour
