#pragma once

#include <vector>

#include "icecontour/grid.hpp"

namespace icecontour {

// One cell-level training case: contour-model probability, climatology
// probability, the observed binary outcome, and the cell's area weight.
struct Triple {
    double g_p = 0.0;
    double g_c = 0.0;
    int gamma = 0;
    double a = 1.0;
};

struct WeightFit {
    double w = 0.5;
    int iterations = 0;
    double loglik = 0.0;
    std::vector<double> ll_path;    // area-weighted log likelihood after each step
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;
};

// EM for the blend weight of a two-component Bernoulli mixture. Probabilities
// are clamped to [1e-6, 1-1e-6]; cases whose clamped components coincide carry
// no information about w and are dropped (counted in n_excluded). When every
// case drops out, the fit returns w0 untouched since any w gives the same
// forecast. The likelihood path is nondecreasing.
WeightFit fit_weight(const std::vector<Triple>& triples, double w0 = 0.5, double tol = 1e-8,
                     int max_iter = 10000);

double mixture_probability(double w, double g_p, double g_c);

// Elementwise blend over ocean cells; NaN elsewhere.
RealField mixture_field(double w, const RealField& g_p, const RealField& g_c);

// Collects one triple per ocean cell of the region (all ocean when region is
// negative), using region-renormalized area weights.
std::vector<Triple> triples_from_fields(const CellMask& mask, const RealField& g_p,
                                        const RealField& g_c, const ByteField& obs,
                                        int region = -1);

} // namespace icecontour
