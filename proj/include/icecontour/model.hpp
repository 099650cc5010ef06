#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "icecontour/geometry.hpp"

namespace icecontour {

// Which lines carry a free edge parameter. Lines whose observed proportion
// sits at exactly 0 or 1 through every training year at either end of the
// line order are pinned there, as are config overrides; the rest are modeled.
struct FixedRegistry {
    std::vector<int> value;             // per line: -1 modeled, else 0 or 1
    std::vector<std::size_t> modeled;   // line indices with value -1

    std::size_t n_modeled() const { return modeled.size(); }
    bool all_fixed_at(int v) const;
};

FixedRegistry detect_fixed_lines(const RegionGeometry& geom,
                                 const std::vector<std::vector<double>>& train_pi);

struct ModelConfig {
    double eps = 0.01;              // logit clamp
    double prior_halfwidth = 0.125; // proportion-units interval around the shifted edge
    double prior_mass = 0.99;       // mass the interval carries
    double sigma_lo = 0.01;
    double delta1 = -1.0;           // sigma support derivation endpoints;
    double delta2 = -1.0;           // negative means eps and 1-eps
    double kappa_lo = 0.05;
    double kappa_hi = 20.0;
    int iterations = 55000;         // total, burnin included
    int burnin = 5000;
    double target_accept = 0.3;
    int adapt_batch = 50;
    int resync_every = 500;
    bool sample_sigma = true;
    bool sample_kappa = true;
    std::optional<std::vector<double>> sigma_init;  // modeled-space
    std::optional<double> kappa_init;
    int n_contours = 100;
};

// All prior pieces live in modeled-line space.
struct PriorSpec {
    std::vector<double> mu0;
    std::vector<double> lambda0;    // diagonal variances
    std::vector<double> sigma_lo, sigma_hi;
    double kappa_lo = 0.05, kappa_hi = 20.0;
};

// Gaussian prior on the edge means from the shifted forecast: center at the
// clamped logit, variance sized so the proportion stays within the halfwidth
// interval (intersected with the clamp range) with the configured mass.
PriorSpec build_prior(const RegionGeometry& geom, const FixedRegistry& fixed,
                      const std::vector<double>& pi_cs, const ModelConfig& cfg);

// Modeled-line separation feeding the exponential covariance: index gaps for
// coastal regions, angular distance on [0, pi] for radial ones.
std::vector<double> line_distances(const RegionGeometry& geom, const FixedRegistry& fixed);

// Sigma-scaled exponential covariance, row-major m x m.
std::vector<double> covariance_matrix(const std::vector<double>& sigma,
                                      const std::vector<double>& dist, double kappa);

struct ContourPosterior {
    enum class Kind { Fitted, Constant };
    Kind kind = Kind::Fitted;
    RegionGeometry geom;
    FixedRegistry fixed;
    ModelConfig cfg;
    std::uint64_t seed = 0;

    // modeled-space summaries (post burn-in means)
    std::vector<double> mu_mean, sigma_mean;
    double kappa_mean = 0.0;

    // full chains, burn-in included; parameter order mu.., sigma.., kappa
    std::vector<std::string> param_names;
    std::vector<std::vector<double>> chains;
    std::vector<double> accept_rate;  // post burn-in, per parameter
};

// Single-site Metropolis over (mu, sigma, kappa) with normal proposals.
// Proposal scales adapt toward target_accept during burn-in only; the
// correlation Cholesky is cached and rebuilt only when kappa moves.
// Deterministic given (inputs, seed). train_pi rows are per-year raw
// proportions over all lines.
ContourPosterior fit_posterior(const RegionGeometry& geom, const FixedRegistry& fixed,
                               const std::vector<std::vector<double>>& train_pi,
                               const PriorSpec& prior, const ModelConfig& cfg,
                               std::uint64_t seed);

struct GeneratedContours {
    std::vector<Contour> contours;
    std::vector<std::vector<double>> lengths;  // per sample, per line, post-snap
};

// Edge samples from N(mu_mean, Sigma(sigma_mean, kappa_mean)) pushed through
// the inverse logit, with fixed lines reinstated, snapped, and repaired.
// Sample k depends only on (seed, k), so thread count cannot change output.
GeneratedContours generate_contours(const ContourPosterior& post, int count, std::uint64_t seed);
GeneratedContours generate_contours_serial(const ContourPosterior& post, int count,
                                           std::uint64_t seed);

// Fraction of contours covering each ocean cell.
RealField contour_probability_field(const std::vector<Contour>& contours, const CellMask& mask,
                                    FieldTime time);

// One CSV per parameter (iteration, value, burnin flag). Values carry 17
// significant digits so means recomputed from the files match bit for bit.
void export_traces(const ContourPosterior& post, const std::filesystem::path& dir);
std::vector<double> read_trace_values(const std::filesystem::path& csv, bool include_burnin);

} // namespace icecontour
