#include "icecontour/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "icecontour/errors.hpp"
#include "icecontour/io.hpp"
#include "icecontour/parallel.hpp"
#include "icecontour/rng.hpp"
#include "icecontour/stats.hpp"

namespace icecontour {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool const_at(const std::vector<std::vector<double>>& train_pi, std::size_t line, double v) {
    for (const auto& year : train_pi)
        if (year[line] != v) return false;
    return true;
}

} // namespace

bool FixedRegistry::all_fixed_at(int v) const {
    if (!modeled.empty()) return false;
    for (int x : value)
        if (x != v) return false;
    return !value.empty();
}

FixedRegistry detect_fixed_lines(const RegionGeometry& geom,
                                 const std::vector<std::vector<double>>& train_pi) {
    const std::size_t n = geom.lines.size();
    if (train_pi.empty()) throw mismatch_error("fixed-line detection needs training proportions");
    for (const auto& year : train_pi)
        if (year.size() != n)
            throw mismatch_error("training proportions do not match the line count");

    FixedRegistry reg;
    reg.value.assign(n, -1);

    // constant value per line, -1 when the line moves between years
    std::vector<int> cval(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (const_at(train_pi, i, 0.0)) cval[i] = 0;
        else if (const_at(train_pi, i, 1.0)) cval[i] = 1;
    }

    // Only runs touching the ends of the line order get pinned; a constant
    // line in the interior still belongs to the model.
    for (std::size_t i = 0; i < n && cval[i] >= 0; ++i) reg.value[i] = cval[i];
    for (std::size_t i = n; i-- > 0 && cval[i] >= 0 && reg.value[i] < 0;) reg.value[i] = cval[i];

    std::vector<std::string> bad;
    for (auto [line, v] : geom.fixed_overrides) {
        if (line < 0 || static_cast<std::size_t>(line) >= n)
            bad.push_back("fixed override line " + std::to_string(line) + " out of range");
        else if (v != 0 && v != 1)
            bad.push_back("fixed override value for line " + std::to_string(line) +
                          " must be 0 or 1");
        else
            reg.value[static_cast<std::size_t>(line)] = v;
    }
    if (!bad.empty()) throw config_error(bad);

    for (std::size_t i = 0; i < n; ++i)
        if (reg.value[i] < 0) reg.modeled.push_back(i);
    return reg;
}

PriorSpec build_prior(const RegionGeometry& geom, const FixedRegistry& fixed,
                      const std::vector<double>& pi_cs, const ModelConfig& cfg) {
    if (pi_cs.size() != geom.lines.size())
        throw mismatch_error("prior centers do not match the line count");
    if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw config_error({"eps must lie in (0, 0.5)"});
    if (!(cfg.prior_mass > 0.0 && cfg.prior_mass < 1.0))
        throw config_error({"prior_mass must lie in (0, 1)"});
    if (!(cfg.prior_halfwidth > 0.0)) throw config_error({"prior_halfwidth must be positive"});

    double d1 = cfg.delta1 > 0.0 ? cfg.delta1 : (geom.delta1 > 0.0 ? geom.delta1 : cfg.eps);
    double d2 = cfg.delta2 > 0.0 ? cfg.delta2 : (geom.delta2 > 0.0 ? geom.delta2 : 1.0 - cfg.eps);
    if (!(0.0 < d1 && d1 < d2 && d2 < 1.0))
        throw config_error({"sigma support endpoints must satisfy 0 < delta1 < delta2 < 1"});

    PriorSpec prior;
    prior.kappa_lo = cfg.kappa_lo;
    prior.kappa_hi = cfg.kappa_hi;
    if (!(0.0 < prior.kappa_lo && prior.kappa_lo < prior.kappa_hi))
        throw config_error({"kappa bounds must satisfy 0 < kappa_lo < kappa_hi"});

    // Largest plausible edge spread: half the logit gap of the support
    // interval, scaled so a normal with that sd keeps the configured mass
    // inside it. Same construction as the per-line prior variance below.
    const double sig_hi = stats::sigma_for_mass(stats::logit(d1), stats::logit(d2),
                                                cfg.prior_mass);
    if (!(cfg.sigma_lo > 0.0 && cfg.sigma_lo < sig_hi))
        throw config_error({"sigma_lo must lie in (0, derived sigma upper bound)"});

    for (std::size_t i : fixed.modeled) {
        const double p = pi_cs[i];
        const double lo = std::max(cfg.eps, p - cfg.prior_halfwidth);
        const double hi = std::min(1.0 - cfg.eps, p + cfg.prior_halfwidth);
        if (!(hi > lo))
            throw fit_error("prior interval collapsed for line " + std::to_string(i));
        prior.mu0.push_back(stats::logit_clamped(p, cfg.eps));
        const double s = stats::sigma_for_mass(stats::logit(lo), stats::logit(hi),
                                               cfg.prior_mass);
        prior.lambda0.push_back(s * s);
        prior.sigma_lo.push_back(cfg.sigma_lo);
        prior.sigma_hi.push_back(sig_hi);
    }
    return prior;
}

std::vector<double> line_distances(const RegionGeometry& geom, const FixedRegistry& fixed) {
    const std::size_t m = fixed.modeled.size();
    std::vector<double> d(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            const std::size_t i = fixed.modeled[a];
            const std::size_t j = fixed.modeled[b];
            double dd;
            if (geom.kind == RegionKind::Coastal) {
                dd = std::abs(static_cast<double>(i) - static_cast<double>(j));
            } else {
                dd = std::abs(geom.lines[i].angle - geom.lines[j].angle);
                dd = std::fmod(dd, 2.0 * std::numbers::pi);
                if (dd > std::numbers::pi) dd = 2.0 * std::numbers::pi - dd;
            }
            d[a * m + b] = dd;
        }
    }
    return d;
}

std::vector<double> covariance_matrix(const std::vector<double>& sigma,
                                      const std::vector<double>& dist, double kappa) {
    const std::size_t m = sigma.size();
    if (dist.size() != m * m) throw mismatch_error("distance matrix does not match sigma length");
    if (!(kappa > 0.0)) throw fit_error("kappa must be positive");
    std::vector<double> cov(m * m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            cov[a * m + b] = sigma[a] * sigma[b] * std::exp(-dist[a * m + b] / kappa);
    return cov;
}

namespace {

// Correlation pieces for a fixed kappa. B is the precision, logdet the log
// determinant of the correlation itself (sigma enters the target separately).
struct CorrState {
    MatrixXd B;
    double logdet = 0.0;
};

CorrState factor_correlation(const MatrixXd& dist, double kappa) {
    const auto m = dist.rows();
    MatrixXd C = (-dist / kappa).array().exp().matrix();
    Eigen::LLT<MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
        C.diagonal().array() += 1e-10;
        llt.compute(C);
        if (llt.info() != Eigen::Success)
            throw fit_error("correlation matrix is not positive definite");
    }
    CorrState st;
    st.logdet = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) st.logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    st.B = llt.solve(MatrixXd::Identity(m, m));
    return st;
}

} // namespace

ContourPosterior fit_posterior(const RegionGeometry& geom, const FixedRegistry& fixed,
                               const std::vector<std::vector<double>>& train_pi,
                               const PriorSpec& prior, const ModelConfig& cfg,
                               std::uint64_t seed) {
    const std::size_t n = geom.lines.size();
    const std::size_t m = fixed.modeled.size();
    if (train_pi.empty()) throw mismatch_error("posterior fit needs training proportions");
    for (const auto& year : train_pi)
        if (year.size() != n)
            throw mismatch_error("training proportions do not match the line count");
    if (prior.mu0.size() != m || prior.lambda0.size() != m || prior.sigma_lo.size() != m ||
        prior.sigma_hi.size() != m)
        throw mismatch_error("prior does not match the modeled line count");
    if (cfg.burnin < 0 || cfg.iterations <= cfg.burnin)
        throw config_error({"iterations must exceed burnin and burnin must be nonnegative"});
    if (cfg.adapt_batch < 1 || cfg.resync_every < 1)
        throw config_error({"adapt_batch and resync_every must be positive"});

    ContourPosterior post;
    post.geom = geom;
    post.fixed = fixed;
    post.cfg = cfg;
    post.seed = seed;
    if (m == 0) {
        post.kind = ContourPosterior::Kind::Constant;
        return post;
    }
    post.kind = ContourPosterior::Kind::Fitted;

    const int P = static_cast<int>(train_pi.size());
    MatrixXd Y(P, m);
    for (int j = 0; j < P; ++j)
        for (std::size_t a = 0; a < m; ++a)
            Y(j, a) = stats::logit_clamped(train_pi[j][fixed.modeled[a]], cfg.eps);

    MatrixXd dist(m, m);
    {
        auto d = line_distances(geom, fixed);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) dist(a, b) = d[a * m + b];
    }

    VectorXd mu0(m), lam0(m), sig_lo(m), sig_hi(m);
    for (std::size_t a = 0; a < m; ++a) {
        mu0(a) = prior.mu0[a];
        lam0(a) = prior.lambda0[a];
        sig_lo(a) = prior.sigma_lo[a];
        sig_hi(a) = prior.sigma_hi[a];
    }

    // initial state
    VectorXd mu = mu0;
    VectorXd sigma(m);
    if (cfg.sigma_init) {
        if (cfg.sigma_init->size() != m)
            throw mismatch_error("sigma_init does not match the modeled line count");
        for (std::size_t a = 0; a < m; ++a)
            sigma(a) = std::clamp((*cfg.sigma_init)[a], sig_lo(a), sig_hi(a));
    } else {
        for (std::size_t a = 0; a < m; ++a) {
            double sd = 0.0;
            if (P >= 2) {
                std::vector<double> col(P);
                for (int j = 0; j < P; ++j) col[j] = Y(j, a);
                sd = stats::sample_sd(col);
            }
            if (!std::isfinite(sd)) sd = 0.0;
            sigma(a) = std::clamp(sd, sig_lo(a), sig_hi(a));
        }
    }
    double kappa = std::clamp(cfg.kappa_init.value_or(1.0), prior.kappa_lo, prior.kappa_hi);

    CorrState corr = factor_correlation(dist, kappa);

    // Running quantities that make single-site updates cheap:
    //   U(j,a)  = (Y(j,a) - mu(a)) / sigma(a)
    //   PU      = U * B
    //   S(a)    = sum_j PU(j,a)
    //   Q       = sum_j u_j' B u_j
    MatrixXd U(P, m), PU(P, m);
    VectorXd S(m);
    double Q = 0.0;
    auto resync = [&]() {
        for (int j = 0; j < P; ++j)
            for (std::size_t a = 0; a < m; ++a) U(j, a) = (Y(j, a) - mu(a)) / sigma(a);
        PU.noalias() = U * corr.B;
        S = PU.colwise().sum().transpose();
        Q = (U.array() * PU.array()).sum();
        if (!std::isfinite(Q)) throw fit_error("sampler state became non-finite");
    };
    resync();

    const bool do_sigma = cfg.sample_sigma;
    const bool do_kappa = cfg.sample_kappa;
    const std::size_t n_params = m + (do_sigma ? m : 0) + (do_kappa ? 1 : 0);

    post.param_names.reserve(n_params);
    for (std::size_t a = 0; a < m; ++a)
        post.param_names.push_back("mu_" + std::to_string(fixed.modeled[a]));
    if (do_sigma)
        for (std::size_t a = 0; a < m; ++a)
            post.param_names.push_back("sigma_" + std::to_string(fixed.modeled[a]));
    if (do_kappa) post.param_names.push_back("kappa");

    post.chains.assign(n_params, {});
    for (auto& c : post.chains) c.reserve(cfg.iterations);

    // per-parameter proposal scales, adapted on the log scale during burn-in
    std::vector<double> lscale(n_params);
    for (std::size_t a = 0; a < m; ++a) lscale[a] = std::log(std::sqrt(lam0(a)));
    if (do_sigma)
        for (std::size_t a = 0; a < m; ++a)
            lscale[m + a] = std::log(std::max(1e-8, (sig_hi(a) - sig_lo(a)) / 10.0));
    if (do_kappa)
        lscale[n_params - 1] = std::log((prior.kappa_hi - prior.kappa_lo) / 10.0);

    std::vector<int> batch_acc(n_params, 0);
    std::vector<long> post_acc(n_params, 0);
    int batch_no = 0;

    Rng rng = Rng(seed).derive({0x6d636d63ull});  // chain stream

    for (int it = 0; it < cfg.iterations; ++it) {
        const bool in_burnin = it < cfg.burnin;

        // edge means
        for (std::size_t a = 0; a < m; ++a) {
            const double delta = std::exp(lscale[a]) * rng.next_normal();
            const double du = -delta / sigma(a);
            const double dQ = 2.0 * du * S(a) + P * du * du * corr.B(a, a);
            const double mu_new = mu(a) + delta;
            const double dprior = ((mu(a) - mu0(a)) * (mu(a) - mu0(a)) -
                                   (mu_new - mu0(a)) * (mu_new - mu0(a))) /
                                  (2.0 * lam0(a));
            const double dlt = -0.5 * dQ + dprior;
            if (std::log(rng.next_uniform()) < dlt) {
                mu(a) = mu_new;
                U.col(a).array() += du;
                PU.noalias() += (VectorXd::Constant(P, du)) * corr.B.row(a);
                S += P * du * corr.B.row(a).transpose();
                Q += dQ;
                batch_acc[a]++;
                if (!in_burnin) post_acc[a]++;
            }
        }

        // edge spreads
        if (do_sigma) {
            for (std::size_t a = 0; a < m; ++a) {
                const double delta = std::exp(lscale[m + a]) * rng.next_normal();
                const double snew = sigma(a) + delta;
                if (snew < sig_lo(a) || snew > sig_hi(a)) continue;  // flat prior support
                const double r = sigma(a) / snew - 1.0;
                const double t1 = U.col(a).dot(PU.col(a));
                const double t2 = U.col(a).squaredNorm();
                const double dQ = 2.0 * r * t1 + r * r * corr.B(a, a) * t2;
                const double dlt = -P * (std::log(snew) - std::log(sigma(a))) - 0.5 * dQ;
                if (std::log(rng.next_uniform()) < dlt) {
                    VectorXd du = U.col(a) * r;
                    PU.noalias() += du * corr.B.row(a);
                    S += du.sum() * corr.B.row(a).transpose();
                    U.col(a) += du;
                    Q += dQ;
                    sigma(a) = snew;
                    batch_acc[m + a]++;
                    if (!in_burnin) post_acc[m + a]++;
                }
            }
        }

        // correlation range; the one move that refactorizes
        if (do_kappa) {
            const std::size_t pk = n_params - 1;
            const double delta = std::exp(lscale[pk]) * rng.next_normal();
            const double knew = kappa + delta;
            if (knew >= prior.kappa_lo && knew <= prior.kappa_hi) {
                CorrState cand = factor_correlation(dist, knew);
                MatrixXd PUc(P, m);
                PUc.noalias() = U * cand.B;
                const double Qc = (U.array() * PUc.array()).sum();
                const double dlt =
                    -0.5 * P * (cand.logdet - corr.logdet) - 0.5 * (Qc - Q);
                if (std::log(rng.next_uniform()) < dlt) {
                    kappa = knew;
                    corr = std::move(cand);
                    PU = std::move(PUc);
                    S = PU.colwise().sum().transpose();
                    Q = Qc;
                    batch_acc[pk]++;
                    if (!in_burnin) post_acc[pk]++;
                }
            }
        }

        for (std::size_t a = 0; a < m; ++a) post.chains[a].push_back(mu(a));
        if (do_sigma)
            for (std::size_t a = 0; a < m; ++a) post.chains[m + a].push_back(sigma(a));
        if (do_kappa) post.chains[n_params - 1].push_back(kappa);

        // incremental algebra drifts; rebuild from the definition periodically
        if ((it + 1) % cfg.resync_every == 0) resync();

        if (in_burnin && (it + 1) % cfg.adapt_batch == 0) {
            ++batch_no;
            const double step = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batch_no)));
            for (std::size_t p = 0; p < n_params; ++p) {
                const double rate = static_cast<double>(batch_acc[p]) / cfg.adapt_batch;
                lscale[p] += rate > cfg.target_accept ? step : -step;
                batch_acc[p] = 0;
            }
        }
    }

    const int kept = cfg.iterations - cfg.burnin;
    post.mu_mean.assign(m, 0.0);
    post.sigma_mean.assign(m, 0.0);
    post.accept_rate.assign(n_params, 0.0);
    for (std::size_t p = 0; p < n_params; ++p) {
        post.accept_rate[p] = static_cast<double>(post_acc[p]) / kept;
        double s = 0.0;
        for (int it = cfg.burnin; it < cfg.iterations; ++it) s += post.chains[p][it];
        const double avg = s / kept;
        if (p < m) post.mu_mean[p] = avg;
        else if (do_sigma && p < 2 * m) post.sigma_mean[p - m] = avg;
        else if (do_kappa && p == n_params - 1) post.kappa_mean = avg;
    }
    if (!do_sigma)
        for (std::size_t a = 0; a < m; ++a) post.sigma_mean[a] = sigma(a);
    if (!do_kappa) post.kappa_mean = kappa;
    return post;
}

namespace {

GeneratedContours generate_impl(const ContourPosterior& post, int count, std::uint64_t seed,
                                bool parallel) {
    if (count < 1) throw config_error({"contour count must be positive"});
    const auto& geom = post.geom;
    const std::size_t n = geom.lines.size();
    const std::size_t m = post.fixed.modeled.size();

    GeneratedContours out;
    out.contours.assign(count, {});
    out.lengths.assign(count, {});

    MatrixXd L;  // Cholesky factor of the edge covariance at the posterior mean
    if (m > 0) {
        auto dist = line_distances(geom, post.fixed);
        auto cov = covariance_matrix(post.sigma_mean, dist, post.kappa_mean);
        MatrixXd Sig(m, m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) Sig(a, b) = cov[a * m + b];
        Eigen::LLT<MatrixXd> llt(Sig);
        if (llt.info() != Eigen::Success) {
            Sig.diagonal().array() += 1e-10;
            llt.compute(Sig);
            if (llt.info() != Eigen::Success)
                throw fit_error("edge covariance is not positive definite");
        }
        L = llt.matrixL();
    }

    const Rng root(seed);
    std::vector<std::string> failures(count);
    auto body = [&](std::size_t k) {
        try {
            std::vector<double> prop(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (post.fixed.value[i] >= 0) prop[i] = post.fixed.value[i];
            if (m > 0) {
                Rng rk = root.derive({k});
                VectorXd z(m);
                for (std::size_t a = 0; a < m; ++a) z(a) = rk.next_normal();
                VectorXd x = L * z;
                for (std::size_t a = 0; a < m; ++a)
                    prop[post.fixed.modeled[a]] = stats::ilogit(post.mu_mean[a] + x(a));
            }
            std::vector<double> len(n);
            for (std::size_t i = 0; i < n; ++i)
                len[i] = length_from_proportion(geom.lines[i], prop[i]);
            len = snap_to_boundary(geom, std::move(len));
            Contour c = contour_from_lengths(geom, len);
            out.contours[k] = repair_self_intersections(std::move(c), geom);
            out.lengths[k] = std::move(len);
        } catch (const std::exception& e) {
            failures[k] = e.what();
        }
    };
    if (parallel) par::parallel_for(static_cast<std::size_t>(count), body);
    else par::serial_for(static_cast<std::size_t>(count), body);

    for (const auto& f : failures)
        if (!f.empty()) throw geometry_error("contour generation failed: " + f);
    return out;
}

} // namespace

GeneratedContours generate_contours(const ContourPosterior& post, int count,
                                    std::uint64_t seed) {
    return generate_impl(post, count, seed, true);
}

GeneratedContours generate_contours_serial(const ContourPosterior& post, int count,
                                           std::uint64_t seed) {
    return generate_impl(post, count, seed, false);
}

RealField contour_probability_field(const std::vector<Contour>& contours, const CellMask& mask,
                                    FieldTime time) {
    if (contours.empty()) throw mismatch_error("probability field needs at least one contour");
    std::vector<int> hits(mask.grid.size(), 0);
    for (const auto& c : contours) {
        ByteField r = rasterize(c, mask, time);
        for (std::size_t s = 0; s < hits.size(); ++s)
            if (r.v[s] == 1) hits[s]++;
    }
    RealField prob;
    prob.grid = mask.grid;
    prob.kind = FieldKind::Probability;
    prob.time = time;
    prob.v.assign(mask.grid.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t s = 0; s < hits.size(); ++s)
        if (mask.label[s] == CellLabel::Ocean)
            prob.v[s] = static_cast<double>(hits[s]) / static_cast<double>(contours.size());
    return prob;
}

void export_traces(const ContourPosterior& post, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t p = 0; p < post.param_names.size(); ++p) {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(post.chains[p].size());
        for (std::size_t it = 0; it < post.chains[p].size(); ++it)
            rows.push_back({std::to_string(it), io::csv_double(post.chains[p][it]),
                            it < static_cast<std::size_t>(post.cfg.burnin) ? "1" : "0"});
        io::write_csv(dir / (post.param_names[p] + ".csv"), {"iteration", "value", "burnin"},
                      rows);
    }
}

std::vector<double> read_trace_values(const std::filesystem::path& csv, bool include_burnin) {
    io::CsvTable t = io::read_csv(csv);
    const std::size_t vcol = t.column("value");
    const std::size_t bcol = t.column("burnin");
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        if (!include_burnin && row[bcol] == "1") continue;
        out.push_back(std::stod(row[vcol]));
    }
    return out;
}

} // namespace icecontour
