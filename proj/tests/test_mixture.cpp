#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "icecontour/errors.hpp"
#include "icecontour/mixture.hpp"
#include "icecontour/rng.hpp"

using namespace icecontour;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Triple> planted_triples(double w_true, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Triple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Triple t;
        t.g_p = 0.05 + 0.9 * rng.next_uniform();
        t.g_c = 0.05 + 0.9 * rng.next_uniform();
        const double p = w_true * t.g_p + (1.0 - w_true) * t.g_c;
        t.gamma = rng.next_uniform() < p ? 1 : 0;
        t.a = 1.0;
        out.push_back(t);
    }
    return out;
}

double weighted_loglik(const std::vector<Triple>& triples, double w) {
    double ll = 0.0;
    for (const auto& t : triples) {
        const double p = w * t.g_p + (1.0 - w) * t.g_c;
        ll += t.a * std::log(t.gamma == 1 ? p : 1.0 - p);
    }
    return ll;
}

} // namespace

TEST_CASE("blend arithmetic") {
    CHECK(mixture_probability(0.3, 0.8, 0.2) == doctest::Approx(0.38).epsilon(1e-15));
    CHECK(mixture_probability(0.0, 0.8, 0.2) == 0.2);
    CHECK(mixture_probability(1.0, 0.8, 0.2) == 0.8);
}

TEST_CASE("likelihood path never decreases") {
    const auto triples = planted_triples(0.6, 3000, 101);
    const WeightFit fit = fit_weight(triples);
    REQUIRE(fit.ll_path.size() >= 2);
    for (std::size_t i = 1; i < fit.ll_path.size(); ++i)
        CHECK(fit.ll_path[i] >= fit.ll_path[i - 1] - 1e-12);
    CHECK(fit.loglik == fit.ll_path.back());
    CHECK(fit.iterations >= 1);
    CHECK(fit.n_used == 3000);
    CHECK(fit.n_excluded == 0);
}

TEST_CASE("fit lands on the grid-search maximum") {
    // components kept inside (0.05, 0.95) so clamping is inert and the
    // weighted log likelihood below is exactly the one being maximized
    for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
        auto triples = planted_triples(0.35, 1500, seed);
        for (auto& t : triples) t.a = 0.5 + (t.g_p > 0.5 ? 1.0 : 0.0);  // uneven areas
        const WeightFit fit = fit_weight(triples);

        double best_w = 0.0, best_ll = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 1000; ++k) {
            const double w = k / 1000.0;
            const double ll = weighted_loglik(triples, std::clamp(w, 1e-6, 1.0 - 1e-6));
            if (ll > best_ll) {
                best_ll = ll;
                best_w = w;
            }
        }
        CHECK(std::abs(fit.w - best_w) <= 0.001 + 1e-12);
    }
}

TEST_CASE("planted weight is recovered") {
    const auto triples = planted_triples(0.7, 10000, 404);
    const WeightFit fit = fit_weight(triples);
    CHECK(std::abs(fit.w - 0.7) < 0.05);
}

TEST_CASE("coinciding components carry no information") {
    auto informative = planted_triples(0.5, 400, 55);
    auto padded = informative;
    for (int i = 0; i < 100; ++i) padded.push_back({0.3, 0.3, i % 2, 2.0});
    // clamping makes these coincide too
    padded.push_back({0.0, 1e-9, 1, 1.0});

    const WeightFit base = fit_weight(informative);
    const WeightFit same = fit_weight(padded);
    CHECK(same.n_excluded == 101);
    CHECK(same.n_used == 400);
    CHECK(same.w == base.w);
    CHECK(same.loglik == base.loglik);
}

TEST_CASE("all-flat input keeps the starting weight") {
    std::vector<Triple> flat(20, Triple{0.4, 0.4, 1, 1.0});
    const WeightFit fit = fit_weight(flat, 0.37);
    CHECK(fit.w == 0.37);
    CHECK(fit.n_used == 0);
    CHECK(fit.n_excluded == 20);
    CHECK(fit.iterations == 0);
    CHECK(fit.ll_path.empty());
}

TEST_CASE("extreme component probabilities stay finite through the clamp") {
    std::vector<Triple> triples;
    for (int i = 0; i < 50; ++i) triples.push_back({1.0, 0.0, i % 3 == 0 ? 1 : 0, 1.0});
    for (int i = 0; i < 50; ++i) triples.push_back({0.0, 1.0, i % 3 == 0 ? 1 : 0, 1.0});
    const WeightFit fit = fit_weight(triples);
    CHECK(std::isfinite(fit.w));
    CHECK(std::isfinite(fit.loglik));
    CHECK(fit.w >= 0.0);
    CHECK(fit.w <= 1.0);
}

TEST_CASE("bad cases are rejected up front") {
    CHECK_THROWS_AS(fit_weight({{0.5, 0.4, 2, 1.0}}), mismatch_error);
    CHECK_THROWS_AS(fit_weight({{kNaN, 0.4, 1, 1.0}}), mismatch_error);
    CHECK_THROWS_AS(fit_weight({{0.5, 0.4, 1, -1.0}}), mismatch_error);
    CHECK_THROWS_AS(fit_weight({{0.5, 0.4, 1, 1.0}}, 0.0), config_error);
    CHECK_THROWS_AS(fit_weight({{0.5, 0.4, 1, 1.0}}, 1.0), config_error);
    CHECK_THROWS_AS(fit_weight({{0.5, 0.4, 1, 1.0}}, 0.5, 0.0), config_error);
}

TEST_CASE("field blend respects coverage") {
    GridSpec grid{2, 2, 10.0, 10.0, 0.0, 0.0};
    RealField gp, gc;
    gp.grid = gc.grid = grid;
    gp.kind = gc.kind = FieldKind::Probability;
    gp.time = {2012, 9, 1.5};
    gc.time = gp.time;
    gp.v = {0.8, 0.2, kNaN, 1.0};
    gc.v = {0.4, 0.6, kNaN, 0.0};

    const RealField mix = mixture_field(0.25, gp, gc);
    CHECK(mix.kind == FieldKind::Probability);
    CHECK(mix.time.year == 2012);
    CHECK(mix.v[0] == doctest::Approx(0.25 * 0.8 + 0.75 * 0.4).epsilon(1e-15));
    CHECK(mix.v[1] == doctest::Approx(0.25 * 0.2 + 0.75 * 0.6).epsilon(1e-15));
    CHECK(std::isnan(mix.v[2]));
    CHECK(mix.v[3] == 0.25);

    RealField holey = gc;
    holey.v[0] = kNaN;
    CHECK_THROWS_AS(mixture_field(0.25, gp, holey), mismatch_error);

    RealField other = gc;
    other.grid.ncols = 3;
    other.v = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    CHECK_THROWS_AS(mixture_field(0.25, gp, other), mismatch_error);
}

TEST_CASE("triple collection renormalizes per region and flags gaps") {
    GridSpec grid{2, 4, 10.0, 10.0, 0.0, 0.0};
    ByteField maskf;
    maskf.grid = grid;
    maskf.kind = FieldKind::Mask;
    // left half region 1, right half region 2
    maskf.v = {static_cast<std::uint8_t>(kMaskRegionBase + 1),
               static_cast<std::uint8_t>(kMaskRegionBase + 1),
               static_cast<std::uint8_t>(kMaskRegionBase + 2),
               static_cast<std::uint8_t>(kMaskRegionBase + 2),
               static_cast<std::uint8_t>(kMaskRegionBase + 1),
               static_cast<std::uint8_t>(kMaskRegionBase + 1),
               static_cast<std::uint8_t>(kMaskRegionBase + 2),
               static_cast<std::uint8_t>(kMaskRegionBase + 2)};
    const CellMask mask = CellMask::from_field(maskf);

    RealField gp, gc;
    gp.grid = gc.grid = grid;
    gp.kind = gc.kind = FieldKind::Probability;
    gp.v = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    gc.v = {0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
    ByteField obs;
    obs.grid = grid;
    obs.kind = FieldKind::Binary;
    obs.v = {1, 0, 1, 0, 1, 0, 1, 0};

    const auto left = triples_from_fields(mask, gp, gc, obs, 1);
    REQUIRE(left.size() == 4);
    double asum = 0.0;
    for (const auto& t : left) asum += t.a;
    CHECK(asum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(left[0].g_p == 0.1);
    CHECK(left[0].g_c == 0.8);
    CHECK(left[0].gamma == 1);
    CHECK(left[1].gamma == 0);

    const auto all = triples_from_fields(mask, gp, gc, obs);
    REQUIRE(all.size() == 8);
    CHECK(all[0].a == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

    RealField gappy = gp;
    gappy.v[0] = kNaN;
    CHECK_THROWS_AS(triples_from_fields(mask, gappy, gc, obs, 1), mismatch_error);
    ByteField miss = obs;
    miss.v[5] = kByteSentinel;
    CHECK_THROWS_AS(triples_from_fields(mask, gp, gc, miss, 1), mismatch_error);
    // a gap outside the requested region does not matter
    CHECK_NOTHROW(triples_from_fields(mask, gappy, gc, obs, 2));
}
