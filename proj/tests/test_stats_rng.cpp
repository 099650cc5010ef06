#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "icecontour/errors.hpp"
#include "icecontour/rng.hpp"
#include "icecontour/stats.hpp"

using namespace icecontour;
namespace st = icecontour::stats;

namespace {

// Bisection inverse of norm_cdf, independent of the AS241 path.
double quantile_oracle(double p) {
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (st::norm_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("logit and ilogit invert each other") {
    for (double p : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        CHECK(st::ilogit(st::logit(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(st::logit(0.5) == 0.0);
    CHECK(st::logit(0.01) == doctest::Approx(-4.59511985013459).epsilon(1e-12));
    // clamping pins the endpoints to the eps interval
    CHECK(st::logit_clamped(0.0, 0.01) == st::logit(0.01));
    CHECK(st::logit_clamped(1.0, 0.01) == st::logit(0.99));
    CHECK(st::logit_clamped(0.3, 0.01) == st::logit(0.3));
}

TEST_CASE("normal quantile matches a bisection oracle") {
    for (double p : {0.001, 0.025, 0.3, 0.5, 0.77, 0.975, 0.995}) {
        CHECK(st::norm_quantile(p) == doctest::Approx(quantile_oracle(p)).epsilon(1e-9));
    }
    CHECK(st::norm_quantile(0.995) == doctest::Approx(2.5758293035489004).epsilon(1e-12));
    CHECK(st::norm_quantile(0.5) == 0.0);
}

TEST_CASE("norm_cdf basics") {
    CHECK(st::norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(st::norm_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(st::norm_cdf(-8.0) < 1e-14);
}

TEST_CASE("sigma_for_mass puts the requested mass on the interval") {
    const double s = st::sigma_for_mass(-1.0, 1.0, 0.99);
    CHECK(std::abs(s - 0.388227) < 1e-5);
    // direct mass check
    const double mass = st::norm_cdf(1.0 / s) - st::norm_cdf(-1.0 / s);
    CHECK(mass == doctest::Approx(0.99).epsilon(1e-12));
    // off-center interval
    const double s2 = st::sigma_for_mass(0.5, 2.5, 0.9);
    const double mid = 1.5;
    CHECK(st::norm_cdf((2.5 - mid) / s2) - st::norm_cdf((0.5 - mid) / s2) ==
          doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("moment helpers") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(st::mean(v) == doctest::Approx(2.5));
    CHECK(st::sample_var(v) == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
    CHECK(st::sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
    CHECK(st::median({5.0, 1.0, 3.0}) == 3.0);
    CHECK(st::median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    // mad of {1,2,4,7}: median 3, |v - 3| = {2,1,1,4}, median 1.5
    CHECK(st::mad({1.0, 2.0, 4.0, 7.0}) == doctest::Approx(1.5));
}

TEST_CASE("pearson endpoints and failure") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> up{2.0, 4.0, 6.0, 8.0};
    const std::vector<double> dn{8.0, 6.0, 4.0, 2.0};
    CHECK(st::pearson(x, up) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(st::pearson(x, dn) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)st::pearson(x, {1.0, 1.0, 1.0, 1.0}), fit_error);
}

TEST_CASE("ols recovers an exact line") {
    std::vector<double> x, y;
    for (int i = 0; i < 9; ++i) {
        x.push_back(i);
        y.push_back(3.5 - 0.25 * i);
    }
    const auto f = st::ols_fit(x, y);
    CHECK(f.intercept == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK_THROWS_AS((void)st::ols_fit({1.0, 1.0}, {2.0, 3.0}), fit_error);
}

TEST_CASE("batch-means standard error tracks iid spread") {
    Rng r(11);
    std::vector<double> v;
    for (int i = 0; i < 20000; ++i) v.push_back(r.next_normal());
    const double se = st::batch_means_se(v, 50);
    const double iid = st::sample_sd(v) / std::sqrt(double(v.size()));
    CHECK(se > 0.3 * iid);
    CHECK(se < 3.0 * iid);
}

TEST_CASE("rng streams are deterministic and order-sensitive") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng base(7);
    Rng d12 = base.derive({1, 2});
    Rng d21 = base.derive({2, 1});
    CHECK(d12.next_u64() != d21.next_u64());
    // deriving does not disturb the parent
    Rng p1(7), p2(7);
    (void)p1.derive({5});
    CHECK(p1.next_u64() == p2.next_u64());
}

TEST_CASE("uniform and normal draws have the right range and moments") {
    Rng r(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));

    Rng g(321);
    std::vector<double> z(n);
    for (auto& x : z) x = g.next_normal();
    CHECK(st::mean(z) == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
    CHECK(st::sample_var(z) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("next_below stays in range and covers values") {
    Rng r(5);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto k = r.next_below(7);
        REQUIRE(k < 7);
        ++seen[k];
    }
    for (int c : seen) CHECK(c > 700);
}
