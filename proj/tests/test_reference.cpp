#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "icecontour/errors.hpp"
#include "icecontour/grid.hpp"
#include "icecontour/reference.hpp"
#include "icecontour/rng.hpp"

using namespace icecontour;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ByteField binary_field(const GridSpec& grid, std::vector<std::uint8_t> v, FieldTime t = {}) {
    ByteField f;
    f.grid = grid;
    f.kind = FieldKind::Binary;
    f.time = t;
    f.v = std::move(v);
    return f;
}

RealField conc_field(const GridSpec& grid, std::vector<double> v, FieldTime t = {}) {
    RealField f;
    f.grid = grid;
    f.kind = FieldKind::Concentration;
    f.time = t;
    f.v = std::move(v);
    return f;
}

} // namespace

TEST_CASE("climatology counts ice years, majority rounds up") {
    GridSpec grid{2, 2, 10.0, 10.0, 0.0, 0.0};
    std::vector<ByteField> window;
    // cell0 iced in 3/5 years, cell1 in 1/5, cell2 never, cell3 always
    window.push_back(binary_field(grid, {1, 1, 0, 1}));
    window.push_back(binary_field(grid, {1, 0, 0, 1}));
    window.push_back(binary_field(grid, {1, 0, 0, 1}));
    window.push_back(binary_field(grid, {0, 0, 0, 1}));
    window.push_back(binary_field(grid, {0, 0, 0, 1}));

    const RealField prob = climatology_probability(window, {2012, 9, 1.5});
    CHECK(prob.kind == FieldKind::Probability);
    CHECK(prob.time.year == 2012);
    CHECK(prob.time.lead == 1.5);
    CHECK(prob.v[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(prob.v[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(prob.v[2] == 0.0);
    CHECK(prob.v[3] == 1.0);

    const ByteField bin = climatology_binary(window, {2012, 9, 1.5});
    CHECK(bin.v == std::vector<std::uint8_t>{1, 0, 0, 1});

    // even window: 2 of 4 is a tie, resolved to ice
    std::vector<ByteField> even(window.begin(), window.begin() + 4);
    const ByteField tie = climatology_binary(even, {2012, 9, 1.5});
    CHECK(tie.v[0] == 1);   // 3/4
    CHECK(tie.v[1] == 0);   // 1/4
    CHECK(tie.v[3] == 1);
    even[1].v[1] = 1;       // now 2/4
    CHECK(climatology_binary(even, {2012, 9, 1.5}).v[1] == 1);
}

TEST_CASE("climatology coverage: sentinels agree or the call fails") {
    GridSpec grid{1, 3, 10.0, 10.0, 0.0, 0.0};
    std::vector<ByteField> window;
    window.push_back(binary_field(grid, {1, kByteSentinel, 0}));
    window.push_back(binary_field(grid, {0, kByteSentinel, 0}));
    window.push_back(binary_field(grid, {1, kByteSentinel, 1}));

    const RealField prob = climatology_probability(window, {});
    CHECK(std::isnan(prob.v[1]));
    CHECK(prob.v[0] == doctest::Approx(2.0 / 3.0));
    const ByteField bin = climatology_binary(window, {});
    CHECK(bin.v[1] == kByteSentinel);
    CHECK(bin.v[0] == 1);

    window[1].v[1] = 0;  // disagrees with the other years
    CHECK_THROWS_AS(climatology_probability(window, {}), mismatch_error);
    window[1].v[1] = kByteSentinel;
    window[2].v[2] = 3;
    CHECK_THROWS_AS(climatology_binary(window, {}), mismatch_error);
    CHECK_THROWS_AS(climatology_probability({}, FieldTime{}), mismatch_error);
}

TEST_CASE("ensemble vote resolves ties to ice and matches the probability route") {
    GridSpec grid{1, 4, 10.0, 10.0, 0.0, 0.0};
    std::vector<ByteField> members;
    members.push_back(binary_field(grid, {1, 1, 0, kByteSentinel}));
    members.push_back(binary_field(grid, {1, 1, 0, kByteSentinel}));
    members.push_back(binary_field(grid, {0, 0, 0, kByteSentinel}));
    members.push_back(binary_field(grid, {0, 0, 1, kByteSentinel}));

    const ByteField vote = ensemble_binary(members, {2015, 9, 0.5});
    CHECK(vote.v == std::vector<std::uint8_t>{1, 1, 0, kByteSentinel});
    CHECK(vote.time.month == 9);

    // the vote is the thresholded member fraction, including at ties
    Rng rng(321);
    GridSpec big{12, 12, 5.0, 5.0, 0.0, 0.0};
    std::vector<ByteField> random_members;
    for (int m = 0; m < 20; ++m) {
        std::vector<std::uint8_t> v(big.size());
        for (auto& b : v) b = rng.next_uniform() < 0.5 ? 1 : 0;
        v[0] = kByteSentinel;  // consistent hole
        random_members.push_back(binary_field(big, std::move(v)));
    }
    const ByteField direct = ensemble_binary(random_members, {2015, 9, 0.5});
    const ByteField via_prob = probability_to_binary(ensemble_probability(random_members));
    CHECK(direct.v == via_prob.v);
}

TEST_CASE("probability threshold sits at one half, gaps stay gaps") {
    GridSpec grid{1, 4, 10.0, 10.0, 0.0, 0.0};
    RealField prob;
    prob.grid = grid;
    prob.kind = FieldKind::Probability;
    prob.time = {2014, 7, 2.5};
    prob.v = {0.5, 0.4999999, kNaN, 1.0};
    const ByteField bin = probability_to_binary(prob);
    CHECK(bin.kind == FieldKind::Binary);
    CHECK(bin.time.year == 2014);
    CHECK(bin.time.lead == 2.5);
    CHECK(bin.v == std::vector<std::uint8_t>{1, 0, kByteSentinel, 1});

    RealField conc = prob;
    conc.kind = FieldKind::Concentration;
    CHECK_THROWS_AS(probability_to_binary(conc), mismatch_error);
}

TEST_CASE("initialization month backs off by the whole months already elapsed") {
    CHECK(persistence_init_month(9, 0.5) == 8);
    CHECK(persistence_init_month(9, 1.5) == 7);
    CHECK(persistence_init_month(9, 2.5) == 6);
    CHECK(persistence_init_month(1, 0.5) == 12);
    CHECK(persistence_init_month(1, 1.5) == 11);
    CHECK(persistence_init_month(2, 3.5) == 10);

    CHECK(persistence_init_year(9, 8, 2010) == 2010);
    CHECK(persistence_init_year(9, 9, 2010) == 2010);
    CHECK(persistence_init_year(1, 12, 2010) == 2009);
    CHECK(persistence_init_year(2, 10, 2010) == 2009);

    CHECK_THROWS_AS(persistence_init_month(13, 0.5), config_error);
    CHECK_THROWS_AS(persistence_init_month(9, 0.3), config_error);
}

TEST_CASE("persistence reproduces its own generating process exactly") {
    // Residuals shared between the two months and chosen orthogonal to the
    // trend regressors, so the per-cell fits recover the construction and the
    // damped anomaly carries over one to one.
    GridSpec grid{5, 5, 10.0, 10.0, 0.0, 0.0};
    const std::vector<int> years{2000, 2001, 2002, 2003, 2004, 2005, 2006, 2007};
    const std::vector<double> e{1, -1, -1, 1, 1, -1, -1, 1};

    auto am = [](std::size_t s) { return s % 4 == 0 ? 0.08 : 0.30 + 0.02 * double(s % 5); };
    auto bm = [](std::size_t s) { return s % 4 == 0 ? 0.0 : 0.005 * (double(s % 3) - 1.0); };
    auto ai = [](std::size_t s) { return 0.40 + 0.01 * double(s % 4); };
    auto bi = [](std::size_t s) { return s % 4 == 0 ? 0.0 : -0.003 * double(s % 2); };
    auto amp = [](std::size_t s) { return s % 4 == 0 ? 0.01 : 0.02 + 0.002 * double(s % 3); };

    std::vector<RealField> cm, ci;
    for (std::size_t k = 0; k < years.size(); ++k) {
        std::vector<double> vm(grid.size()), vi(grid.size());
        const double dt = double(years[k] - 2000);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            vm[s] = am(s) + bm(s) * dt + amp(s) * e[k];
            vi[s] = ai(s) + bi(s) * dt + amp(s) * e[k];
        }
        cm.push_back(conc_field(grid, std::move(vm), {years[k], 9, 0.0}));
        ci.push_back(conc_field(grid, std::move(vi), {years[k], 8, 0.0}));
    }

    const PersistenceFit fit = fit_persistence(cm, years, ci, years, 9, 8);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        CHECK(fit.rho[s] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(fit.beta_m[s] - bm(s)) < 1e-9);
    }

    const int target = 2010;
    const double g = 0.7;  // shared anomaly in units of amp
    std::vector<double> vi(grid.size()), vt(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
        vi[s] = ai(s) + bi(s) * double(target - 2000) + amp(s) * g;
        vt[s] = am(s) + bm(s) * double(target - 2000) + amp(s) * g;
    }
    const RealField obs_init = conc_field(grid, vi, {target, 8, 0.0});
    const RealField truth = conc_field(grid, vt, {target, 9, 0.0});

    const RealField pred = predict_persistence_concentration(fit, obs_init, target);
    for (std::size_t s = 0; s < grid.size(); ++s)
        CHECK(pred.v[s] == doctest::Approx(truth.v[s]).epsilon(1e-9));

    // thresholding both sides agrees, and the field genuinely mixes 0s and 1s
    const ByteField pb = predict_persistence(fit, obs_init, target);
    const ByteField tb = threshold_concentration(truth);
    CHECK(pb.v == tb.v);
    std::size_t ones = 0;
    for (auto b : pb.v) ones += b == 1;
    CHECK(ones > 0);
    CHECK(ones < pb.v.size());

    const PersistenceFit serial = fit_persistence_serial(cm, years, ci, years, 9, 8);
    CHECK(serial.alpha_m == fit.alpha_m);
    CHECK(serial.beta_i == fit.beta_i);
    CHECK(serial.rho == fit.rho);
}

TEST_CASE("constant initialization series turns the damping off") {
    GridSpec grid{2, 2, 10.0, 10.0, 0.0, 0.0};
    const std::vector<int> years{2001, 2002, 2003, 2004};
    std::vector<RealField> cm, ci;
    for (std::size_t k = 0; k < years.size(); ++k) {
        const double dt = double(years[k] - 2001);
        std::vector<double> vm{0.3 + 0.01 * dt + (k % 2 ? 0.02 : -0.02), 0.5, 0.6, 0.2};
        cm.push_back(conc_field(grid, std::move(vm), {years[k], 9, 0.0}));
        ci.push_back(conc_field(grid, {0.5, 0.5, 0.5, 0.5}, {years[k], 8, 0.0}));
    }
    const PersistenceFit fit = fit_persistence(cm, years, ci, years, 9, 8);
    for (std::size_t s = 0; s < grid.size(); ++s) CHECK(fit.rho[s] == 0.0);

    // a wild initialization anomaly cannot move the forecast off the trend
    const RealField shock = conc_field(grid, {0.95, 0.95, 0.95, 0.95}, {2006, 8, 0.0});
    const RealField pred = predict_persistence_concentration(fit, shock, 2006);
    CHECK(pred.v[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pred.v[2] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("persistence input validation") {
    GridSpec grid{2, 2, 10.0, 10.0, 0.0, 0.0};
    std::vector<RealField> two{conc_field(grid, {0.1, 0.2, 0.3, 0.4}),
                               conc_field(grid, {0.2, 0.3, 0.4, 0.5})};
    CHECK_THROWS_AS(fit_persistence(two, {2000, 2001}, two, {2000, 2001}, 9, 8), fit_error);

    std::vector<RealField> three = two;
    three.push_back(conc_field(grid, {0.3, 0.4, 0.5, 0.6}));
    CHECK_THROWS_AS(fit_persistence(three, {2000, 2001, 2001}, three, {2000, 2001, 2001}, 9, 8),
                    mismatch_error);
    CHECK_THROWS_AS(fit_persistence(three, {2000, 2001, 2002}, two, {2000, 2001}, 9, 8),
                    mismatch_error);

    // a cell missing in training stays missing in the prediction
    std::vector<RealField> holey = three;
    for (auto& f : holey) f.v[3] = kNaN;
    const PersistenceFit fit =
        fit_persistence(holey, {2000, 2001, 2002}, holey, {2000, 2001, 2002}, 9, 8);
    CHECK(std::isnan(fit.rho[3]));
    RealField init = conc_field(grid, {0.5, 0.5, 0.5, kNaN});
    const RealField pred = predict_persistence_concentration(fit, init, 2004);
    CHECK(std::isnan(pred.v[3]));
    // ...but a gap at a fitted cell is an error
    init.v[3] = 0.5;
    init.v[0] = kNaN;
    CHECK_THROWS_AS(predict_persistence_concentration(fit, init, 2004), mismatch_error);

    const auto fields = persistence_fit_fields(fit);
    REQUIRE(fields.size() == 5);
    CHECK(fields[0].first == "alpha_m");
    CHECK(fields[4].first == "rho");
    CHECK(std::isnan(fields[4].second.v[3]));
}
