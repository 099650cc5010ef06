#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "icecontour/errors.hpp"
#include "icecontour/verify.hpp"

using namespace icecontour;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

RealField prob_field(const GridSpec& grid, std::vector<double> v) {
    RealField f;
    f.grid = grid;
    f.kind = FieldKind::Probability;
    f.v = std::move(v);
    return f;
}

ByteField obs_field(const GridSpec& grid, std::vector<std::uint8_t> v) {
    ByteField f;
    f.grid = grid;
    f.kind = FieldKind::Binary;
    f.v = std::move(v);
    return f;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("coin-flip forecast scores a quarter") {
    GridSpec grid{4, 4, 10.0, 10.0, 0.0, 0.0};
    const RealField f = prob_field(grid, std::vector<double>(16, 0.5));
    std::vector<std::uint8_t> o(16, 0);
    for (std::size_t s = 0; s < 16; s += 3) o[s] = 1;
    const std::vector<double> w(16, 1.0 / 16.0);
    CHECK(brier(f, obs_field(grid, o), w) == 0.25);
}

TEST_CASE("swapping ice and water labels leaves the score alone") {
    GridSpec grid{4, 4, 10.0, 10.0, 0.0, 0.0};
    Rng rng(9001);
    std::vector<double> fv(16), w(16);
    std::vector<std::uint8_t> ov(16), oc(16);
    double wsum = 0.0;
    for (std::size_t s = 0; s < 16; ++s) {
        fv[s] = rng.next_uniform();
        ov[s] = rng.next_uniform() < 0.5 ? 1 : 0;
        oc[s] = 1 - ov[s];
        w[s] = 0.1 + rng.next_uniform();
        wsum += w[s];
    }
    for (auto& x : w) x /= wsum;
    std::vector<double> fc(16);
    for (std::size_t s = 0; s < 16; ++s) fc[s] = 1.0 - fv[s];

    const double a = brier(prob_field(grid, fv), obs_field(grid, ov), w);
    const double b = brier(prob_field(grid, fc), obs_field(grid, oc), w);
    CHECK(std::abs(a - b) < 1e-15);
}

TEST_CASE("score equals the straightforward sum, both input kinds") {
    GridSpec grid{16, 16, 5.0, 5.0, 0.0, 0.0};
    const std::size_t n = grid.size();
    Rng rng(77);
    std::vector<double> fv(n), w(n);
    std::vector<std::uint8_t> ov(n), bv(n);
    double wsum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        fv[s] = rng.next_uniform();
        ov[s] = rng.next_uniform() < 0.4 ? 1 : 0;
        bv[s] = rng.next_uniform() < 0.6 ? 1 : 0;
        w[s] = rng.next_uniform();
        wsum += w[s];
    }
    for (auto& x : w) x /= wsum;

    double direct = 0.0, direct_b = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        direct += w[s] * (fv[s] - ov[s]) * (fv[s] - ov[s]);
        const double d = double(bv[s]) - double(ov[s]);
        direct_b += w[s] * d * d;
    }
    CHECK(std::abs(brier(prob_field(grid, fv), obs_field(grid, ov), w) - direct) <= 1e-14);
    CHECK(std::abs(brier(obs_field(grid, bv), obs_field(grid, ov), w) - direct_b) <= 1e-14);
}

TEST_CASE("scoring rejects bad inputs, ignores unweighted cells") {
    GridSpec grid{2, 2, 10.0, 10.0, 0.0, 0.0};
    const std::vector<double> w{0.25, 0.25, 0.25, 0.25};

    CHECK_THROWS_AS(brier(prob_field(grid, {0.5, 0.5, 0.5, 0.5}),
                          obs_field(grid, {1, 0, 1, 0}), {0.3, 0.3, 0.3, 0.3}),
                    mismatch_error);
    CHECK_THROWS_AS(brier(prob_field(grid, {0.5, 0.5, 0.5, 0.5}),
                          obs_field(grid, {1, 0, 1, 2}), w),
                    mismatch_error);
    CHECK_THROWS_AS(brier(prob_field(grid, {0.5, 0.5, 0.5, 1.2}),
                          obs_field(grid, {1, 0, 1, 0}), w),
                    mismatch_error);
    CHECK_THROWS_AS(brier(prob_field(grid, {0.5, 0.5, 0.5, kNaN}),
                          obs_field(grid, {1, 0, 1, 0}), w),
                    mismatch_error);
    CHECK_THROWS_AS(brier(obs_field(grid, {1, 0, 1, kByteSentinel}),
                          obs_field(grid, {1, 0, 1, 0}), w),
                    mismatch_error);

    // a sentinel outside the weight support is not an error
    const double ok = brier(prob_field(grid, {1.0, 1.0, 1.0, kNaN}),
                            obs_field(grid, {1, 1, 1, kByteSentinel}), {0.5, 0.25, 0.25, 0.0});
    CHECK(ok == 0.0);
}

TEST_CASE("probability bins are right-inclusive with zeros in the first") {
    GridSpec grid{1, 8, 10.0, 10.0, 0.0, 0.0};
    ReliabilityAccumulator acc(10);
    const std::vector<double> w(8, 1.0 / 8.0);
    acc.add(prob_field(grid, {0.0, 0.05, 0.1, 0.100001, 0.62, 0.68, 1.0, 0.95}),
            obs_field(grid, {0, 0, 0, 0, 1, 0, 1, 1}), w);
    const auto bins = acc.bins();
    REQUIRE(bins.size() == 10);
    CHECK(bins[0].count == 3);  // 0, 0.05, 0.1
    CHECK(bins[1].count == 1);  // 0.100001
    CHECK(bins[6].count == 2);  // 0.62, 0.68
    CHECK(bins[9].count == 2);  // 1.0, 0.95
    CHECK(bins[0].lo == 0.0);
    CHECK(bins[9].hi == 1.0);
    CHECK(bins[6].mean_p == doctest::Approx(0.65).epsilon(1e-12));
    CHECK(bins[6].freq == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::isnan(bins[3].mean_p));
    CHECK(bins[3].count == 0);
    CHECK(bins[3].weight == 0.0);
}

TEST_CASE("area and equal weighting disagree exactly as intended") {
    GridSpec grid{1, 4, 10.0, 10.0, 0.0, 0.0};
    const std::vector<double> w{0.75, 0.25, 0.0, 0.0};
    const RealField f = prob_field(grid, {0.42, 0.48, 0.0, 0.0});
    const ByteField o = obs_field(grid, {1, 0, 0, 0});

    ReliabilityAccumulator area(10, true);
    area.add(f, o, w);
    const auto ab = area.bins();
    CHECK(ab[4].mean_p == doctest::Approx(0.75 * 0.42 + 0.25 * 0.48).epsilon(1e-12));
    CHECK(ab[4].freq == doctest::Approx(0.75).epsilon(1e-12));

    ReliabilityAccumulator equal(10, false);
    equal.add(f, o, w);
    const auto eb = equal.bins();
    CHECK(eb[4].mean_p == doctest::Approx(0.45).epsilon(1e-12));
    CHECK(eb[4].freq == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(eb[4].count == 2);

    // pooling a second pair accumulates into the same bins
    equal.add(f, o, w);
    CHECK(equal.bins()[4].count == 4);

    CHECK_THROWS_AS(ReliabilityAccumulator(1), config_error);
}

TEST_CASE("calibration summaries") {
    GridSpec grid{1, 8, 10.0, 10.0, 0.0, 0.0};
    const std::vector<double> w(8, 1.0 / 8.0);
    // per bin, observed frequency equals the forecast exactly
    ReliabilityAccumulator acc(10);
    acc.add(prob_field(grid, {0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75}),
            obs_field(grid, {1, 0, 0, 0, 1, 1, 1, 0}), w);
    const auto bins = acc.bins();
    CHECK(max_calibration_deviation(bins) < 1e-12);
    CHECK(reliability_slope(bins) == doctest::Approx(1.0).epsilon(1e-9));

    ReliabilityAccumulator off(10);
    off.add(prob_field(grid, {0.25, 0.25, 0.25, 0.25, 0.75, 0.75, 0.75, 0.75}),
            obs_field(grid, {1, 1, 1, 0, 1, 0, 0, 0}), w);
    CHECK(max_calibration_deviation(off.bins()) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("seasons are calendar quarters") {
    CHECK(season_of(1) == 0);
    CHECK(season_of(3) == 0);
    CHECK(season_of(4) == 1);
    CHECK(season_of(6) == 1);
    CHECK(season_of(9) == 2);
    CHECK(season_of(10) == 3);
    CHECK(season_of(12) == 3);
    CHECK(std::string(season_name(0)) != std::string(season_name(2)));
    for (int s = 0; s < 4; ++s) CHECK(std::string(season_name(s)).size() > 0);
}

TEST_CASE("svg emitters produce renderable files") {
    const auto dir = std::filesystem::temp_directory_path() / "icecontour_svg_test";
    std::filesystem::create_directories(dir);

    GridSpec grid{1, 4, 10.0, 10.0, 0.0, 0.0};
    ReliabilityAccumulator acc(10);
    acc.add(prob_field(grid, {0.2, 0.4, 0.6, 0.8}), obs_field(grid, {0, 1, 0, 1}),
            {0.25, 0.25, 0.25, 0.25});
    svg_reliability(dir / "rel.svg", "reliability demo", acc.bins());
    const std::string rel = slurp(dir / "rel.svg");
    CHECK(rel.find("<svg") != std::string::npos);
    CHECK(rel.find("reliability demo") != std::string::npos);

    svg_lines(dir / "lines.svg", "scores", "lead", "brier",
              {{"mcf", {{0.5, 0.12}, {1.5, 0.2}}}, {"clim", {{0.5, 0.15}, {1.5, 0.15}}}});
    const std::string lines = slurp(dir / "lines.svg");
    CHECK(lines.find("<svg") != std::string::npos);
    CHECK(lines.find("mcf") != std::string::npos);

    svg_heatmap(dir / "heat.svg", "weights", {"sep", "oct"}, {"0.5", "1.5", "2.5"},
                {{0.2, 0.4, 0.6}, {0.1, kNaN, 0.9}});
    const std::string heat = slurp(dir / "heat.svg");
    CHECK(heat.find("<svg") != std::string::npos);
    CHECK(heat.find("weights") != std::string::npos);
}
