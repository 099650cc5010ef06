#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "helpers.hpp"
#include "icecontour/errors.hpp"
#include "icecontour/geometry.hpp"
#include "icecontour/rng.hpp"

using namespace icecontour;
using testutil::ocean_mask;
using testutil::radial_geom;
using testutil::star_lengths;
using testutil::two_span_line;

TEST_CASE("edge distance walks ocean runs and skips land") {
    const LineGeometry line = two_span_line();
    // half the 10 km of ocean: 4 km first run + 1 km into the second,
    // which starts after 2 km of land
    CHECK(length_from_proportion(line, 0.5) == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(length_from_proportion(line, 0.0) == doctest::Approx(0.0));
    CHECK(length_from_proportion(line, 1.0) == doctest::Approx(12.0));
    CHECK(length_from_proportion(line, 0.4) == doctest::Approx(4.0));  // run boundary
    // inverse direction
    CHECK(proportion_from_length(line, 7.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(proportion_from_length(line, 5.0) == doctest::Approx(0.4));  // inside land
    for (double pi : {0.05, 0.33, 0.4, 0.62, 0.95}) {
        const double y = length_from_proportion(line, pi);
        CHECK(proportion_from_length(line, y) == doctest::Approx(pi).epsilon(1e-12));
    }
}

TEST_CASE("radial construction covers the circle evenly") {
    const CellMask mask = ocean_mask(20, 25.0);
    const RegionGeometry geom = radial_geom(mask, 16);
    REQUIRE(geom.lines.size() == 16);
    CHECK(geom.sample_step_km == doctest::Approx(25.0 / 4.0));
    for (std::size_t i = 0; i < geom.lines.size(); ++i) {
        CHECK(geom.lines[i].angle ==
              doctest::Approx(2 * std::numbers::pi * double(i) / 16.0).epsilon(1e-9));
        CHECK(geom.lines[i].ocean_len > 0.0);
        CHECK(geom.lines[i].ocean_len <= geom.lines[i].line_len + 1e-9);
    }
}

TEST_CASE("radial center must sit on region ocean") {
    GridSpec g{8, 8, 25.0, 25.0, 0.0, 0.0};
    ByteField f;
    f.grid = g;
    f.kind = FieldKind::Mask;
    f.v.assign(g.size(), std::uint8_t(kMaskRegionBase + 1));
    f.v[g.idx(4, 4)] = kMaskLand;
    const CellMask m = CellMask::from_field(f);
    RegionSpec spec;
    spec.id = 1;
    spec.kind = RegionKind::Radial;
    spec.n_lines = 8;
    spec.center = {g.center_x(4), g.center_y(4)};
    CHECK_THROWS_AS((void)build_region_geometry(m, spec), geometry_error);
}

TEST_CASE("polygon area and orientation helpers") {
    const Contour square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    CHECK(shoelace_area(square) == doctest::Approx(16.0));
    CHECK(signed_area(square) == doctest::Approx(16.0));
    Contour rev(square.rbegin(), square.rend());
    CHECK(signed_area(rev) == doctest::Approx(-16.0));
    CHECK_FALSE(has_proper_self_intersection(square));
    const Contour bowtie{{0, 0}, {4, 4}, {4, 0}, {0, 4}};
    CHECK(has_proper_self_intersection(bowtie));
}

TEST_CASE("crossing repair leaves a simple polygon") {
    const CellMask mask = ocean_mask(20, 25.0);
    const RegionGeometry geom = radial_geom(mask, 16);
    Contour bowtie{{100, 100}, {400, 400}, {400, 100}, {100, 400}};
    const Contour fixed = repair_self_intersections(bowtie, geom);
    CHECK_FALSE(has_proper_self_intersection(fixed));
    REQUIRE(fixed.size() >= 3);
    // an already simple polygon passes through untouched
    const Contour square{{100, 100}, {400, 100}, {400, 400}, {100, 400}};
    const Contour same = repair_self_intersections(square, geom);
    CHECK(same.size() == square.size());
}

TEST_CASE("rasterize marks exactly the cells whose centers fall inside") {
    const CellMask mask = ocean_mask(8, 10.0);
    // rectangle covering centers of rows 2..4, cols 1..5
    const Contour c{{10.0, 20.0}, {60.0, 20.0}, {60.0, 50.0}, {10.0, 50.0}};
    const ByteField f = rasterize(c, mask);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            // centers are at (10j+5, 10i+5); strictly inside iff rows 2..4, cols 1..5
            const bool inside = i >= 2 && i <= 4 && j >= 1 && j <= 5;
            CHECK(f.v[mask.grid.idx(i, j)] == (inside ? 1 : 0));
        }
    }
}

TEST_CASE("parallel geometry kernels match their serial twins") {
    const CellMask mask = ocean_mask(32, 25.0);
    const RegionGeometry geom = radial_geom(mask, 48);
    Rng r(314);
    for (int trial = 0; trial < 5; ++trial) {
        Rng t = r.derive({(std::uint64_t)trial});
        const auto lengths = star_lengths(geom, t, 120.0, 320.0);
        const Contour c = contour_from_lengths(geom, lengths);
        const ByteField fp = rasterize(c, mask);
        const ByteField fs = rasterize_serial(c, mask);
        CHECK(fp.v == fs.v);
        const auto pp = proportions_from_field(geom, fp);
        const auto ps = proportions_from_field_serial(geom, fp);
        REQUIRE(pp.size() == ps.size());
        for (std::size_t i = 0; i < pp.size(); ++i) CHECK(pp[i] == ps[i]);
    }
}

TEST_CASE("field to proportions to contour raster is a fixed point") {
    const CellMask mask = ocean_mask(48, 25.0);
    const RegionGeometry geom = radial_geom(mask, 240);
    Rng root(2024);
    for (int trial = 0; trial < 5; ++trial) {
        Rng r = root.derive({(std::uint64_t)trial});
        const auto lengths = star_lengths(geom, r, 180.0, 340.0);
        const ByteField f0 = rasterize(contour_from_lengths(geom, lengths), mask);
        const auto pi = proportions_from_field(geom, f0);
        std::vector<double> y(pi.size());
        for (std::size_t i = 0; i < pi.size(); ++i)
            y[i] = length_from_proportion(geom.lines[i], pi[i]);
        const ByteField f1 = rasterize(contour_from_lengths(geom, y), mask);
        const auto pi1 = proportions_from_field(geom, f1);
        for (std::size_t i = 0; i < pi.size(); ++i) {
            const double dev_km = std::abs(pi1[i] - pi[i]) * geom.lines[i].ocean_len;
            CHECK(dev_km <= geom.sample_step_km + 1e-9);
        }
    }
}

TEST_CASE("snapping pulls edges onto nearby run boundaries") {
    const LineGeometry line = two_span_line();
    RegionGeometry geom;
    geom.kind = RegionKind::Coastal;
    geom.grid = GridSpec{4, 4, 1.0, 1.0, 0.0, 0.0};
    geom.snap_km = 0.5;
    geom.sample_step_km = 0.25;
    geom.diameter_km = 16.0;
    geom.lines = {line};

    // 3.7 is within 0.5 of the first run's end at 4
    CHECK(snap_to_boundary(geom, {3.7})[0] == doctest::Approx(4.0));
    // 11.8 is within 0.5 of the line end at 12
    CHECK(snap_to_boundary(geom, {11.8})[0] == doctest::Approx(12.0));
    // mid-run point stays put
    CHECK(snap_to_boundary(geom, {2.0})[0] == doctest::Approx(2.0));
    // explicit radius overrides the region's
    CHECK(snap_to_boundary(geom, {3.0}, 1.5)[0] == doctest::Approx(4.0));
}

TEST_CASE("line parameterization reconstructs observed fields within a few percent") {
    const CellMask mask = ocean_mask(48, 25.0);
    RegionSpec spec;
    spec.id = 1;
    spec.kind = RegionKind::Radial;
    spec.n_lines = 240;
    spec.center = {mask.grid.center_x(24), mask.grid.center_y(24)};
    const RegionGeometry geom = build_region_geometry(mask, spec);

    Rng root(77);
    std::vector<ByteField> obs;
    for (int k = 0; k < 6; ++k) {
        Rng r = root.derive({(std::uint64_t)k});
        obs.push_back(rasterize(contour_from_lengths(geom, star_lengths(geom, r, 200.0, 320.0)),
                                mask));
    }
    const auto rows = discretization_error(mask, spec, obs, {45, 90});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].n_lines == 45);
    CHECK(rows[1].n_lines == 90);
    CHECK(rows[1].mismatch >= 0.0);
    CHECK(rows[1].mismatch < 0.03);
    CHECK(rows[1].mismatch <= rows[0].mismatch + 0.005);
}
