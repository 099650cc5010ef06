#pragma once

// Shared synthetic fixtures for the unit suites.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "icecontour/geometry.hpp"
#include "icecontour/grid.hpp"
#include "icecontour/rng.hpp"

namespace testutil {

using namespace icecontour;

// Square all-ocean mask, every cell in region `id`.
inline CellMask ocean_mask(int n, double cell_km, int id = 1) {
    GridSpec grid{n, n, cell_km, cell_km, 0.0, 0.0};
    ByteField f;
    f.grid = grid;
    f.kind = FieldKind::Mask;
    f.v.assign(grid.size(), static_cast<std::uint8_t>(kMaskRegionBase + id));
    return CellMask::from_field(f);
}

inline RegionGeometry radial_geom(const CellMask& mask, int n_lines, int id = 1) {
    RegionSpec spec;
    spec.id = id;
    spec.kind = RegionKind::Radial;
    spec.n_lines = n_lines;
    const int n = mask.grid.nrows;
    spec.center = {mask.grid.center_x(n / 2), mask.grid.center_y(n / 2)};
    return build_region_geometry(mask, spec);
}

// Smooth random star-shaped per-line edge distances, bounded away from the
// center and the domain edge.
inline std::vector<double> star_lengths(const RegionGeometry& geom, Rng& r, double r_lo,
                                        double r_hi, double margin_km = 30.0) {
    const double r0 = r_lo + (r_hi - r_lo) * r.next_uniform();
    const double a1 = 0.2 * r.next_uniform();
    const double a2 = 0.15 * r.next_uniform();
    const double p1 = 2 * std::numbers::pi * r.next_uniform();
    const double p2 = 2 * std::numbers::pi * r.next_uniform();
    std::vector<double> lengths;
    lengths.reserve(geom.lines.size());
    for (const auto& line : geom.lines) {
        double rr = r0 * (1.0 + a1 * std::cos(2 * line.angle + p1) +
                          a2 * std::cos(3 * line.angle + p2));
        rr = std::min(rr, line.ocean_len - margin_km);
        rr = std::max(rr, margin_km);
        lengths.push_back(rr);
    }
    return lengths;
}

// Hand transect: ocean runs of 4 and 6 km separated by 2 km of land,
// pointing along +x from the origin.
inline LineGeometry two_span_line() {
    LineGeometry line;
    line.anchor = {0.0, 0.0};
    line.angle = 0.0;
    line.set_direction(1.0, 0.0);
    line.ocean = {{0.0, 4.0}, {6.0, 12.0}};
    line.land = {{4.0, 6.0}};
    line.ocean_len = 10.0;
    line.line_len = 12.0;
    return line;
}

} // namespace testutil
