#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "icecontour/grid.hpp"

namespace icecontour {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Closed polygon; the last vertex connects back to the first.
using Contour = std::vector<Point>;

enum class RegionKind { Coastal, Radial };

// Interval along a line, as distances from the line's start point B.
struct Span {
    double begin = 0.0;
    double end = 0.0;
    double length() const { return end - begin; }
};

// One transect. The line starts at B in the water (B is the first ocean
// crossing for coastal regions, the shared center for radial ones) and ends
// where its last ocean span ends, so line_len == sum(R) + sum(H).
struct LineGeometry {
    Point anchor;              // B
    double angle = 0.0;        // radians, direction of travel
    std::vector<Span> ocean;   // R runs, in order
    std::vector<Span> land;    // H runs strictly between ocean runs
    double ocean_len = 0.0;
    double line_len = 0.0;

    Point at(double dist) const {
        return {anchor.x + dist * dir_cs_, anchor.y + dist * dir_sn_};
    }
    void set_direction(double cs, double sn) {
        dir_cs_ = cs;
        dir_sn_ = sn;
    }

  private:
    double dir_cs_ = 1.0;
    double dir_sn_ = 0.0;
};

// Construction recipe for one region, externalized to the region config.
struct RegionSpec {
    int id = 0;
    RegionKind kind = RegionKind::Radial;
    int n_lines = 0;
    // coastal: anchors evenly spaced on the baseline [base0, base1],
    // all rays cast at `angle`
    Point base0, base1;
    double angle = 0.0;
    // radial: rays from `center` at evenly spaced angles on [0, 2pi)
    Point center;
    double snap_km = -1.0;  // negative: half the smaller cell edge
    std::vector<std::pair<int, int>> fixed_overrides;  // (line index, 0 or 1)
    double delta1 = -1.0;   // sigma support overrides in proportion units;
    double delta2 = -1.0;   // negative: module defaults
};

struct RegionGeometry {
    int id = 0;
    RegionKind kind = RegionKind::Radial;
    GridSpec grid;
    double snap_km = 0.0;
    double sample_step_km = 0.0;  // quarter of the smaller cell edge
    double diameter_km = 0.0;     // region bounding-box diagonal
    std::vector<LineGeometry> lines;
    std::vector<std::pair<int, int>> fixed_overrides;
    double delta1 = -1.0;
    double delta2 = -1.0;
};

// Traces each line through the mask and decomposes it into alternating ocean
// and land runs. Throws geometry_error naming the line when a ray never
// touches the region's ocean, and for radial regions whose center cell is
// not the region's ocean.
RegionGeometry build_region_geometry(const CellMask& mask, const RegionSpec& spec);

// Ice-covered fraction of each line's ocean length, by midpoint sampling at
// sample_step_km. Values land in [0,1]; sentinel cells count as water.
std::vector<double> proportions_from_field(const RegionGeometry& geom, const ByteField& field);
std::vector<double> proportions_from_field_serial(const RegionGeometry& geom, const ByteField& field);

// Distance from B to the ice edge holding proportion pi of the line's ocean,
// walking ocean spans in order and skipping land between them. Monotone in
// pi; never lands strictly inside a land run.
double length_from_proportion(const LineGeometry& line, double pi);

// Inverse map: fraction of the line's ocean lying before distance y.
double proportion_from_length(const LineGeometry& line, double y);

// Edge polygon from per-line edge distances. Coastal: B_1..B_n then the edge
// points in reverse; radial: edge points in order.
Contour contour_from_lengths(const RegionGeometry& geom, const std::vector<double>& lengths);

// Pulls edge points that stop within snap_km of the end of their ocean span
// onto that boundary (land ahead, or the line's far end).
std::vector<double> snap_to_boundary(const RegionGeometry& geom, std::vector<double> lengths);
std::vector<double> snap_to_boundary(const RegionGeometry& geom, std::vector<double> lengths,
                                     double snap_km);

struct RepairParams {
    double eta0_cells = 0.1;  // starting tolerance, in smaller-cell-edge units
    double growth = 2.0;
};

// Removes proper self-crossings by Douglas-Peucker simplification of the
// sub-path around each crossing, escalating the tolerance geometrically.
// Throws geometry_error if crossings survive at the region-diameter cap.
Contour repair_self_intersections(Contour c, const RegionGeometry& geom, RepairParams p = {});

// Ocean cells whose center falls inside the polygon (even-odd rule, centers
// exactly on an edge count as inside) get 1; other ocean cells 0; off-ocean
// cells the sentinel.
ByteField rasterize(const Contour& c, const CellMask& mask, FieldTime time = {});
ByteField rasterize_serial(const Contour& c, const CellMask& mask, FieldTime time = {});

double signed_area(const Contour& c);
double shoelace_area(const Contour& c);  // absolute value

// True when two non-adjacent edges cross at a single interior point.
// Collinear overlaps and shared endpoints do not count.
bool has_proper_self_intersection(const Contour& c);

struct DiscretizationRow {
    int n_lines = 0;
    double mismatch = 0.0;  // mean symmetric-difference area / mean observed ice area
};

// Reconstruction fidelity of the line parameterization: for each candidate
// line count, rebuild every observed field through proportions -> lengths ->
// contour -> raster and report the area mismatch over the region's ocean.
std::vector<DiscretizationRow> discretization_error(const CellMask& mask, const RegionSpec& spec,
                                                    const std::vector<ByteField>& observed,
                                                    const std::vector<int>& line_counts);

} // namespace icecontour
