#pragma once

#include <cstdint>
#include <vector>

#include "icecontour/errors.hpp"

namespace icecontour {

// Regular planar grid, coordinates in km. Cell (r,c) spans
// [origin_x + c*dx, origin_x + (c+1)*dx) x [origin_y + r*dy, ...).
// Fields are stored row-major with row 0 adjacent to the origin.
struct GridSpec {
    int nrows = 0;
    int ncols = 0;
    double dx_km = 0.0;
    double dy_km = 0.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols); }
    std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * ncols + c; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < nrows && c >= 0 && c < ncols; }
    double center_x(int c) const { return origin_x + (c + 0.5) * dx_km; }
    double center_y(int r) const { return origin_y + (r + 0.5) * dy_km; }

    bool operator==(const GridSpec&) const = default;
};

enum class FieldKind { Binary, Concentration, Probability, Mask, Diagnostic };

const char* field_kind_name(FieldKind k);
FieldKind field_kind_from_name(const std::string& name);

// lead is in months; 0 for observations.
struct FieldTime {
    int year = 0;
    int month = 0;
    double lead = 0.0;
};

// Off-ocean sentinel in binary rasters. Mask label bytes: 0 outside the
// domain, 1 land, 2 ocean with no region, 10+r ocean assigned to region r.
inline constexpr std::uint8_t kByteSentinel = 255;
inline constexpr std::uint8_t kMaskOutside = 0;
inline constexpr std::uint8_t kMaskLand = 1;
inline constexpr std::uint8_t kMaskOcean = 2;
inline constexpr std::uint8_t kMaskRegionBase = 10;

struct ByteField {
    GridSpec grid;
    FieldKind kind = FieldKind::Binary;
    FieldTime time;
    std::vector<std::uint8_t> v;
};

// Real-valued raster; off-ocean cells carry quiet NaN. Concentration and
// probability kinds keep ocean values in [0,1].
struct RealField {
    GridSpec grid;
    FieldKind kind = FieldKind::Concentration;
    FieldTime time;
    std::vector<double> v;
};

enum class CellLabel : std::uint8_t { Outside, Land, Ocean };

struct CellMask {
    GridSpec grid;
    std::vector<CellLabel> label;
    std::vector<int> region;     // -1 when unassigned
    std::vector<double> area;    // km^2
    std::vector<double> weight;  // sums to 1 over ocean cells

    bool ocean(std::size_t i) const { return label[i] == CellLabel::Ocean; }

    // Decode from a mask raster; cell areas default to dx*dy, or may be
    // overridden (e.g. polar grids) with one positive value per cell.
    static CellMask from_field(const ByteField& f);
    static CellMask from_field(const ByteField& f, std::vector<double> areas);
    ByteField to_field() const;
};

// Ice indicator from concentration: ice iff value >= tau on ocean cells.
// tau must lie in (0,1); sentinel cells stay sentinel.
ByteField threshold_concentration(const RealField& conc, double tau = 0.15);

// Normalized area weights, zero off scope. The one-argument form scores all
// ocean cells; the region form restricts to one region's ocean cells.
std::vector<double> area_weights(const CellMask& mask);
std::vector<double> area_weights(const CellMask& mask, int region);

// Per-cell fraction of members showing ice. Members must agree on grid and
// sentinel pattern.
RealField ensemble_probability(const std::vector<ByteField>& members);

} // namespace icecontour
