#include "icecontour/grid.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace icecontour {

const char* field_kind_name(FieldKind k) {
    switch (k) {
        case FieldKind::Binary: return "binary";
        case FieldKind::Concentration: return "concentration";
        case FieldKind::Probability: return "probability";
        case FieldKind::Mask: return "mask";
        case FieldKind::Diagnostic: return "diagnostic";
    }
    throw error("field_kind_name: unknown kind");
}

FieldKind field_kind_from_name(const std::string& name) {
    if (name == "binary") return FieldKind::Binary;
    if (name == "concentration") return FieldKind::Concentration;
    if (name == "probability") return FieldKind::Probability;
    if (name == "mask") return FieldKind::Mask;
    if (name == "diagnostic") return FieldKind::Diagnostic;
    throw io_error("unknown field kind '" + name + "'");
}

static void check_grid(const GridSpec& g, const char* who) {
    if (g.nrows <= 0 || g.ncols <= 0 || !(g.dx_km > 0.0) || !(g.dy_km > 0.0))
        throw error(std::string(who) + ": grid must have positive dimensions and cell size");
}

CellMask CellMask::from_field(const ByteField& f) {
    check_grid(f.grid, "CellMask");
    return from_field(f, std::vector<double>(f.grid.size(), f.grid.dx_km * f.grid.dy_km));
}

CellMask CellMask::from_field(const ByteField& f, std::vector<double> areas) {
    check_grid(f.grid, "CellMask");
    if (f.kind != FieldKind::Mask) throw error("CellMask: field kind must be mask");
    if (f.v.size() != f.grid.size()) throw mismatch_error("CellMask: raster size does not match grid");
    if (areas.size() != f.grid.size()) throw mismatch_error("CellMask: area raster size does not match grid");

    CellMask m;
    m.grid = f.grid;
    m.label.resize(f.v.size());
    m.region.assign(f.v.size(), -1);
    m.area = std::move(areas);
    m.weight.assign(f.v.size(), 0.0);

    double ocean_area = 0.0;
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        if (!(m.area[i] > 0.0)) throw error("CellMask: cell areas must be positive");
        const std::uint8_t b = f.v[i];
        if (b == kMaskOutside) {
            m.label[i] = CellLabel::Outside;
        } else if (b == kMaskLand) {
            m.label[i] = CellLabel::Land;
        } else if (b == kMaskOcean) {
            m.label[i] = CellLabel::Ocean;
        } else if (b >= kMaskRegionBase) {
            m.label[i] = CellLabel::Ocean;
            m.region[i] = b - kMaskRegionBase;
        } else {
            throw io_error("CellMask: invalid mask byte " + std::to_string(int(b)));
        }
        if (m.label[i] == CellLabel::Ocean) ocean_area += m.area[i];
    }
    if (ocean_area <= 0.0) throw error("CellMask: mask contains no ocean cells");
    for (std::size_t i = 0; i < f.v.size(); ++i)
        if (m.label[i] == CellLabel::Ocean) m.weight[i] = m.area[i] / ocean_area;
    return m;
}

ByteField CellMask::to_field() const {
    ByteField f;
    f.grid = grid;
    f.kind = FieldKind::Mask;
    f.v.resize(label.size());
    for (std::size_t i = 0; i < label.size(); ++i) {
        switch (label[i]) {
            case CellLabel::Outside: f.v[i] = kMaskOutside; break;
            case CellLabel::Land: f.v[i] = kMaskLand; break;
            case CellLabel::Ocean:
                f.v[i] = region[i] < 0 ? kMaskOcean
                                       : static_cast<std::uint8_t>(kMaskRegionBase + region[i]);
                break;
        }
    }
    return f;
}

ByteField threshold_concentration(const RealField& conc, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw error("threshold_concentration: tau must lie in (0,1)");
    if (conc.kind != FieldKind::Concentration && conc.kind != FieldKind::Probability)
        throw error("threshold_concentration: field must be concentration or probability");
    if (conc.v.size() != conc.grid.size())
        throw mismatch_error("threshold_concentration: raster size does not match grid");

    ByteField out;
    out.grid = conc.grid;
    out.kind = FieldKind::Binary;
    out.time = conc.time;
    out.v.resize(conc.v.size());
    for (std::size_t i = 0; i < conc.v.size(); ++i) {
        const double x = conc.v[i];
        if (std::isnan(x)) {
            out.v[i] = kByteSentinel;
        } else {
            if (x < 0.0 || x > 1.0)
                throw error("threshold_concentration: value outside [0,1] on an ocean cell");
            out.v[i] = (x >= tau) ? 1 : 0;
        }
    }
    return out;
}

std::vector<double> area_weights(const CellMask& mask) {
    // CellMask already holds global ocean weights.
    return mask.weight;
}

std::vector<double> area_weights(const CellMask& mask, int region) {
    std::vector<double> w(mask.grid.size(), 0.0);
    double tot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (mask.ocean(i) && mask.region[i] == region) tot += mask.area[i];
    if (tot <= 0.0) throw error("area_weights: region " + std::to_string(region) + " has no ocean cells");
    for (std::size_t i = 0; i < w.size(); ++i)
        if (mask.ocean(i) && mask.region[i] == region) w[i] = mask.area[i] / tot;
    return w;
}

RealField ensemble_probability(const std::vector<ByteField>& members) {
    if (members.empty()) throw error("ensemble_probability: no members");
    const GridSpec& g = members.front().grid;
    for (const auto& m : members) {
        if (m.grid != g) throw mismatch_error("ensemble_probability: members on different grids");
        if (m.kind != FieldKind::Binary) throw error("ensemble_probability: members must be binary");
        if (m.v.size() != g.size()) throw mismatch_error("ensemble_probability: raster size mismatch");
    }
    RealField out;
    out.grid = g;
    out.kind = FieldKind::Probability;
    out.time = members.front().time;
    out.v.assign(g.size(), 0.0);
    const double n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        int count = 0;
        bool sentinel = members.front().v[i] == kByteSentinel;
        for (const auto& m : members) {
            const std::uint8_t b = m.v[i];
            if ((b == kByteSentinel) != sentinel)
                throw mismatch_error("ensemble_probability: inconsistent sentinel pattern across members");
            if (b == 1)
                ++count;
            else if (b != 0 && b != kByteSentinel)
                throw error("ensemble_probability: member values must be 0, 1, or sentinel");
        }
        out.v[i] = sentinel ? std::numeric_limits<double>::quiet_NaN() : count / n;
    }
    return out;
}

} // namespace icecontour
