#include "icecontour/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "icecontour/parallel.hpp"

namespace icecontour {

namespace {

constexpr double kTinyLen = 1e-9;  // km; pieces shorter than this are dropped

double dist2(const Point& a, const Point& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

double point_segment_dist(const Point& p, const Point& a, const Point& b) {
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double len2 = abx * abx + aby * aby;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((p.x - a.x) * abx + (p.y - a.y) * aby) / len2, 0.0, 1.0);
    const Point proj{a.x + t * abx, a.y + t * aby};
    return std::sqrt(dist2(p, proj));
}

double orient(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Single interior crossing point; collinear contact and endpoint touches are
// deliberately not counted (see repair_self_intersections).
bool proper_cross(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    const double d1 = orient(q1, q2, p1);
    const double d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1);
    const double d4 = orient(p1, p2, q2);
    return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
           ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
}

std::optional<std::pair<std::size_t, std::size_t>> first_proper_crossing(const Contour& c) {
    const std::size_t n = c.size();
    if (n < 4) return std::nullopt;
    for (std::size_t i = 0; i + 2 < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // shares vertex 0
            if (proper_cross(c[i], c[(i + 1) % n], c[j], c[(j + 1) % n]))
                return std::make_pair(i, j);
        }
    }
    return std::nullopt;
}

Contour dedup_ring(Contour c, double tol) {
    const double t2 = tol * tol;
    Contour out;
    out.reserve(c.size());
    for (const Point& p : c)
        if (out.empty() || dist2(p, out.back()) > t2) out.push_back(p);
    while (out.size() > 1 && dist2(out.front(), out.back()) <= t2) out.pop_back();
    return out;
}

void dp_mark(const std::vector<Point>& pts, std::size_t a, std::size_t b, double eta,
             std::vector<char>& keep) {
    if (b <= a + 1) return;
    double dmax = -1.0;
    std::size_t imax = a;
    for (std::size_t i = a + 1; i < b; ++i) {
        const double d = point_segment_dist(pts[i], pts[a], pts[b]);
        if (d > dmax) {
            dmax = d;
            imax = i;
        }
    }
    if (dmax > eta) {
        keep[imax] = 1;
        dp_mark(pts, a, imax, eta, keep);
        dp_mark(pts, imax, b, eta, keep);
    }
}

std::vector<Point> douglas_peucker(const std::vector<Point>& pts, double eta) {
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<char> keep(n, 0);
    keep[0] = 1;
    keep[n - 1] = 1;
    dp_mark(pts, 0, n - 1, eta, keep);
    std::vector<Point> out;
    out.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i]) out.push_back(pts[i]);
    return out;
}

// Simplify one of the two arcs bounded by crossing segments i and j (i < j).
// Returns the new ring, or nullopt when neither arc lost a vertex at eta.
std::optional<Contour> simplify_around(const Contour& c, std::size_t i, std::size_t j, double eta) {
    const std::size_t n = c.size();
    Contour r(c.begin() + i, c.end());
    r.insert(r.end(), c.begin(), c.begin() + i);
    const std::size_t js = j - i;  // in [2, n-2]

    const std::size_t interior_a = js - 1;
    const std::size_t interior_b = n - js - 2;

    auto try_arc_a = [&]() -> std::optional<Contour> {
        std::vector<Point> sub(r.begin(), r.begin() + js + 2);
        std::vector<Point> simp = douglas_peucker(sub, eta);
        if (simp.size() >= sub.size()) return std::nullopt;
        Contour out(simp.begin(), simp.end());
        out.insert(out.end(), r.begin() + js + 2, r.end());
        return out;
    };
    auto try_arc_b = [&]() -> std::optional<Contour> {
        if (interior_b == 0) return std::nullopt;
        std::vector<Point> sub(r.begin() + js + 1, r.end());
        sub.push_back(r.front());
        std::vector<Point> simp = douglas_peucker(sub, eta);
        if (simp.size() >= sub.size()) return std::nullopt;
        Contour out(r.begin(), r.begin() + js + 2);
        out.insert(out.end(), simp.begin() + 1, simp.end() - 1);
        return out;
    };

    if (interior_b > 0 && interior_b < interior_a) {
        if (auto out = try_arc_b()) return out;
        return try_arc_a();
    }
    if (auto out = try_arc_a()) return out;
    return try_arc_b();
}

int cell_class(const CellMask& mask, int region, int r, int c) {
    if (!mask.grid.in_bounds(r, c)) return 2;
    const std::size_t i = mask.grid.idx(r, c);
    if (mask.label[i] == CellLabel::Land) return 1;
    if (mask.label[i] == CellLabel::Ocean && mask.region[i] == region) return 0;
    return 2;  // outside the domain, or ocean beyond the region edge
}

struct Piece {
    double t0, t1;
    int cls;
};

// Intervals of the ray origin + t*dir cut by the grid lines, classified per
// cell, in increasing t. Stops at the grid bounding box.
std::vector<Piece> trace_ray(const CellMask& mask, int region, Point origin, double cs, double sn) {
    const GridSpec& g = mask.grid;
    const double x0 = g.origin_x, x1 = g.origin_x + g.ncols * g.dx_km;
    const double y0 = g.origin_y, y1 = g.origin_y + g.nrows * g.dy_km;

    double tlo = 0.0, thi = std::numeric_limits<double>::infinity();
    auto clip = [&](double p, double d, double lo, double hi) {
        if (std::fabs(d) < 1e-15) {
            if (p < lo || p > hi) thi = -1.0;
            return;
        }
        double ta = (lo - p) / d, tb = (hi - p) / d;
        if (ta > tb) std::swap(ta, tb);
        tlo = std::max(tlo, ta);
        thi = std::min(thi, tb);
    };
    clip(origin.x, cs, x0, x1);
    clip(origin.y, sn, y0, y1);
    if (thi <= tlo) return {};

    std::vector<double> ts{tlo, thi};
    if (std::fabs(cs) > 1e-15)
        for (int k = 0; k <= g.ncols; ++k) {
            const double t = (x0 + k * g.dx_km - origin.x) / cs;
            if (t > tlo && t < thi) ts.push_back(t);
        }
    if (std::fabs(sn) > 1e-15)
        for (int k = 0; k <= g.nrows; ++k) {
            const double t = (y0 + k * g.dy_km - origin.y) / sn;
            if (t > tlo && t < thi) ts.push_back(t);
        }
    std::sort(ts.begin(), ts.end());

    std::vector<Piece> pieces;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        if (ts[k + 1] - ts[k] < kTinyLen) continue;
        const double tm = 0.5 * (ts[k] + ts[k + 1]);
        const int c = static_cast<int>(std::floor((origin.x + tm * cs - x0) / g.dx_km));
        const int r = static_cast<int>(std::floor((origin.y + tm * sn - y0) / g.dy_km));
        const int cls = cell_class(mask, region, r, c);
        if (!pieces.empty() && pieces.back().cls == cls)
            pieces.back().t1 = ts[k + 1];
        else
            pieces.push_back({ts[k], ts[k + 1], cls});
    }
    return pieces;
}

LineGeometry decompose_line(const std::vector<Piece>& pieces, Point ray_origin, double angle,
                            double cs, double sn, bool snap_anchor_to_first_ocean,
                            const std::string& line_name) {
    std::size_t first = 0;
    if (snap_anchor_to_first_ocean) {
        while (first < pieces.size() && pieces[first].cls != 0) ++first;
        if (first == pieces.size())
            throw geometry_error(line_name + ": ray never reaches the region's ocean");
    } else {
        if (pieces.empty() || pieces.front().cls != 0)
            throw geometry_error(line_name + ": radial center is not on the region's ocean");
    }

    const double tb = snap_anchor_to_first_ocean ? pieces[first].t0 : 0.0;
    LineGeometry line;
    line.anchor = {ray_origin.x + tb * cs, ray_origin.y + tb * sn};
    line.angle = angle;
    line.set_direction(cs, sn);

    std::vector<Span> land_pending;
    for (std::size_t k = first; k < pieces.size(); ++k) {
        const Piece& p = pieces[k];
        if (p.cls == 2) break;  // region edge: the line stops here
        const Span s{p.t0 - tb, p.t1 - tb};
        if (p.cls == 0) {
            if (land_pending.empty() && !line.ocean.empty()) {
                line.ocean.back().end = s.end;  // sub-resolution sliver was dropped
            } else {
                for (const Span& h : land_pending) line.land.push_back(h);
                land_pending.clear();
                line.ocean.push_back(s);
            }
        } else {
            land_pending.push_back(s);  // dropped unless ocean follows
        }
    }
    if (line.ocean.empty())
        throw geometry_error(line_name + ": zero ocean length");

    for (const Span& s : line.ocean) line.ocean_len += s.length();
    line.line_len = line.ocean.back().end;

    double check = line.ocean_len;
    for (const Span& h : line.land) check += h.length();
    if (std::fabs(check - line.line_len) > 1e-9 * std::max(1.0, line.line_len))
        throw geometry_error(line_name + ": run decomposition does not tile the line");
    return line;
}

double region_diameter(const CellMask& mask, int region) {
    const GridSpec& g = mask.grid;
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool any = false;
    for (int r = 0; r < g.nrows; ++r)
        for (int c = 0; c < g.ncols; ++c) {
            const std::size_t i = g.idx(r, c);
            if (!(mask.label[i] == CellLabel::Ocean && mask.region[i] == region)) continue;
            const double cx0 = g.origin_x + c * g.dx_km, cy0 = g.origin_y + r * g.dy_km;
            if (!any) {
                xmin = cx0;
                xmax = cx0 + g.dx_km;
                ymin = cy0;
                ymax = cy0 + g.dy_km;
                any = true;
            } else {
                xmin = std::min(xmin, cx0);
                xmax = std::max(xmax, cx0 + g.dx_km);
                ymin = std::min(ymin, cy0);
                ymax = std::max(ymax, cy0 + g.dy_km);
            }
        }
    if (!any) return 0.0;
    return std::hypot(xmax - xmin, ymax - ymin);
}

double line_proportion(const LineGeometry& line, const ByteField& field, double step) {
    const GridSpec& g = field.grid;
    double covered = 0.0;
    for (const Span& s : line.ocean) {
        const double len = s.length();
        const int nsub = std::max(1, static_cast<int>(std::ceil(len / step)));
        const double sub = len / nsub;
        for (int k = 0; k < nsub; ++k) {
            const Point p = line.at(s.begin + (k + 0.5) * sub);
            const int c = static_cast<int>(std::floor((p.x - g.origin_x) / g.dx_km));
            const int r = static_cast<int>(std::floor((p.y - g.origin_y) / g.dy_km));
            if (g.in_bounds(r, c) && field.v[g.idx(r, c)] == 1) covered += sub;
        }
    }
    if (line.ocean_len <= 0.0) return 0.0;
    return std::min(1.0, covered / line.ocean_len);
}

void check_field_for_geom(const RegionGeometry& geom, const ByteField& field) {
    if (field.grid != geom.grid)
        throw mismatch_error("proportions_from_field: field grid differs from geometry grid");
    if (field.kind != FieldKind::Binary)
        throw error("proportions_from_field: field must be binary");
    if (field.v.size() != field.grid.size())
        throw mismatch_error("proportions_from_field: raster size mismatch");
}

} // namespace

RegionGeometry build_region_geometry(const CellMask& mask, const RegionSpec& spec) {
    if (spec.n_lines < 1) throw geometry_error("build_region_geometry: n_lines must be positive");
    const GridSpec& g = mask.grid;

    RegionGeometry geom;
    geom.id = spec.id;
    geom.kind = spec.kind;
    geom.grid = g;
    geom.sample_step_km = 0.25 * std::min(g.dx_km, g.dy_km);
    geom.snap_km = spec.snap_km >= 0.0 ? spec.snap_km : 0.5 * std::min(g.dx_km, g.dy_km);
    geom.fixed_overrides = spec.fixed_overrides;
    geom.delta1 = spec.delta1;
    geom.delta2 = spec.delta2;
    geom.diameter_km = region_diameter(mask, spec.id);
    if (geom.diameter_km <= 0.0)
        throw geometry_error("build_region_geometry: region " + std::to_string(spec.id) +
                             " has no ocean cells");

    geom.lines.reserve(spec.n_lines);
    for (int i = 0; i < spec.n_lines; ++i) {
        const std::string name =
            "region " + std::to_string(spec.id) + " line " + std::to_string(i);
        Point origin;
        double angle;
        bool coastal = spec.kind == RegionKind::Coastal;
        if (coastal) {
            const double f = spec.n_lines == 1 ? 0.5 : static_cast<double>(i) / (spec.n_lines - 1);
            origin = {spec.base0.x + f * (spec.base1.x - spec.base0.x),
                      spec.base0.y + f * (spec.base1.y - spec.base0.y)};
            angle = spec.angle;
        } else {
            origin = spec.center;
            angle = 2.0 * std::numbers::pi * i / spec.n_lines;
        }
        const double cs = std::cos(angle), sn = std::sin(angle);
        const auto pieces = trace_ray(mask, spec.id, origin, cs, sn);
        geom.lines.push_back(decompose_line(pieces, origin, angle, cs, sn, coastal, name));
    }

    for (const auto& [idx, val] : spec.fixed_overrides) {
        if (idx < 0 || idx >= spec.n_lines)
            throw geometry_error("fixed-line override out of range: line " + std::to_string(idx));
        if (val != 0 && val != 1)
            throw geometry_error("fixed-line override value must be 0 or 1");
    }
    return geom;
}

std::vector<double> proportions_from_field(const RegionGeometry& geom, const ByteField& field) {
    check_field_for_geom(geom, field);
    std::vector<double> pi(geom.lines.size(), 0.0);
    par::parallel_for(geom.lines.size(), [&](std::size_t i) {
        pi[i] = line_proportion(geom.lines[i], field, geom.sample_step_km);
    });
    return pi;
}

std::vector<double> proportions_from_field_serial(const RegionGeometry& geom,
                                                  const ByteField& field) {
    check_field_for_geom(geom, field);
    std::vector<double> pi(geom.lines.size(), 0.0);
    par::serial_for(geom.lines.size(), [&](std::size_t i) {
        pi[i] = line_proportion(geom.lines[i], field, geom.sample_step_km);
    });
    return pi;
}

double length_from_proportion(const LineGeometry& line, double pi) {
    if (!(pi >= 0.0 && pi <= 1.0))
        throw geometry_error("length_from_proportion: proportion outside [0,1]");
    const double target = pi * line.ocean_len;
    const double slack = 1e-12 * std::max(1.0, line.ocean_len);
    double cum = 0.0;
    for (const Span& s : line.ocean) {
        const double next = cum + s.length();
        if (next >= target - slack) {
            const double within = std::clamp(target - cum, 0.0, s.length());
            return s.begin + within;
        }
        cum = next;
    }
    return line.line_len;
}

double proportion_from_length(const LineGeometry& line, double y) {
    if (line.ocean_len <= 0.0) return 0.0;
    y = std::clamp(y, 0.0, line.line_len);
    double covered = 0.0;
    for (const Span& s : line.ocean) {
        if (y >= s.end) {
            covered += s.length();
        } else {
            covered += std::max(0.0, y - s.begin);
            break;
        }
    }
    return std::clamp(covered / line.ocean_len, 0.0, 1.0);
}

Contour contour_from_lengths(const RegionGeometry& geom, const std::vector<double>& lengths) {
    if (lengths.size() != geom.lines.size())
        throw mismatch_error("contour_from_lengths: one length per line required");
    const std::size_t n = geom.lines.size();
    std::vector<Point> edge(n);
    for (std::size_t i = 0; i < n; ++i) {
        const LineGeometry& line = geom.lines[i];
        double y = lengths[i];
        if (y < -1e-9 || y > line.line_len + 1e-6)
            throw geometry_error("contour_from_lengths: length outside [0, ||L||] on line " +
                                 std::to_string(i));
        y = std::clamp(y, 0.0, line.line_len);
        edge[i] = line.at(y);
    }
    Contour c;
    if (geom.kind == RegionKind::Coastal) {
        c.reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) c.push_back(geom.lines[i].anchor);
        for (std::size_t i = n; i-- > 0;) c.push_back(edge[i]);
    } else {
        c = std::move(edge);
    }
    return c;
}

std::vector<double> snap_to_boundary(const RegionGeometry& geom, std::vector<double> lengths) {
    return snap_to_boundary(geom, std::move(lengths), geom.snap_km);
}

std::vector<double> snap_to_boundary(const RegionGeometry& geom, std::vector<double> lengths,
                                     double snap_km) {
    if (snap_km < 0.0) throw geometry_error("snap_to_boundary: snap distance must be nonnegative");
    if (lengths.size() != geom.lines.size())
        throw mismatch_error("snap_to_boundary: one length per line required");
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const LineGeometry& line = geom.lines[i];
        const double y = std::clamp(lengths[i], 0.0, line.line_len);
        for (const Span& s : line.ocean) {
            if (y <= s.end + 1e-9) {
                if (s.end - y <= snap_km) lengths[i] = s.end;
                else lengths[i] = y;
                break;
            }
        }
    }
    return lengths;
}

Contour repair_self_intersections(Contour c, const RegionGeometry& geom, RepairParams p) {
    if (!(p.eta0_cells > 0.0) || !(p.growth > 1.0))
        throw geometry_error("repair_self_intersections: need eta0 > 0 and growth > 1");
    const double cell = std::min(geom.grid.dx_km, geom.grid.dy_km);
    c = dedup_ring(std::move(c), 1e-9 * std::max(1.0, cell));
    if (c.size() < 4) return c;

    double eta = p.eta0_cells * cell;
    const double eta_cap = std::max(geom.diameter_km, 4.0 * cell);
    while (eta <= eta_cap * (1.0 + 1e-12)) {
        for (std::size_t pass = 0; pass <= c.size(); ++pass) {
            const auto hit = first_proper_crossing(c);
            if (!hit) return c;
            auto next = simplify_around(c, hit->first, hit->second, eta);
            if (!next) break;
            Contour d = dedup_ring(std::move(*next), 1e-9 * std::max(1.0, cell));
            if (d.size() < 3) {
                // simplifying the arc would collapse the ring; drop the
                // vertex just inside the crossing instead
                c.erase(c.begin() + static_cast<std::ptrdiff_t>(hit->first) + 1);
            } else {
                c = std::move(d);
            }
            if (c.size() < 4) return c;  // triangles cannot properly cross
        }
        if (!has_proper_self_intersection(c)) return c;
        eta *= p.growth;
    }
    throw geometry_error("repair_self_intersections: crossing survived up to the region diameter");
}

namespace {

bool point_in_polygon(const Contour& c, double px, double py) {
    // Even-odd crossing count with a +x ray; horizontal edges fall out of the
    // (a.y > py) != (b.y > py) test. Points on an edge are handled separately.
    bool in = false;
    const std::size_t n = c.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = c[j];
        const Point& b = c[i];
        if ((a.y > py) != (b.y > py)) {
            const double xint = a.x + (py - a.y) * (b.x - a.x) / (b.y - a.y);
            if (px < xint) in = !in;
        }
    }
    return in;
}

bool point_on_boundary(const Contour& c, double px, double py, double eps) {
    const std::size_t n = c.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        if (point_segment_dist({px, py}, c[j], c[i]) <= eps) return true;
    return false;
}

template <class ForEach>
ByteField rasterize_impl(const Contour& c, const CellMask& mask, FieldTime time, ForEach&& loop) {
    const GridSpec& g = mask.grid;
    ByteField out;
    out.grid = g;
    out.kind = FieldKind::Binary;
    out.time = time;
    out.v.assign(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!mask.ocean(i)) out.v[i] = kByteSentinel;
    if (c.size() < 3) return out;

    double bx0 = c[0].x, bx1 = c[0].x, by0 = c[0].y, by1 = c[0].y;
    for (const Point& p : c) {
        bx0 = std::min(bx0, p.x);
        bx1 = std::max(bx1, p.x);
        by0 = std::min(by0, p.y);
        by1 = std::max(by1, p.y);
    }
    const double eps = 1e-7;

    loop(static_cast<std::size_t>(g.nrows), [&, bx0, bx1, by0, by1](std::size_t r) {
        const double py = g.center_y(static_cast<int>(r));
        if (py < by0 - eps || py > by1 + eps) return;
        for (int col = 0; col < g.ncols; ++col) {
            const std::size_t i = g.idx(static_cast<int>(r), col);
            if (out.v[i] == kByteSentinel) continue;
            const double px = g.center_x(col);
            if (px < bx0 - eps || px > bx1 + eps) continue;
            if (point_in_polygon(c, px, py) || point_on_boundary(c, px, py, eps)) out.v[i] = 1;
        }
    });
    return out;
}

} // namespace

ByteField rasterize(const Contour& c, const CellMask& mask, FieldTime time) {
    return rasterize_impl(c, mask, time,
                          [](std::size_t n, auto&& body) { par::parallel_for(n, body); });
}

ByteField rasterize_serial(const Contour& c, const CellMask& mask, FieldTime time) {
    return rasterize_impl(c, mask, time,
                          [](std::size_t n, auto&& body) { par::serial_for(n, body); });
}

double signed_area(const Contour& c) {
    const std::size_t n = c.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        s += c[j].x * c[i].y - c[i].x * c[j].y;
    return 0.5 * s;
}

double shoelace_area(const Contour& c) { return std::fabs(signed_area(c)); }

bool has_proper_self_intersection(const Contour& c) {
    return first_proper_crossing(c).has_value();
}

std::vector<DiscretizationRow> discretization_error(const CellMask& mask, const RegionSpec& spec,
                                                    const std::vector<ByteField>& observed,
                                                    const std::vector<int>& line_counts) {
    if (observed.empty()) throw error("discretization_error: no observed fields");
    std::vector<DiscretizationRow> rows;
    rows.reserve(line_counts.size());
    for (int n : line_counts) {
        RegionSpec s = spec;
        s.n_lines = n;
        const RegionGeometry geom = build_region_geometry(mask, s);

        double sym = 0.0, ice = 0.0;
        for (const ByteField& obs : observed) {
            const std::vector<double> pi = proportions_from_field(geom, obs);
            std::vector<double> lengths(pi.size());
            for (std::size_t i = 0; i < pi.size(); ++i)
                lengths[i] = length_from_proportion(geom.lines[i], pi[i]);
            Contour c = contour_from_lengths(geom, lengths);
            c = repair_self_intersections(std::move(c), geom);
            const ByteField recon = rasterize(c, mask, obs.time);

            for (std::size_t i = 0; i < mask.grid.size(); ++i) {
                if (!(mask.ocean(i) && mask.region[i] == spec.id)) continue;
                const bool o = obs.v[i] == 1;
                const bool p = recon.v[i] == 1;
                if (o) ice += mask.area[i];
                if (o != p) sym += mask.area[i];
            }
        }
        if (ice <= 0.0) throw error("discretization_error: observed fields contain no ice");
        rows.push_back({n, sym / ice});
    }
    return rows;
}

} // namespace icecontour
