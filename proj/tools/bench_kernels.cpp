// Times the OpenMP kernels against their serial reference implementations and
// checks that both produce the same result.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "icecontour/geometry.hpp"
#include "icecontour/grid.hpp"
#include "icecontour/model.hpp"
#include "icecontour/parallel.hpp"
#include "icecontour/reference.hpp"
#include "icecontour/rng.hpp"
#include "icecontour/stats.hpp"

using namespace icecontour;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void report(const char* name, double serial_ms, double parallel_ms, double max_diff) {
    std::printf("%-22s serial %8.1f ms   parallel %8.1f ms   x%.2f   max diff %.3g\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms, max_diff);
}

} // namespace

int main() {
    const int n = 192;
    GridSpec grid{n, n, 25.0, 25.0, 0.0, 0.0};

    ByteField maskf;
    maskf.grid = grid;
    maskf.kind = FieldKind::Mask;
    maskf.v.assign(grid.size(), static_cast<std::uint8_t>(kMaskRegionBase + 7));
    for (int i = 30; i <= 50; ++i)
        for (int j = 130; j <= 150; ++j) maskf.v[grid.idx(i, j)] = kMaskLand;
    const CellMask mask = CellMask::from_field(maskf);

    RegionSpec spec;
    spec.id = 7;
    spec.kind = RegionKind::Radial;
    spec.n_lines = 180;
    spec.center = {grid.center_x(n / 2), grid.center_y(n / 2)};
    const RegionGeometry geom = build_region_geometry(mask, spec);

    // wiggly ice disk around the center
    ByteField ice;
    ice.grid = grid;
    ice.kind = FieldKind::Binary;
    ice.v.assign(grid.size(), kByteSentinel);
    const double R0 = 0.30 * n * grid.dx_km;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const std::size_t s = grid.idx(i, j);
            if (!mask.ocean(s)) continue;
            const double dx = grid.center_x(j) - spec.center.x;
            const double dy = grid.center_y(i) - spec.center.y;
            const double r = std::hypot(dx, dy);
            const double th = std::atan2(dy, dx);
            ice.v[s] = r < R0 * (1.0 + 0.2 * std::cos(3.0 * th)) ? 1 : 0;
        }
    }

    std::printf("threads: %d\n", par::max_threads());

    {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<double> ps;
        for (int rep = 0; rep < 50; ++rep) ps = proportions_from_field_serial(geom, ice);
        const double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        std::vector<double> pp;
        for (int rep = 0; rep < 50; ++rep) pp = proportions_from_field(geom, ice);
        const double tp = ms_since(t0);
        double md = 0.0;
        for (std::size_t i = 0; i < ps.size(); ++i) md = std::max(md, std::abs(ps[i] - pp[i]));
        report("line proportions", ts, tp, md);
    }

    {
        std::vector<double> lengths;
        for (const auto& line : geom.lines) lengths.push_back(0.6 * line.ocean_len);
        const Contour c = contour_from_lengths(geom, lengths);
        auto t0 = std::chrono::steady_clock::now();
        ByteField rs;
        for (int rep = 0; rep < 50; ++rep) rs = rasterize_serial(c, mask);
        const double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        ByteField rp;
        for (int rep = 0; rep < 50; ++rep) rp = rasterize(c, mask);
        const double tp = ms_since(t0);
        double md = 0.0;
        for (std::size_t i = 0; i < rs.v.size(); ++i)
            md = std::max(md, std::abs(double(rs.v[i]) - double(rp.v[i])));
        report("contour rasterize", ts, tp, md);
    }

    {
        ContourPosterior post;
        post.kind = ContourPosterior::Kind::Fitted;
        post.geom = geom;
        post.fixed.value.assign(geom.lines.size(), -1);
        for (std::size_t i = 0; i < geom.lines.size(); ++i) post.fixed.modeled.push_back(i);
        post.mu_mean.assign(geom.lines.size(), 0.0);
        post.sigma_mean.assign(geom.lines.size(), 0.4);
        post.kappa_mean = 3.0;
        auto t0 = std::chrono::steady_clock::now();
        const GeneratedContours gs = generate_contours_serial(post, 60, 42);
        const double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        const GeneratedContours gp = generate_contours(post, 60, 42);
        const double tp = ms_since(t0);
        double md = 0.0;
        for (std::size_t k = 0; k < gs.lengths.size(); ++k)
            for (std::size_t i = 0; i < gs.lengths[k].size(); ++i)
                md = std::max(md, std::abs(gs.lengths[k][i] - gp.lengths[k][i]));
        report("contour generation", ts, tp, md);
    }

    {
        Rng rng(7);
        std::vector<RealField> cm, ci;
        std::vector<int> ym, yi;
        for (int y = 2000; y < 2014; ++y) {
            RealField a, b;
            a.grid = b.grid = grid;
            a.kind = b.kind = FieldKind::Concentration;
            a.v.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
            b.v = a.v;
            for (std::size_t s = 0; s < a.v.size(); ++s) {
                if (!mask.ocean(s)) continue;
                const double base = 0.5 + 0.3 * std::sin(0.01 * double(s));
                const double anom = 0.2 * rng.next_normal();
                b.v[s] = std::clamp(base + anom, 0.0, 1.0);
                a.v[s] = std::clamp(base + 0.8 * anom + 0.05 * rng.next_normal(), 0.0, 1.0);
            }
            cm.push_back(a);
            ci.push_back(b);
            ym.push_back(y);
            yi.push_back(y);
        }
        auto t0 = std::chrono::steady_clock::now();
        const PersistenceFit fs = fit_persistence_serial(cm, ym, ci, yi, 9, 9);
        const double ts = ms_since(t0);
        t0 = std::chrono::steady_clock::now();
        const PersistenceFit fp = fit_persistence(cm, ym, ci, yi, 9, 9);
        const double tp = ms_since(t0);
        double md = 0.0;
        for (std::size_t s = 0; s < fs.rho.size(); ++s) {
            if (!mask.ocean(s)) continue;
            md = std::max(md, std::abs(fs.rho[s] - fp.rho[s]));
            md = std::max(md, std::abs(fs.alpha_m[s] - fp.alpha_m[s]));
            md = std::max(md, std::abs(fs.beta_m[s] - fp.beta_m[s]));
        }
        report("persistence fit", ts, tp, md);
    }

    return 0;
}
