// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cdrflow/common.hpp"

namespace cdrflow {

struct vec2 {
    double x = 0.0, y = 0.0;

    friend vec2 operator+(vec2 a, vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend vec2 operator-(vec2 a, vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend vec2 operator*(double s, vec2 a) { return {s * a.x, s * a.y}; }
};

inline double dot(vec2 a, vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(vec2 a, vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(vec2 a) { return dot(a, a); }
inline double dist2(vec2 a, vec2 b) { return norm2(a - b); }

// Simple ring, counter-clockwise, no repeated closing vertex.
using ring = std::vector<vec2>;

inline double ring_area(const ring& r) {
    double a = 0.0;
    for (size_t i = 0, n = r.size(); i < n; ++i) a += cross(r[i], r[(i + 1) % n]);
    return 0.5 * a;
}

inline vec2 ring_centroid(const ring& r) {
    double a = 0.0;
    vec2 c{};
    for (size_t i = 0, n = r.size(); i < n; ++i) {
        const double w = cross(r[i], r[(i + 1) % n]);
        a += w;
        c = c + w * (r[i] + r[(i + 1) % n]);
    }
    if (std::abs(a) < 1e-30) return r.empty() ? vec2{} : r[0];
    return (1.0 / (3.0 * a)) * c;
}

// Keeps the half-plane dot(p, n) <= c (Sutherland-Hodgman step).
inline ring clip_halfplane(const ring& poly, vec2 n, double c) {
    ring out;
    const size_t sz = poly.size();
    if (sz == 0) return out;
    out.reserve(sz + 2);
    for (size_t i = 0; i < sz; ++i) {
        const vec2 cur = poly[i];
        const vec2 nxt = poly[(i + 1) % sz];
        const double dc = dot(cur, n) - c;
        const double dn = dot(nxt, n) - c;
        if (dc <= 0) out.push_back(cur);
        if ((dc < 0 && dn > 0) || (dc > 0 && dn < 0)) {
            const double t = dc / (dc - dn);
            out.push_back(cur + t * (nxt - cur));
        }
    }
    return out;
}

// Andrew monotone chain; returns CCW hull without collinear points.
inline ring convex_hull(std::vector<vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](vec2 a, vec2 b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](vec2 a, vec2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const size_t n = pts.size();
    if (n < 3) return pts;
    ring h(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (size_t i = n - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(h[k - 1] - h[k - 2], pts[i - 1] - h[k - 2]) <= 0) --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

// Crossing-number point-in-polygon; boundary points are unspecified, which
// is fine because probe oracles exclude near-boundary points.
inline bool point_in_ring(const ring& r, vec2 p) {
    bool in = false;
    for (size_t i = 0, n = r.size(), j = n - 1; i < n; j = i++) {
        if ((r[i].y > p.y) != (r[j].y > p.y) &&
            p.x < (r[j].x - r[i].x) * (p.y - r[i].y) / (r[j].y - r[i].y) + r[i].x)
            in = !in;
    }
    return in;
}

// ---------------------------------------------------------------------------
// Lambert azimuthal equal-area projection (spherical form), km units.
// Geometry runs in this plane; degrees only exist at the I/O edges.
// ---------------------------------------------------------------------------

constexpr double earth_radius_km = 6371.0088;
constexpr double deg2rad = 0.017453292519943295;
constexpr double rad2deg = 57.29577951308232;

struct lonlat {
    double lon = 0.0, lat = 0.0;
};

class azimuthal_projection {
  public:
    azimuthal_projection() = default;
    azimuthal_projection(double center_lon_deg, double center_lat_deg)
        : lon0_(center_lon_deg * deg2rad),
          lat0_(center_lat_deg * deg2rad),
          sin0_(std::sin(lat0_)),
          cos0_(std::cos(lat0_)) {}

    vec2 forward(lonlat g) const {
        const double lam = g.lon * deg2rad - lon0_;
        const double phi = g.lat * deg2rad;
        const double sp = std::sin(phi), cp = std::cos(phi);
        const double denom = 1.0 + sin0_ * sp + cos0_ * cp * std::cos(lam);
        const double k = std::sqrt(2.0 / std::max(denom, 1e-15));
        return {earth_radius_km * k * cp * std::sin(lam),
                earth_radius_km * k * (cos0_ * sp - sin0_ * cp * std::cos(lam))};
    }

    lonlat inverse(vec2 p) const {
        const double rho = std::hypot(p.x, p.y);
        if (rho < 1e-12) return {lon0_ * rad2deg, lat0_ * rad2deg};
        const double c = 2.0 * std::asin(std::min(1.0, rho / (2.0 * earth_radius_km)));
        const double sc = std::sin(c), cc = std::cos(c);
        const double phi = std::asin(cc * sin0_ + p.y * sc * cos0_ / rho);
        const double lam =
            lon0_ + std::atan2(p.x * sc, rho * cos0_ * cc - p.y * sin0_ * sc);
        return {lam * rad2deg, phi * rad2deg};
    }

    double center_lon() const { return lon0_ * rad2deg; }
    double center_lat() const { return lat0_ * rad2deg; }

  private:
    double lon0_ = 0.0, lat0_ = 0.0, sin0_ = 0.0, cos0_ = 1.0;
};

// ---------------------------------------------------------------------------
// Voronoi tessellation by iterated bisector clipping against a convex
// boundary. O(n^2) clips with a distance early-exit; exact partition of the
// boundary up to floating point, which is what the area-conservation and
// nearest-site checks rely on.
// ---------------------------------------------------------------------------

struct voronoi_options {
    bool allow_bisector = false; // permit 2-site / collinear configurations
};

inline bool all_collinear(const std::vector<vec2>& pts) {
    if (pts.size() < 3) return true;
    // scale-aware tolerance
    double span = 0.0;
    for (const auto& p : pts) span = std::max({span, std::abs(p.x), std::abs(p.y)});
    const double tol = 1e-12 * std::max(1.0, span * span);
    for (size_t i = 2; i < pts.size(); ++i)
        if (std::abs(cross(pts[1] - pts[0], pts[i] - pts[0])) > tol) return false;
    return true;
}

inline std::vector<ring> voronoi_cells(const std::vector<vec2>& sites, const ring& boundary,
                                       const voronoi_options& opts = {}) {
    if (sites.size() < 3 || all_collinear(sites)) {
        if (!opts.allow_bisector || sites.size() < 2)
            throw data_error(errc::degenerate_sites,
                             "need >= 3 non-collinear sites (allow_bisector for 2)");
    }
    if (boundary.size() < 3 || ring_area(boundary) <= 0)
        throw data_error(errc::degenerate_sites, "boundary must be a CCW polygon");

    const size_t n = sites.size();
    std::vector<size_t> by_dist(n);
    std::vector<ring> cells(n);
    for (size_t i = 0; i < n; ++i) {
        std::iota(by_dist.begin(), by_dist.end(), size_t{0});
        std::sort(by_dist.begin(), by_dist.end(), [&](size_t a, size_t b) {
            const double da = dist2(sites[a], sites[i]), db = dist2(sites[b], sites[i]);
            return da != db ? da < db : a < b;
        });
        ring cell = boundary;
        for (size_t j : by_dist) {
            if (j == i) continue;
            if (cell.empty()) break;
            double max_r2 = 0.0;
            for (const auto& v : cell) max_r2 = std::max(max_r2, dist2(v, sites[i]));
            if (dist2(sites[j], sites[i]) > 4.0 * max_r2) break; // bisector cannot cut
            // keep |p - si|^2 <= |p - sj|^2
            const vec2 dir = sites[j] - sites[i];
            const double c = 0.5 * (norm2(sites[j]) - norm2(sites[i]));
            cell = clip_halfplane(cell, dir, c);
        }
        cells[i] = std::move(cell);
    }
    return cells;
}

} // namespace cdrflow
