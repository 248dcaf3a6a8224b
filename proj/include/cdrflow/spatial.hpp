// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrflow/csv.hpp"
#include "cdrflow/geometry.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/levels.hpp"

namespace cdrflow {

struct site {
    std::string site_id;
    double lon = 0.0, lat = 0.0;
    std::vector<std::uint32_t> member_cells; // cell ids, sorted
};

struct site_map {
    std::vector<site> sites;                 // ordered by (lon, lat) key
    std::vector<std::uint32_t> site_of_cell; // cell id -> site index
};

// Merges cells into sites by coordinate identity after rounding to 1e-6
// degrees; physical co-location implies textual equality in source data, so
// the rounding only flattens float noise.
inline site_map merge_cells(const std::vector<cell_site_info>& cell_coords) {
    site_map out;
    std::map<std::pair<std::int64_t, std::int64_t>, std::uint32_t> index;
    out.site_of_cell.resize(cell_coords.size());
    for (std::uint32_t cell = 0; cell < cell_coords.size(); ++cell) {
        const auto key = std::make_pair(
            static_cast<std::int64_t>(std::llround(cell_coords[cell].lon * 1e6)),
            static_cast<std::int64_t>(std::llround(cell_coords[cell].lat * 1e6)));
        auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(out.sites.size()));
        if (inserted) {
            site s;
            s.lon = static_cast<double>(key.first) / 1e6;
            s.lat = static_cast<double>(key.second) / 1e6;
            out.sites.push_back(std::move(s));
        }
        out.sites[it->second].member_cells.push_back(cell);
        out.site_of_cell[cell] = it->second;
    }
    // renumber in key order so site ids are independent of cell order
    std::vector<std::uint32_t> order(out.sites.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const auto& sa = out.sites[a];
        const auto& sb = out.sites[b];
        return sa.lon != sb.lon ? sa.lon < sb.lon : sa.lat < sb.lat;
    });
    std::vector<std::uint32_t> rank(order.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    std::vector<site> sorted(out.sites.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) {
        sorted[i] = std::move(out.sites[order[i]]);
        std::sort(sorted[i].member_cells.begin(), sorted[i].member_cells.end());
        char buf[16];
        std::snprintf(buf, sizeof buf, "site_%04u", i);
        sorted[i].site_id = buf;
    }
    out.sites = std::move(sorted);
    for (auto& s : out.site_of_cell) s = rank[s];
    return out;
}

// ---------------------------------------------------------------------------
// Coverage polygons
// ---------------------------------------------------------------------------

struct coverage {
    azimuthal_projection projection; // centered on the boundary centroid
    ring boundary;                   // projected km
    std::vector<ring> cells;         // projected km, aligned with sites
    bool clipped_to_input_boundary = false;
};

// Convex boundary fallback: hull of the sites pushed out by ~buffer_km with
// miter joins, or a padded bounding box when the hull is degenerate.
inline ring buffered_hull(const std::vector<vec2>& pts, double buffer_km) {
    ring hull = convex_hull(pts);
    if (hull.size() >= 3) {
        const size_t n = hull.size();
        ring out(n);
        for (size_t i = 0; i < n; ++i) {
            const vec2 prev = hull[(i + n - 1) % n];
            const vec2 cur = hull[i];
            const vec2 next = hull[(i + 1) % n];
            auto outward = [&](vec2 a, vec2 b) {
                const vec2 d = b - a;
                const double len = std::sqrt(norm2(d));
                return vec2{d.y / len, -d.x / len}; // right normal of a CCW edge
            };
            const vec2 n1 = outward(prev, cur);
            const vec2 n2 = outward(cur, next);
            // intersect the two offset edge lines; fall back to normal sum
            const vec2 p1 = cur + buffer_km * n1;
            const vec2 p2 = cur + buffer_km * n2;
            const vec2 d1 = cur - prev;
            const vec2 d2 = next - cur;
            const double den = cross(d1, d2);
            if (std::abs(den) < 1e-12) {
                out[i] = cur + buffer_km * n1;
            } else {
                const double t = cross(p2 - p1, d2) / den;
                out[i] = p1 + t * d1;
            }
        }
        return out;
    }
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_x = std::max(hi_x, p.x);
        hi_y = std::max(hi_y, p.y);
    }
    return {{lo_x - buffer_km, lo_y - buffer_km},
            {hi_x + buffer_km, lo_y - buffer_km},
            {hi_x + buffer_km, hi_y + buffer_km},
            {lo_x - buffer_km, hi_y + buffer_km}};
}

struct coverage_options {
    std::optional<std::vector<lonlat>> boundary_wgs84; // convex ring
    bool allow_bisector = false;
    double default_buffer_km = 1.0;
};

inline coverage build_coverage(const std::vector<site>& sites, const coverage_options& opts = {}) {
    if (sites.empty()) throw data_error(errc::degenerate_sites, "no sites");
    double clon = 0.0, clat = 0.0;
    if (opts.boundary_wgs84) {
        for (const auto& g : *opts.boundary_wgs84) {
            clon += g.lon;
            clat += g.lat;
        }
        clon /= static_cast<double>(opts.boundary_wgs84->size());
        clat /= static_cast<double>(opts.boundary_wgs84->size());
    } else {
        for (const auto& s : sites) {
            clon += s.lon;
            clat += s.lat;
        }
        clon /= static_cast<double>(sites.size());
        clat /= static_cast<double>(sites.size());
    }
    coverage cov;
    cov.projection = azimuthal_projection(clon, clat);

    std::vector<vec2> pts;
    pts.reserve(sites.size());
    for (const auto& s : sites) pts.push_back(cov.projection.forward({s.lon, s.lat}));

    if (opts.boundary_wgs84) {
        for (const auto& g : *opts.boundary_wgs84)
            cov.boundary.push_back(cov.projection.forward(g));
        if (ring_area(cov.boundary) < 0)
            std::reverse(cov.boundary.begin(), cov.boundary.end());
        // the cell clipper requires a convex boundary; decompose upstream
        const size_t n = cov.boundary.size();
        for (size_t i = 0; i < n; ++i) {
            const vec2 a = cov.boundary[i];
            const vec2 b = cov.boundary[(i + 1) % n];
            const vec2 c = cov.boundary[(i + 2) % n];
            if (cross(b - a, c - b) < -1e-9 * std::max(1.0, norm2(b - a)))
                throw config_error(errc::bad_config, "boundary polygon must be convex");
        }
        cov.clipped_to_input_boundary = true;
    } else {
        cov.boundary = buffered_hull(pts, opts.default_buffer_km);
    }

    cov.cells = voronoi_cells(pts, cov.boundary, {opts.allow_bisector});
    return cov;
}

// ---------------------------------------------------------------------------
// Per-site aggregation
// ---------------------------------------------------------------------------

struct site_price_stats {
    std::uint64_t records = 0;
    std::uint64_t priced_records = 0;
    double price_sum = 0.0;

    std::optional<double> mean() const {
        if (priced_records == 0) return std::nullopt;
        return price_sum / static_cast<double>(priced_records);
    }
    double coverage_fraction() const {
        return records == 0 ? 0.0
                            : static_cast<double>(priced_records) / static_cast<double>(records);
    }
};

// Record-weighted mean phone price per site. price_of(sim) resolves a SIM to
// the price of the phone that generated its records (dominant device), or
// nothing when unknown.
template <typename PriceFn>
std::vector<site_price_stats> site_mean_phone_price(const std::vector<event_rec>& events,
                                                    const std::vector<std::uint32_t>& site_of_cell,
                                                    size_t n_sites, PriceFn&& price_of) {
    std::vector<site_price_stats> out(n_sites);
    size_t i = 0;
    while (i < events.size()) {
        const std::uint32_t sim = events[i].sim;
        const std::optional<double> price = price_of(sim);
        for (; i < events.size() && events[i].sim == sim; ++i) {
            auto& st = out[site_of_cell[events[i].cell]];
            st.records++;
            if (price) {
                st.priced_records++;
                st.price_sum += *price;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// GeoJSON export
// ---------------------------------------------------------------------------

inline nlohmann::json ring_to_geojson(const ring& cell, const azimuthal_projection& proj) {
    nlohmann::json coords = nlohmann::json::array();
    nlohmann::json outer = nlohmann::json::array();
    for (const auto& v : cell) {
        const lonlat g = proj.inverse(v);
        outer.push_back({g.lon, g.lat});
    }
    if (!cell.empty()) {
        const lonlat g = proj.inverse(cell.front());
        outer.push_back({g.lon, g.lat}); // close the ring
    }
    coords.push_back(std::move(outer));
    return nlohmann::json{{"type", "Polygon"}, {"coordinates", std::move(coords)}};
}

struct choropleth_value {
    std::string site_id;
    double value;
};

// FeatureCollection of coverage polygons for the sites that carry a value,
// labeled by the threshold scheme. Valueless sites are omitted, so an empty
// value list yields an empty collection.
inline nlohmann::json export_choropleth(const std::vector<site>& sites, const coverage& cov,
                                        const std::vector<choropleth_value>& values,
                                        const level_thresholds& thresholds) {
    thresholds.validate();
    std::map<std::string_view, double> by_id;
    for (const auto& v : values) by_id.emplace(v.site_id, v.value);
    for (const auto& v : values) {
        const bool known = std::any_of(sites.begin(), sites.end(),
                                       [&](const site& s) { return s.site_id == v.site_id; });
        if (!known) throw data_error(errc::unknown_site, v.site_id);
    }
    nlohmann::json features = nlohmann::json::array();
    for (size_t i = 0; i < sites.size(); ++i) {
        const auto it = by_id.find(sites[i].site_id);
        if (it == by_id.end() || cov.cells[i].empty()) continue;
        nlohmann::json props;
        props["site_id"] = sites[i].site_id;
        props["value"] = it->second;
        props["label"] = thresholds.classify(it->second);
        features.push_back({{"type", "Feature"},
                            {"geometry", ring_to_geojson(cov.cells[i], cov.projection)},
                            {"properties", std::move(props)}});
    }
    return nlohmann::json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline void write_sites_csv(const site_map& smap, const string_pool& cells,
                            const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("site_id,lon,lat,n_cells,cell_ids\n");
    for (const auto& s : smap.sites) {
        w.field(s.site_id);
        w.field_double(s.lon);
        w.field_double(s.lat);
        w.field_int(s.member_cells.size());
        std::string members;
        for (size_t i = 0; i < s.member_cells.size(); ++i) {
            if (i) members.push_back(';');
            members += cells.at(s.member_cells[i]);
        }
        w.field(members);
        w.end_row();
    }
    w.commit();
}

inline std::optional<std::vector<lonlat>> load_boundary_geojson(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    const auto doc = nlohmann::json::parse(read_file(path));
    const nlohmann::json* geom = nullptr;
    if (doc.contains("type") && doc["type"] == "Polygon")
        geom = &doc;
    else if (doc.contains("features") && !doc["features"].empty())
        geom = &doc["features"][0]["geometry"];
    else if (doc.contains("geometry"))
        geom = &doc["geometry"];
    if (!geom || (*geom)["type"] != "Polygon")
        throw config_error(errc::bad_config, "boundary file must contain a Polygon");
    std::vector<lonlat> out;
    for (const auto& c : (*geom)["coordinates"][0])
        out.push_back({c[0].get<double>(), c[1].get<double>()});
    if (out.size() > 1 && out.front().lon == out.back().lon && out.front().lat == out.back().lat)
        out.pop_back();
    return out;
}

} // namespace cdrflow
