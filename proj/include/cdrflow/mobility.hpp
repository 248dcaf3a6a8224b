// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <unordered_map>
#include <vector>

#include "cdrflow/csv.hpp"
#include "cdrflow/geometry.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

// Visit counts over a subscriber's location set. Coordinates are projected
// km, so gyration comes out in km directly.
struct visit_vector {
    std::vector<vec2> locations;
    std::vector<std::uint64_t> visits; // n_i >= 1, aligned with locations

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto v : visits) n += v;
        return n;
    }
};

inline vec2 center_of_mass(const visit_vector& v) {
    vec2 acc{};
    double n = 0.0;
    for (size_t i = 0; i < v.locations.size(); ++i) {
        acc = acc + static_cast<double>(v.visits[i]) * v.locations[i];
        n += static_cast<double>(v.visits[i]);
    }
    return n > 0 ? (1.0 / n) * acc : vec2{};
}

// r_g = sqrt( (1/N) * sum_i n_i * |r_i - r_cm|^2 ), N = total visit count.
// A single visited location is exactly zero, bypassing center-of-mass
// round-off.
inline double radius_of_gyration(const visit_vector& v) {
    if (v.locations.size() <= 1) return 0.0;
    const std::uint64_t n = v.total();
    if (n == 0) return 0.0;
    const vec2 cm = center_of_mass(v);
    double acc = 0.0;
    for (size_t i = 0; i < v.locations.size(); ++i)
        acc += static_cast<double>(v.visits[i]) * dist2(v.locations[i], cm);
    return std::sqrt(acc / static_cast<double>(n));
}

enum class entropy_norm : std::uint8_t {
    activities, // divide by log N (total activities) -- the text's reading
    locations,  // divide by log |L| -- the common convention
};

// e = -sum_l p(l) ln p(l) / ln N with p(l) = n_l / N. Zero when only one
// location is visited or when the normalizer degenerates (N or |L| = 1).
inline double entropy(const visit_vector& v, entropy_norm norm = entropy_norm::activities) {
    const std::uint64_t n = v.total();
    if (n <= 1 || v.locations.size() <= 1) return 0.0;
    double h = 0.0;
    for (auto cnt : v.visits) {
        if (cnt == 0) continue;
        const double p = static_cast<double>(cnt) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    const double denom = norm == entropy_norm::activities
                             ? std::log(static_cast<double>(n))
                             : std::log(static_cast<double>(v.locations.size()));
    return denom > 0 ? h / denom : 0.0;
}

enum class day_scope : std::uint8_t { workday = 0, weekend = 1, whole_period = 2 };

inline const char* day_scope_name(day_scope s) {
    switch (s) {
    case day_scope::workday: return "workday";
    case day_scope::weekend: return "weekend";
    case day_scope::whole_period: return "all";
    }
    return "";
}

struct mobility_record {
    std::uint32_t sim = 0;
    day_scope scope = day_scope::workday;
    double gyration_km = 0.0;
    double entropy = 0.0;
    std::uint64_t n_events = 0;
    std::uint32_t n_locations = 0;
};

struct mobility_options {
    entropy_norm norm = entropy_norm::activities;
    bool include_whole_period = true;
};

// Per-sim, per-day-type metrics over projected site coordinates. Events must
// be (sim, ts) sorted; the cohort mask gates which sims are evaluated
// (non-phone SIMs are excluded upstream). Scopes with zero events emit no
// record. Output ordered by (sim, scope).
inline std::vector<mobility_record> compute_mobility(
    const std::vector<event_rec>& events, const std::vector<std::uint32_t>& site_of_cell,
    const std::vector<vec2>& site_xy, const calendar& cal, const local_clock& clock,
    const std::vector<bool>& sim_in_cohort, const mobility_options& opts = {}) {
    std::vector<mobility_record> out;
    std::unordered_map<std::uint32_t, std::uint64_t> counts[3];
    size_t i = 0;
    while (i < events.size()) {
        const std::uint32_t sim = events[i].sim;
        if (sim < sim_in_cohort.size() && !sim_in_cohort[sim]) {
            while (i < events.size() && events[i].sim == sim) ++i;
            continue;
        }
        for (auto& c : counts) c.clear();
        for (; i < events.size() && events[i].sim == sim; ++i) {
            const auto site = site_of_cell[events[i].cell];
            const auto dt = cal.type_of(clock.local_day(events[i].ts));
            counts[static_cast<size_t>(dt)][site]++;
            counts[static_cast<size_t>(day_scope::whole_period)][site]++;
        }
        const size_t n_scopes = opts.include_whole_period ? 3 : 2;
        for (size_t s = 0; s < n_scopes; ++s) {
            if (counts[s].empty()) continue;
            visit_vector vv;
            std::vector<std::pair<std::uint32_t, std::uint64_t>> sorted(counts[s].begin(),
                                                                        counts[s].end());
            std::sort(sorted.begin(), sorted.end());
            for (const auto& [site, cnt] : sorted) {
                vv.locations.push_back(site_xy[site]);
                vv.visits.push_back(cnt);
            }
            mobility_record rec;
            rec.sim = sim;
            rec.scope = static_cast<day_scope>(s);
            rec.gyration_km = radius_of_gyration(vv);
            rec.entropy = cdrflow::entropy(vv, opts.norm);
            rec.n_events = vv.total();
            rec.n_locations = static_cast<std::uint32_t>(vv.locations.size());
            out.push_back(rec);
        }
    }
    return out;
}

inline void write_mobility_csv(const std::vector<mobility_record>& records,
                               const string_pool& sims, const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("sim_id,day_type,r_g_km,entropy,n_events,n_locations\n");
    for (const auto& r : records) {
        w.field(sims.at(r.sim));
        w.field(day_scope_name(r.scope));
        w.field_double(r.gyration_km);
        w.field_double(r.entropy);
        w.field_int(r.n_events);
        w.field_int(r.n_locations);
        w.end_row();
    }
    w.commit();
}

} // namespace cdrflow
