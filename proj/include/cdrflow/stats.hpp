// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "cdrflow/ingest.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

// Per-sim activity summary; one pass over the (sim, ts) sorted event table.
struct sim_activity {
    std::uint64_t events = 0;
    std::uint32_t active_days = 0;
    day_number first_day = 0;
    day_number last_day = 0;
    std::uint64_t max_daily = 0;
};

inline std::vector<sim_activity> summarize_activity(const std::vector<event_rec>& events,
                                                    size_t n_sims, const local_clock& clock) {
    std::vector<sim_activity> out(n_sims);
    size_t i = 0;
    while (i < events.size()) {
        const std::uint32_t sim = events[i].sim;
        auto& s = out[sim];
        day_number cur_day = clock.local_day(events[i].ts);
        s.first_day = cur_day;
        std::uint64_t day_count = 0;
        for (; i < events.size() && events[i].sim == sim; ++i) {
            const day_number d = clock.local_day(events[i].ts);
            if (d != cur_day) {
                s.max_daily = std::max(s.max_daily, day_count);
                s.active_days++;
                cur_day = d;
                day_count = 0;
            }
            day_count++;
            s.events++;
        }
        s.max_daily = std::max(s.max_daily, day_count);
        s.active_days++;
        s.last_day = cur_day;
    }
    return out;
}

struct activity_stats {
    std::vector<std::uint64_t> band_edges;     // upper-inclusive edges; final band open
    std::vector<std::uint64_t> band_sim_count; // band_edges.size() + 1 entries
    std::vector<std::uint64_t> band_events;
    std::vector<double> band_activity_share;          // sums to 1 when any events
    std::map<std::uint32_t, std::uint64_t> active_day_hist; // days -> sims
    std::uint64_t total_events = 0;
    std::uint64_t total_sims = 0;
};

// Activity-band and active-day distributions. Band edges are inclusive upper
// bounds; the default {1, 10, 100, 1000} reproduces the "more than 1000
// records" top band.
inline activity_stats compute_activity_stats(const std::vector<sim_activity>& sims,
                                             std::vector<std::uint64_t> band_edges = {1, 10, 100,
                                                                                      1000}) {
    activity_stats st;
    st.band_edges = std::move(band_edges);
    st.band_sim_count.assign(st.band_edges.size() + 1, 0);
    st.band_events.assign(st.band_edges.size() + 1, 0);
    for (const auto& s : sims) {
        if (s.events == 0) continue;
        size_t band = 0;
        while (band < st.band_edges.size() && s.events > st.band_edges[band]) ++band;
        st.band_sim_count[band]++;
        st.band_events[band] += s.events;
        st.total_events += s.events;
        st.total_sims++;
        st.active_day_hist[s.active_days]++;
    }
    st.band_activity_share.assign(st.band_events.size(), 0.0);
    if (st.total_events > 0)
        for (size_t b = 0; b < st.band_events.size(); ++b)
            st.band_activity_share[b] =
                static_cast<double>(st.band_events[b]) / static_cast<double>(st.total_events);
    return st;
}

// Probable tourists: at least min_days active days, whole appearance inside
// max_span_days.
inline std::vector<std::uint32_t> flag_transients(const std::vector<sim_activity>& sims,
                                                  std::uint32_t min_days = 2,
                                                  std::int32_t max_span_days = 7) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t id = 0; id < sims.size(); ++id) {
        const auto& s = sims[id];
        if (s.events == 0) continue;
        if (s.active_days >= min_days && s.last_day - s.first_day <= max_span_days)
            out.push_back(id);
    }
    return out;
}

} // namespace cdrflow
