// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdrflow/csv.hpp"
#include "cdrflow/device_catalog.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/stats.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

// An analysis population: member sim ids plus how it was produced.
struct cohort {
    std::string name;
    std::string provenance;
    std::vector<std::uint32_t> members; // sorted, unique
    std::unordered_map<std::uint32_t, std::string> tags;

    bool contains(std::uint32_t sim) const {
        return std::binary_search(members.begin(), members.end(), sim);
    }
    std::vector<bool> mask(size_t n_sims) const {
        std::vector<bool> m(n_sims, false);
        for (auto id : members) m[id] = true;
        return m;
    }
};

// ---------------------------------------------------------------------------
// Device profile and phone population
// ---------------------------------------------------------------------------

struct device_profile {
    std::vector<std::uint32_t> tacs; // all devices seen for the sim
    std::optional<std::uint32_t> dominant_tac;
    std::uint64_t total_events = 0;
};

// Dominant device = the TAC owning strictly more than `share` of the sim's
// events. A tie yields none and keeps the sim out of price-based analyses.
inline std::vector<device_profile> build_device_profiles(const std::vector<device_obs>& devices,
                                                         size_t n_sims,
                                                         double dominant_share = 0.5) {
    std::vector<device_profile> out(n_sims);
    size_t i = 0;
    while (i < devices.size()) {
        const std::uint32_t sim = devices[i].sim;
        auto& prof = out[sim];
        std::uint64_t best_count = 0;
        std::uint32_t best_tac = 0;
        for (; i < devices.size() && devices[i].sim == sim; ++i) {
            prof.tacs.push_back(devices[i].tac);
            prof.total_events += devices[i].event_count;
            if (devices[i].event_count > best_count) {
                best_count = devices[i].event_count;
                best_tac = devices[i].tac;
            }
        }
        if (prof.total_events > 0 &&
            static_cast<double>(best_count) >
                dominant_share * static_cast<double>(prof.total_events))
            prof.dominant_tac = best_tac;
    }
    return out;
}

// Enrichment lookup keyed by interned tac id.
struct enrichment_index {
    std::vector<const tac_enrichment*> by_tac; // indexed by tac id, may be null

    static enrichment_index build(const std::vector<tac_enrichment>& rows,
                                  const string_pool& tacs) {
        enrichment_index idx;
        idx.by_tac.assign(tacs.size(), nullptr);
        std::unordered_map<std::string_view, const tac_enrichment*> by_name;
        for (const auto& e : rows) by_name.emplace(e.tac, &e);
        for (std::uint32_t id = 0; id < tacs.size(); ++id) {
            auto it = by_name.find(tacs.at(id));
            if (it != by_name.end()) idx.by_tac[id] = it->second;
        }
        return idx;
    }

    const tac_enrichment* get(std::uint32_t tac_id) const {
        return tac_id < by_tac.size() ? by_tac[tac_id] : nullptr;
    }
};

struct phone_population_result {
    cohort phones;                      // kept sims (includes unknown-device sims)
    std::vector<std::uint32_t> non_phone; // excluded sims
    std::uint64_t unknown_device_count = 0;
};

// Keeps sims whose classifying device (dominant, or the only one) is not a
// known non-phone. Unknown devices stay in, tagged, unless exclude_unknown.
inline phone_population_result phone_population(const std::vector<device_profile>& profiles,
                                                const enrichment_index& enrichment,
                                                bool exclude_unknown = false) {
    phone_population_result out;
    out.phones.name = "phones";
    out.phones.provenance = "dominant-or-only device not non-phone";
    for (std::uint32_t sim = 0; sim < profiles.size(); ++sim) {
        const auto& prof = profiles[sim];
        if (prof.tacs.empty()) continue;
        std::optional<std::uint32_t> classifier = prof.dominant_tac;
        if (!classifier && prof.tacs.size() == 1) classifier = prof.tacs[0];

        bool non_phone = false;
        bool unknown = false;
        if (classifier) {
            const auto* e = enrichment.get(*classifier);
            non_phone = e && e->non_phone;
            unknown = !e || (!e->matched && !e->non_phone);
        } else {
            // no dominant device: drop only if every device is a non-phone
            non_phone = true;
            for (auto tac : prof.tacs) {
                const auto* e = enrichment.get(tac);
                if (!(e && e->non_phone)) non_phone = false;
                if (!e || (!e->matched && !e->non_phone)) unknown = true;
            }
        }
        if (non_phone) {
            out.non_phone.push_back(sim);
            continue;
        }
        if (unknown) {
            out.unknown_device_count++;
            if (exclude_unknown) continue;
            out.phones.tags.emplace(sim, "unknown_device");
        }
        if (!classifier && !unknown) out.phones.tags.emplace(sim, "no_dominant_device");
        out.phones.members.push_back(sim);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Activity filter
// ---------------------------------------------------------------------------

struct filter_policy {
    std::uint32_t min_active_days = 20;
    double min_workday_mean = 40.0;
    double min_weekend_mean = 20.0;
    std::uint64_t max_daily_activity = 1000;
    double dominant_device_share = 0.5;
};

// Daily-mean thresholds are evaluated over active days of each type; a sim
// that exceeds max_daily_activity on any single day is dropped outright.
inline cohort apply_activity_filter(const std::vector<event_rec>& events, size_t n_sims,
                                    const filter_policy& policy, const calendar& cal,
                                    const local_clock& clock) {
    cohort out;
    out.name = "active";
    out.provenance = "activity filter: days>=" + std::to_string(policy.min_active_days) +
                     " workday_mean>=" + format_double(policy.min_workday_mean) +
                     " weekend_mean>=" + format_double(policy.min_weekend_mean) +
                     " max_daily<=" + std::to_string(policy.max_daily_activity);
    size_t i = 0;
    while (i < events.size()) {
        const std::uint32_t sim = events[i].sim;
        std::uint64_t day_events = 0;
        std::uint64_t workday_events = 0, weekend_events = 0;
        std::uint32_t workdays = 0, weekends = 0;
        std::uint64_t max_daily = 0;
        day_number cur = clock.local_day(events[i].ts);
        auto close_day = [&] {
            max_daily = std::max(max_daily, day_events);
            if (cal.type_of(cur) == day_type::workday) {
                workdays++;
                workday_events += day_events;
            } else {
                weekends++;
                weekend_events += day_events;
            }
            day_events = 0;
        };
        for (; i < events.size() && events[i].sim == sim; ++i) {
            const day_number d = clock.local_day(events[i].ts);
            if (d != cur) {
                close_day();
                cur = d;
            }
            day_events++;
        }
        close_day();

        const std::uint32_t active_days = workdays + weekends;
        const double workday_mean =
            workdays ? static_cast<double>(workday_events) / workdays : 0.0;
        const double weekend_mean =
            weekends ? static_cast<double>(weekend_events) / weekends : 0.0;
        if (active_days >= policy.min_active_days && workday_mean >= policy.min_workday_mean &&
            weekend_mean >= policy.min_weekend_mean && max_daily <= policy.max_daily_activity &&
            sim < n_sims)
            out.members.push_back(sim);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Peak responders
// ---------------------------------------------------------------------------

struct response_window {
    utc_seconds start;
    unsigned minutes = 5;

    utc_seconds end() const { return start + static_cast<utc_seconds>(minutes) * 60; }
};

struct response_windows {
    std::vector<response_window> windows; // sorted, non-overlapping
    unsigned k_required = 2;

    void validate() const {
        if (windows.empty()) throw data_error(errc::empty_windows, "no response windows");
        if (k_required < 1 || k_required > windows.size())
            throw config_error(errc::bad_config, "k_required out of range");
        for (size_t i = 0; i < windows.size(); ++i) {
            if (windows[i].minutes == 0)
                throw config_error(errc::bad_config, "zero-length window");
            if (i > 0 && windows[i].start < windows[i - 1].end())
                throw config_error(errc::bad_config, "windows overlap or are unsorted");
        }
    }
};

// Sims from the base cohort with >= 1 event inside >= k_required of the
// windows. Window intervals are closed-open [start, start + minutes).
inline cohort select_peak_responders(const std::vector<event_rec>& events,
                                     const response_windows& rw,
                                     const std::vector<bool>& base_mask) {
    rw.validate();
    cohort out;
    out.name = "peak_responders_k" + std::to_string(rw.k_required);
    out.provenance = "active in >= " + std::to_string(rw.k_required) + " of " +
                     std::to_string(rw.windows.size()) + " response windows";
    size_t i = 0;
    std::vector<bool> hit(rw.windows.size());
    while (i < events.size()) {
        const std::uint32_t sim = events[i].sim;
        if (sim < base_mask.size() && !base_mask[sim]) {
            while (i < events.size() && events[i].sim == sim) ++i;
            continue;
        }
        std::fill(hit.begin(), hit.end(), false);
        for (; i < events.size() && events[i].sim == sim; ++i) {
            const utc_seconds t = events[i].ts;
            // windows are few (3 in the study); linear scan beats a search
            for (size_t wi = 0; wi < rw.windows.size(); ++wi)
                if (t >= rw.windows[wi].start && t < rw.windows[wi].end()) {
                    hit[wi] = true;
                    break;
                }
        }
        unsigned k = 0;
        for (const bool h : hit) k += h;
        if (k >= rw.k_required) out.members.push_back(sim);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cohort attribute comparison
// ---------------------------------------------------------------------------

enum class compare_attribute : std::uint8_t {
    phone_price,
    phone_age,
    gyration,
    entropy,
    subscriber_age,
};

inline const char* compare_attribute_name(compare_attribute a) {
    switch (a) {
    case compare_attribute::phone_price: return "phone_price";
    case compare_attribute::phone_age: return "phone_age";
    case compare_attribute::gyration: return "gyration";
    case compare_attribute::entropy: return "entropy";
    case compare_attribute::subscriber_age: return "subscriber_age";
    }
    return "";
}

struct distribution_summary {
    std::string band;
    std::string side; // "cohort" or "rest"
    std::uint64_t count = 0;
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    std::uint64_t absent = 0;
};

// Linear-interpolation quantile (R type 7) on a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(h);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct age_bands {
    std::vector<int> edges{20, 30, 40, 50, 60, 70, 80}; // half-open [e_i, e_{i+1})

    std::string band_of(std::optional<int> age) const {
        if (!age) return "unknown";
        if (edges.empty()) return "all";
        if (*age < edges.front()) return "<" + std::to_string(edges.front());
        for (size_t i = 0; i + 1 < edges.size(); ++i)
            if (*age < edges[i + 1])
                return std::to_string(edges[i]) + "-" + std::to_string(edges[i + 1] - 1);
        return ">=" + std::to_string(edges.back());
    }
};

// Quartile summaries per age band for cohort members vs everyone else.
// attribute_of returns the attribute value for a sim or nothing; sims with
// absent values are counted separately per band.
template <typename AttrFn, typename AgeFn>
std::vector<distribution_summary> cohort_compare(const cohort& group, size_t n_sims,
                                                 AttrFn&& attribute_of, AgeFn&& age_of,
                                                 const age_bands& bands = {}) {
    if (group.members.empty()) throw data_error(errc::empty_cohort, group.name);
    struct acc {
        std::vector<double> values;
        std::uint64_t absent = 0;
    };
    std::map<std::string, std::array<acc, 2>> by_band;
    const auto mask = group.mask(n_sims);
    for (std::uint32_t sim = 0; sim < n_sims; ++sim) {
        const size_t side = mask[sim] ? 0 : 1;
        auto& slot = by_band[bands.band_of(age_of(sim))][side];
        const std::optional<double> v = attribute_of(sim);
        if (v)
            slot.values.push_back(*v);
        else
            slot.absent++;
    }
    std::vector<distribution_summary> out;
    for (auto& [band, sides] : by_band) {
        for (size_t side = 0; side < 2; ++side) {
            auto& a = sides[side];
            if (a.values.empty() && a.absent == 0) continue;
            std::sort(a.values.begin(), a.values.end());
            distribution_summary s;
            s.band = band;
            s.side = side == 0 ? "cohort" : "rest";
            s.count = a.values.size();
            s.absent = a.absent;
            s.q1 = quantile_sorted(a.values, 0.25);
            s.median = quantile_sorted(a.values, 0.5);
            s.q3 = quantile_sorted(a.values, 0.75);
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Scales an observed count up by the operator's market share.
inline std::int64_t scale_by_market_share(std::int64_t observed, double share) {
    if (!(share > 0.0) || share > 1.0)
        throw config_error(errc::bad_config, "market share must be in (0, 1]");
    return std::llround(static_cast<double>(observed) / share);
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline void write_cohort_csv(const cohort& c, const string_pool& sims,
                             const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("sim_id,tags\n");
    for (const auto sim : c.members) {
        w.field(sims.at(sim));
        auto it = c.tags.find(sim);
        w.field(it == c.tags.end() ? std::string_view{} : std::string_view{it->second});
        w.end_row();
    }
    w.commit();
}

inline void write_comparison_csv(const std::vector<distribution_summary>& rows,
                                 const std::string& attribute,
                                 const std::filesystem::path& path) {
    csv_writer w(path);
    w.raw("attribute,band,side,count,q1,median,q3,absent\n");
    for (const auto& r : rows) {
        w.field(attribute);
        w.field(r.band);
        w.field(r.side);
        w.field_int(r.count);
        w.field_double(r.q1);
        w.field_double(r.median);
        w.field_double(r.q3);
        w.field_int(r.absent);
        w.end_row();
    }
    w.commit();
}

} // namespace cdrflow
