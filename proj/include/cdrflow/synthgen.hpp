// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrflow/common.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/device_catalog.hpp"
#include "cdrflow/geometry.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/rng.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

struct window_spec {
    utc_seconds start = 0;
    unsigned minutes = 5;
};

struct scenario_plant {
    std::string kind;                 // peak | suppression | festival | spike
    std::vector<window_spec> windows; // peak: all windows; others: windows[0]
    std::vector<std::uint32_t> sites; // suppression / festival targets
    double amplitude = 1.0;           // suppression keep-prob / festival extra rate / spike sigmas
    double cohort_fraction = 0.0;     // peak responders / festival participants
    std::uint32_t spike_site = 0;
    unsigned spike_bin_minutes = 5;
};

struct scenario_config {
    std::uint64_t seed = 42;
    std::uint32_t n_sites = 60;
    std::uint32_t cells_per_site = 3;
    std::uint32_t n_subscribers = 400;
    day_number start_day = days_from_civil(2016, 6, 1);
    std::uint32_t days = 30;
    double center_lon = 19.0402, center_lat = 47.4979;
    double city_radius_km = 15.0;
    int utc_offset_minutes = 120;

    double workday_rate = 45.0; // mean events per sim per day
    double weekend_rate = 25.0;

    // two-bump diurnal curve over a uniform base
    double morning_hour = 8.0, morning_sigma_h = 1.5, morning_weight = 0.25;
    double evening_hour = 19.0, evening_sigma_h = 2.0, evening_weight = 0.35;

    double age_missing_fraction = 0.4;
    double age_mean = 40.0, age_sigma = 15.0;
    double prepaid_fraction = 0.4;
    double business_fraction = 0.1;
    double commuter_fraction = 0.7;
    double multi_device_fraction = 0.04;

    std::uint32_t n_phone_models = 40;
    std::uint32_t n_nonphone_models = 6;
    double non_phone_fraction = 0.05;
    double catalog_noise_fraction = 0.2;
    bool price_mobility_correlation = true;
    double noise_site_fraction = 0.1;

    std::vector<scenario_plant> plants;

    local_clock clock() const { return {utc_offset_minutes}; }
    observation_period period() const {
        const local_clock c = clock();
        return {c.day_start_utc(start_day),
                c.day_start_utc(start_day + static_cast<day_number>(days))};
    }
};

// ---------------------------------------------------------------------------
// Generated world
// ---------------------------------------------------------------------------

struct synth_subscriber {
    std::int16_t age = -1; // -1 missing (sex missing too)
    sex_t sex = sex_t::absent;
    customer_t customer = customer_t::consumer;
    payment_t payment = payment_t::prepaid;
    std::uint32_t home_site = 0;
    std::uint32_t work_site = 0;
    double wealth = 0.0;
    std::uint32_t tac_index = 0;           // into catalog tacs
    std::optional<std::uint32_t> second_tac; // multi-device sims
    bool non_phone = false;
    double price = 0.0; // true device price (0 when non-phone)
};

struct synth_event {
    utc_seconds ts;
    std::uint32_t sim;
    std::uint32_t cell; // global cell index = site * cells_per_site + k
};

struct synth_model {
    std::string tac;
    std::string vendor;
    std::string family;
    std::string model;
    bool non_phone = false;
    double price = 0.0;
    year_month release{2012, 1};
    std::string os;
};

struct scenario_data {
    scenario_config config;
    std::vector<lonlat> sites; // index = site id in generation space
    std::vector<synth_subscriber> subscribers;
    std::vector<synth_model> models;      // toy 51d-style catalog, one row per TAC
    std::vector<spec_catalog_row> specs;  // toy GSMArena-style catalog
    std::vector<synth_event> events;      // sorted by (ts, sim)
    std::vector<std::uint32_t> responders; // planted peak responders (sim ids)
    std::vector<window_spec> response_windows;
    nlohmann::json plant_log = nlohmann::json::array();

    std::string sim_name(std::uint32_t sim) const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "S%06u", sim);
        return buf;
    }
    std::string cell_name(std::uint32_t cell) const {
        char buf[24];
        std::snprintf(buf, sizeof buf, "C%04u_%u", cell / config.cells_per_site,
                      cell % config.cells_per_site);
        return buf;
    }
    std::uint32_t site_of_cell(std::uint32_t cell) const { return cell / config.cells_per_site; }
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace synth_detail {

inline double sample_second_of_day(rng& r, const scenario_config& cfg) {
    const double u = r.uniform();
    double hours;
    if (u < cfg.morning_weight) {
        hours = r.normal(cfg.morning_hour, cfg.morning_sigma_h);
    } else if (u < cfg.morning_weight + cfg.evening_weight) {
        hours = r.normal(cfg.evening_hour, cfg.evening_sigma_h);
    } else {
        hours = r.uniform(0.0, 24.0);
    }
    hours = std::fmod(std::fmod(hours, 24.0) + 24.0, 24.0);
    double sec = std::floor(hours * 3600.0);
    return std::min(sec, 86399.0);
}

inline std::string vendor_name(std::uint32_t i) {
    static const char* base[] = {"Acme",   "Borealis", "Cetus", "Dorado",  "Eridanus",
                                 "Fornax", "Gemini",   "Hydra", "Indus",   "Lyra"};
    return base[i % 10];
}

} // namespace synth_detail

// Plants one extra event inside each of >= 2 randomly chosen windows for a
// sampled fraction of the eligible sims; returns the exact responder list.
inline std::vector<std::uint32_t> plant_goal_reactions(std::vector<synth_event>& events,
                                                       const std::vector<window_spec>& windows,
                                                       double cohort_fraction,
                                                       const std::vector<bool>& eligible,
                                                       const scenario_data& world, rng& r) {
    if (cohort_fraction < 0.0 || cohort_fraction > 1.0)
        throw config_error(errc::infeasible_scenario, "cohort_fraction outside [0, 1]");
    std::vector<std::uint32_t> responders;
    if (windows.size() < 2 || cohort_fraction == 0.0) return responders;
    std::vector<std::uint32_t> widx(windows.size());
    for (std::uint32_t sim = 0; sim < eligible.size(); ++sim) {
        if (!eligible[sim]) continue;
        if (!r.bernoulli(cohort_fraction)) continue;
        responders.push_back(sim);
        for (size_t i = 0; i < widx.size(); ++i) widx[i] = static_cast<std::uint32_t>(i);
        r.shuffle(widx);
        const size_t k = 2 + (windows.size() > 2 && r.bernoulli(1.0 / 3.0) ? 1 : 0);
        const auto& sub = world.subscribers[sim];
        const std::uint32_t cell = sub.home_site * world.config.cells_per_site +
                                   static_cast<std::uint32_t>(r.below(world.config.cells_per_site));
        for (size_t i = 0; i < k; ++i) {
            const auto& w = windows[widx[i]];
            const utc_seconds t =
                w.start + static_cast<utc_seconds>(r.below(static_cast<std::uint64_t>(w.minutes) * 60));
            events.push_back({t, sim, cell});
        }
    }
    return responders;
}

inline scenario_data generate_scenario(const scenario_config& cfg) {
    if (cfg.n_sites == 0 || cfg.n_subscribers == 0 || cfg.days == 0 || cfg.cells_per_site == 0)
        throw config_error(errc::infeasible_scenario, "empty scenario dimensions");
    for (const auto& p : cfg.plants)
        if (p.cohort_fraction < 0.0 || p.cohort_fraction > 1.0)
            throw config_error(errc::infeasible_scenario, "cohort_fraction outside [0, 1]");

    scenario_data world;
    world.config = cfg;
    rng root(cfg.seed);

    // --- sites, uniform in the city disc; index 0.. sorted by center distance
    {
        rng r = root.fork(1);
        const double km_per_deg_lat = 111.32;
        const double km_per_deg_lon = km_per_deg_lat * std::cos(cfg.center_lat * deg2rad);
        std::vector<std::pair<double, lonlat>> pts;
        while (pts.size() < cfg.n_sites) {
            const double ang = r.uniform(0.0, 6.283185307179586);
            const double rad = cfg.city_radius_km * std::sqrt(r.uniform());
            const lonlat g{cfg.center_lon + rad * std::cos(ang) / km_per_deg_lon,
                           cfg.center_lat + rad * std::sin(ang) / km_per_deg_lat};
            pts.emplace_back(rad, g);
        }
        std::sort(pts.begin(), pts.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [rad, g] : pts) world.sites.push_back(g);
    }

    // --- toy device catalogs; models bucketed by price band so wealth maps
    // to a concrete device
    {
        rng r = root.fork(2);
        for (std::uint32_t m = 0; m < cfg.n_phone_models; ++m) {
            synth_model mod;
            char tac[16];
            std::snprintf(tac, sizeof tac, "35%06u", 100000 + m);
            mod.tac = tac;
            mod.vendor = synth_detail::vendor_name(m);
            mod.family = "Fam " + std::to_string(m / 4);
            mod.model = "Model " + std::to_string(1000 + m);
            const double band = static_cast<double>(m % 7);
            mod.price = 100.0 * band + 20.0 + r.uniform(0.0, 60.0);
            // releases stay at or before the June 2016 observation month
            mod.release = {2008 + static_cast<int>(r.below(8)), 1 + static_cast<int>(r.below(12))};
            mod.os = (m % 5 == 0) ? "" : "AcmeOS"; // feature phones lack an os entry
            world.models.push_back(std::move(mod));
        }
        for (std::uint32_t m = 0; m < cfg.n_nonphone_models; ++m) {
            synth_model mod;
            char tac[16];
            std::snprintf(tac, sizeof tac, "35%06u", 900000 + m);
            mod.tac = tac;
            mod.vendor = synth_detail::vendor_name(m);
            mod.family = "Modem " + std::to_string(m);
            mod.model = "NetBox " + std::to_string(m);
            mod.non_phone = true;
            world.models.push_back(std::move(mod));
        }
        // spec-catalog side: brand + "family model"-ish key, occasional case noise
        for (const auto& mod : world.models) {
            if (mod.non_phone) continue;
            spec_catalog_row spec;
            spec.brand = mod.vendor;
            spec.model = mod.family + " " + mod.model;
            if (r.bernoulli(cfg.catalog_noise_fraction))
                for (auto& ch : spec.model) ch = to_lower_ascii(ch);
            spec.price_eur = mod.price;
            spec.release = mod.release;
            spec.os = mod.os;
            world.specs.push_back(std::move(spec));
        }
    }

    // --- subscribers
    {
        rng r = root.fork(3);
        std::vector<std::vector<std::uint32_t>> band_models(7);
        for (std::uint32_t m = 0; m < world.models.size(); ++m)
            if (!world.models[m].non_phone)
                band_models[static_cast<size_t>(world.models[m].price / 100.0)].push_back(m);
        std::vector<std::uint32_t> modem_models;
        for (std::uint32_t m = 0; m < world.models.size(); ++m)
            if (world.models[m].non_phone) modem_models.push_back(m);
        if (cfg.non_phone_fraction > 0 && modem_models.empty())
            throw config_error(errc::infeasible_scenario, "non-phone fraction without modem models");

        world.subscribers.resize(cfg.n_subscribers);
        for (std::uint32_t s = 0; s < cfg.n_subscribers; ++s) {
            auto& sub = world.subscribers[s];
            sub.wealth = r.uniform();
            if (!r.bernoulli(cfg.age_missing_fraction)) {
                const double a = r.normal(cfg.age_mean, cfg.age_sigma);
                sub.age = static_cast<std::int16_t>(std::clamp(a, 18.0, 90.0));
                sub.sex = r.bernoulli(0.5) ? sex_t::male : sex_t::female;
            }
            sub.customer = r.bernoulli(cfg.business_fraction) ? customer_t::business
                                                              : customer_t::consumer;
            sub.payment = r.bernoulli(cfg.prepaid_fraction) ? payment_t::prepaid
                                                            : payment_t::postpaid;
            sub.non_phone = r.bernoulli(cfg.non_phone_fraction);
            if (sub.non_phone) {
                sub.tac_index = modem_models[r.below(modem_models.size())];
                sub.price = 0.0;
                // machine SIMs sit still at one site
                sub.home_site = static_cast<std::uint32_t>(r.below(cfg.n_sites));
                sub.work_site = sub.home_site;
                continue;
            }
            size_t band = static_cast<size_t>(sub.wealth * 7.0);
            if (band >= 7) band = 6;
            while (band_models[band].empty()) band = (band + 1) % 7;
            sub.tac_index = band_models[band][r.below(band_models[band].size())];
            sub.price = world.models[sub.tac_index].price;
            if (r.bernoulli(cfg.multi_device_fraction)) {
                size_t b2 = static_cast<size_t>(r.below(7));
                while (band_models[b2].empty()) b2 = (b2 + 1) % 7;
                sub.second_tac = band_models[b2][r.below(band_models[b2].size())];
            }
            // wealthy subscribers cluster near the center (low site indices)
            const double home_frac = cfg.price_mobility_correlation
                                         ? (1.0 - sub.wealth) * (0.25 + 0.75 * r.uniform())
                                         : r.uniform();
            sub.home_site = static_cast<std::uint32_t>(
                std::min<double>(cfg.n_sites - 1.0, home_frac * cfg.n_sites));
            if (r.bernoulli(cfg.commuter_fraction) && cfg.n_sites > 1) {
                const double reach = cfg.price_mobility_correlation
                                         ? 0.15 + 0.8 * sub.wealth
                                         : 0.5;
                std::uint32_t hop = 1 + static_cast<std::uint32_t>(
                                            r.below(std::max<std::uint64_t>(
                                                1, static_cast<std::uint64_t>(reach * cfg.n_sites))));
                sub.work_site = (sub.home_site + hop) % cfg.n_sites;
            } else {
                sub.work_site = sub.home_site;
            }
        }
    }

    // --- base event stream
    {
        rng r = root.fork(4);
        const local_clock clock = cfg.clock();
        for (std::uint32_t s = 0; s < cfg.n_subscribers; ++s) {
            const auto& sub = world.subscribers[s];
            rng rs = r.fork(s);
            for (std::uint32_t d = 0; d < cfg.days; ++d) {
                const day_number day = cfg.start_day + static_cast<day_number>(d);
                const bool weekend = weekday_of(day) >= 5;
                const double rate = weekend ? cfg.weekend_rate : cfg.workday_rate;
                const std::uint64_t n = rs.poisson(rate);
                for (std::uint64_t e = 0; e < n; ++e) {
                    const double sod = synth_detail::sample_second_of_day(rs, cfg);
                    std::uint32_t site;
                    if (sub.non_phone) {
                        site = sub.home_site;
                    } else if (rs.bernoulli(cfg.noise_site_fraction)) {
                        site = static_cast<std::uint32_t>(rs.below(cfg.n_sites));
                    } else if (!weekend && sod >= 9 * 3600 && sod < 17 * 3600) {
                        site = sub.work_site;
                    } else {
                        site = sub.home_site;
                    }
                    const std::uint32_t cell =
                        site * cfg.cells_per_site +
                        static_cast<std::uint32_t>(rs.below(cfg.cells_per_site));
                    world.events.push_back(
                        {clock.day_start_utc(day) + static_cast<utc_seconds>(sod), s, cell});
                }
            }
        }
    }

    // --- plants
    {
        rng r = root.fork(5);
        for (const auto& plant : cfg.plants) {
            if (plant.kind == "peak") {
                std::vector<bool> eligible(cfg.n_subscribers);
                for (std::uint32_t s = 0; s < cfg.n_subscribers; ++s)
                    eligible[s] = !world.subscribers[s].non_phone;
                rng rp = r.fork(101);
                auto resp = plant_goal_reactions(world.events, plant.windows,
                                                 plant.cohort_fraction, eligible, world, rp);
                world.responders.insert(world.responders.end(), resp.begin(), resp.end());
                world.response_windows = plant.windows;
                nlohmann::json j;
                j["kind"] = "peak";
                j["responders"] = resp.size();
                nlohmann::json ws = nlohmann::json::array();
                for (const auto& w : plant.windows)
                    ws.push_back({{"start", format_iso8601(w.start)}, {"minutes", w.minutes}});
                j["windows"] = std::move(ws);
                world.plant_log.push_back(std::move(j));
            } else if (plant.kind == "suppression") {
                rng rp = r.fork(102);
                const auto& w = plant.windows.at(0);
                std::vector<bool> target(cfg.n_sites, plant.sites.empty());
                for (auto s : plant.sites) target.at(s) = true;
                std::vector<synth_event> kept;
                kept.reserve(world.events.size());
                std::uint64_t dropped = 0;
                for (const auto& e : world.events) {
                    const bool in_window = e.ts >= w.start && e.ts < w.start + 60ll * w.minutes;
                    if (in_window && target[world.site_of_cell(e.cell)] &&
                        !rp.bernoulli(plant.amplitude)) {
                        ++dropped;
                        continue;
                    }
                    kept.push_back(e);
                }
                world.events = std::move(kept);
                world.plant_log.push_back({{"kind", "suppression"},
                                           {"start", format_iso8601(w.start)},
                                           {"minutes", w.minutes},
                                           {"keep_fraction", plant.amplitude},
                                           {"dropped", dropped}});
            } else if (plant.kind == "festival") {
                rng rp = r.fork(103);
                const auto& w = plant.windows.at(0);
                std::uint64_t added = 0;
                for (std::uint32_t s = 0; s < cfg.n_subscribers; ++s) {
                    if (world.subscribers[s].non_phone) continue;
                    if (!rp.bernoulli(plant.cohort_fraction)) continue;
                    const std::uint64_t n = rp.poisson(plant.amplitude);
                    for (std::uint64_t e = 0; e < n; ++e) {
                        const std::uint32_t site =
                            plant.sites.empty()
                                ? static_cast<std::uint32_t>(rp.below(cfg.n_sites))
                                : plant.sites[rp.below(plant.sites.size())];
                        const utc_seconds t =
                            w.start +
                            static_cast<utc_seconds>(rp.below(60ull * w.minutes));
                        const std::uint32_t cell =
                            site * cfg.cells_per_site +
                            static_cast<std::uint32_t>(rp.below(cfg.cells_per_site));
                        world.events.push_back({t, s, cell});
                        ++added;
                    }
                }
                world.plant_log.push_back({{"kind", "festival"},
                                           {"start", format_iso8601(w.start)},
                                           {"minutes", w.minutes},
                                           {"added", added}});
            } else if (plant.kind == "spike") {
                // set the target bin to mu + sigma_units * sigma, where mu and
                // sigma come from the other same-weekday-type days; the
                // detector recomputes the same statistics
                rng rp = r.fork(104);
                const auto& w = plant.windows.at(0);
                const local_clock clock = cfg.clock();
                const day_number target_day = clock.local_day(w.start);
                const unsigned width_s = plant.spike_bin_minutes * 60;
                const unsigned target_bin = clock.local_second_of_day(w.start) / width_s;
                const bool target_weekend = weekday_of(target_day) >= 5;
                std::vector<std::uint64_t> day_counts(cfg.days, 0);
                std::vector<bool> day_used(cfg.days, false);
                for (const auto& e : world.events) {
                    if (world.site_of_cell(e.cell) != plant.spike_site) continue;
                    const day_number d = clock.local_day(e.ts);
                    if (d < cfg.start_day || d >= cfg.start_day + static_cast<day_number>(cfg.days))
                        continue;
                    if (clock.local_second_of_day(e.ts) / width_s != target_bin) continue;
                    day_counts[static_cast<size_t>(d - cfg.start_day)]++;
                }
                double mu = 0.0, m2 = 0.0;
                std::uint32_t k = 0;
                for (std::uint32_t d = 0; d < cfg.days; ++d) {
                    const day_number day = cfg.start_day + static_cast<day_number>(d);
                    if (day == target_day) continue;
                    if ((weekday_of(day) >= 5) != target_weekend) continue;
                    day_used[d] = true;
                    ++k;
                }
                if (k < 2)
                    throw config_error(errc::infeasible_scenario,
                                       "spike plant needs >= 2 reference days");
                for (std::uint32_t d = 0; d < cfg.days; ++d)
                    if (day_used[d]) mu += static_cast<double>(day_counts[d]);
                mu /= k;
                for (std::uint32_t d = 0; d < cfg.days; ++d)
                    if (day_used[d]) {
                        const double diff = static_cast<double>(day_counts[d]) - mu;
                        m2 += diff * diff;
                    }
                const double sigma = std::sqrt(m2 / k);
                const double target_value = mu + plant.amplitude * std::max(sigma, 1.0);
                const auto current =
                    day_counts[static_cast<size_t>(target_day - cfg.start_day)];
                const std::int64_t extra =
                    std::max<std::int64_t>(0, std::llround(target_value) -
                                                  static_cast<std::int64_t>(current));
                for (std::int64_t e = 0; e < extra; ++e) {
                    const std::uint32_t sim =
                        static_cast<std::uint32_t>(rp.below(cfg.n_subscribers));
                    const utc_seconds t =
                        w.start + static_cast<utc_seconds>(rp.below(width_s));
                    const std::uint32_t cell =
                        plant.spike_site * cfg.cells_per_site +
                        static_cast<std::uint32_t>(rp.below(cfg.cells_per_site));
                    world.events.push_back({t, sim, cell});
                }
                world.plant_log.push_back({{"kind", "spike"},
                                           {"site", plant.spike_site},
                                           {"bin_start", format_iso8601(w.start)},
                                           {"bin_minutes", plant.spike_bin_minutes},
                                           {"sigma_units", plant.amplitude},
                                           {"reference_mu", mu},
                                           {"reference_sigma", sigma},
                                           {"injected", extra}});
            } else {
                throw config_error(errc::bad_config, "unknown plant kind: " + plant.kind);
            }
        }
    }

    std::sort(world.events.begin(), world.events.end(), [](const synth_event& a, const synth_event& b) {
        if (a.ts != b.ts) return a.ts < b.ts;
        if (a.sim != b.sim) return a.sim < b.sim;
        return a.cell < b.cell;
    });
    std::sort(world.responders.begin(), world.responders.end());
    world.responders.erase(std::unique(world.responders.begin(), world.responders.end()),
                           world.responders.end());
    return world;
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

inline window_spec window_from_json(const nlohmann::json& j) {
    window_spec w;
    const auto t = parse_iso8601(j.at("start").get<std::string>());
    if (!t) throw config_error(errc::bad_config, "bad window start: " + j.at("start").dump());
    w.start = *t;
    w.minutes = j.value("minutes", 5u);
    return w;
}

inline scenario_config scenario_from_json(const nlohmann::json& j) {
    scenario_config cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_sites = j.value("n_sites", cfg.n_sites);
    cfg.cells_per_site = j.value("cells_per_site", cfg.cells_per_site);
    cfg.n_subscribers = j.value("n_subscribers", cfg.n_subscribers);
    if (j.contains("start_date")) {
        const auto d = parse_date(j.at("start_date").get<std::string>());
        if (!d) throw config_error(errc::bad_config, "bad start_date");
        cfg.start_day = *d;
    }
    cfg.days = j.value("days", cfg.days);
    cfg.center_lon = j.value("center_lon", cfg.center_lon);
    cfg.center_lat = j.value("center_lat", cfg.center_lat);
    cfg.city_radius_km = j.value("city_radius_km", cfg.city_radius_km);
    cfg.utc_offset_minutes = j.value("utc_offset_minutes", cfg.utc_offset_minutes);
    if (j.contains("rates")) {
        cfg.workday_rate = j["rates"].value("workday", cfg.workday_rate);
        cfg.weekend_rate = j["rates"].value("weekend", cfg.weekend_rate);
    }
    if (j.contains("diurnal")) {
        const auto& d = j["diurnal"];
        cfg.morning_hour = d.value("morning_hour", cfg.morning_hour);
        cfg.morning_sigma_h = d.value("morning_sigma_h", cfg.morning_sigma_h);
        cfg.morning_weight = d.value("morning_weight", cfg.morning_weight);
        cfg.evening_hour = d.value("evening_hour", cfg.evening_hour);
        cfg.evening_sigma_h = d.value("evening_sigma_h", cfg.evening_sigma_h);
        cfg.evening_weight = d.value("evening_weight", cfg.evening_weight);
    }
    if (j.contains("subscribers")) {
        const auto& s = j["subscribers"];
        cfg.age_missing_fraction = s.value("age_missing_fraction", cfg.age_missing_fraction);
        cfg.age_mean = s.value("age_mean", cfg.age_mean);
        cfg.age_sigma = s.value("age_sigma", cfg.age_sigma);
        cfg.prepaid_fraction = s.value("prepaid_fraction", cfg.prepaid_fraction);
        cfg.business_fraction = s.value("business_fraction", cfg.business_fraction);
        cfg.commuter_fraction = s.value("commuter_fraction", cfg.commuter_fraction);
        cfg.multi_device_fraction = s.value("multi_device_fraction", cfg.multi_device_fraction);
    }
    if (j.contains("devices")) {
        const auto& d = j["devices"];
        cfg.n_phone_models = d.value("n_phone_models", cfg.n_phone_models);
        cfg.n_nonphone_models = d.value("n_nonphone_models", cfg.n_nonphone_models);
        cfg.non_phone_fraction = d.value("non_phone_fraction", cfg.non_phone_fraction);
        cfg.catalog_noise_fraction = d.value("catalog_noise_fraction", cfg.catalog_noise_fraction);
    }
    if (j.contains("mobility")) {
        const auto& m = j["mobility"];
        cfg.price_mobility_correlation =
            m.value("price_mobility_correlation", cfg.price_mobility_correlation);
        cfg.noise_site_fraction = m.value("noise_site_fraction", cfg.noise_site_fraction);
    }
    for (const auto& pj : j.value("plants", nlohmann::json::array())) {
        scenario_plant p;
        p.kind = pj.at("kind").get<std::string>();
        if (p.kind != "peak" && p.kind != "suppression" && p.kind != "festival" &&
            p.kind != "spike")
            throw config_error(errc::bad_config, "unknown plant kind: " + p.kind);
        if (pj.contains("windows"))
            for (const auto& wj : pj["windows"]) p.windows.push_back(window_from_json(wj));
        if (pj.contains("window")) p.windows.push_back(window_from_json(pj["window"]));
        for (const auto& s : pj.value("sites", nlohmann::json::array()))
            p.sites.push_back(s.get<std::uint32_t>());
        p.amplitude = pj.value("amplitude", p.amplitude);
        p.cohort_fraction = pj.value("cohort_fraction", p.cohort_fraction);
        p.spike_site = pj.value("site", p.spike_site);
        p.spike_bin_minutes = pj.value("bin_minutes", p.spike_bin_minutes);
        if (p.kind == "spike" && pj.contains("sigma_units"))
            p.amplitude = pj["sigma_units"].get<double>();
        cfg.plants.push_back(std::move(p));
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

struct scenario_files {
    std::filesystem::path cdr;
    std::filesystem::path ground_truth;
    std::filesystem::path tac_catalog;
    std::filesystem::path spec_catalog;
};

inline scenario_files write_scenario_files(const scenario_data& world,
                                           const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    scenario_files files{dir / "synthetic_cdr.csv", dir / "ground_truth.json",
                         dir / "tac_catalog.csv", dir / "spec_catalog.csv"};

    {
        csv_writer w(files.cdr);
        w.raw("sim_id,timestamp,cell_id,site_lon,site_lat,age,sex,customer_type,payment_type,"
              "tac\n");
        std::string ts;
        for (const auto& e : world.events) {
            const auto& sub = world.subscribers[e.sim];
            const auto& g = world.sites[world.site_of_cell(e.cell)];
            const bool second = sub.second_tac && (e.ts % 5 == 4); // minority device
            const auto& model = world.models[second ? *sub.second_tac : sub.tac_index];
            w.field(world.sim_name(e.sim));
            ts.clear();
            append_iso8601(ts, e.ts);
            w.field(ts);
            w.field(world.cell_name(e.cell));
            w.field_double(g.lon);
            w.field_double(g.lat);
            if (sub.age >= 0)
                w.field_int(sub.age);
            else
                w.field("");
            w.field(sex_name(sub.sex));
            w.field(customer_name(sub.customer));
            w.field(payment_name(sub.payment));
            w.field(model.tac);
            w.end_row();
        }
        w.commit();
    }

    {
        csv_writer w(files.tac_catalog);
        w.raw("tac,vendor,family,model,non_phone_hint\n");
        for (const auto& m : world.models) {
            w.field(m.tac);
            w.field(m.vendor);
            w.field(m.family);
            w.field(m.model);
            w.field(m.non_phone ? "1" : "");
            w.end_row();
        }
        w.commit();
    }

    {
        csv_writer w(files.spec_catalog);
        w.raw("brand,model,price_eur,release_year,release_month,os\n");
        for (const auto& s : world.specs) {
            w.field(s.brand);
            w.field(s.model);
            if (s.price_eur)
                w.field_double(*s.price_eur);
            else
                w.field("");
            if (s.release) {
                w.field_int(s.release->year);
                w.field_int(s.release->month);
            } else {
                w.field("");
                w.field("");
            }
            w.field(s.os);
            w.end_row();
        }
        w.commit();
    }

    {
        nlohmann::json truth;
        truth["seed"] = world.config.seed;
        truth["n_events"] = world.events.size();
        nlohmann::json resp = nlohmann::json::array();
        for (const auto sim : world.responders) resp.push_back(world.sim_name(sim));
        truth["responders"] = std::move(resp);
        nlohmann::json windows = nlohmann::json::array();
        for (const auto& w : world.response_windows)
            windows.push_back({{"start", format_iso8601(w.start)}, {"minutes", w.minutes}});
        truth["response_windows"] = std::move(windows);
        truth["plants"] = world.plant_log;
        nlohmann::json sims = nlohmann::json::object();
        for (std::uint32_t s = 0; s < world.subscribers.size(); ++s) {
            const auto& sub = world.subscribers[s];
            nlohmann::json js;
            js["home_site"] = sub.home_site;
            js["work_site"] = sub.work_site;
            js["non_phone"] = sub.non_phone;
            js["price"] = sub.price;
            js["tac"] = world.models[sub.tac_index].tac;
            if (sub.age >= 0) js["age"] = sub.age;
            js["payment"] = payment_name(sub.payment);
            sims[world.sim_name(s)] = std::move(js);
        }
        truth["sims"] = std::move(sims);
        nlohmann::json sites = nlohmann::json::array();
        for (const auto& g : world.sites) sites.push_back({g.lon, g.lat});
        truth["sites"] = std::move(sites);
        write_file_atomic(files.ground_truth, truth.dump(2) + "\n");
    }

    return files;
}

} // namespace cdrflow
