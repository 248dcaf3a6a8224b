// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrflow/cohorts.hpp"
#include "cdrflow/csv.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/levels.hpp"
#include "cdrflow/mobility.hpp"
#include "cdrflow/ses_pca.hpp"
#include "cdrflow/time.hpp"

namespace cdrflow {

struct event_study_config {
    day_number target_day = days_from_civil(2016, 6, 22);
    std::optional<day_type> reference_type; // default: the target day's own type
    std::string scheme = "downtown";
    unsigned bin_minutes = 5;
    double min_z = 2.0;
    unsigned max_gap_bins = 1;
    std::optional<utc_seconds> instant; // site classification instant
    // optional homecoming-style attendance estimate
    std::optional<std::string> attendance_site;
    std::optional<utc_seconds> attendance_start;
    std::optional<utc_seconds> attendance_end;
};

struct run_config {
    std::filesystem::path config_dir; // directory of the config file, for relative paths

    std::filesystem::path input;      // wide CDR file or directory
    std::filesystem::path output_dir = "out";
    char delimiter = ',';
    schema_map schema;
    std::optional<observation_period> period;
    local_clock clock;
    calendar cal;

    std::filesystem::path tac_catalog_path;
    std::filesystem::path spec_catalog_path;
    std::filesystem::path tac_blocklist_path; // optional
    int fuse_cutoff = 90;
    double price_depreciation_per_year = 0.0; // age-weighted price hook, off by default
    std::map<std::string, std::string> vendor_aliases = {{"rim", "blackberry"},
                                                         {"microsoft", "nokia"}};

    filter_policy filter;
    bool exclude_unknown_devices = false;

    std::vector<response_window> windows;
    unsigned k_required = 2;

    std::map<std::string, level_thresholds> threshold_schemes = {
        {"downtown", level_thresholds::downtown()},
        {"heroes", level_thresholds::heroes_square()}};

    event_study_config event_study;

    entropy_norm mobility_entropy_norm = entropy_norm::activities;
    bin_config bands;
    unsigned pca_components = 2;

    std::filesystem::path boundary_path; // optional GeoJSON
    bool allow_bisector = false;
    double market_share = 0.253;

    std::filesystem::path scenario_path; // synth input
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;

    std::filesystem::path resolve(const std::filesystem::path& p) const {
        if (p.empty() || p.is_absolute()) return p;
        return config_dir / p;
    }
};

inline calendar calendar_from_json(const nlohmann::json& j) {
    calendar cal;
    cal.saturday_sunday_weekend = j.value("saturday_sunday_weekend", true);
    for (const auto& h : j.value("holidays", nlohmann::json::array())) {
        const auto d = parse_date(h.get<std::string>());
        if (!d) throw config_error(errc::bad_config, "calendar: bad holiday date " + h.dump());
        cal.holidays.insert(*d);
    }
    for (const auto& h : j.value("extra_workdays", nlohmann::json::array())) {
        const auto d = parse_date(h.get<std::string>());
        if (!d) throw config_error(errc::bad_config, "calendar: bad workday date " + h.dump());
        cal.extra_workdays.insert(*d);
    }
    return cal;
}

inline utc_seconds require_time(const nlohmann::json& j, const std::string& where) {
    const auto t = parse_iso8601_or_date(j.get<std::string>());
    if (!t) throw config_error(errc::bad_config, where + ": bad timestamp " + j.dump());
    return *t;
}

inline run_config run_config_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& config_dir) {
    run_config cfg;
    cfg.config_dir = config_dir;
    cfg.clock.offset_minutes = j.value("utc_offset_minutes", cfg.clock.offset_minutes);
    if (j.contains("input")) cfg.input = j["input"].get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = cfg.resolve(j["output_dir"].get<std::string>());
    if (j.contains("delimiter")) {
        const auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw config_error(errc::bad_config, "delimiter must be one character");
        cfg.delimiter = d[0];
    }
    if (j.contains("schema")) {
        const auto& s = j["schema"];
        auto get = [&](const char* k, std::string& dst) {
            if (s.contains(k)) dst = s[k].get<std::string>();
        };
        get("sim_id", cfg.schema.sim_id);
        get("timestamp", cfg.schema.timestamp);
        get("cell_id", cfg.schema.cell_id);
        get("site_lon", cfg.schema.site_lon);
        get("site_lat", cfg.schema.site_lat);
        get("age", cfg.schema.age);
        get("sex", cfg.schema.sex);
        get("customer_type", cfg.schema.customer_type);
        get("payment_type", cfg.schema.payment_type);
        get("tac", cfg.schema.tac);
    }
    if (j.contains("period")) {
        // bare dates mean local midnight under the configured offset; full
        // timestamps are UTC instants
        auto bound = [&](const nlohmann::json& v, const char* where) {
            const auto s = v.get<std::string>();
            if (s.size() == 10) {
                const auto d = parse_date(s);
                if (!d) throw config_error(errc::bad_config, std::string(where) + ": bad date");
                return cfg.clock.day_start_utc(*d);
            }
            return require_time(v, where);
        };
        observation_period p;
        p.begin = bound(j["period"].at("start"), "period.start");
        p.end = bound(j["period"].at("end"), "period.end");
        if (p.end <= p.begin) throw config_error(errc::bad_config, "period.end before start");
        cfg.period = p;
    }
    if (j.contains("calendar")) {
        const auto path = cfg.resolve(j["calendar"].get<std::string>());
        if (!std::filesystem::exists(path))
            throw config_error(errc::bad_config, "calendar file missing: " + path.string());
        cfg.cal = calendar_from_json(nlohmann::json::parse(read_file(path)));
    }
    if (j.contains("tac_catalog")) cfg.tac_catalog_path = j["tac_catalog"].get<std::string>();
    if (j.contains("spec_catalog")) cfg.spec_catalog_path = j["spec_catalog"].get<std::string>();
    if (j.contains("tac_blocklist")) cfg.tac_blocklist_path = j["tac_blocklist"].get<std::string>();
    cfg.fuse_cutoff = j.value("fuse_cutoff", cfg.fuse_cutoff);
    if (cfg.fuse_cutoff < 0 || cfg.fuse_cutoff > 100)
        throw config_error(errc::bad_config, "fuse_cutoff must be 0..100");
    cfg.price_depreciation_per_year =
        j.value("price_depreciation_per_year", cfg.price_depreciation_per_year);
    if (cfg.price_depreciation_per_year < 0.0 || cfg.price_depreciation_per_year >= 1.0)
        throw config_error(errc::bad_config, "price_depreciation_per_year must be in [0, 1)");
    if (j.contains("vendor_aliases")) {
        cfg.vendor_aliases.clear();
        for (const auto& [k, v] : j["vendor_aliases"].items())
            cfg.vendor_aliases.emplace(fold_name(k), fold_name(v.get<std::string>()));
    }
    if (j.contains("filter")) {
        const auto& f = j["filter"];
        cfg.filter.min_active_days = f.value("min_active_days", cfg.filter.min_active_days);
        cfg.filter.min_workday_mean = f.value("min_workday_mean", cfg.filter.min_workday_mean);
        cfg.filter.min_weekend_mean = f.value("min_weekend_mean", cfg.filter.min_weekend_mean);
        cfg.filter.max_daily_activity =
            f.value("max_daily_activity", cfg.filter.max_daily_activity);
        cfg.filter.dominant_device_share =
            f.value("dominant_device_share", cfg.filter.dominant_device_share);
        if (cfg.filter.dominant_device_share <= 0.0 || cfg.filter.dominant_device_share > 1.0)
            throw config_error(errc::bad_config, "dominant_device_share must be in (0, 1]");
    }
    cfg.exclude_unknown_devices = j.value("exclude_unknown_devices", cfg.exclude_unknown_devices);
    for (const auto& wj : j.value("windows", nlohmann::json::array())) {
        response_window w;
        w.start = require_time(wj.at("start"), "windows.start");
        w.minutes = wj.value("minutes", 5u);
        cfg.windows.push_back(w);
    }
    cfg.k_required = j.value("k_required", cfg.k_required);
    if (j.contains("threshold_schemes")) {
        for (const auto& [name, tj] : j["threshold_schemes"].items()) {
            level_thresholds t;
            for (const auto& b : tj.at("breaks")) t.breaks.push_back(b.get<double>());
            if (tj.contains("labels"))
                for (const auto& l : tj["labels"]) t.labels.push_back(l.get<std::string>());
            else if (t.breaks.size() == 3)
                t.labels = {"low", "average", "high", "very_high"};
            t.validate();
            cfg.threshold_schemes[name] = std::move(t);
        }
    }
    if (j.contains("event_study")) {
        const auto& e = j["event_study"];
        auto& es = cfg.event_study;
        if (e.contains("target_day")) {
            const auto d = parse_date(e["target_day"].get<std::string>());
            if (!d) throw config_error(errc::bad_config, "event_study.target_day invalid");
            es.target_day = *d;
        }
        if (e.contains("reference_day_type")) {
            const auto t = e["reference_day_type"].get<std::string>();
            if (t == "workday")
                es.reference_type = day_type::workday;
            else if (t == "weekend")
                es.reference_type = day_type::weekend;
            else
                throw config_error(errc::bad_config, "event_study.reference_day_type invalid");
        }
        es.scheme = e.value("scheme", es.scheme);
        es.bin_minutes = e.value("bin_minutes", es.bin_minutes);
        es.min_z = e.value("min_z", es.min_z);
        es.max_gap_bins = e.value("max_gap_bins", es.max_gap_bins);
        if (e.contains("instant")) es.instant = require_time(e["instant"], "event_study.instant");
        if (e.contains("attendance")) {
            const auto& a = e["attendance"];
            es.attendance_site = a.at("site").get<std::string>();
            es.attendance_start = require_time(a.at("start"), "attendance.start");
            es.attendance_end = require_time(a.at("end"), "attendance.end");
        }
    }
    if (j.contains("entropy_norm")) {
        const auto n = j["entropy_norm"].get<std::string>();
        if (n == "activities")
            cfg.mobility_entropy_norm = entropy_norm::activities;
        else if (n == "locations")
            cfg.mobility_entropy_norm = entropy_norm::locations;
        else
            throw config_error(errc::bad_config, "entropy_norm must be activities|locations");
    }
    if (j.contains("bands")) {
        const auto& b = j["bands"];
        cfg.bands.age_min = b.value("age_min", cfg.bands.age_min);
        cfg.bands.age_max = b.value("age_max", cfg.bands.age_max);
        cfg.bands.age_step = b.value("age_step", cfg.bands.age_step);
        cfg.bands.price_min = b.value("price_min", cfg.bands.price_min);
        cfg.bands.price_max = b.value("price_max", cfg.bands.price_max);
        cfg.bands.price_step = b.value("price_step", cfg.bands.price_step);
        cfg.bands.gyr_min = b.value("gyr_min", cfg.bands.gyr_min);
        cfg.bands.gyr_max = b.value("gyr_max", cfg.bands.gyr_max);
        cfg.bands.gyr_step = b.value("gyr_step", cfg.bands.gyr_step);
        cfg.bands.ent_min = b.value("ent_min", cfg.bands.ent_min);
        cfg.bands.ent_max = b.value("ent_max", cfg.bands.ent_max);
        cfg.bands.ent_bins = b.value("ent_bins", cfg.bands.ent_bins);
        cfg.bands.normalize_per_metric_block =
            b.value("normalize_per_metric_block", cfg.bands.normalize_per_metric_block);
    }
    cfg.pca_components = j.value("pca_components", cfg.pca_components);
    if (j.contains("boundary")) cfg.boundary_path = j["boundary"].get<std::string>();
    cfg.allow_bisector = j.value("allow_bisector", cfg.allow_bisector);
    cfg.market_share = j.value("market_share", cfg.market_share);
    if (j.contains("scenario")) cfg.scenario_path = j["scenario"].get<std::string>();
    return cfg;
}

inline run_config load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw config_error(errc::bad_config, "config file missing: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw config_error(errc::bad_config, "config parse error: " + std::string(e.what()));
    }
    try {
        return run_config_from_json(j, path.parent_path());
    } catch (const nlohmann::json::exception& e) {
        throw config_error(errc::bad_config, "config structure error: " + std::string(e.what()));
    }
}

} // namespace cdrflow
