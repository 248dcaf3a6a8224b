// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrflow/cohorts.hpp"
#include "cdrflow/config.hpp"
#include "cdrflow/device_catalog.hpp"
#include "cdrflow/event_detection.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/mobility.hpp"
#include "cdrflow/ses_pca.hpp"
#include "cdrflow/spatial.hpp"
#include "cdrflow/stats.hpp"
#include "cdrflow/synthgen.hpp"
#include "cdrflow/tables_io.hpp"

namespace cdrflow {

enum class log_format : std::uint8_t { text, json };

class stage_logger {
  public:
    explicit stage_logger(log_format fmt = log_format::text) : fmt_(fmt) {}

    void event(const std::string& stage, const nlohmann::json& fields) const {
        if (fmt_ == log_format::json) {
            nlohmann::json j = fields;
            j["stage"] = stage;
            std::fprintf(stderr, "%s\n", j.dump().c_str());
        } else {
            std::string line = "[" + stage + "]";
            for (const auto& [k, v] : fields.items()) {
                line += " " + k + "=";
                line += v.is_string() ? v.get<std::string>() : v.dump();
            }
            std::fprintf(stderr, "%s\n", line.c_str());
        }
    }

  private:
    log_format fmt_;
};

class stage_timer {
  public:
    explicit stage_timer() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// Run manifest: inputs and outputs with content fingerprints. Contains no
// timing or thread information, so reruns hash identically.
class manifest_builder {
  public:
    void add_input(const std::filesystem::path& p) { inputs_.push_back(entry(p)); }
    void add_output(const std::filesystem::path& p) { outputs_.push_back(entry(p)); }
    void set_param(const std::string& key, const nlohmann::json& v) { params_[key] = v; }

    void write(const std::filesystem::path& path, const std::string& command) const {
        nlohmann::json j;
        j["tool"] = "cdrflow";
        j["version"] = "0.1.0";
        j["command"] = command;
        j["parameters"] = params_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        write_file_atomic(path, j.dump(2) + "\n");
    }

  private:
    static nlohmann::json entry(const std::filesystem::path& p) {
        fnv1a h;
        const std::string content = read_file(p);
        h.update(content.data(), content.size());
        return {{"file", p.filename().string()}, {"fnv64", h.hex()}, {"bytes", content.size()}};
    }

    nlohmann::json inputs_ = nlohmann::json::array();
    nlohmann::json outputs_ = nlohmann::json::array();
    nlohmann::json params_ = nlohmann::json::object();
};

// Artifact names inside the output directory.
struct artifact_paths {
    std::filesystem::path dir;

    std::filesystem::path events() const { return dir / "events.csv"; }
    std::filesystem::path subscribers() const { return dir / "subscribers.csv"; }
    std::filesystem::path devices() const { return dir / "devices.csv"; }
    std::filesystem::path cells() const { return dir / "cells.csv"; }
    std::filesystem::path rejects() const { return dir / "rejects.csv"; }
    std::filesystem::path ingest_stats() const { return dir / "ingest_stats.json"; }
    std::filesystem::path enrichment() const { return dir / "tac_enrichment.csv"; }
    std::filesystem::path sites() const { return dir / "sites.csv"; }
    std::filesystem::path coverage() const { return dir / "coverage.geojson"; }
    std::filesystem::path site_price() const { return dir / "site_price.geojson"; }
    std::filesystem::path mobility() const { return dir / "mobility.csv"; }
    std::filesystem::path site_z() const { return dir / "site_z.csv"; }
    std::filesystem::path event_study() const { return dir / "event_study.json"; }
    std::filesystem::path site_activity() const { return dir / "site_activity.geojson"; }
    std::filesystem::path cohort(const std::string& name) const {
        return dir / ("cohort_" + name + ".csv");
    }
    std::filesystem::path comparison(const std::string& attr) const {
        return dir / ("compare_" + attr + ".csv");
    }
    std::filesystem::path bin_table() const { return dir / "bin_table.csv"; }
    std::filesystem::path pca_projection() const { return dir / "pca_projection.csv"; }
    std::filesystem::path pca_pareto() const { return dir / "pca_pareto.csv"; }
    std::filesystem::path manifest() const { return dir / "manifest.json"; }
};

// The pipeline holds lazily materialized state so `study` runs stages in one
// process while individual subcommands rehydrate from earlier artifacts.
class pipeline {
  public:
    pipeline(run_config cfg, stage_logger log) : cfg_(std::move(cfg)), log_(log) {
        paths_.dir = cfg_.output_dir;
    }

    const artifact_paths& paths() const { return paths_; }
    manifest_builder& manifest() { return manifest_; }
    const run_config& config() const { return cfg_; }

    // ---- synth ----------------------------------------------------------
    void run_synth() {
        stage_timer t;
        scenario_config scfg;
        if (!cfg_.scenario_path.empty()) {
            const auto path = cfg_.resolve(cfg_.scenario_path);
            if (!std::filesystem::exists(path))
                throw config_error(errc::bad_config, "scenario file missing: " + path.string());
            manifest_.add_input(path);
            scfg = scenario_from_json(nlohmann::json::parse(read_file(path)));
        }
        if (cfg_.has_seed_override) scfg.seed = cfg_.seed_override;
        const auto world = generate_scenario(scfg);
        std::filesystem::create_directories(paths_.dir);
        const auto files = write_scenario_files(world, paths_.dir);
        for (const auto& p : {files.cdr, files.ground_truth, files.tac_catalog, files.spec_catalog})
            manifest_.add_output(p);
        log_.event("synth", {{"events", world.events.size()},
                             {"subscribers", world.subscribers.size()},
                             {"sites", world.sites.size()},
                             {"responders", world.responders.size()},
                             {"duration_ms", t.ms()}});
    }

    // ---- ingest ---------------------------------------------------------
    void run_ingest() {
        stage_timer t;
        const auto input = cfg_.resolve(cfg_.input);
        const auto files = expand_inputs(input);
        for (const auto& f : files) manifest_.add_input(f);
        ingest_options opts;
        opts.delimiter = cfg_.delimiter;
        opts.schema = cfg_.schema;
        opts.period = cfg_.period;
        tables_ = ingest_files(files, opts);
        std::filesystem::create_directories(paths_.dir);
        write_events_csv(*tables_, paths_.events());
        write_subscribers_csv(*tables_, paths_.subscribers());
        write_devices_csv(*tables_, paths_.devices());
        write_cells_csv(*tables_, paths_.cells());
        write_rejects_csv(*tables_, paths_.rejects());
        write_ingest_stats();
        for (const auto& p : {paths_.events(), paths_.subscribers(), paths_.devices(),
                              paths_.cells(), paths_.rejects(), paths_.ingest_stats()})
            manifest_.add_output(p);
        log_.event("ingest", {{"lines", tables_->lines_in},
                              {"accepted", tables_->accepted},
                              {"rejected", tables_->rejects.size()},
                              {"sims", tables_->sims.size()},
                              {"cells", tables_->cells.size()},
                              {"conflicts", tables_->attribute_conflicts},
                              {"duration_ms", t.ms()}});
    }

    // ---- enrich ---------------------------------------------------------
    void run_enrich() {
        stage_timer t;
        const auto tac_path = require_file(cfg_.tac_catalog_path, "tac_catalog");
        const auto spec_path = require_file(cfg_.spec_catalog_path, "spec_catalog");
        manifest_.add_input(tac_path);
        manifest_.add_input(spec_path);
        fuse_options opts;
        opts.cutoff = cfg_.fuse_cutoff;
        opts.depreciation_rate_per_year = cfg_.price_depreciation_per_year;
        opts.vendors = vendor_normalizer(cfg_.vendor_aliases);
        if (!cfg_.tac_blocklist_path.empty()) {
            const auto bl = require_file(cfg_.tac_blocklist_path, "tac_blocklist");
            manifest_.add_input(bl);
            opts.tac_blocklist = load_tac_blocklist(bl);
        }
        const auto tac_rows = load_tac_catalog(tac_path);
        const auto spec_rows = load_spec_catalog(spec_path);
        enrichment_ = fuse_catalogs(tac_rows, spec_rows, opts);
        std::filesystem::create_directories(paths_.dir);
        write_enrichment_csv(*enrichment_, paths_.enrichment());
        manifest_.add_output(paths_.enrichment());
        std::uint64_t matched = 0, non_phone = 0;
        for (const auto& e : *enrichment_) {
            matched += e.matched;
            non_phone += e.non_phone;
        }
        log_.event("enrich", {{"tacs", enrichment_->size()},
                              {"matched", matched},
                              {"non_phone", non_phone},
                              {"cutoff", cfg_.fuse_cutoff},
                              {"duration_ms", t.ms()}});
    }

    // ---- spatial --------------------------------------------------------
    void run_spatial() {
        stage_timer t;
        ensure_tables();
        ensure_coverage();
        std::filesystem::create_directories(paths_.dir);
        write_sites_csv(smap_.value(), tables_->cells, paths_.sites());

        nlohmann::json features = nlohmann::json::array();
        for (size_t i = 0; i < smap_->sites.size(); ++i) {
            if (cov_->cells[i].empty()) continue;
            features.push_back(
                {{"type", "Feature"},
                 {"geometry", ring_to_geojson(cov_->cells[i], cov_->projection)},
                 {"properties",
                  {{"site_id", smap_->sites[i].site_id},
                   {"lon", smap_->sites[i].lon},
                   {"lat", smap_->sites[i].lat},
                   {"n_cells", smap_->sites[i].member_cells.size()}}}});
        }
        write_file_atomic(paths_.coverage(),
                          nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}
                                  .dump(2) +
                              "\n");

        // record-weighted mean phone price per site (Fig. 8 style map)
        ensure_profiles();
        const auto price_stats = site_mean_phone_price(
            tables_->events, smap_->site_of_cell, smap_->sites.size(),
            [&](std::uint32_t sim) { return price_of(sim); });
        std::vector<choropleth_value> values;
        for (size_t i = 0; i < price_stats.size(); ++i)
            if (const auto m = price_stats[i].mean())
                values.push_back({smap_->sites[i].site_id, *m});
        const auto scheme = threshold_scheme("price", level_thresholds{
                                                          {100.0, 200.0, 400.0},
                                                          {"budget", "low", "mid", "high"}});
        const auto doc = export_choropleth(smap_->sites, *cov_, values, scheme);
        write_file_atomic(paths_.site_price(), doc.dump(2) + "\n");

        manifest_.add_output(paths_.sites());
        manifest_.add_output(paths_.coverage());
        manifest_.add_output(paths_.site_price());
        log_.event("spatial", {{"cells", tables_->cells.size()},
                               {"sites", smap_->sites.size()},
                               {"priced_sites", values.size()},
                               {"duration_ms", t.ms()}});
    }

    // ---- mobility -------------------------------------------------------
    void run_mobility() {
        stage_timer t;
        ensure_mobility();
        std::filesystem::create_directories(paths_.dir);
        write_mobility_csv(*mobility_, tables_->sims, paths_.mobility());
        manifest_.add_output(paths_.mobility());
        log_.event("mobility", {{"records", mobility_->size()},
                                {"sims", phones_->members.size()},
                                {"duration_ms", t.ms()}});
    }

    // ---- filter (cohorts) ------------------------------------------------
    void run_filter() {
        stage_timer t;
        ensure_tables();
        ensure_profiles();
        std::filesystem::create_directories(paths_.dir);

        write_cohort_csv(*phones_, tables_->sims, paths_.cohort("phones"));
        manifest_.add_output(paths_.cohort("phones"));

        const auto activity = summarize_activity(tables_->events, tables_->sims.size(), cfg_.clock);
        cohort active = apply_activity_filter(tables_->events, tables_->sims.size(), cfg_.filter,
                                              cfg_.cal, cfg_.clock);
        write_cohort_csv(active, tables_->sims, paths_.cohort("active"));
        manifest_.add_output(paths_.cohort("active"));

        cohort transients;
        transients.name = "transients";
        transients.provenance = "active >= 2 days within a 7-day span";
        transients.members = flag_transients(activity);
        write_cohort_csv(transients, tables_->sims, paths_.cohort("transients"));
        manifest_.add_output(paths_.cohort("transients"));

        nlohmann::json counts = {{"phones", phones_->members.size()},
                                 {"non_phone", non_phone_count_},
                                 {"unknown_device", unknown_device_count_},
                                 {"active", active.members.size()},
                                 {"transients", transients.members.size()}};

        if (!cfg_.windows.empty()) {
            response_windows rw{cfg_.windows, cfg_.k_required};
            fans_ = select_peak_responders(tables_->events, rw, phones_->mask(tables_->sims.size()));
            write_cohort_csv(*fans_, tables_->sims, paths_.cohort(fans_->name));
            manifest_.add_output(paths_.cohort(fans_->name));
            counts["fans"] = fans_->members.size();
            counts["fans_scaled_population"] =
                scale_by_market_share(static_cast<std::int64_t>(fans_->members.size()),
                                      cfg_.market_share);
            write_comparisons();
        }
        counts["duration_ms"] = t.ms();
        log_.event("filter", counts);
    }

    // ---- events (z-scores / peaks) ---------------------------------------
    void run_events() {
        stage_timer t;
        ensure_tables();
        ensure_sites();
        const auto& es = cfg_.event_study;
        const auto scheme = threshold_scheme(es.scheme, level_thresholds::downtown());

        const auto [first_day, n_days] = series_span();
        series_store store = bin_events(tables_->events, smap_->site_of_cell,
                                        static_cast<std::uint32_t>(smap_->sites.size()),
                                        es.bin_minutes, cfg_.clock, first_day, n_days);
        if (es.target_day < first_day ||
            es.target_day >= first_day + static_cast<day_number>(n_days))
            throw data_error(errc::insufficient_reference, "target day outside observed span");
        const auto target_idx = static_cast<std::uint32_t>(es.target_day - first_day);
        const day_type ref_type =
            es.reference_type ? *es.reference_type : cfg_.cal.type_of(es.target_day);

        std::filesystem::create_directories(paths_.dir);
        nlohmann::json summary;
        summary["target_day"] = format_date(es.target_day);
        summary["reference_day_type"] = day_type_name(ref_type);
        summary["scheme"] = es.scheme;
        summary["bin_minutes"] = es.bin_minutes;

        // per-site z for the target day
        {
            csv_writer w(paths_.site_z());
            w.raw("site_id,bin_start,count,mu,sigma,z,label\n");
            std::string ts;
            const utc_seconds day_start = cfg_.clock.day_start_utc(es.target_day);
            for (std::uint32_t s = 0; s < smap_->sites.size(); ++s) {
                const auto prof = build_reference_profile(store, s, ref_type, es.target_day,
                                                          cfg_.cal);
                const auto target = store.day_series(s, target_idx);
                const auto zs = zscore(target, prof);
                for (size_t b = 0; b < zs.z.size(); ++b) {
                    w.field(smap_->sites[s].site_id);
                    ts.clear();
                    append_iso8601(ts, day_start + static_cast<utc_seconds>(
                                                       b * es.bin_minutes * 60));
                    w.field(ts);
                    w.field_int(target[b]);
                    w.field_double(prof.mu[b]);
                    w.field_double(prof.sigma[b]);
                    w.field_double(zs.z[b]);
                    w.field(scheme.classify(zs.z[b]));
                    w.end_row();
                }
            }
            w.commit();
            manifest_.add_output(paths_.site_z());
        }

        // aggregate whole-area series and its peaks
        {
            series_store agg(1, es.bin_minutes, first_day, n_days);
            for (const auto& e : tables_->events) {
                const day_number d = cfg_.clock.local_day(e.ts);
                if (d < first_day || d >= first_day + static_cast<day_number>(n_days)) continue;
                agg.add(0, static_cast<std::uint32_t>(d - first_day),
                        cfg_.clock.local_second_of_day(e.ts) / (es.bin_minutes * 60));
            }
            const auto prof = build_reference_profile(agg, 0, ref_type, es.target_day, cfg_.cal);
            const auto zs = zscore(agg.day_series(0, target_idx), prof);
            const auto peaks = detect_peaks(zs, es.min_z, es.max_gap_bins);
            nlohmann::json jpeaks = nlohmann::json::array();
            const utc_seconds day_start = cfg_.clock.day_start_utc(es.target_day);
            for (const auto& p : peaks) {
                jpeaks.push_back(
                    {{"start", format_iso8601(day_start + static_cast<utc_seconds>(
                                                              p.first_bin * es.bin_minutes * 60))},
                     {"end", format_iso8601(day_start + static_cast<utc_seconds>(
                                                            (p.last_bin + 1) * es.bin_minutes *
                                                            60))},
                     {"max_z", std::isfinite(p.max_z) ? nlohmann::json(p.max_z)
                                                      : nlohmann::json()}});
            }
            summary["peaks"] = std::move(jpeaks);
        }

        // instant classification map
        if (es.instant) {
            const unsigned bin =
                cfg_.clock.local_second_of_day(*es.instant) / (es.bin_minutes * 60);
            const day_number iday = cfg_.clock.local_day(*es.instant);
            if (iday != es.target_day)
                throw config_error(errc::bad_config, "event_study.instant outside target day");
            nlohmann::json sites_json = nlohmann::json::array();
            std::vector<choropleth_value> values;
            for (std::uint32_t s = 0; s < smap_->sites.size(); ++s) {
                const auto prof = build_reference_profile(store, s, ref_type, es.target_day,
                                                          cfg_.cal);
                const auto zs = zscore(store.day_series(s, target_idx), prof);
                const double z = interval_mean_z(zs, bin, bin + 1);
                nlohmann::json js = {{"site_id", smap_->sites[s].site_id},
                                     {"label", scheme.classify(z)},
                                     {"sigma_zero", static_cast<bool>(zs.sigma_zero[bin])}};
                js["z"] = std::isfinite(z) ? nlohmann::json(z) : nlohmann::json();
                sites_json.push_back(std::move(js));
                if (std::isfinite(z)) values.push_back({smap_->sites[s].site_id, z});
            }
            summary["instant"] = format_iso8601(*es.instant);
            summary["sites"] = std::move(sites_json);
            ensure_coverage();
            const auto doc = export_choropleth(smap_->sites, *cov_, values, scheme);
            write_file_atomic(paths_.site_activity(), doc.dump(2) + "\n");
            manifest_.add_output(paths_.site_activity());
        }

        // homecoming-style attendance estimate
        if (es.attendance_site) {
            ensure_profiles();
            std::int64_t observed = 0;
            std::int64_t smartphones = 0;
            const auto site_it =
                std::find_if(smap_->sites.begin(), smap_->sites.end(),
                             [&](const site& s) { return s.site_id == *es.attendance_site; });
            if (site_it == smap_->sites.end())
                throw data_error(errc::unknown_site, *es.attendance_site);
            const auto site_idx =
                static_cast<std::uint32_t>(site_it - smap_->sites.begin());
            const auto mask = phones_->mask(tables_->sims.size());
            auto has_os = [&](std::uint32_t sim) {
                const auto& prof = (*profiles_)[sim];
                std::optional<std::uint32_t> tac = prof.dominant_tac;
                if (!tac && prof.tacs.size() == 1) tac = prof.tacs[0];
                if (!tac) return false;
                const auto* e = eindex_.get(*tac);
                return e && e->matched && !e->os.empty();
            };
            std::uint32_t last_sim = UINT32_MAX;
            bool counted = false;
            for (const auto& e : tables_->events) {
                if (e.sim != last_sim) {
                    last_sim = e.sim;
                    counted = false;
                }
                if (counted || !mask[e.sim]) continue;
                if (smap_->site_of_cell[e.cell] != site_idx) continue;
                if (e.ts < *es.attendance_start || e.ts >= *es.attendance_end) continue;
                observed++;
                if (has_os(e.sim)) smartphones++;
                counted = true;
            }
            summary["attendance"] = {
                {"site", *es.attendance_site},
                {"observed_sims", observed},
                {"smartphone_sims", smartphones},
                {"market_share", cfg_.market_share},
                {"estimated_population", scale_by_market_share(observed, cfg_.market_share)}};
        }

        write_file_atomic(paths_.event_study(), summary.dump(2) + "\n");
        manifest_.add_output(paths_.event_study());
        log_.event("events", {{"sites", smap_->sites.size()},
                              {"bins_per_day", 1440 / es.bin_minutes},
                              {"duration_ms", t.ms()}});
    }

    // ---- pca --------------------------------------------------------------
    void run_pca() {
        stage_timer t;
        ensure_mobility();
        ensure_profiles();
        const auto table = assemble_bin_table(
            *mobility_,
            [&](std::uint32_t sim) -> std::optional<int> {
                const auto age = tables_->subscribers[sim].age;
                return age >= 0 ? std::optional<int>(age) : std::nullopt;
            },
            [&](std::uint32_t sim) { return tables_->subscribers[sim].payment_type; },
            [&](std::uint32_t sim) { return price_of(sim); }, cfg_.bands);
        const auto result = weighted_pca(table.rows, cfg_.pca_components);
        const auto par = pareto(result);
        std::filesystem::create_directories(paths_.dir);
        write_bin_table_csv(table, paths_.bin_table());
        write_projection_csv(table, result, paths_.pca_projection());
        write_pareto_csv(par, paths_.pca_pareto());
        manifest_.add_output(paths_.bin_table());
        manifest_.add_output(paths_.pca_projection());
        manifest_.add_output(paths_.pca_pareto());
        log_.event("pca", {{"rows", table.rows.size()},
                           {"skipped_missing_age", table.skipped_missing_age},
                           {"skipped_missing_price", table.skipped_missing_price},
                           {"top2_cumulative",
                            result.explained.size() > 1
                                ? result.explained[0] + result.explained[1]
                                : 1.0},
                           {"duration_ms", t.ms()}});
    }

    // ---- study ------------------------------------------------------------
    void run_study() {
        run_ingest();
        run_enrich();
        run_spatial();
        run_mobility();
        run_filter();
        run_events();
        run_pca();
    }

    void write_manifest(const std::string& command) {
        std::filesystem::create_directories(paths_.dir);
        manifest_.write(paths_.manifest(), command);
    }

  private:
    std::filesystem::path require_file(const std::filesystem::path& p, const char* what) const {
        if (p.empty())
            throw config_error(errc::bad_config, std::string("config lacks ") + what);
        const auto resolved = cfg_.resolve(p);
        if (!std::filesystem::exists(resolved))
            throw config_error(errc::bad_config,
                               std::string(what) + " missing: " + resolved.string());
        return resolved;
    }

    level_thresholds threshold_scheme(const std::string& name,
                                      level_thresholds fallback) const {
        const auto it = cfg_.threshold_schemes.find(name);
        return it != cfg_.threshold_schemes.end() ? it->second : fallback;
    }

    void write_ingest_stats() {
        const auto activity =
            summarize_activity(tables_->events, tables_->sims.size(), cfg_.clock);
        const auto stats = compute_activity_stats(activity);
        const auto transients = flag_transients(activity);
        nlohmann::json j;
        j["lines_in"] = tables_->lines_in;
        j["accepted"] = tables_->accepted;
        j["rejected"] = tables_->rejects.size();
        j["sims"] = tables_->sims.size();
        j["cells"] = tables_->cells.size();
        j["attribute_conflicts"] = tables_->attribute_conflicts;
        j["activity_bands"] = {{"edges", stats.band_edges},
                               {"sim_counts", stats.band_sim_count},
                               {"activity_share", stats.band_activity_share}};
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [days, sims] : stats.active_day_hist)
            hist[std::to_string(days)] = sims;
        j["active_day_histogram"] = std::move(hist);
        j["transient_sims"] = transients.size();
        write_file_atomic(paths_.ingest_stats(), j.dump(2) + "\n");
    }

    void ensure_tables() {
        if (tables_) return;
        // rehydrate from a previous ingest run
        for (const auto& p :
             {paths_.events(), paths_.subscribers(), paths_.devices(), paths_.cells()})
            if (!std::filesystem::exists(p))
                throw config_error(errc::bad_config,
                                   "missing artifact " + p.string() + "; run ingest first");
        ingest_result r;
        const auto subs = load_subscribers_csv(paths_.subscribers());
        for (const auto& s : subs) {
            r.sims.intern(s.sim_id);
            r.subscribers.push_back(s.rec);
        }
        {
            const std::string text = read_file(paths_.cells());
            csv_splitter split;
            bool header = true;
            for_each_line(text, [&](std::uint64_t, std::string_view line) {
                if (header) {
                    header = false;
                    return;
                }
                if (trim(line).empty()) return;
                const auto& f = split.split(line);
                cell_site_info info;
                if (f.size() != 3 || !parse_double(f[1], info.lon) ||
                    !parse_double(f[2], info.lat))
                    throw data_error(errc::io_error, "bad cells row: " + std::string(line));
                r.cells.intern(f[0]);
                r.cell_sites.push_back(info);
            });
        }
        {
            const std::string text = read_file(paths_.events());
            csv_splitter split;
            bool header = true;
            std::uint64_t line_no = 0;
            for_each_line(text, [&](std::uint64_t, std::string_view line) {
                if (header) {
                    header = false;
                    return;
                }
                if (trim(line).empty()) return;
                const auto& f = split.split(line);
                std::optional<utc_seconds> ts;
                if (f.size() == 3) ts = parse_iso8601(f[1]);
                if (!ts) throw data_error(errc::io_error, "bad events row: " + std::string(line));
                r.events.push_back({r.sims.intern(f[0]), r.cells.intern(f[2]), *ts, line_no++});
            });
        }
        for (const auto& d : load_devices_csv(paths_.devices()))
            r.devices.push_back({r.sims.intern(d.sim_id), r.tacs.intern(d.tac), d.first_seen,
                                 d.last_seen, d.event_count});
        r.accepted = r.events.size();
        tables_ = std::move(r);
    }

    void ensure_enrichment() {
        if (enrichment_) return;
        if (!std::filesystem::exists(paths_.enrichment()))
            throw config_error(errc::bad_config, "missing artifact " +
                                                     paths_.enrichment().string() +
                                                     "; run enrich first");
        enrichment_ = load_enrichment_csv(paths_.enrichment());
    }

    void ensure_profiles() {
        if (profiles_) return;
        ensure_tables();
        ensure_enrichment();
        profiles_ = build_device_profiles(tables_->devices, tables_->sims.size(),
                                          cfg_.filter.dominant_device_share);
        eindex_ = enrichment_index::build(*enrichment_, tables_->tacs);
        auto pop = phone_population(*profiles_, eindex_, cfg_.exclude_unknown_devices);
        non_phone_count_ = pop.non_phone.size();
        unknown_device_count_ = pop.unknown_device_count;
        phones_ = std::move(pop.phones);
    }

    void ensure_sites() {
        if (smap_) return;
        ensure_tables();
        smap_ = merge_cells(tables_->cell_sites);
    }

    void ensure_coverage() {
        if (cov_) return;
        ensure_sites();
        coverage_options opts;
        opts.allow_bisector = cfg_.allow_bisector;
        if (!cfg_.boundary_path.empty())
            opts.boundary_wgs84 = load_boundary_geojson(cfg_.resolve(cfg_.boundary_path));
        cov_ = build_coverage(smap_->sites, opts);
    }

    void ensure_mobility() {
        if (mobility_) return;
        ensure_tables();
        ensure_sites();
        ensure_coverage();
        ensure_profiles();
        std::vector<vec2> site_xy;
        site_xy.reserve(smap_->sites.size());
        for (const auto& s : smap_->sites)
            site_xy.push_back(cov_->projection.forward({s.lon, s.lat}));
        mobility_options mopts;
        mopts.norm = cfg_.mobility_entropy_norm;
        mobility_ = compute_mobility(tables_->events, smap_->site_of_cell, site_xy, cfg_.cal,
                                     cfg_.clock, phones_->mask(tables_->sims.size()), mopts);
    }

    std::optional<double> price_of(std::uint32_t sim) const {
        const auto& prof = (*profiles_)[sim];
        std::optional<std::uint32_t> tac = prof.dominant_tac;
        if (!tac && prof.tacs.size() == 1) tac = prof.tacs[0];
        if (!tac) return std::nullopt;
        const auto* e = eindex_.get(*tac);
        if (!e || e->non_phone || !e->matched) return std::nullopt;
        return e->price_eur;
    }

    std::optional<double> phone_age_of(std::uint32_t sim) const {
        const auto& prof = (*profiles_)[sim];
        std::optional<std::uint32_t> tac = prof.dominant_tac;
        if (!tac && prof.tacs.size() == 1) tac = prof.tacs[0];
        if (!tac) return std::nullopt;
        const auto* e = eindex_.get(*tac);
        if (!e || e->non_phone || !e->matched || !e->release) return std::nullopt;
        if (*e->release > year_month{2016, 6}) return std::nullopt; // catalog ahead of the data
        return static_cast<double>(relative_age_months(*e->release));
    }

    void write_comparisons() {
        ensure_mobility();
        const size_t n = tables_->sims.size();
        auto age_of = [&](std::uint32_t sim) -> std::optional<int> {
            const auto a = tables_->subscribers[sim].age;
            return a >= 0 ? std::optional<int>(a) : std::nullopt;
        };
        // whole-period mobility values per sim
        std::vector<double> gyr(n, -1.0), ent(n, -1.0);
        for (const auto& m : *mobility_)
            if (m.scope == day_scope::whole_period) {
                gyr[m.sim] = m.gyration_km;
                ent[m.sim] = m.entropy;
            }
        const auto mask = phones_->mask(n);
        auto write_one = [&](compare_attribute attr, auto&& getter) {
            auto rows = cohort_compare(*fans_, n, getter, age_of);
            write_comparison_csv(rows, compare_attribute_name(attr),
                                 paths_.comparison(compare_attribute_name(attr)));
            manifest_.add_output(paths_.comparison(compare_attribute_name(attr)));
        };
        write_one(compare_attribute::phone_price,
                  [&](std::uint32_t sim) -> std::optional<double> {
                      return mask[sim] ? price_of(sim) : std::nullopt;
                  });
        write_one(compare_attribute::phone_age,
                  [&](std::uint32_t sim) -> std::optional<double> {
                      return mask[sim] ? phone_age_of(sim) : std::nullopt;
                  });
        write_one(compare_attribute::gyration, [&](std::uint32_t sim) -> std::optional<double> {
            return mask[sim] && gyr[sim] >= 0 ? std::optional<double>(gyr[sim]) : std::nullopt;
        });
        write_one(compare_attribute::entropy, [&](std::uint32_t sim) -> std::optional<double> {
            return mask[sim] && ent[sim] >= 0 ? std::optional<double>(ent[sim]) : std::nullopt;
        });
        write_one(compare_attribute::subscriber_age,
                  [&](std::uint32_t sim) -> std::optional<double> {
                      const auto a = age_of(sim);
                      return mask[sim] && a ? std::optional<double>(*a) : std::nullopt;
                  });
    }

    std::pair<day_number, std::uint32_t> series_span() const {
        if (cfg_.period) {
            const day_number first = cfg_.clock.local_day(cfg_.period->begin);
            const day_number last = cfg_.clock.local_day(cfg_.period->end - 1);
            return {first, static_cast<std::uint32_t>(last - first + 1)};
        }
        if (tables_->events.empty())
            throw data_error(errc::insufficient_reference, "no events to bin");
        day_number lo = std::numeric_limits<day_number>::max();
        day_number hi = std::numeric_limits<day_number>::min();
        for (const auto& e : tables_->events) {
            const day_number d = cfg_.clock.local_day(e.ts);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return {lo, static_cast<std::uint32_t>(hi - lo + 1)};
    }

    run_config cfg_;
    stage_logger log_;
    artifact_paths paths_;
    manifest_builder manifest_;

    std::optional<ingest_result> tables_;
    std::optional<std::vector<tac_enrichment>> enrichment_;
    std::optional<std::vector<device_profile>> profiles_;
    enrichment_index eindex_;
    std::optional<cohort> phones_;
    std::optional<cohort> fans_;
    std::uint64_t non_phone_count_ = 0;
    std::uint64_t unknown_device_count_ = 0;
    std::optional<site_map> smap_;
    std::optional<coverage> cov_;
    std::optional<std::vector<mobility_record>> mobility_;
};

} // namespace cdrflow
