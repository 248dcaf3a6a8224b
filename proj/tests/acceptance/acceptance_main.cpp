// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one check per shipped guarantee, each printing a single
// PASS/FAIL line. Run with no arguments for all checks or pass criterion
// numbers (1-10). Exits non-zero if any selected check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sys/resource.h>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cdrflow/cohorts.hpp"
#include "cdrflow/device_catalog.hpp"
#include "cdrflow/event_detection.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/mobility.hpp"
#include "cdrflow/rng.hpp"
#include "cdrflow/ses_pca.hpp"
#include "cdrflow/spatial.hpp"
#include "cdrflow/synthgen.hpp"
#include "../oracles.hpp"

using namespace cdrflow;
namespace fs = std::filesystem;

namespace {

struct check_result {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok && pass) {
            pass = false;
            detail = why;
        }
    }
    void note(const std::string& info) {
        if (pass && detail.empty()) detail = info;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. radius of gyration against the direct-formula oracle
// ---------------------------------------------------------------------------

double gyration_oracle(const visit_vector& v) {
    long double n = 0.0L, cx = 0.0L, cy = 0.0L;
    for (size_t i = 0; i < v.locations.size(); ++i) {
        n += v.visits[i];
        cx += static_cast<long double>(v.visits[i]) * v.locations[i].x;
        cy += static_cast<long double>(v.visits[i]) * v.locations[i].y;
    }
    cx /= n;
    cy /= n;
    long double acc = 0.0L;
    for (size_t i = 0; i < v.locations.size(); ++i) {
        const long double dx = v.locations[i].x - cx;
        const long double dy = v.locations[i].y - cy;
        acc += static_cast<long double>(v.visits[i]) * (dx * dx + dy * dy);
    }
    return static_cast<double>(std::sqrt(acc / n));
}

check_result criterion_1() {
    check_result res;
    const auto t0 = std::chrono::steady_clock::now();
    rng r(10001);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        visit_vector v;
        const size_t n_loc = 1 + r.below(20);
        std::uint64_t visits_left = 50;
        for (size_t k = 0; k < n_loc; ++k) {
            v.locations.push_back({r.uniform(-25.0, 25.0), r.uniform(-25.0, 25.0)});
            const std::uint64_t cap = std::max<std::uint64_t>(1, visits_left / (n_loc - k));
            const std::uint64_t take = 1 + r.below(cap);
            v.visits.push_back(take);
            visits_left -= std::min(visits_left, take);
        }
        const double got = radius_of_gyration(v);
        const double want = gyration_oracle(v);
        if (want == 0.0) {
            res.require(got == 0.0, "nonzero gyration for a degenerate vector");
        } else {
            worst = std::max(worst, std::abs(got - want) / want);
        }
    }
    res.require(worst < 1e-12, "relative error " + format_double(worst));
    // single location returns exactly zero
    res.require(radius_of_gyration({{{3.0, 4.0}}, {17}}) == 0.0, "single location not exactly 0");
    const double dt = seconds_since(t0);
    res.require(dt < 1.0, "runtime " + format_double(dt) + " s >= 1 s");
    res.note("1000 vectors, worst rel err " + format_double(worst) + ", " +
             format_double(dt) + " s");
    return res;
}

// ---------------------------------------------------------------------------
// 2. entropy normalization
// ---------------------------------------------------------------------------

check_result criterion_2() {
    check_result res;
    for (size_t n : {2u, 10u, 100u}) {
        visit_vector v;
        for (size_t i = 0; i < n; ++i) {
            v.locations.push_back({static_cast<double>(i), 0.0});
            v.visits.push_back(1);
        }
        const double e = entropy(v);
        res.require(std::abs(e - 1.0) < 1e-9,
                    "uniform N=" + std::to_string(n) + " entropy " + format_double(e));
    }
    res.require(entropy({{{0, 0}}, {1}}) == 0.0, "single location, single visit");
    res.require(entropy({{{0, 0}}, {1000}}) == 0.0, "single location, many visits");
    const double hand = entropy({{{0, 0}, {1, 0}}, {3, 1}});
    res.require(std::abs(hand - 0.4056) < 5e-4, "hand case {3,1} gave " + format_double(hand));
    res.note("uniform cases exact, {3,1} = " + format_double(hand));
    return res;
}

// ---------------------------------------------------------------------------
// 3. z-score detection: planted spike classification + noise tail fraction
// ---------------------------------------------------------------------------

check_result criterion_3() {
    check_result res;
    const auto t0 = std::chrono::steady_clock::now();

    // planted 10-sigma spike in a 30-day scenario
    {
        scenario_config cfg;
        cfg.seed = 33003;
        cfg.n_sites = 4;
        cfg.cells_per_site = 2;
        cfg.n_subscribers = 200;
        cfg.days = 30;
        cfg.workday_rate = 45.0;
        cfg.weekend_rate = 30.0;
        cfg.noise_site_fraction = 1.0;
        const day_number target_day = days_from_civil(2016, 6, 22);
        const utc_seconds bin_start = cfg.clock().day_start_utc(target_day) +
                                      20 * 3600 + 15 * 60; // 20:15 local
        scenario_plant spike;
        spike.kind = "spike";
        spike.spike_site = 0;
        spike.spike_bin_minutes = 5;
        spike.amplitude = 10.0;
        spike.windows = {{bin_start, 5}};
        cfg.plants = {spike};
        const auto world = generate_scenario(cfg);

        std::vector<event_rec> events;
        events.reserve(world.events.size());
        std::uint64_t line = 0;
        for (const auto& e : world.events)
            events.push_back({e.sim, e.cell, e.ts, line++});
        std::vector<std::uint32_t> site_of_cell(cfg.n_sites * cfg.cells_per_site);
        for (std::uint32_t c = 0; c < site_of_cell.size(); ++c)
            site_of_cell[c] = c / cfg.cells_per_site;

        const auto store = bin_events(events, site_of_cell, cfg.n_sites, 5, cfg.clock(),
                                      cfg.start_day, cfg.days);
        calendar cal;
        const auto prof = build_reference_profile(store, 0, day_type::workday, target_day, cal);
        const auto zs = zscore(
            store.day_series(0, static_cast<std::uint32_t>(target_day - cfg.start_day)), prof);
        const unsigned bin = cfg.clock().local_second_of_day(bin_start) / 300;
        const double z = zs.z[bin];
        const auto scheme = level_thresholds::downtown();
        res.require(scheme.classify(z) == "very_high",
                    "spike bin z=" + format_double(z) + " classified " + scheme.classify(z));
        res.note("spike z = " + format_double(z));
    }

    // pure noise: fraction of |z| > 2 bins
    {
        scenario_config cfg;
        cfg.seed = 33004;
        cfg.n_sites = 2;
        cfg.cells_per_site = 1;
        cfg.n_subscribers = 500;
        cfg.days = 90;
        // flat diurnal, equal rates: every bin is iid Poisson
        cfg.workday_rate = 69.0;
        cfg.weekend_rate = 69.0;
        cfg.morning_weight = 0.0;
        cfg.evening_weight = 0.0;
        cfg.noise_site_fraction = 1.0;
        cfg.commuter_fraction = 0.0;
        cfg.non_phone_fraction = 0.0;
        const auto world = generate_scenario(cfg);

        std::vector<event_rec> events;
        events.reserve(world.events.size());
        std::uint64_t line = 0;
        for (const auto& e : world.events)
            events.push_back({e.sim, e.cell, e.ts, line++});
        const std::vector<std::uint32_t> site_of_cell = {0, 1};
        const auto store = bin_events(events, site_of_cell, 2, 5, cfg.clock(), cfg.start_day,
                                      cfg.days);
        calendar all_workdays;
        all_workdays.saturday_sunday_weekend = false; // one homogeneous day type

        std::uint64_t bins = 0, tails = 0;
        for (std::uint32_t site = 0; site < 2; ++site) {
            for (std::uint32_t d = 0; d < cfg.days; ++d) {
                const auto prof = build_reference_profile(store, site, day_type::workday,
                                                          store.day_at(d), all_workdays);
                const auto zs = zscore(store.day_series(site, d), prof);
                for (size_t b = 0; b < zs.z.size(); ++b) {
                    ++bins;
                    if (std::abs(zs.z[b]) > 2.0) ++tails;
                }
            }
        }
        const double frac = static_cast<double>(tails) / static_cast<double>(bins);
        res.require(bins >= 10000, "only " + std::to_string(bins) + " bins");
        res.require(std::abs(frac - 0.0455) <= 0.015,
                    "tail fraction " + format_double(frac) + " outside 4.55% +/- 1.5pp");
        if (res.pass)
            res.detail += ", noise |z|>2 fraction = " + format_double(frac) + " over " +
                          std::to_string(bins) + " bins";
    }

    const double dt = seconds_since(t0);
    res.require(dt < 30.0, "runtime " + format_double(dt) + " s >= 30 s");
    return res;
}

// ---------------------------------------------------------------------------
// 4. fan cohort recovery
// ---------------------------------------------------------------------------

check_result criterion_4() {
    check_result res;
    scenario_config cfg;
    cfg.seed = 44004;
    cfg.n_sites = 20;
    cfg.cells_per_site = 2;
    cfg.n_subscribers = 10000;
    cfg.days = 30;
    cfg.workday_rate = 4.0; // keeps coincidental window hits rare
    cfg.weekend_rate = 4.0;
    cfg.morning_weight = 0.0;
    cfg.evening_weight = 0.0;
    cfg.non_phone_fraction = 0.0;

    const day_number match_day = days_from_civil(2016, 6, 22);
    const utc_seconds day_start = cfg.clock().day_start_utc(match_day);
    scenario_plant peak;
    peak.kind = "peak";
    peak.cohort_fraction = 0.1;
    peak.windows = {{day_start + 18 * 3600 + 18 * 60, 5},
                    {day_start + 19 * 3600 + 2 * 60, 5},
                    {day_start + 19 * 3600 + 18 * 60, 5}};
    cfg.plants = {peak};
    const auto world = generate_scenario(cfg);
    const auto& truth = world.responders;
    res.require(truth.size() > 800 && truth.size() < 1200,
                "planted " + std::to_string(truth.size()) + " responders");

    // expected coincidental double-window hits: per-window hit chance with a
    // flat rate of 4/day is 4 * 5 / 1440; three windows
    const double p_w = 1.0 - std::exp(-4.0 * 5.0 / 1440.0);
    const double p2 = 3.0 * p_w * p_w * (1.0 - p_w) + p_w * p_w * p_w;
    res.require(p2 < 0.02, "scenario double-hit probability " + format_double(p2));

    std::vector<event_rec> events;
    events.reserve(world.events.size());
    std::uint64_t line = 0;
    for (const auto& e : world.events) events.push_back({e.sim, e.cell, e.ts, line++});
    std::sort(events.begin(), events.end(), [](const event_rec& a, const event_rec& b) {
        return a.sim != b.sim ? a.sim < b.sim : a.ts < b.ts;
    });
    const std::vector<bool> mask(cfg.n_subscribers, true);

    response_windows rw;
    for (const auto& w : peak.windows) rw.windows.push_back({w.start, w.minutes});
    rw.k_required = 2;
    const auto fans = select_peak_responders(events, rw, mask);

    std::set<std::uint32_t> truth_set(truth.begin(), truth.end());
    std::uint64_t tp = 0;
    for (const auto sim : fans.members) tp += truth_set.count(sim);
    const double recall = static_cast<double>(tp) / static_cast<double>(truth.size());
    const double precision =
        fans.members.empty() ? 0.0
                             : static_cast<double>(tp) / static_cast<double>(fans.members.size());
    res.require(recall >= 0.99, "recall " + format_double(recall));
    res.require(precision >= 0.95, "precision " + format_double(precision));

    response_windows rw1 = rw, rw3 = rw;
    rw1.k_required = 1;
    rw3.k_required = 3;
    const auto k1 = select_peak_responders(events, rw1, mask);
    const auto k3 = select_peak_responders(events, rw3, mask);
    res.require(std::includes(k1.members.begin(), k1.members.end(), fans.members.begin(),
                              fans.members.end()),
                "k=1 does not contain k=2");
    res.require(std::includes(fans.members.begin(), fans.members.end(), k3.members.begin(),
                              k3.members.end()),
                "k=2 does not contain k=3");
    res.note("recall " + format_double(recall) + ", precision " + format_double(precision) +
             ", |k1|=" + std::to_string(k1.members.size()) +
             " |k2|=" + std::to_string(fans.members.size()) +
             " |k3|=" + std::to_string(k3.members.size()));
    return res;
}

// ---------------------------------------------------------------------------
// 5. voronoi against the brute-force nearest-site oracle
// ---------------------------------------------------------------------------

check_result criterion_5() {
    check_result res;
    rng r(55005);
    std::vector<vec2> sites;
    for (int i = 0; i < 100; ++i) sites.push_back({r.uniform(0.0, 50.0), r.uniform(0.0, 50.0)});
    const ring boundary = {{0, 0}, {50, 0}, {50, 50}, {0, 50}};
    const auto cells = voronoi_cells(sites, boundary);

    double area = 0.0;
    for (const auto& c : cells) area += ring_area(c);
    const double rel = std::abs(area - 2500.0) / 2500.0;
    res.require(rel < 1e-6, "area sum off by rel " + format_double(rel));

    std::uint64_t checked = 0, agree = 0;
    for (int i = 0; i < 10000; ++i) {
        const vec2 p{r.uniform(0.0, 50.0), r.uniform(0.0, 50.0)};
        size_t best = 0;
        double d0 = 1e300, d1 = 1e300;
        for (size_t s = 0; s < sites.size(); ++s) {
            const double d = dist2(p, sites[s]);
            if (d < d0) {
                d1 = d0;
                d0 = d;
                best = s;
            } else if (d < d1) {
                d1 = d;
            }
        }
        if (std::sqrt(d1) - std::sqrt(d0) < 1e-6) continue; // cell-boundary tie: excluded
        ++checked;
        if (point_in_ring(cells[best], p)) ++agree;
    }
    const double rate = static_cast<double>(agree) / static_cast<double>(checked);
    res.require(checked > 9000, "too many probes excluded");
    res.require(rate >= 0.999, "nearest-site agreement " + format_double(rate));
    res.note("agreement " + format_double(rate) + " over " + std::to_string(checked) +
             " probes, area rel err " + format_double(rel));
    return res;
}

// ---------------------------------------------------------------------------
// 6. catalog fusion fixture
// ---------------------------------------------------------------------------

check_result criterion_6() {
    check_result res;
    const fs::path dir = CDRFLOW_FIXTURE_DIR;
    const auto tacs = load_tac_catalog(dir / "fusion_tac_catalog.csv");
    const auto specs = load_spec_catalog(dir / "fusion_spec_catalog.csv");

    struct truth_row {
        std::string brand, model;
        bool expect_match, exact;
    };
    std::map<std::string, truth_row> truth;
    {
        const std::string text = read_file(dir / "fusion_truth.csv");
        csv_splitter split;
        bool header = true;
        for_each_line(text, [&](std::uint64_t, std::string_view linev) {
            if (header) {
                header = false;
                return;
            }
            if (trim(linev).empty()) return;
            const auto& f = split.split(linev);
            truth[std::string(f[0])] = {std::string(f[1]), std::string(f[2]), f[3] == "1",
                                        f[4] == "1"};
        });
    }

    const auto result = fuse_catalogs(tacs, specs);
    std::uint64_t exact_total = 0, exact_ok = 0, correct = 0, pairs = 0;
    for (const auto& e : result) {
        if (e.matched) res.require(e.match_score >= 90, "match below cutoff: " + e.tac);
        const auto it = truth.find(e.tac);
        if (it == truth.end()) continue; // the two annotated modem rows
        ++pairs;
        const bool right = e.matched && fold_name(e.spec_brand) == fold_name(it->second.brand) &&
                           fold_name(e.spec_model) == fold_name(it->second.model);
        if (it->second.exact) {
            ++exact_total;
            if (right && e.match_score == 100) ++exact_ok;
        }
        if (right && it->second.expect_match) ++correct;
        if (!it->second.expect_match)
            res.require(!e.matched, "expected no match for " + e.tac + " but got " +
                                        e.spec_brand + " " + e.spec_model);
    }
    res.require(pairs == 50, "fixture has " + std::to_string(pairs) + " pairs");
    res.require(exact_ok == exact_total,
                "exact pairs at 100: " + std::to_string(exact_ok) + "/" +
                    std::to_string(exact_total));
    const double rate = static_cast<double>(correct) / 50.0;
    res.require(rate >= 0.90, "correct-match rate " + format_double(rate));

    // permutation invariance
    auto tacs2 = tacs;
    auto specs2 = specs;
    rng r(6);
    r.shuffle(tacs2);
    r.shuffle(specs2);
    const auto result2 = fuse_catalogs(tacs2, specs2);
    res.require(result.size() == result2.size(), "result size changed under permutation");
    for (size_t i = 0; i < result.size(); ++i) {
        const auto& a = result[i];
        const auto& b = result2[i];
        if (a.tac != b.tac || a.matched != b.matched || a.match_score != b.match_score ||
            a.spec_brand != b.spec_brand || a.spec_model != b.spec_model ||
            a.non_phone != b.non_phone) {
            res.require(false, "permutation changed the result at " + a.tac);
            break;
        }
    }
    res.note(std::to_string(exact_ok) + "/" + std::to_string(exact_total) +
             " exact at 100, correct rate " + format_double(rate));
    return res;
}

// ---------------------------------------------------------------------------
// 7. weighted PCA against the max-pivot Jacobi oracle
// ---------------------------------------------------------------------------

check_result criterion_7() {
    check_result res;
    rng r(77007);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<bin_row> rows(40 + trial * 10);
        for (auto& row : rows) {
            row.columns.resize(60);
            for (auto& c : row.columns) c = r.uniform();
            row.weight = 1.0 + static_cast<double>(r.below(40));
        }
        const auto got = weighted_pca(rows, 2);
        const auto cov = oracles::weighted_covariance(rows);
        const auto oracle = oracles::jacobi_max_pivot(cov);
        double trace = 0.0;
        for (size_t i = 0; i < cov.size(); ++i) trace += cov[i][i];

        double fsum = 0.0;
        for (const double f : got.explained) fsum += f;
        res.require(std::abs(fsum - 1.0) < 1e-9,
                    "variance fractions sum to " + format_double(fsum));
        for (size_t k = 0; k < 2; ++k) {
            const double want = oracle.values[k] / trace;
            res.require(std::abs(got.explained[k] - want) < 1e-6,
                        "component " + std::to_string(k + 1) + " fraction off by " +
                            format_double(std::abs(got.explained[k] - want)));
            const double align = oracles::alignment(got.components[k], oracle.vectors[k]);
            res.require(align > 1.0 - 1e-6, "component " + std::to_string(k + 1) +
                                                " alignment " + format_double(align));
        }
    }

    // collinear fixture
    std::vector<bin_row> rows;
    std::vector<double> dir(60), origin(60);
    for (auto& d : dir) d = r.uniform(-1.0, 1.0);
    for (auto& o : origin) o = r.uniform();
    for (int i = 0; i < 8; ++i) {
        bin_row row;
        row.weight = 1.0 + i;
        row.columns.resize(60);
        for (size_t c = 0; c < 60; ++c) row.columns[c] = origin[c] + 0.05 * i * dir[c];
        rows.push_back(std::move(row));
    }
    const auto flat = weighted_pca(rows, 2);
    res.require(std::abs(flat.explained[0] - 1.0) < 1e-9,
                "collinear PC1 fraction " + format_double(flat.explained[0]));
    res.note("5 random tables + collinear fixture agree with the oracle");
    return res;
}

// ---------------------------------------------------------------------------
// 8. market-share scaling
// ---------------------------------------------------------------------------

check_result criterion_8() {
    check_result res;
    const auto scaled = scale_by_market_share(4246, 0.253);
    res.require(scaled == 16783, "scale(4246, 0.253) = " + std::to_string(scaled));
    res.require(std::llround(static_cast<double>(scaled) / 1000.0) == 17,
                "not about 17 thousand");
    res.note("4246 / 0.253 -> " + std::to_string(scaled) + " (about 17 thousand)");
    return res;
}

// ---------------------------------------------------------------------------
// 9. ingest throughput and memory
// ---------------------------------------------------------------------------

std::uint64_t peak_rss_bytes() {
    struct rusage ru {};
    if (getrusage(RUSAGE_SELF, &ru) == 0 && ru.ru_maxrss > 0)
        return static_cast<std::uint64_t>(ru.ru_maxrss) * 1024;
    // fallback for kernels exposing only the status file
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            std::uint64_t kb = 0;
            std::sscanf(line.c_str(), "VmHWM: %llu", reinterpret_cast<unsigned long long*>(&kb));
            return kb * 1024;
        }
    }
    return 0;
}

check_result criterion_9() {
    check_result res;
    const fs::path dir = fs::temp_directory_path() / "cdrflow_throughput";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // one fixed synthetic city; the row count scales through the per-sim
    // rate so the two measurements differ only in volume
    auto generate_file = [&](double rate, const fs::path& out) {
        scenario_config cfg;
        cfg.seed = 99009;
        cfg.n_sites = 300;
        cfg.cells_per_site = 2;
        cfg.n_subscribers = 10000;
        cfg.days = 25;
        cfg.workday_rate = rate;
        cfg.weekend_rate = rate;
        const auto world = generate_scenario(cfg);
        write_scenario_files(world, out);
        return world.events.size();
    };

    thread_cap().store(0); // all hardware workers
    auto timed_ingest = [&](const fs::path& file, int repeats) {
        double best = 1e300;
        std::uint64_t rows = 0;
        for (int i = 0; i < repeats; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            ingest_options opts;
            const auto r = ingest_files({file / "synthetic_cdr.csv"}, opts);
            best = std::min(best, seconds_since(t0));
            rows = r.accepted;
            if (r.rejects.size() != 0) res.require(false, "rejects in synthetic data");
        }
        return std::make_pair(best, rows);
    };

    const std::uint64_t rows_small = generate_file(4.0, dir / "small"); // ~1M rows
    const auto [t_small, n_small] = timed_ingest(dir / "small", 3);

    const std::uint64_t rows_big = generate_file(40.0, dir / "big"); // ~10M rows
    const auto [t_big, n_big] = timed_ingest(dir / "big", 3);
    thread_cap().store(0);

    res.require(n_small == rows_small && n_big == rows_big, "row counts disagree");
    res.require(rows_big > 9800000 && rows_big < 10200000,
                "big scenario produced " + std::to_string(rows_big) + " rows");
    res.require(t_big < 60.0, "10M-row ingest took " + format_double(t_big) + " s");

    const std::uint64_t rss = peak_rss_bytes();
    res.require(rss > 0 && rss < (std::uint64_t{2} << 30),
                "peak RSS " + std::to_string(rss >> 20) + " MiB");

    const double per_row_small = t_small / static_cast<double>(n_small);
    const double per_row_big = t_big / static_cast<double>(n_big);
    const double ratio = per_row_big / per_row_small;
    res.require(ratio > 0.8 && ratio < 1.2,
                "per-row scaling ratio " + format_double(ratio) + " outside [0.8, 1.2]");

    res.note(format_double(static_cast<double>(n_big)) + " rows in " + format_double(t_big) +
             " s (" + format_double(static_cast<double>(n_big) / t_big / 1e6) +
             " Mrows/s), peak RSS " + std::to_string(rss >> 20) + " MiB, scaling ratio " +
             format_double(ratio));
    fs::remove_all(dir);
    return res;
}

// ---------------------------------------------------------------------------
// 10. byte-identical study artifacts across reruns and thread counts
// ---------------------------------------------------------------------------

check_result criterion_10() {
    check_result res;
    const fs::path bin = fs::path(CDRFLOW_BIN_DIR) / "cdrflow";
    if (!fs::exists(bin)) {
        res.require(false, "cdrflow binary not found at " + bin.string());
        return res;
    }
    const fs::path root = fs::temp_directory_path() / "cdrflow_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    // synthetic study input
    {
        const std::string cmd = bin.string() + " synth --seed 42 --output-dir " +
                                (root / "synth").string() + " >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            res.require(false, "synth run failed");
            return res;
        }
    }
    // study config pointing at the synthetic world
    const fs::path cfg_path = root / "config.json";
    {
        nlohmann::json cfg;
        cfg["input"] = (root / "synth" / "synthetic_cdr.csv").string();
        cfg["period"] = {{"start", "2016-06-01"}, {"end", "2016-07-01"}};
        cfg["tac_catalog"] = (root / "synth" / "tac_catalog.csv").string();
        cfg["spec_catalog"] = (root / "synth" / "spec_catalog.csv").string();
        cfg["windows"] = {{{"start", "2016-06-22T16:18:00Z"}, {"minutes", 5}},
                          {{"start", "2016-06-22T17:02:00Z"}, {"minutes", 5}},
                          {{"start", "2016-06-22T17:18:00Z"}, {"minutes", 5}}};
        cfg["k_required"] = 2;
        cfg["event_study"] = {{"target_day", "2016-06-22"},
                              {"scheme", "downtown"},
                              {"instant", "2016-06-22T18:15:00Z"}};
        std::ofstream(cfg_path) << cfg.dump(2);
    }

    auto run_study = [&](const std::string& tag, unsigned threads) -> std::optional<std::map<std::string, std::string>> {
        const fs::path out = root / tag;
        const std::string cmd = bin.string() + " study --config " + cfg_path.string() +
                                " --output-dir " + out.string() + " --threads " +
                                std::to_string(threads) + " >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return std::nullopt;
        std::map<std::string, std::string> hashes;
        for (const auto& entry : fs::directory_iterator(out)) {
            const std::string content = read_file(entry.path());
            fnv1a h;
            h.update(content.data(), content.size());
            hashes[entry.path().filename().string()] = h.hex();
        }
        return hashes;
    };

    const auto base = run_study("run_t1", 1);
    if (!base) {
        res.require(false, "study run failed");
        return res;
    }
    res.require(base->size() >= 20, "study produced only " + std::to_string(base->size()) +
                                        " artifacts");
    for (const auto& [tag, threads] :
         std::vector<std::pair<std::string, unsigned>>{{"run_t4", 4}, {"run_t8", 8},
                                                       {"rerun_t1", 1}}) {
        const auto other = run_study(tag, threads);
        if (!other) {
            res.require(false, "study run failed for " + tag);
            return res;
        }
        if (*other != *base) {
            for (const auto& [file, hash] : *other) {
                auto it = base->find(file);
                if (it == base->end() || it->second != hash) {
                    res.require(false, tag + " differs at " + file);
                    break;
                }
            }
            res.require(false, tag + " artifact set differs");
        }
    }
    res.note(std::to_string(base->size()) +
             " artifacts byte-identical across reruns and threads {1,4,8}");
    fs::remove_all(root);
    return res;
}

// ---------------------------------------------------------------------------

struct criterion {
    int number;
    const char* title;
    check_result (*fn)();
};

const criterion criteria[] = {
    {1, "radius of gyration matches the direct-formula oracle", criterion_1},
    {2, "entropy normalization (uniform = 1, single = 0, {3,1} hand case)", criterion_2},
    {3, "z-score spike classification and noise tail fraction", criterion_3},
    {4, "fan-cohort recovery (recall/precision, k monotone)", criterion_4},
    {5, "voronoi nearest-site oracle and area conservation", criterion_5},
    {6, "catalog fusion fixture (exact at 100, >= 90% correct)", criterion_6},
    {7, "weighted PCA matches the Jacobi oracle", criterion_7},
    {8, "market-share scaling reproduces the homecoming estimate", criterion_8},
    {9, "10M-row ingest throughput, memory, linear scaling", criterion_9},
    {10, "byte-identical study artifacts across threads", criterion_10},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.number) == wanted.end())
            continue;
        check_result r;
        try {
            r = c.fn();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        std::printf("%s criterion %2d: %s%s%s\n", r.pass ? "PASS" : "FAIL", c.number, c.title,
                    r.detail.empty() ? "" : " -- ", r.detail.c_str());
        std::fflush(stdout);
        if (!r.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
