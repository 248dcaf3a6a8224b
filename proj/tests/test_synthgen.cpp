// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "cdrflow/event_detection.hpp"
#include "cdrflow/ingest.hpp"
#include "cdrflow/synthgen.hpp"

using namespace cdrflow;

namespace {

scenario_config small_scenario() {
    scenario_config cfg;
    cfg.seed = 4242;
    cfg.n_sites = 10;
    cfg.cells_per_site = 2;
    cfg.n_subscribers = 80;
    cfg.days = 8;
    cfg.workday_rate = 25.0;
    cfg.weekend_rate = 15.0;
    return cfg;
}

} // namespace

TEST_CASE("generation is deterministic per seed") {
    const auto dir = std::filesystem::temp_directory_path() / "cdrflow_synth_det";
    std::filesystem::remove_all(dir);
    const auto cfg = small_scenario();
    const auto w1 = generate_scenario(cfg);
    const auto w2 = generate_scenario(cfg);
    REQUIRE(w1.events.size() == w2.events.size());
    for (size_t i = 0; i < w1.events.size(); ++i) {
        CHECK(w1.events[i].ts == w2.events[i].ts);
        CHECK(w1.events[i].sim == w2.events[i].sim);
        CHECK(w1.events[i].cell == w2.events[i].cell);
    }
    write_scenario_files(w1, dir / "a");
    write_scenario_files(w2, dir / "b");
    CHECK(read_file(dir / "a" / "synthetic_cdr.csv") == read_file(dir / "b" / "synthetic_cdr.csv"));
    CHECK(read_file(dir / "a" / "ground_truth.json") == read_file(dir / "b" / "ground_truth.json"));

    auto cfg2 = cfg;
    cfg2.seed = 7;
    const auto w3 = generate_scenario(cfg2);
    write_scenario_files(w3, dir / "c");
    CHECK(read_file(dir / "a" / "synthetic_cdr.csv") != read_file(dir / "c" / "synthetic_cdr.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("generated file round-trips through ingest with zero rejects") {
    const auto dir = std::filesystem::temp_directory_path() / "cdrflow_synth_rt";
    std::filesystem::remove_all(dir);
    const auto world = generate_scenario(small_scenario());
    const auto files = write_scenario_files(world, dir);

    ingest_options opts;
    opts.period = world.config.period();
    const auto r = ingest_files({files.cdr}, opts);
    CHECK(r.lines_in == world.events.size());
    CHECK(r.accepted == world.events.size());
    CHECK(r.rejects.empty());
    CHECK(r.sims.size() <= world.subscribers.size());
    CHECK(r.cells.size() <= world.config.n_sites * world.config.cells_per_site);
    std::filesystem::remove_all(dir);
}

TEST_CASE("plant fractions behave at the extremes") {
    auto cfg = small_scenario();
    scenario_plant peak;
    peak.kind = "peak";
    peak.cohort_fraction = 0.0;
    const auto day = cfg.start_day + 3;
    const utc_seconds base = cfg.clock().day_start_utc(day);
    peak.windows = {{base + 18 * 3600 + 18 * 60, 5},
                    {base + 19 * 3600 + 2 * 60, 5},
                    {base + 19 * 3600 + 18 * 60, 5}};
    cfg.plants = {peak};
    CHECK(generate_scenario(cfg).responders.empty());

    cfg.plants[0].cohort_fraction = 1.1;
    CHECK_THROWS_AS(generate_scenario(cfg), config_error);

    cfg.plants[0].cohort_fraction = 1.0;
    cfg.non_phone_fraction = 0.0;
    const auto world = generate_scenario(cfg);
    CHECK(world.responders.size() == cfg.n_subscribers);
}

TEST_CASE("binomial responder sampling near the expected rate") {
    auto cfg = small_scenario();
    cfg.n_subscribers = 10000;
    cfg.days = 1;
    cfg.workday_rate = 1.0;
    cfg.weekend_rate = 1.0;
    cfg.non_phone_fraction = 0.0;
    scenario_plant peak;
    peak.kind = "peak";
    peak.cohort_fraction = 0.1;
    const utc_seconds base = cfg.clock().day_start_utc(cfg.start_day);
    peak.windows = {{base + 18 * 3600, 5}, {base + 19 * 3600, 5}, {base + 20 * 3600, 5}};
    cfg.plants = {peak};
    const auto world = generate_scenario(cfg);
    CHECK(world.responders.size() > 850);
    CHECK(world.responders.size() < 1150);
}

TEST_CASE("suppression scales window activity by the keep fraction") {
    auto cfg = small_scenario();
    cfg.days = 12;
    cfg.n_subscribers = 300;
    cfg.workday_rate = 60.0;
    cfg.weekend_rate = 60.0;
    cfg.noise_site_fraction = 1.0; // spread uniformly over sites

    // suppress everything at every site for one hour of day 5
    scenario_plant sup;
    sup.kind = "suppression";
    sup.amplitude = 0.5;
    const day_number day = cfg.start_day + 5;
    const utc_seconds start = cfg.clock().day_start_utc(day) + 19 * 3600;
    sup.windows = {{start, 60}};
    cfg.plants = {sup};
    const auto world = generate_scenario(cfg);

    auto count_window = [&](day_number d) {
        const utc_seconds s = cfg.clock().day_start_utc(d) + 19 * 3600;
        std::uint64_t n = 0;
        for (const auto& e : world.events)
            if (e.ts >= s && e.ts < s + 3600) ++n;
        return n;
    };
    const double suppressed = static_cast<double>(count_window(day));
    double reference = 0.0;
    int k = 0;
    for (int d = 0; d < 12; ++d) {
        if (cfg.start_day + d == day) continue;
        reference += static_cast<double>(count_window(cfg.start_day + d));
        ++k;
    }
    reference /= k;
    CHECK(suppressed / reference == Catch::Approx(0.5).margin(0.12));
}

TEST_CASE("planted goal reactions are recovered as three peaks") {
    auto cfg = small_scenario();
    cfg.n_subscribers = 2000;
    cfg.days = 15;
    cfg.workday_rate = 30.0;
    cfg.weekend_rate = 20.0;
    cfg.non_phone_fraction = 0.0;

    const day_number match_day = cfg.start_day + 9; // weekday
    REQUIRE(weekday_of(match_day) < 5);
    const utc_seconds day_start = cfg.clock().day_start_utc(match_day);
    scenario_plant peak;
    peak.kind = "peak";
    peak.cohort_fraction = 0.35;
    peak.windows = {{day_start + 18 * 3600 + 18 * 60, 5},
                    {day_start + 19 * 3600 + 2 * 60, 5},
                    {day_start + 19 * 3600 + 18 * 60, 5}};
    cfg.plants = {peak};
    const auto world = generate_scenario(cfg);
    REQUIRE(world.responders.size() > 500);

    // whole-area series, 5-minute bins, weekday reference without the match day
    std::vector<event_rec> events;
    events.reserve(world.events.size());
    std::uint64_t line = 0;
    for (const auto& e : world.events) events.push_back({e.sim, 0, e.ts, line++});
    const auto store =
        bin_events(events, {0}, 1, 5, cfg.clock(), cfg.start_day, cfg.days);
    calendar cal;
    const auto prof = build_reference_profile(store, 0, day_type::workday, match_day, cal);
    const auto zs = zscore(
        store.day_series(0, static_cast<std::uint32_t>(match_day - cfg.start_day)), prof);
    // gap 0: the 19:02 and 19:18 reactions sit one quiet bin apart and would
    // merge under the default bridging
    const auto peaks = detect_peaks(zs, 2.0, 0);

    REQUIRE(peaks.size() >= 3);
    // the three largest peaks sit within one bin of the planted starts
    std::vector<peak_window> by_z = peaks;
    std::sort(by_z.begin(), by_z.end(),
              [](const peak_window& a, const peak_window& b) { return a.max_z > b.max_z; });
    std::vector<unsigned> found;
    for (int i = 0; i < 3; ++i) found.push_back(by_z[static_cast<size_t>(i)].first_bin);
    std::sort(found.begin(), found.end());
    const std::vector<unsigned> want = {(18u * 60 + 18) / 5, (19u * 60 + 2) / 5,
                                        (19u * 60 + 18) / 5};
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(static_cast<int>(found[static_cast<size_t>(i)]) -
                       static_cast<int>(want[static_cast<size_t>(i)])) <= 1);
}

TEST_CASE("scenario json parsing") {
    const auto j = nlohmann::json::parse(R"({
        "seed": 9, "n_sites": 5, "n_subscribers": 11, "days": 3,
        "start_date": "2016-06-01",
        "rates": {"workday": 12.5},
        "plants": [{"kind": "peak", "cohort_fraction": 0.5,
                    "windows": [{"start": "2016-06-02T16:18:00Z", "minutes": 5},
                                 {"start": "2016-06-02T17:02:00Z"}]}]
    })");
    const auto cfg = scenario_from_json(j);
    CHECK(cfg.seed == 9);
    CHECK(cfg.n_sites == 5);
    CHECK(cfg.workday_rate == 12.5);
    CHECK(cfg.weekend_rate == 25.0); // default kept
    REQUIRE(cfg.plants.size() == 1);
    CHECK(cfg.plants[0].windows.size() == 2);
    CHECK(cfg.plants[0].windows[1].minutes == 5);

    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(
                        R"({"plants": [{"kind": "wobble"}]})")),
                    config_error);
}
