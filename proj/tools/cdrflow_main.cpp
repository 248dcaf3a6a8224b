// SPDX-License-Identifier: Apache-2.0
//
// cdrflow: CDR analytics pipeline driver. One subcommand per stage plus
// `study`, which runs the whole chain on one config.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "cdrflow/parallel.hpp"
#include "cdrflow/pipeline.hpp"

namespace {

constexpr const char* stage_names[] = {"ingest", "enrich", "filter", "spatial", "mobility",
                                       "events", "pca",    "synth",  "study"};

int run_stage(cdrflow::pipeline& p, const std::string& stage) {
    using namespace cdrflow;
    if (stage == "ingest")
        p.run_ingest();
    else if (stage == "enrich")
        p.run_enrich();
    else if (stage == "filter")
        p.run_filter();
    else if (stage == "spatial")
        p.run_spatial();
    else if (stage == "mobility")
        p.run_mobility();
    else if (stage == "events")
        p.run_events();
    else if (stage == "pca")
        p.run_pca();
    else if (stage == "synth")
        p.run_synth();
    else if (stage == "study")
        p.run_study();
    p.write_manifest(stage);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    using namespace cdrflow;
    CLI::App app{"CDR analytics pipeline: normalization, device enrichment, mobility metrics, "
                 "event detection and SES PCA"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags are valid after the subcommand name

    std::string config_path;
    std::string output_dir;
    std::string log_fmt = "text";
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;

    app.add_option("--config", config_path, "JSON run configuration")->envname("CDRFLOW_CONFIG");
    app.add_option("--threads", threads, "worker cap (0 = hardware)");
    app.add_option("--output-dir", output_dir, "override the configured output directory");
    app.add_option("--seed", seed, "override the scenario seed (synth)")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--log-format", log_fmt, "stage log format")
        ->check(CLI::IsMember({"text", "json"}));

    for (const char* name : stage_names) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1; // usage problems are exit 1
    }

    const std::string stage = app.get_subcommands().front()->get_name();

    try {
        run_config cfg;
        if (!config_path.empty()) {
            cfg = load_run_config(config_path);
        } else if (stage != "synth") {
            throw config_error(errc::bad_config, "--config is required for " + stage);
        }
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (seed_given) {
            cfg.seed_override = seed;
            cfg.has_seed_override = true;
        }
        thread_cap().store(threads);
        stage_logger logger(log_fmt == "json" ? log_format::json : log_format::text);
        pipeline p(std::move(cfg), logger);
        if (!config_path.empty()) {
            const std::string bytes = read_file(config_path);
            fnv1a h;
            h.update(bytes.data(), bytes.size());
            p.manifest().set_param("config_fnv64", h.hex());
        }
        if (seed_given) p.manifest().set_param("seed", seed);
        return run_stage(p, stage);
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
