// Copyright 2026 The ionaddr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>

#include <CLI/CLI.hpp>

#include "ionaddr/cli/commands.hpp"
#include "ionaddr/error.hpp"

namespace ionaddr::cli {

namespace {

struct Overrides {
    std::optional<std::size_t> shots;
    std::optional<std::string> mode;
};

void add_overrides(CLI::App* sub, Overrides& o)
{
    sub->add_option("--shots", o.shots, "Shots per point (overrides timing.repetitions)")->check(CLI::PositiveNumber);
    sub->add_option("--mode", o.mode, "Addressing mode override: single_side|double_side");
}

ScenarioConfig load(const std::string& path, const Overrides& o)
{
    ScenarioConfig cfg = load_scenario(path);
    if (o.shots) {
        cfg.timing.repetitions = *o.shots;
    }
    if (o.mode) {
        cfg.mode = parse_mode(*o.mode);
    }
    return cfg;
}

void print_scan(const ScanFrequencyResult& r)
{
    for (const auto& f : r.fits) {
        std::printf("ion %s: center %.4f MHz (%.4f um), waist %.4f um direct / %.4f um intensity-squared\n",
                    f.label.c_str(), f.peak.center_mhz, f.peak.center_um, f.peak.waist_um_direct,
                    f.peak.waist_um_intensity_squared);
    }
    for (double s : r.spacings_um) {
        std::printf("spacing %.4f um\n", s);
    }
    std::printf("wrote %s\n", r.report_path.string().c_str());
}

} // namespace

int run(int argc, const char* const* argv)
{
    CLI::App app{"Optical-addressing crosstalk simulator"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    ScanFrequencyOptions scan_opts;
    auto* scan = app.add_subcommand("scan-frequency", "Scan the AOD drive frequency across the chain and fit peaks");
    scan->add_option("-c,--config", config_path, "Scenario file")->required();
    scan->add_option("--freq-start", scan_opts.start_mhz, "First drive frequency [MHz]");
    scan->add_option("--freq-stop", scan_opts.stop_mhz, "Last drive frequency [MHz]");
    scan->add_option("--freq-step", scan_opts.step_mhz, "Frequency step [MHz]");
    scan->add_option("--raman-time", scan_opts.raman_time_us, "Raman interaction time [us]");
    add_overrides(scan, ov);

    RabiOptions rabi_opts;
    auto* rabi = app.add_subcommand("rabi", "Simulate and fit Rabi flopping of one addressed ion");
    rabi->add_option("-c,--config", config_path, "Scenario file")->required();
    rabi->add_option("--ion", rabi_opts.ion, "Addressed ion label or index");
    rabi->add_option("--t-max", rabi_opts.t_max_us, "Longest Raman time [us]");
    rabi->add_option("--points", rabi_opts.points, "Number of time points");
    add_overrides(rabi, ov);

    CrosstalkOptions xt_opts;
    auto* xt = app.add_subcommand("crosstalk", "Long-time scans and Rabi-rate crosstalk per ion pair");
    xt->add_option("-c,--config", config_path, "Scenario file")->required();
    xt->add_option("--t-long", xt_opts.t_long_us, "Longest Raman time [us]");
    xt->add_option("--points", xt_opts.points, "Number of time points");
    add_overrides(xt, ov);

    auto* cmp = app.add_subcommand("compare-modes", "Single- vs double-side crosstalk table");
    cmp->add_option("-c,--config", config_path, "Scenario file")->required();
    add_overrides(cmp, ov);

    ImagePipelineOptions img_opts;
    bool composite = false;
    bool synth = false;
    std::vector<std::string> images;
    auto* img = app.add_subcommand("image-pipeline", "Render or read spot images, stitch and read crosstalk");
    img->add_option("-c,--config", config_path, "Scenario file")->required();
    auto* per_tone_flag = img->add_flag("--per-tone", "One image per tone (default)");
    auto* composite_flag = img->add_flag("--composite", composite, "A single image with all tones on");
    per_tone_flag->excludes(composite_flag);
    auto* synth_flag = img->add_flag("--synth", synth, "Synthesize images from the scenario (default)");
    auto* images_opt = img->add_option("--images", images, "PGM images with .json sidecars");
    synth_flag->excludes(images_opt);
    add_overrides(img, ov);

    FitProfileOptions fit_opts;
    std::string input;
    auto* fit = app.add_subcommand("fit-profile", "Fit Gaussian spots to a measured intensity profile");
    fit->add_option("-c,--config", config_path, "Scenario file (sets the output directory)");
    fit->add_option("--input,--spots-file", input, "CSV of position,intensity or a profile JSON document")
        ->required();
    fit->add_option("--spots", fit_opts.spots, "Number of spots to fit")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*scan) {
            print_scan(cmd_scan_frequency(load(config_path, ov), scan_opts));
        } else if (*rabi) {
            const auto cfg = load(config_path, ov);
            const auto r = cmd_rabi(cfg, rabi_opts);
            std::printf("ion %s: fitted period %.4f us (nominal %.4f us), decay %.4g 1/s\n",
                        cfg.chain.label(r.addressed).c_str(), r.fit.period_s() * 1e6, r.nominal_period_us,
                        r.fit.decay_rate);
            std::printf("wrote %s\n", r.report_path.string().c_str());
        } else if (*xt) {
            const auto cfg = load(config_path, ov);
            const auto r = cmd_crosstalk(cfg, xt_opts);
            for (const auto& e : r.entries) {
                std::printf("%s -> %s: victim-normalized %.4e, addressed-normalized %.4e, analytic %.4e (%s)\n",
                            cfg.chain.label(e.addressed).c_str(), cfg.chain.label(e.victim).c_str(),
                            e.victim_normalized, e.addressed_normalized, e.analytic, e.method.c_str());
            }
            std::printf("wrote %s\n", r.report_path.string().c_str());
        } else if (*cmp) {
            const auto cfg = load(config_path, ov);
            const auto r = cmd_compare_modes(cfg);
            std::printf("%-10s %-10s %-14s %-14s %-14s\n", "addressed", "neighbor", "intensity", "ssa", "dsa");
            for (const auto& p : r.pairs) {
                std::printf("%-10s %-10s %-14.6e %-14.6e %-14.6e\n", cfg.chain.label(p.addressed).c_str(),
                            cfg.chain.label(p.neighbor).c_str(), p.values.intensity_crosstalk,
                            p.values.rabi_crosstalk_ssa, p.values.rabi_crosstalk_dsa);
            }
            std::printf("wrote %s\n", r.report_path.string().c_str());
        } else if (*img) {
            const auto cfg = load(config_path, ov);
            img_opts.per_tone = !composite;
            for (const auto& p : images) {
                img_opts.images.emplace_back(p);
            }
            const auto r = cmd_image_pipeline(cfg, img_opts);
            if (r.max_crosstalk) {
                std::printf("max neighbor intensity crosstalk %.4e (%s 1e-3)\n", *r.max_crosstalk,
                            r.at_or_below_1e3 ? "at or below" : "above");
            } else {
                std::printf("no neighbor crosstalk readout\n");
            }
            std::printf("wrote %s\n", r.report_path.string().c_str());
        } else if (*fit) {
            std::filesystem::path dir;
            if (!config_path.empty()) {
                dir = output_directory(load(config_path, ov));
            } else if (const char* env = std::getenv("IONADDR_OUTPUT_DIR"); env != nullptr && *env != '\0') {
                dir = env;
            } else {
                dir = "ionaddr-out";
            }
            fit_opts.input = input;
            const auto r = cmd_fit_profile(dir, fit_opts);
            for (const auto& s : r.fit.spots) {
                std::printf("spot: amplitude %.6g, center %.6f um, waist %.6f um\n", s.amplitude, s.center_um,
                            s.waist_um);
            }
            std::printf("wrote %s\n", r.report_path.string().c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ionaddr: error: %s\n", e.what());
        return exit_code_for(e);
    }
    return kExitOk;
}

} // namespace ionaddr::cli
