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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include <nlohmann/json.hpp>

#include "ionaddr/cli/commands.hpp"
#include "ionaddr/cli/scenario.hpp"
#include "ionaddr/error.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/serialization.hpp"

using namespace ionaddr;
using namespace ionaddr::cli;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;

namespace {

const std::filesystem::path kPaper = std::filesystem::path(IONADDR_SCENARIO_DIR) / "paper.scenario";

json paper_doc()
{
    return json::parse(read_file(kPaper), nullptr, true, true);
}

ScenarioConfig from_doc(const json& doc, std::size_t shots = 0)
{
    ScenarioConfig cfg = parse_scenario(doc.dump(2), "variant.scenario");
    if (shots > 0) {
        cfg.timing.repetitions = shots;
    }
    return cfg;
}

std::filesystem::path out_dir()
{
    const char* env = std::getenv("IONADDR_OUTPUT_DIR");
    return env != nullptr ? std::filesystem::path(env) : std::filesystem::path("ionaddr-out");
}

int run_args(std::vector<std::string> args)
{
    args.insert(args.begin(), "ionaddr");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data());
}

std::string write_variant(const json& doc, const std::string& name)
{
    const auto path = out_dir() / "scenarios" / name;
    write_file_atomic(path, doc.dump(2));
    return path.string();
}

} // namespace

TEST_CASE("bundled scenario")
{
    const ScenarioConfig cfg = load_scenario(kPaper);
    CHECK(cfg.name == "paper");
    CHECK(cfg.optics.wavelength_nm == 532.0);
    CHECK(cfg.optics.numerical_aperture == 0.4);
    CHECK_THAT(cfg.channel.position_coefficient_um_per_mhz, WithinRel(5.5 / 0.96, 1e-14));
    CHECK_THAT(cfg.channel.center_position_um, WithinAbs(2.463541666666, 1e-9));
    REQUIRE(cfg.chain.size() == 2);
    CHECK(cfg.chain.label(0) == "A");
    CHECK_THAT(cfg.chain.positions_um[0], WithinAbs(0.0, 1e-12));
    CHECK_THAT(cfg.chain.positions_um[1], WithinRel(5.5, 1e-12));
    CHECK_THAT(cfg.peak_rabi[0], WithinRel(2.0 * std::numbers::pi * 43.78e3, 1e-15));
    CHECK(cfg.mode == AddressingMode::DoubleSide);
    CHECK(cfg.scan_arms == ScanArms::One);
    CHECK(cfg.stray.ghosts.size() == 2);
    CHECK(cfg.timing.repetitions == 100);
    CHECK(cfg.timing.raman_us == 0.0);
    CHECK(cfg.seed.has_value());
    CHECK(cfg.imaging.tone_frequencies_mhz.size() == 10);
    CHECK(cfg.imaging.mcpmt.pitch_um() == 1000.0);

    const auto profile = arm_profile(cfg, 0);
    CHECK_THAT(intensity_at(profile, 5.5) / intensity_at(profile, 0.0), WithinRel(1e-3, 1e-9));
}

TEST_CASE("scenario errors")
{
    SECTION("unknown key with its line")
    {
        json doc = paper_doc();
        doc["optics"]["wavelenght_nm"] = 1;
        try {
            from_doc(doc);
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("/optics/wavelenght_nm") != std::string::npos);
            CHECK(msg.find("variant.scenario:") == 0);
            CHECK(msg.find("unknown key") != std::string::npos);
        }
    }
    SECTION("missing physical constant")
    {
        json doc = paper_doc();
        doc["optics"].erase("numerical_aperture");
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
    }
    SECTION("bad values")
    {
        json doc = paper_doc();
        doc["addressing"]["mode"] = "sideways";
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
        doc = paper_doc();
        doc["chain"]["rabi_frequency_khz"] = {43.78};
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
        doc = paper_doc();
        doc["chain"]["frequencies_mhz"] = {78.03, 77.07};
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
        doc = paper_doc();
        doc["aod"]["calibration"][1]["frequency_mhz"] = 77.07;
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
        doc = paper_doc();
        doc["seed"] = -4;
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
        doc = paper_doc();
        doc["timing"]["repetitions"] = 0;
        CHECK_THROWS_AS(from_doc(doc), ConfigError);
    }
    SECTION("syntax error position")
    {
        try {
            parse_scenario("{\n \"name\": \"x\",\n \"optics\": {,}\n}", "s.scenario");
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).rfind("s.scenario:3:", 0) == 0);
        }
    }
    SECTION("seed is mandatory for sampling")
    {
        json doc = paper_doc();
        doc.erase("seed");
        const auto cfg = from_doc(doc);
        CHECK_THROWS_AS(cmd_rabi(cfg, {}), ConfigError);
        CHECK_NOTHROW(cmd_compare_modes(cfg));
    }
    SECTION("positions instead of frequencies")
    {
        json doc = paper_doc();
        doc["chain"].erase("frequencies_mhz");
        doc["chain"]["positions_um"] = {0.0, 5.5};
        const auto cfg = from_doc(doc);
        CHECK_THAT(cfg.ion_frequencies_mhz[1], WithinAbs(78.03, 1e-12));
    }
}

TEST_CASE("ion lookup")
{
    const auto cfg = load_scenario(kPaper);
    CHECK(ion_index(cfg, "B") == 1);
    CHECK(ion_index(cfg, "0") == 0);
    CHECK_THROWS_AS(ion_index(cfg, "C"), ConfigError);
    CHECK_THROWS_AS(ion_index(cfg, "7"), ConfigError);
}

TEST_CASE("frequency scan command")
{
    auto cfg = load_scenario(kPaper);
    cfg.timing.repetitions = 10000;
    const auto r = cmd_scan_frequency(cfg, {});
    REQUIRE(r.fits.size() == 2);
    CHECK_THAT(r.fits[0].peak.center_mhz, WithinAbs(77.07, 0.02));
    CHECK_THAT(r.fits[1].peak.center_mhz, WithinAbs(78.03, 0.02));
    REQUIRE(r.spacings_um.size() == 1);
    CHECK_THAT(r.spacings_um[0], WithinRel(5.5, 0.02));
    for (const auto& f : r.fits) {
        CHECK_THAT(f.peak.waist_um_direct, WithinRel(0.95, 0.05));
    }
    CHECK(std::filesystem::exists(r.csv_path));
    const auto report = json::parse(read_file(r.report_path));
    CHECK(report.at("timing").at("doppler_us") == 1000.0);
    CHECK(report.at("fits").size() == 2);
    CHECK(read_file(r.csv_path).rfind("scan_variable[MHz],ion_label", 0) == 0);

    SECTION("single ion")
    {
        json doc = paper_doc();
        doc["chain"] = {{"frequencies_mhz", {77.5}}, {"rabi_frequency_khz", {40.0}}};
        const auto one = cmd_scan_frequency(from_doc(doc), {});
        REQUIRE(one.fits.size() == 1);
        CHECK_THAT(one.fits[0].peak.center_mhz, WithinAbs(77.5, 0.02));
        CHECK(one.spacings_um.empty());
    }
    SECTION("range without ions")
    {
        CHECK_THROWS_AS(cmd_scan_frequency(cfg, {90.0, 92.0, 0.02, 4.0}), FitError);
        CHECK_THROWS_AS(cmd_scan_frequency(cfg, {78.0, 77.0, 0.02, 4.0}), DomainError);
    }
}

TEST_CASE("Rabi command")
{
    auto cfg = load_scenario(kPaper);
    cfg.timing.repetitions = 10000;
    const auto a = cmd_rabi(cfg, {"A", 100.0, 101});
    CHECK_THAT(a.fit.period_s() * 1e6, WithinRel(22.84, 1e-3));
    const auto b = cmd_rabi(cfg, {"B", 100.0, 101});
    CHECK_THAT(b.fit.period_s() * 1e6, WithinRel(30.85, 1e-3));
    CHECK_THAT(b.nominal_period_us, WithinRel(30.8452, 1e-5));

    json doc = paper_doc();
    doc["chain"]["rabi_frequency_khz"] = {0.0, 32.42};
    CHECK_THROWS_AS(cmd_rabi(from_doc(doc), {"A", 100.0, 101}), AmbiguityError);
    CHECK_THROWS_AS(cmd_rabi(cfg, {"A", 100.0, 3}), DomainError);
}

TEST_CASE("crosstalk command")
{
    SECTION("calibrated scenario, both modes")
    {
        auto cfg = load_scenario(kPaper);
        cfg.timing.repetitions = 10000;
        const auto dsa = cmd_crosstalk(cfg, {});
        REQUIRE(dsa.entries.size() == 2);
        for (const auto& e : dsa.entries) {
            CHECK_THAT(e.victim_normalized, WithinRel(1e-3, 0.1));
            CHECK_THAT(e.analytic, WithinRel(1e-3, 1e-9));
            CHECK(e.method == "final_point");
        }
        CHECK_THAT(dsa.analytic(0, 1), WithinRel(1e-3, 1e-9));

        cfg.mode = AddressingMode::SingleSide;
        const auto ssa = cmd_crosstalk(cfg, {});
        for (const auto& e : ssa.entries) {
            CHECK_THAT(e.victim_normalized, WithinRel(std::sqrt(1e-3), 0.1));
            CHECK_THAT(e.analytic, WithinRel(std::sqrt(1e-3), 1e-9));
        }
    }
    SECTION("asymmetric ghosts reproduce the measured pair")
    {
        json doc = paper_doc();
        doc["stray"]["ghosts"] = {{{"offset_um", -5.5}, {"relative_amplitude", 9.66e-4}},
                                  {{"offset_um", 5.5}, {"relative_amplitude", 6.32e-4}}};
        const auto r = cmd_crosstalk(from_doc(doc, 10000), {});
        REQUIRE(r.entries.size() == 2);
        // addressing B leaves A at P near 0.38; addressing A leaves B near 0.10
        const auto& on_b = r.entries[0];
        const auto& on_a = r.entries[1];
        CHECK(on_b.victim == 1);
        CHECK_THAT(on_a.p_final, WithinAbs(0.38, 0.015));
        CHECK_THAT(on_b.p_final, WithinAbs(0.10, 0.015));
        CHECK_THAT(on_a.victim_normalized, WithinRel(9.66e-4, 0.03));
        CHECK_THAT(on_b.victim_normalized, WithinRel(6.32e-4, 0.05));
        CHECK_THAT(on_a.addressed_normalized, WithinRel(9.66e-4 * 43.78 / 32.42, 0.03));
    }
    SECTION("needs two ions")
    {
        json doc = paper_doc();
        doc["chain"] = {{"frequencies_mhz", {77.5}}, {"rabi_frequency_khz", {40.0}}};
        CHECK_THROWS_AS(cmd_crosstalk(from_doc(doc), {}), DomainError);
    }
}

TEST_CASE("mode comparison command")
{
    const auto r = cmd_compare_modes(load_scenario(kPaper));
    REQUIRE(r.pairs.size() == 2);
    CHECK_THAT(r.pairs[0].values.intensity_crosstalk, WithinRel(1e-3, 1e-9));
    CHECK_THAT(r.pairs[0].values.rabi_crosstalk_ssa, WithinRel(std::sqrt(1e-3), 1e-9));
    CHECK_THAT(r.pairs[0].values.rabi_crosstalk_dsa, WithinRel(1e-3, 1e-9));
    REQUIRE(r.literature.size() == 5);
    CHECK(r.literature[0].rabi_crosstalk_ssa == 0.01);
    CHECK(r.literature[2].rabi_crosstalk_ssa == 0.002);
    const auto doc = json::parse(read_file(r.report_path));
    CHECK(doc.at("literature")[4].at("system") == "AODs (double-side)");
}

TEST_CASE("image pipeline command")
{
    SECTION("calibrated synthetic run")
    {
        const auto r = cmd_image_pipeline(load_scenario(kPaper), {});
        REQUIRE(r.tones.size() == 10);
        REQUIRE(r.max_crosstalk.has_value());
        CHECK_THAT(*r.max_crosstalk, WithinRel(1e-3, 0.01));
        CHECK(r.at_or_below_1e3);
        REQUIRE(r.channels.size() == 2);
        CHECK(r.channels[0].channel == 0);
        CHECK(r.channels[1].channel == 1);
        CHECK_FALSE(r.tones[0].left.has_value());
        CHECK(r.tones[0].right.has_value());
    }
    SECTION("no stray light reads the bare tail")
    {
        json doc = paper_doc();
        doc["stray"]["ghosts"] = json::array();
        doc["imaging"]["background"] = 0.0;
        const auto r = cmd_image_pipeline(from_doc(doc), {});
        REQUIRE(r.max_crosstalk.has_value());
        CHECK_THAT(*r.max_crosstalk, WithinRel(7.702475028537558e-30, 1e-6));
    }
    SECTION("ingested images")
    {
        auto cfg = load_scenario(kPaper);
        const auto dir = out_dir();
        cmd_image_pipeline(cfg, {});
        std::vector<std::filesystem::path> files;
        for (int k = 0; k < 10; ++k) {
            files.push_back(dir / ("tone_" + std::to_string(k) + ".pgm"));
        }
        const auto again = cmd_image_pipeline(cfg, {true, files});
        REQUIRE(again.max_crosstalk.has_value());
        CHECK_THAT(*again.max_crosstalk, WithinRel(1e-3, 0.02));

        CameraImage blank(read_pgm(files[0]).grid, 0.0);
        write_pgm(dir / "blank.pgm", blank, PgmEncoding::Ascii);
        const auto empty = cmd_image_pipeline(cfg, {false, {dir / "blank.pgm"}});
        CHECK_FALSE(empty.max_crosstalk.has_value());
        for (const auto& s : empty.section) {
            CHECK(s.intensity == 0.0);
        }
        CHECK_THROWS_AS(cmd_image_pipeline(cfg, {true, {dir / "blank.pgm"}}), ConfigError);
        CHECK_THROWS_AS(cmd_image_pipeline(cfg, {false, {dir / "nowhere.pgm"}}), IoError);
    }
}

TEST_CASE("profile fit command")
{
    const auto dir = out_dir() / "fit";
    BeamProfile p;
    p.spots = {{1.0, 0.0, 0.95}, {0.74, 5.5, 0.95}};
    write_file_atomic(dir / "profile.json", json(p).dump());
    const auto r = cmd_fit_profile(dir, {dir / "profile.json", 2});
    CHECK_THAT(r.fit.spots[1].center_um, WithinAbs(5.5, 1e-6));
    CHECK_THAT(*r.summary.mean_spacing_um, WithinRel(5.5, 1e-6));
    CHECK_THAT(r.summary.mean_waist_um, WithinRel(0.95, 1e-6));

    std::string csv = "position[um],intensity[arb]\n";
    for (int k = -60; k <= 60; ++k) {
        const double x = 2.0 + 0.05 * k;
        csv += std::to_string(x) + "," + std::to_string(0.5 * std::exp(-2.0 * std::pow((x - 2.0) / 1.1, 2))) + "\n";
    }
    write_file_atomic(dir / "section.csv", csv);
    const auto c = cmd_fit_profile(dir, {dir / "section.csv", 1});
    CHECK_THAT(c.fit.spots[0].waist_um, WithinRel(1.1, 1e-4));

    write_file_atomic(dir / "broken.csv", "x,y\n1,2\nthree,4\n");
    CHECK_THROWS_AS(cmd_fit_profile(dir, {dir / "broken.csv", 1}), ConfigError);
    CHECK_THROWS_AS(cmd_fit_profile(dir, {dir / "absent.csv", 1}), IoError);
}

TEST_CASE("command line exit codes")
{
    const std::string scenario = kPaper.string();
    CHECK(run_args({"compare-modes", "-c", scenario}) == kExitOk);
    CHECK(run_args({}) == kExitUsage);
    CHECK(run_args({"rabi"}) == kExitUsage);
    CHECK(run_args({"rabi", "-c", scenario, "--points", "many"}) == kExitUsage);
    CHECK(run_args({"rabi", "-c", "/nonexistent.scenario"}) == kExitConfig);
    CHECK(run_args({"scan-frequency", "-c", scenario, "--freq-start", "90", "--freq-stop", "92"}) == kExitNumeric);
    CHECK(run_args({"image-pipeline", "-c", scenario, "--composite", "--images", "/nonexistent.pgm"}) == kExitIo);
    CHECK(run_args({"rabi", "-c", scenario, "--t-max", "-5"}) == kExitDomain);
    CHECK(run_args({"rabi", "-c", scenario, "--mode", "sideways"}) == kExitConfig);

    json doc = paper_doc();
    doc["chain"]["rabi_frequency_khz"] = {0.0, 32.42};
    CHECK(run_args({"rabi", "-c", write_variant(doc, "dark.scenario"), "--ion", "A"}) == kExitNumeric);
}

TEST_CASE("fixed seed gives byte-identical outputs")
{
    const std::string scenario = kPaper.string();
    const auto csv = out_dir() / "scan_frequency.csv";
    REQUIRE(run_args({"scan-frequency", "-c", scenario, "--shots", "500"}) == kExitOk);
    const std::string first = read_file(csv);
    REQUIRE(run_args({"scan-frequency", "-c", scenario, "--shots", "500"}) == kExitOk);
    CHECK(read_file(csv) == first);

    const auto rabi = out_dir() / "rabi_B.csv";
    REQUIRE(run_args({"rabi", "-c", scenario, "--ion", "B"}) == kExitOk);
    const std::string r1 = read_file(rabi);
    REQUIRE(run_args({"rabi", "-c", scenario, "--ion", "B"}) == kExitOk);
    CHECK(read_file(rabi) == r1);
}
