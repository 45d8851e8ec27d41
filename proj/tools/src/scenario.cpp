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

#include "ionaddr/cli/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <initializer_list>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ionaddr/error.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/serialization.hpp"

namespace ionaddr::cli {

namespace {

using nlohmann::json;

// Schema problems are raised with the JSON path, then decorated with a
// line/column once the failing key has been located in the source text.
struct SchemaError {
    std::string path;
    std::string message;
};

class Reader {
public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) {
            fail("", "expected an object");
        }
    }

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (const auto& [key, value] : node_.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                fail(key, "unknown key");
            }
        }
    }

    bool has(std::string_view key) const { return node_.contains(key); }

    const json& at(std::string_view key) const
    {
        const auto it = node_.find(key);
        if (it == node_.end()) {
            fail(std::string(key), "missing required key");
        }
        return *it;
    }

    Reader child(std::string_view key) const { return Reader(at(key), path_ + "/" + std::string(key)); }

    double number(std::string_view key) const
    {
        const json& v = at(key);
        if (!v.is_number()) {
            fail(std::string(key), "expected a number");
        }
        return v.get<double>();
    }

    double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count_or(std::string_view key, std::size_t fallback) const
    {
        if (!has(key)) {
            return fallback;
        }
        const json& v = at(key);
        if (!v.is_number_unsigned()) {
            fail(std::string(key), "expected a nonnegative integer");
        }
        return v.get<std::size_t>();
    }

    std::string string(std::string_view key) const
    {
        const json& v = at(key);
        if (!v.is_string()) {
            fail(std::string(key), "expected a string");
        }
        return v.get<std::string>();
    }

    std::vector<double> numbers(std::string_view key) const
    {
        const json& v = at(key);
        if (!v.is_array()) {
            fail(std::string(key), "expected an array of numbers");
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) {
                fail(std::string(key), "expected an array of numbers");
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> strings(std::string_view key) const
    {
        const json& v = at(key);
        if (!v.is_array()) {
            fail(std::string(key), "expected an array of strings");
        }
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) {
                fail(std::string(key), "expected an array of strings");
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& message) const
    {
        throw SchemaError{key.empty() ? path_ : path_ + "/" + key, message};
    }

    const std::string& path() const noexcept { return path_; }

private:
    const json& node_;
    std::string path_;
};

std::string locate(std::string_view text, std::string_view source, const SchemaError& e)
{
    // Walk the path from the leaf upward until a key is found in the text.
    std::vector<std::string> segments;
    std::string_view rest = e.path;
    while (!rest.empty()) {
        const auto slash = rest.rfind('/');
        const auto seg = rest.substr(slash == std::string_view::npos ? 0 : slash + 1);
        if (!seg.empty() && !std::isdigit(static_cast<unsigned char>(seg.front()))) {
            segments.emplace_back(seg);
        }
        rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(0, slash);
    }
    std::ostringstream msg;
    msg << source;
    for (const auto& seg : segments) {
        const auto pos = text.find("\"" + seg + "\"");
        if (pos != std::string_view::npos) {
            const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
            const auto nl = text.rfind('\n', pos);
            const auto col = nl == std::string_view::npos ? pos + 1 : pos - nl;
            msg << ":" << line << ":" << col;
            break;
        }
    }
    msg << ": " << (e.path.empty() ? "/" : e.path) << ": " << e.message;
    return msg.str();
}

void parse_optics(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"wavelength_nm", "numerical_aperture"});
    cfg.optics.wavelength_nm = r.number("wavelength_nm");
    cfg.optics.numerical_aperture = r.number("numerical_aperture");
    try {
        cfg.optics.validate();
    } catch (const DomainError& e) {
        r.fail("", e.what());
    }
}

void parse_aod(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"center_frequency_mhz", "nominal_waist_um", "position_coefficient_um_per_mhz", "center_position_um",
             "calibration"});
    const double f0 = r.number("center_frequency_mhz");
    const double waist = r.number("nominal_waist_um");
    try {
        if (r.has("calibration")) {
            const json& cal = r.at("calibration");
            if (!cal.is_array() || cal.size() != 2) {
                r.fail("calibration", "expected two reference points");
            }
            FrequencyPosition refs[2];
            for (std::size_t i = 0; i < 2; ++i) {
                const Reader p(cal[i], r.path() + "/calibration/" + std::to_string(i));
                p.allow({"frequency_mhz", "position_um"});
                refs[i] = {p.number("frequency_mhz"), p.number("position_um")};
            }
            cfg.channel = calibrate_channel(f0, refs[0], refs[1], waist);
        } else {
            cfg.channel = {f0, r.number("position_coefficient_um_per_mhz"), r.number("center_position_um"), waist};
            cfg.channel.validate();
        }
    } catch (const Error& e) {
        r.fail("", e.what());
    }
}

void parse_chain(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"labels", "frequencies_mhz", "positions_um", "rabi_frequency_khz"});
    if (r.has("frequencies_mhz") == r.has("positions_um")) {
        r.fail("", "give exactly one of frequencies_mhz or positions_um");
    }
    if (r.has("frequencies_mhz")) {
        cfg.ion_frequencies_mhz = r.numbers("frequencies_mhz");
        for (double f : cfg.ion_frequencies_mhz) {
            cfg.chain.positions_um.push_back(cfg.channel.position_um(f));
        }
    } else {
        cfg.chain.positions_um = r.numbers("positions_um");
        for (double x : cfg.chain.positions_um) {
            cfg.ion_frequencies_mhz.push_back(cfg.channel.frequency_mhz(x));
        }
    }
    if (r.has("labels")) {
        cfg.chain.labels = r.strings("labels");
    }
    try {
        cfg.chain.validate();
    } catch (const DomainError& e) {
        r.fail("", e.what());
    }
    const auto khz = r.numbers("rabi_frequency_khz");
    if (khz.size() != cfg.chain.size()) {
        r.fail("rabi_frequency_khz", "need one Rabi frequency per ion");
    }
    for (double f : khz) {
        if (!(f >= 0.0)) {
            r.fail("rabi_frequency_khz", "Rabi frequencies must be nonnegative");
        }
        cfg.peak_rabi.push_back(2.0 * std::numbers::pi * f * 1e3);
    }
}

void parse_addressing(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"mode", "scan_arms"});
    try {
        cfg.mode = parse_mode(r.string("mode"));
    } catch (const ConfigError& e) {
        r.fail("mode", e.what());
    }
    if (r.has("scan_arms")) {
        const std::string arms = r.string("scan_arms");
        if (arms == "one") {
            cfg.scan_arms = ScanArms::One;
        } else if (arms == "both") {
            cfg.scan_arms = ScanArms::Both;
        } else {
            r.fail("scan_arms", "expected \"one\" or \"both\"");
        }
    }
}

void parse_stray(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"floor", "ghosts"});
    cfg.floor = r.number_or("floor", 0.0);
    if (cfg.floor < 0.0) {
        r.fail("floor", "floor must be nonnegative");
    }
    if (!r.has("ghosts")) {
        return;
    }
    const json& ghosts = r.at("ghosts");
    if (!ghosts.is_array()) {
        r.fail("ghosts", "expected an array");
    }
    for (std::size_t i = 0; i < ghosts.size(); ++i) {
        const Reader g(ghosts[i], r.path() + "/ghosts/" + std::to_string(i));
        g.allow({"offset_um", "relative_amplitude", "waist_um"});
        GhostTerm term{g.number("offset_um"), g.number("relative_amplitude"), g.number_or("waist_um", 0.0)};
        if (term.relative_amplitude < 0.0 || term.waist_um < 0.0) {
            g.fail("", "ghost amplitude and waist must be nonnegative");
        }
        cfg.stray.ghosts.push_back(term);
    }
}

void parse_timing(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"doppler_us", "eit_us", "pump_us", "raman_us", "detect_us", "repetitions"});
    auto& t = cfg.timing;
    t.doppler_us = r.number_or("doppler_us", t.doppler_us);
    t.eit_us = r.number_or("eit_us", t.eit_us);
    t.pump_us = r.number_or("pump_us", t.pump_us);
    t.raman_us = r.number_or("raman_us", t.raman_us);
    t.detect_us = r.number_or("detect_us", t.detect_us);
    t.repetitions = r.count_or("repetitions", t.repetitions);
    try {
        t.validate();
    } catch (const DomainError& e) {
        r.fail("", e.what());
    }
}

void parse_imaging(const Reader& r, ScenarioConfig& cfg)
{
    r.allow({"tone_frequencies_mhz", "pitch_um", "margin_um", "transverse_waist_um", "background", "noise_sigma",
             "peak_counts", "axis_angle_rad", "section_offset_um", "mcpmt", "alignment_offset_um"});
    auto& im = cfg.imaging;
    if (r.has("tone_frequencies_mhz")) {
        im.tone_frequencies_mhz = r.numbers("tone_frequencies_mhz");
    }
    im.pitch_um = r.number_or("pitch_um", im.pitch_um);
    im.margin_um = r.number_or("margin_um", im.margin_um);
    im.transverse_waist_um = r.number_or("transverse_waist_um", im.transverse_waist_um);
    im.background = r.number_or("background", im.background);
    im.noise_sigma = r.number_or("noise_sigma", im.noise_sigma);
    im.peak_counts = r.number_or("peak_counts", im.peak_counts);
    im.axis_angle_rad = r.number_or("axis_angle_rad", im.axis_angle_rad);
    im.section_offset_um = r.number_or("section_offset_um", im.section_offset_um);
    im.alignment_offset_um = r.number_or("alignment_offset_um", im.alignment_offset_um);
    if (!(im.pitch_um > 0.0) || !(im.margin_um >= 0.0) || !(im.transverse_waist_um >= 0.0) ||
        !(im.noise_sigma >= 0.0) || !(im.peak_counts > 0.0) || im.background < 0.0) {
        r.fail("", "imaging geometry and levels must be positive (background, noise, margin nonnegative)");
    }
    if (r.has("mcpmt")) {
        const Reader m = r.child("mcpmt");
        m.allow({"channel_width_um", "channel_gap_um", "n_channels", "magnification", "psf_sigma_um"});
        auto& g = im.mcpmt;
        g.channel_width_um = m.number_or("channel_width_um", g.channel_width_um);
        g.channel_gap_um = m.number_or("channel_gap_um", g.channel_gap_um);
        g.n_channels = m.count_or("n_channels", g.n_channels);
        g.magnification = m.number_or("magnification", g.magnification);
        g.psf_sigma_um = m.number_or("psf_sigma_um", g.psf_sigma_um);
        try {
            g.validate();
        } catch (const DomainError& e) {
            m.fail("", e.what());
        }
    }
}

} // namespace

std::uint64_t ScenarioConfig::require_seed(std::string_view command) const
{
    if (!seed) {
        throw ConfigError(source + ": " + std::string(command) + " samples shots and needs a \"seed\"");
    }
    return *seed;
}

std::string_view mode_name(AddressingMode mode) noexcept
{
    return mode == AddressingMode::DoubleSide ? "double_side" : "single_side";
}

AddressingMode parse_mode(std::string_view text)
{
    if (text == "double_side" || text == "dsa" || text == "DSA") {
        return AddressingMode::DoubleSide;
    }
    if (text == "single_side" || text == "ssa" || text == "SSA") {
        return AddressingMode::SingleSide;
    }
    throw ConfigError("unknown addressing mode \"" + std::string(text) + "\" (use single_side or double_side)");
}

ScenarioConfig parse_scenario(std::string_view text, std::string_view source)
{
    const json doc = parse_json(text, source);
    ScenarioConfig cfg;
    cfg.source = std::string(source);
    try {
        const Reader root(doc, "");
        root.allow({"name", "optics", "aod", "chain", "addressing", "stray", "timing", "decay_rate_per_s", "seed",
                    "output_dir", "imaging"});
        cfg.name = root.has("name") ? root.string("name") : std::string("scenario");
        parse_optics(root.child("optics"), cfg);
        parse_aod(root.child("aod"), cfg);
        parse_chain(root.child("chain"), cfg);
        parse_addressing(root.child("addressing"), cfg);
        if (root.has("stray")) {
            parse_stray(root.child("stray"), cfg);
        }
        if (root.has("timing")) {
            parse_timing(root.child("timing"), cfg);
        }
        cfg.decay.rate_per_s = root.number_or("decay_rate_per_s", 0.0);
        if (cfg.decay.rate_per_s < 0.0) {
            root.fail("decay_rate_per_s", "decay rate must be nonnegative");
        }
        if (root.has("seed")) {
            const json& s = root.at("seed");
            if (!s.is_number_unsigned()) {
                root.fail("seed", "expected a nonnegative integer");
            }
            cfg.seed = s.get<std::uint64_t>();
        }
        if (root.has("output_dir")) {
            cfg.output_dir = root.string("output_dir");
        }
        if (root.has("imaging")) {
            parse_imaging(root.child("imaging"), cfg);
        }
    } catch (const SchemaError& e) {
        throw ConfigError(locate(text, source, e));
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read scenario " + path.string());
    }
    return parse_scenario(text, path.string());
}

std::filesystem::path output_directory(const ScenarioConfig& config)
{
    if (const char* env = std::getenv("IONADDR_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return config.output_dir;
}

BeamProfile arm_profile(const ScenarioConfig& config, std::size_t index)
{
    ToneSet tones{{DriveTone{config.ion_frequencies_mhz.at(index), 1.0, 0.0}}};
    return toneset_to_profile(config.channel, tones, config.stray, {true, config.floor});
}

AddressingSystem addressing_system(const ScenarioConfig& config, std::size_t index)
{
    AddressingSystem system;
    system.arm1 = arm_profile(config, index);
    system.mode = config.mode;
    if (config.mode == AddressingMode::DoubleSide) {
        system.arm2 = system.arm1;
    }
    system.peak_rabi = config.peak_rabi.at(index);
    return system;
}

SystemBuilder system_builder(const ScenarioConfig& config)
{
    return [config](std::size_t addressed, const IonChain&) { return addressing_system(config, addressed); };
}

ScanTemplate scan_template(const ScenarioConfig& config)
{
    ScanTemplate scan;
    ToneSet centered{{DriveTone{config.channel.frequency_mhz(0.0), 1.0, 0.0}}};
    scan.scanned_shape = toneset_to_profile(config.channel, centered, config.stray, {true, config.floor});
    scan.peak_rabi = config.peak_rabi;
    if (config.mode == AddressingMode::SingleSide) {
        scan.second_arm = UniformField{};
    } else if (config.scan_arms == ScanArms::Both) {
        scan.second_arm = CoScanned{};
    } else {
        ToneSet held;
        const double share = 1.0 / static_cast<double>(config.ion_frequencies_mhz.size());
        for (double f : config.ion_frequencies_mhz) {
            held.tones.push_back({f, share, 0.0});
        }
        scan.second_arm = toneset_to_profile(config.channel, held, config.stray, {true, config.floor});
    }
    return scan;
}

std::size_t ion_index(const ScenarioConfig& config, std::string_view label_or_index)
{
    for (std::size_t i = 0; i < config.chain.size(); ++i) {
        if (config.chain.label(i) == label_or_index) {
            return i;
        }
    }
    std::size_t idx = 0;
    const auto* end = label_or_index.data() + label_or_index.size();
    const auto [ptr, ec] = std::from_chars(label_or_index.data(), end, idx);
    if (ec == std::errc() && ptr == end && idx < config.chain.size()) {
        return idx;
    }
    throw ConfigError("no ion \"" + std::string(label_or_index) + "\" in the chain");
}

} // namespace ionaddr::cli
