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

#include "ionaddr/serialization.hpp"

#include <numbers>
#include <sstream>

#include "ionaddr/error.hpp"

namespace ionaddr {

namespace {

std::string key_path(std::string_view path, std::string_view key)
{
    std::string out(path);
    out += '/';
    out += key;
    return out;
}

template <typename T>
T decode(const nlohmann::json& j, std::string_view what)
{
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

template <typename T>
std::vector<T> decode_list(const nlohmann::json& j, std::string_view key, std::string_view path)
{
    std::vector<T> out;
    if (!j.contains(key)) {
        return out;
    }
    const auto& arr = j.at(std::string(key));
    if (!arr.is_array()) {
        throw ConfigError(key_path(path, key) + ": expected an array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back(decode<T>(arr[i], key_path(path, key) + "/" + std::to_string(i)));
    }
    return out;
}

} // namespace

nlohmann::json parse_json(std::string_view text, std::string_view source)
{
    try {
        return nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::ostringstream msg;
        msg << source << ":" << line << ":" << column << ": syntax error";
        throw ConfigError(msg.str());
    }
}

double require_number(const nlohmann::json& j, std::string_view key, std::string_view path)
{
    if (!j.is_object()) {
        throw ConfigError(std::string(path) + ": expected an object");
    }
    const auto it = j.find(std::string(key));
    if (it == j.end()) {
        throw ConfigError(key_path(path, key) + ": missing required number");
    }
    if (!it->is_number()) {
        throw ConfigError(key_path(path, key) + ": expected a number");
    }
    return it->get<double>();
}

void to_json(nlohmann::json& j, const GaussianSpot& spot)
{
    j = {{"amplitude", spot.amplitude}, {"center_um", spot.center_um}, {"waist_um", spot.waist_um}};
}

void from_json(const nlohmann::json& j, GaussianSpot& spot)
{
    spot.amplitude = require_number(j, "amplitude", "spot");
    spot.center_um = require_number(j, "center_um", "spot");
    spot.waist_um = require_number(j, "waist_um", "spot");
    try {
        spot.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("spot: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const BeamProfile& profile)
{
    j = {{"spots", profile.spots}, {"stray_spots", profile.stray_spots}, {"floor", profile.floor}};
}

void from_json(const nlohmann::json& j, BeamProfile& profile)
{
    if (!j.is_object()) {
        throw ConfigError("profile: expected an object");
    }
    profile.spots = decode_list<GaussianSpot>(j, "spots", "profile");
    profile.stray_spots = decode_list<GaussianSpot>(j, "stray_spots", "profile");
    profile.floor = j.contains("floor") ? require_number(j, "floor", "profile") : 0.0;
    try {
        profile.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("profile: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const DriveTone& tone)
{
    j = {{"frequency_mhz", tone.frequency_mhz}, {"amplitude", tone.amplitude}, {"phase_rad", tone.phase_rad}};
}

void from_json(const nlohmann::json& j, DriveTone& tone)
{
    tone.frequency_mhz = require_number(j, "frequency_mhz", "tone");
    tone.amplitude = require_number(j, "amplitude", "tone");
    tone.phase_rad = j.contains("phase_rad") ? require_number(j, "phase_rad", "tone") : 0.0;
}

void to_json(nlohmann::json& j, const ToneSet& tones)
{
    j = {{"tones", tones.tones}};
}

void from_json(const nlohmann::json& j, ToneSet& tones)
{
    if (!j.is_object()) {
        throw ConfigError("tone set: expected an object");
    }
    tones.tones = decode_list<DriveTone>(j, "tones", "tone_set");
    try {
        tones.validate(false);
    } catch (const ToneSetError& e) {
        throw ConfigError(std::string("tone set: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const AodChannel& channel)
{
    j = {{"center_frequency_mhz", channel.center_frequency_mhz},
         {"position_coefficient_um_per_mhz", channel.position_coefficient_um_per_mhz},
         {"center_position_um", channel.center_position_um},
         {"nominal_waist_um", channel.nominal_waist_um}};
}

void from_json(const nlohmann::json& j, AodChannel& channel)
{
    channel.center_frequency_mhz = require_number(j, "center_frequency_mhz", "aod");
    channel.position_coefficient_um_per_mhz = require_number(j, "position_coefficient_um_per_mhz", "aod");
    channel.center_position_um = require_number(j, "center_position_um", "aod");
    channel.nominal_waist_um = require_number(j, "nominal_waist_um", "aod");
    try {
        channel.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("aod: ") + e.what());
    }
}

void to_json(nlohmann::json& j, const SequenceTiming& timing)
{
    j = {{"doppler_us", timing.doppler_us}, {"eit_us", timing.eit_us},       {"pump_us", timing.pump_us},
         {"raman_us", timing.raman_us},     {"detect_us", timing.detect_us}, {"repetitions", timing.repetitions}};
}

void to_json(nlohmann::json& j, const FitResult& fit)
{
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t k = 0; k < fit.spots.size(); ++k) {
        nlohmann::json entry = fit.spots[k];
        if (fit.sensitivity.size() == 3 * fit.spots.size()) {
            entry["residual_sensitivity"] = {{"amplitude", fit.sensitivity[3 * k]},
                                             {"center_um", fit.sensitivity[3 * k + 1]},
                                             {"waist_um", fit.sensitivity[3 * k + 2]}};
            entry["uncertainty_proxy"] = {{"amplitude", fit.uncertainty[3 * k]},
                                          {"center_um", fit.uncertainty[3 * k + 1]},
                                          {"waist_um", fit.uncertainty[3 * k + 2]}};
        }
        params.push_back(entry);
    }
    j = {{"spots", params},
         {"residual_norm", fit.residual_norm},
         {"initial_residual_norm", fit.initial_residual_norm},
         {"iterations", fit.iterations},
         {"converged", fit.converged}};
}

void to_json(nlohmann::json& j, const RabiFit& fit)
{
    j = {{"omega_rad_s", fit.omega},
         {"rabi_frequency_hz", fit.omega / (2.0 * std::numbers::pi)},
         {"period_us", fit.period_s() * 1e6},
         {"decay_rate_per_s", fit.decay_rate},
         {"residual_norm", fit.residual_norm},
         {"iterations", fit.iterations},
         {"converged", fit.converged}};
}

void to_json(nlohmann::json& j, const ScanPeak& peak)
{
    j = {{"amplitude", peak.amplitude},
         {"center_mhz", peak.center_mhz},
         {"center_um", peak.center_um},
         {"waist_mhz", peak.waist_mhz},
         {"waist_um_direct", peak.waist_um_direct},
         {"waist_um_intensity_squared", peak.waist_um_intensity_squared}};
}

void to_json(nlohmann::json& j, const ModeComparison& comparison)
{
    j = {{"intensity_crosstalk", comparison.intensity_crosstalk},
         {"rabi_crosstalk_ssa", comparison.rabi_crosstalk_ssa},
         {"rabi_crosstalk_dsa", comparison.rabi_crosstalk_dsa}};
}

} // namespace ionaddr
