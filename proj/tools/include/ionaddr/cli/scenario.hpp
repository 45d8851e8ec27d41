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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/crosstalk.hpp"
#include "ionaddr/dynamics.hpp"
#include "ionaddr/imaging.hpp"
#include "ionaddr/optics.hpp"

namespace ionaddr::cli {

enum class ScanArms { One, Both };

struct ImagingConfig {
    std::vector<double> tone_frequencies_mhz; // empty: one tone per ion
    double pitch_um = 0.1;
    double margin_um = 10.0;
    double transverse_waist_um = 0.0; // 0: channel nominal waist
    double background = 0.0;
    double noise_sigma = 0.0;
    double peak_counts = 1.0;
    double axis_angle_rad = 0.0;
    double section_offset_um = 0.0;
    McpmtGeometry mcpmt;
    double alignment_offset_um = 0.0;
};

struct ScenarioConfig {
    std::string name;
    std::string source; // file name used in diagnostics
    OpticsConstants optics;
    AodChannel channel;
    IonChain chain;
    std::vector<double> ion_frequencies_mhz;
    std::vector<double> peak_rabi; // rad/s, one per ion
    AddressingMode mode = AddressingMode::DoubleSide;
    ScanArms scan_arms = ScanArms::Both;
    StrayModel stray;
    double floor = 0.0;
    SequenceTiming timing;
    DecayModel decay;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir = "ionaddr-out";
    ImagingConfig imaging;

    /// Throws ConfigError when a sampling command runs without a seed.
    std::uint64_t require_seed(std::string_view command) const;
};

/// Parses a scenario document. Errors carry `source:line:col` where possible.
ScenarioConfig parse_scenario(std::string_view text, std::string_view source = "<scenario>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Output directory after applying the IONADDR_OUTPUT_DIR override.
std::filesystem::path output_directory(const ScenarioConfig& config);

/// Profile of one arm when the AOD drives the tone of ion `index`.
BeamProfile arm_profile(const ScenarioConfig& config, std::size_t index);
AddressingSystem addressing_system(const ScenarioConfig& config, std::size_t index);
SystemBuilder system_builder(const ScenarioConfig& config);
ScanTemplate scan_template(const ScenarioConfig& config);
std::size_t ion_index(const ScenarioConfig& config, std::string_view label_or_index);

std::string_view mode_name(AddressingMode mode) noexcept;
AddressingMode parse_mode(std::string_view text);

} // namespace ionaddr::cli
