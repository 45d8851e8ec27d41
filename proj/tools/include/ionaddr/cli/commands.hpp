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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ionaddr/cli/scenario.hpp"
#include "ionaddr/crosstalk.hpp"
#include "ionaddr/dynamics.hpp"
#include "ionaddr/estimation.hpp"
#include "ionaddr/imaging.hpp"

namespace ionaddr::cli {

// Each command writes its artifacts under output_directory(config) and returns
// the numbers it reported so callers (and tests) need not re-read files.

struct ScanFrequencyOptions {
    double start_mhz = 76.5;
    double stop_mhz = 78.5;
    double step_mhz = 0.02;
    double raman_time_us = 4.0;
};

struct IonScanFit {
    std::string label;
    FitResult fit;
    ScanPeak peak;
};

struct ScanFrequencyResult {
    ScanResult scan;
    std::vector<IonScanFit> fits;
    std::vector<double> spacings_um; // adjacent fitted centers
    std::filesystem::path csv_path;
    std::filesystem::path report_path;
};

/// Throws FitError (after writing outputs) when an ion shows no peak in range
/// or its fit does not converge.
ScanFrequencyResult cmd_scan_frequency(const ScenarioConfig& config, const ScanFrequencyOptions& options);

struct RabiOptions {
    std::string ion = "0";
    double t_max_us = 100.0;
    std::size_t points = 101;
};

struct RabiResult {
    std::size_t addressed = 0;
    ScanResult scan;
    RabiFit fit;
    double nominal_period_us = 0.0;
    std::filesystem::path csv_path;
    std::filesystem::path report_path;
};

RabiResult cmd_rabi(const ScenarioConfig& config, const RabiOptions& options);

struct CrosstalkOptions {
    double t_long_us = 5000.0;
    std::size_t points = 201;
};

struct CrosstalkEntry {
    std::size_t addressed = 0;
    std::size_t victim = 0;
    double p_final = 0.0;
    double omega_victim = 0.0; // rad/s, estimated from the simulated series
    std::string method;        // "fit" or "final_point"
    double victim_normalized = 0.0;
    double addressed_normalized = 0.0;
    double analytic = 0.0;
};

struct CrosstalkResult {
    std::vector<CrosstalkEntry> entries;
    Matrix analytic;
    std::filesystem::path report_path;
};

CrosstalkResult cmd_crosstalk(const ScenarioConfig& config, const CrosstalkOptions& options);

struct PairComparison {
    std::size_t addressed = 0;
    std::size_t neighbor = 0;
    ModeComparison values;
};

struct CompareModesResult {
    std::vector<PairComparison> pairs;
    std::vector<ModeComparison> literature; // one per literature_systems() row
    std::filesystem::path report_path;
};

CompareModesResult cmd_compare_modes(const ScenarioConfig& config);

struct ImagePipelineOptions {
    bool per_tone = true;
    std::vector<std::filesystem::path> images; // empty: synthesize from the scenario
};

struct ToneReadout {
    double position_um = 0.0;
    std::optional<double> left;  // crosstalk at the neighboring tone site
    std::optional<double> right;
};

struct ImagePipelineResult {
    std::vector<SectionSample> section; // composite section
    std::vector<ToneReadout> tones;     // per-tone mode only
    std::optional<double> max_crosstalk;
    bool at_or_below_1e3 = false;
    std::vector<ChannelAssignment> channels;
    std::filesystem::path report_path;
};

ImagePipelineResult cmd_image_pipeline(const ScenarioConfig& config, const ImagePipelineOptions& options);

struct FitProfileOptions {
    std::filesystem::path input; // CSV (x, value) or JSON beam-profile document
    std::size_t spots = 1;
};

struct FitProfileResult {
    FitResult fit;
    SpacingAndWaist summary;
    std::filesystem::path report_path;
};

FitProfileResult cmd_fit_profile(const std::filesystem::path& output_dir, const FitProfileOptions& options);

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitNumeric = 3,
    kExitIo = 4,
    kExitDomain = 5,
};

int exit_code_for(const std::exception& e) noexcept;

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv);

} // namespace ionaddr::cli
