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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/crosstalk.hpp"

namespace ionaddr {

/// Hyperfine qubit metadata. Every run starts in |0>.
struct QubitSpec {
    double hyperfine_splitting_ghz = 12.64;
    double initial_excitation = 0.0;
};

/// Per-shot experiment sequence, durations in microseconds.
struct SequenceTiming {
    double doppler_us = 1000.0;
    double eit_us = 1000.0;
    double pump_us = 20.0;
    double raman_us = 0.0;
    double detect_us = 1000.0;
    std::size_t repetitions = 100;

    void validate() const;
};

/// Exponential contrast decay of the Rabi oscillation.
struct DecayModel {
    double rate_per_s = 0.0;
};

/// P(|1>) = (1 - exp(-gamma t) cos(Omega t)) / 2.
double excitation_probability(double rabi_rad_s, double t_s, DecayModel decay = {});

struct SequenceDuration {
    double per_shot_us = 0.0;
    double total_us = 0.0;
};

SequenceDuration sequence_duration(const SequenceTiming& timing, double raman_us);

/// Seed of the random substream for one (ion, scan point) pair:
///   s0 = mix(master)
///   s1 = mix(s0 ^ (ion * 0x9E3779B97F4A7C15 + 1))
///   s  = mix(s1 ^ (point * 0xBF58476D1CE4E5B9 + 2))
/// with mix the splitmix64 finalizer. Each substream drives its own
/// std::mt19937_64, so results do not depend on evaluation order.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t ion, std::uint64_t point) noexcept;

/// Number of |1> outcomes in `shots` Bernoulli(p) trials.
std::size_t sample_excitations(double p, std::size_t shots, std::uint64_t seed);

struct ScanPoint {
    double scan_variable = 0.0; // MHz for frequency scans, us for time scans
    double p_estimate = 0.0;
    std::size_t shots = 0;
    double p_exact = 0.0;
    double rabi_rad_s = 0.0;
};

struct IonSeries {
    std::string label;
    std::vector<ScanPoint> points;
};

struct ScanResult {
    std::vector<IonSeries> ions;
    double acquisition_us = 0.0; // wall-clock time the sequence would take
};

/// Second arm of a frequency scan: a global beam, a copy of the scanned arm
/// driven by the same tone, or a fixed profile that does not move.
struct CoScanned {};
using ScannedSecondArm = std::variant<UniformField, CoScanned, BeamProfile>;

struct ScanTemplate {
    BeamProfile scanned_shape; // scanned arm with its beam centered at 0 um
    ScannedSecondArm second_arm = CoScanned{};
    std::vector<double> peak_rabi; // rad/s per ion, scanned beam centered on it

    AddressingSystem at(double beam_position_um) const;
};

/// Rabi rate of each ion with the scanned beam at `beam_position_um`.
std::vector<double> scan_rabi_rates(const ScanTemplate& scan, const IonChain& chain, double beam_position_um);

ScanResult frequency_scan(const ScanTemplate& scan, const AodChannel& channel, const IonChain& chain,
                          std::span<const double> frequencies_mhz, double t_fixed_us,
                          const SequenceTiming& timing, std::uint64_t seed, DecayModel decay = {});

/// Per-ion rates are kappa_j * crosstalk_ratio(system, x_j, x_addressed);
/// kappa_j defaults to system.peak_rabi when `addressed_rates` is empty.
ScanResult time_scan(const AddressingSystem& system, const IonChain& chain, double x_addressed_um,
                     std::span<const double> times_us, const SequenceTiming& timing, DecayModel decay,
                     std::uint64_t seed, std::span<const double> addressed_rates = {});

void write_scan_csv(std::ostream& out, std::span<const IonSeries> ions, std::string_view variable_unit);

} // namespace ionaddr
