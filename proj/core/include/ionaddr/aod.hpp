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

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ionaddr/optics.hpp"

namespace ionaddr {

/// Affine calibration from AOD drive frequency to focal position on the ion
/// plane. `position_um(center_frequency_mhz) == center_position_um` exactly.
struct AodChannel {
    double center_frequency_mhz = 0.0;
    double position_coefficient_um_per_mhz = 0.0;
    double center_position_um = 0.0;
    double nominal_waist_um = 0.0;

    void validate() const;

    double position_um(double frequency_mhz) const noexcept;
    double frequency_mhz(double position_um) const noexcept;
};

struct FrequencyPosition {
    double frequency_mhz = 0.0;
    double position_um = 0.0;
};

double tone_to_position(const AodChannel& channel, double frequency_mhz) noexcept;

/// Two-point calibration. Throws CalibrationError when both references share
/// a frequency.
AodChannel calibrate_channel(double center_frequency_mhz, FrequencyPosition ref1,
                             FrequencyPosition ref2, double waist_um);

struct DriveTone {
    double frequency_mhz = 0.0;
    double amplitude = 0.0; // fraction of full RF scale, [0, 1]
    double phase_rad = 0.0;
};

struct ToneSet {
    std::vector<DriveTone> tones;

    double amplitude_sum() const noexcept;

    /// Amplitudes in [0, 1], pairwise distinct frequencies and, when
    /// `enforce_budget` is set, a total amplitude of at most 1.
    void validate(bool enforce_budget = true) const;
};

/// Ghost spot placed at a fixed offset from every principal spot.
/// A zero waist means "use the channel's nominal waist".
struct GhostTerm {
    double offset_um = 0.0;
    double relative_amplitude = 0.0;
    double waist_um = 0.0;
};

/// Phenomenological stray-light generator. It is deliberately agnostic to
/// where the ghosts come from; each tone spawns the same pattern of ghosts
/// scaled by that tone's optical intensity.
struct StrayModel {
    std::vector<GhostTerm> ghosts;

    std::vector<GaussianSpot> generate(const AodChannel& channel, const ToneSet& tones) const;
};

struct ProfileOptions {
    bool enforce_budget = true;
    double floor = 0.0;
};

/// One spot per tone at the mapped position with intensity amplitude^2
/// (linear diffraction regime) and the channel's nominal waist.
BeamProfile toneset_to_profile(const AodChannel& channel, const ToneSet& tones,
                               const std::optional<StrayModel>& stray = std::nullopt,
                               ProfileOptions options = {});

/// Which Raman arms a tone set drives. With one arm the Rabi rate scales as
/// sqrt(I); when the same tones drive both arms it scales as I.
enum class DrivenArms { One, Both };

struct EqualizationTarget {
    double position_um = 0.0;
    double desired_rate = 1.0;
    /// Rate this target currently shows when all tones are driven equally.
    /// Zero means a uniform response is assumed.
    double measured_rate = 0.0;
};

struct EqualizeOptions {
    DrivenArms arms = DrivenArms::One;
    bool enforce_budget = true; // scale to sum(amplitude) == 1, else max == 1
    double min_amplitude = 1e-3; // AWG amplitude floor
    std::optional<std::pair<double, double>> frequency_range_mhz;
};

ToneSet equalize_amplitudes(const AodChannel& channel,
                            std::span<const EqualizationTarget> targets,
                            EqualizeOptions options = {});

} // namespace ionaddr
