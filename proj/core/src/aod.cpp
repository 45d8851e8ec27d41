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

#include "ionaddr/aod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ionaddr/error.hpp"

namespace ionaddr {

namespace {

constexpr double kBudgetSlack = 1e-12;
constexpr double kFrequencyResolutionMhz = 1e-9;

} // namespace

void AodChannel::validate() const
{
    if (position_coefficient_um_per_mhz == 0.0 || !std::isfinite(position_coefficient_um_per_mhz)) {
        throw DomainError("AOD position coefficient must be finite and nonzero");
    }
    if (!(nominal_waist_um > 0.0)) {
        throw DomainError("AOD nominal waist must be positive");
    }
    if (!std::isfinite(center_frequency_mhz) || !std::isfinite(center_position_um)) {
        throw DomainError("AOD anchor must be finite");
    }
}

double AodChannel::position_um(double frequency) const noexcept
{
    return center_position_um + position_coefficient_um_per_mhz * (frequency - center_frequency_mhz);
}

double AodChannel::frequency_mhz(double position) const noexcept
{
    return center_frequency_mhz + (position - center_position_um) / position_coefficient_um_per_mhz;
}

double tone_to_position(const AodChannel& channel, double frequency_mhz) noexcept
{
    return channel.position_um(frequency_mhz);
}

AodChannel calibrate_channel(double center_frequency_mhz, FrequencyPosition ref1,
                             FrequencyPosition ref2, double waist_um)
{
    if (ref1.frequency_mhz == ref2.frequency_mhz) {
        std::ostringstream msg;
        msg << "degenerate calibration: both references at " << ref1.frequency_mhz << " MHz";
        throw CalibrationError(msg.str());
    }
    AodChannel channel;
    channel.center_frequency_mhz = center_frequency_mhz;
    channel.position_coefficient_um_per_mhz =
        (ref2.position_um - ref1.position_um) / (ref2.frequency_mhz - ref1.frequency_mhz);
    channel.center_position_um =
        ref1.position_um + channel.position_coefficient_um_per_mhz * (center_frequency_mhz - ref1.frequency_mhz);
    channel.nominal_waist_um = waist_um;
    channel.validate();
    return channel;
}

double ToneSet::amplitude_sum() const noexcept
{
    return std::accumulate(tones.begin(), tones.end(), 0.0,
                           [](double acc, const DriveTone& t) { return acc + t.amplitude; });
}

void ToneSet::validate(bool enforce_budget) const
{
    for (std::size_t i = 0; i < tones.size(); ++i) {
        const auto& t = tones[i];
        if (!(t.amplitude >= 0.0 && t.amplitude <= 1.0)) {
            std::ostringstream msg;
            msg << "tone " << i << " amplitude " << t.amplitude << " outside [0, 1]";
            throw ToneSetError(msg.str());
        }
        if (!std::isfinite(t.frequency_mhz)) {
            throw ToneSetError("tone frequency must be finite");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(tones[j].frequency_mhz - t.frequency_mhz) < kFrequencyResolutionMhz) {
                std::ostringstream msg;
                msg << "tones " << j << " and " << i << " share frequency " << t.frequency_mhz << " MHz";
                throw ToneSetError(msg.str());
            }
        }
    }
    if (enforce_budget && amplitude_sum() > 1.0 + kBudgetSlack) {
        std::ostringstream msg;
        msg << "saturation budget exceeded: sum of amplitudes " << amplitude_sum() << " > 1";
        throw ToneSetError(msg.str());
    }
}

std::vector<GaussianSpot> StrayModel::generate(const AodChannel& channel, const ToneSet& tones) const
{
    std::vector<GaussianSpot> out;
    out.reserve(ghosts.size() * tones.tones.size());
    for (const auto& tone : tones.tones) {
        const double x = channel.position_um(tone.frequency_mhz);
        const double intensity = tone.amplitude * tone.amplitude;
        for (const auto& g : ghosts) {
            out.push_back({g.relative_amplitude * intensity, x + g.offset_um,
                           g.waist_um > 0.0 ? g.waist_um : channel.nominal_waist_um});
        }
    }
    return out;
}

BeamProfile toneset_to_profile(const AodChannel& channel, const ToneSet& tones,
                               const std::optional<StrayModel>& stray, ProfileOptions options)
{
    channel.validate();
    tones.validate(options.enforce_budget);

    BeamProfile profile;
    profile.floor = options.floor;
    profile.spots.reserve(tones.tones.size());
    for (const auto& tone : tones.tones) {
        profile.spots.push_back({tone.amplitude * tone.amplitude, channel.position_um(tone.frequency_mhz),
                                 channel.nominal_waist_um});
    }
    if (stray) {
        profile.stray_spots = stray->generate(channel, tones);
    }
    profile.validate();
    return profile;
}

ToneSet equalize_amplitudes(const AodChannel& channel, std::span<const EqualizationTarget> targets,
                            EqualizeOptions options)
{
    channel.validate();
    if (targets.empty()) {
        throw DomainError("equalize_amplitudes: no targets");
    }

    ToneSet out;
    std::vector<double> amplitude(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        if (!(t.desired_rate > 0.0) || t.measured_rate < 0.0) {
            std::ostringstream msg;
            msg << "target " << i << ": desired rate must be positive and measured rate nonnegative";
            throw DomainError(msg.str());
        }
        const double f = channel.frequency_mhz(t.position_um);
        if (options.frequency_range_mhz &&
            (f < options.frequency_range_mhz->first || f > options.frequency_range_mhz->second)) {
            std::ostringstream msg;
            msg << "target " << i << " at " << t.position_um << " um needs " << f
                << " MHz, outside the AOD scan range";
            throw BudgetError(msg.str());
        }
        // rate gain needed relative to an equally driven tone
        const double gain = t.measured_rate > 0.0 ? t.desired_rate / t.measured_rate : t.desired_rate;
        const double intensity = options.arms == DrivenArms::One ? gain * gain : gain;
        amplitude[i] = std::sqrt(intensity);
        out.tones.push_back({f, 0.0, 0.0});
    }

    const double norm = options.enforce_budget
                            ? std::accumulate(amplitude.begin(), amplitude.end(), 0.0)
                            : *std::max_element(amplitude.begin(), amplitude.end());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double a = amplitude[i] / norm;
        if (a < options.min_amplitude) {
            std::ostringstream msg;
            msg << "infeasible amplitude budget: tone " << i << " (target " << targets[i].position_um
                << " um) needs amplitude " << a << " below the floor " << options.min_amplitude;
            throw BudgetError(msg.str());
        }
        out.tones[i].amplitude = std::min(a, 1.0);
    }
    out.validate(options.enforce_budget);
    return out;
}

} // namespace ionaddr
