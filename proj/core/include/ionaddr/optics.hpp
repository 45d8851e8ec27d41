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

#include <vector>

namespace ionaddr {

/// One Gaussian term of a 1-D intensity field along the ion-chain axis.
/// `waist_um` is the 1/e^2 intensity radius.
struct GaussianSpot {
    double amplitude = 0.0;
    double center_um = 0.0;
    double waist_um = 1.0;

    /// A * exp(-2 ((x - center) / waist)^2)
    double operator()(double x_um) const noexcept;

    void validate() const;
};

/// Intensity field of one Raman arm at the ion plane: principal addressing
/// spots, low-amplitude ghost spots and a constant pedestal.
struct BeamProfile {
    std::vector<GaussianSpot> spots;
    std::vector<GaussianSpot> stray_spots;
    double floor = 0.0;

    void validate() const;

    /// Copy with every spot center moved by `shift_um`.
    BeamProfile translated(double shift_um) const;
};

struct OpticsConstants {
    double wavelength_nm = 0.0;
    double numerical_aperture = 0.0;

    void validate() const;
};

double intensity_at(const BeamProfile& profile, double x_um) noexcept;

/// Rayleigh radius 0.61 * lambda / NA, in micrometres.
double diffraction_limit_um(const OpticsConstants& constants);

struct Window {
    double lo_um = 0.0;
    double hi_um = 0.0;
};

struct Extremum {
    double position_um = 0.0;
    double intensity = 0.0;
};

inline constexpr double kDefaultExtremumStepUm = 0.01;

// Grid search; ties go to the smaller position.
Extremum profile_extremum(const BeamProfile& profile, Window window,
                          double step_um = kDefaultExtremumStepUm);

} // namespace ionaddr
