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

#include "ionaddr/optics.hpp"

#include <cmath>
#include <sstream>

#include "ionaddr/error.hpp"

namespace ionaddr {

double GaussianSpot::operator()(double x_um) const noexcept
{
    const double u = (x_um - center_um) / waist_um;
    return amplitude * std::exp(-2.0 * u * u);
}

void GaussianSpot::validate() const
{
    if (!(waist_um > 0.0) || !std::isfinite(waist_um)) {
        std::ostringstream msg;
        msg << "spot waist must be positive, got " << waist_um;
        throw DomainError(msg.str());
    }
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
        std::ostringstream msg;
        msg << "spot amplitude must be nonnegative, got " << amplitude;
        throw DomainError(msg.str());
    }
    if (!std::isfinite(center_um)) {
        throw DomainError("spot center must be finite");
    }
}

void BeamProfile::validate() const
{
    for (const auto& s : spots) {
        s.validate();
    }
    for (const auto& s : stray_spots) {
        s.validate();
    }
    if (!(floor >= 0.0) || !std::isfinite(floor)) {
        throw DomainError("profile floor must be nonnegative");
    }
}

BeamProfile BeamProfile::translated(double shift_um) const
{
    BeamProfile out = *this;
    for (auto& s : out.spots) {
        s.center_um += shift_um;
    }
    for (auto& s : out.stray_spots) {
        s.center_um += shift_um;
    }
    return out;
}

void OpticsConstants::validate() const
{
    if (!(wavelength_nm > 0.0)) {
        throw DomainError("wavelength must be positive");
    }
    if (!(numerical_aperture > 0.0 && numerical_aperture < 1.0)) {
        throw DomainError("numerical aperture must lie in (0, 1)");
    }
}

double intensity_at(const BeamProfile& profile, double x_um) noexcept
{
    double total = profile.floor;
    for (const auto& s : profile.spots) {
        total += s(x_um);
    }
    for (const auto& s : profile.stray_spots) {
        total += s(x_um);
    }
    return total;
}

double diffraction_limit_um(const OpticsConstants& constants)
{
    constants.validate();
    return 0.61 * constants.wavelength_nm / constants.numerical_aperture * 1e-3;
}

Extremum profile_extremum(const BeamProfile& profile, Window window, double step_um)
{
    if (!std::isfinite(window.lo_um) || !std::isfinite(window.hi_um) ||
        window.hi_um < window.lo_um) {
        throw DomainError("profile_extremum: empty window");
    }
    if (!(step_um > 0.0)) {
        throw DomainError("profile_extremum: grid step must be positive");
    }

    const auto n = static_cast<long long>(std::floor((window.hi_um - window.lo_um) / step_um + 1e-9));
    Extremum best{window.lo_um, intensity_at(profile, window.lo_um)};
    for (long long k = 1; k <= n; ++k) {
        const double x = window.lo_um + static_cast<double>(k) * step_um;
        const double v = intensity_at(profile, x);
        // relative slack so that mirror-image peaks sampled with rounding
        // noise still resolve toward the smaller position
        if (v > best.intensity + 1e-12 * std::abs(best.intensity)) {
            best = {x, v};
        }
    }
    return best;
}

} // namespace ionaddr
