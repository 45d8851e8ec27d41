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
#include <optional>
#include <span>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/optics.hpp"

namespace ionaddr {

struct FitOptions {
    std::size_t max_iterations = 500;
    double relative_tolerance = 1e-9; // on the sum of squared residuals
    double gradient_tolerance = 1e-9;
};

/// Least-squares fit of a multi-Gaussian profile. Spots are sorted by center;
/// the per-parameter vectors follow the order (A, x, w) spot by spot.
struct FitResult {
    std::vector<GaussianSpot> spots;
    double residual_norm = 0.0;         // sqrt(sum r^2) at the returned point
    double initial_residual_norm = 0.0; // same, at the initialization
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> sensitivity; // |dr/dp| column norms at the optimum
    std::vector<double> uncertainty; // rms residual / sensitivity
};

/// Initial spots from peak detection: local maxima above median + 5 MAD,
/// highest first, waist = 0.8493 * FWHM. Missing spots are seeded greedily
/// on the remaining residual.
std::vector<GaussianSpot> seed_spots(std::span<const double> x, std::span<const double> y, std::size_t n_spots);

FitResult fit_multi_gaussian(std::span<const double> x, std::span<const double> y, std::size_t n_spots,
                             const std::optional<std::vector<GaussianSpot>>& init = std::nullopt,
                             FitOptions options = {});

struct SpacingAndWaist {
    std::vector<double> spacings_um;
    std::optional<double> mean_spacing_um; // empty for a single spot
    double mean_waist_um = 0.0;
};

SpacingAndWaist extract_spacing_and_waist(const FitResult& fit);

/// A Gaussian fitted to excitation-vs-frequency data, expressed in both
/// frequency and position units. The fitted width is reported as-is
/// (`waist_um_direct`) and also under the assumption that the response goes
/// as intensity squared (`waist_um_intensity_squared` = direct * sqrt 2).
struct ScanPeak {
    double amplitude = 0.0;
    double center_mhz = 0.0;
    double center_um = 0.0;
    double waist_mhz = 0.0;
    double waist_um_direct = 0.0;
    double waist_um_intensity_squared = 0.0;
};

std::vector<ScanPeak> interpret_scan_fit(const FitResult& fit, const AodChannel& channel);

struct RabiFit {
    double omega = 0.0;      // rad/s
    double decay_rate = 0.0; // 1/s
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double period_s() const noexcept;
};

/// Fits P(t) = (1 - exp(-gamma t) cos(Omega t)) / 2. Without `init_omega` the
/// start comes from the dominant spectral peak of 2P - 1. Throws
/// AmbiguityError when the data do not cover half a Rabi period.
RabiFit fit_rabi_flopping(std::span<const double> t_s, std::span<const double> p,
                          std::optional<double> init_omega = std::nullopt, FitOptions options = {});

/// arccos(1 - 2p) / t. Valid while the ion has not passed half a flop.
double extract_slow_rabi(double p_final, double t_s);

double rabi_crosstalk(double p_final_victim, double t_s, double omega_reference);

} // namespace ionaddr
