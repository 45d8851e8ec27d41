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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ionaddr/optics.hpp"

namespace ionaddr {

struct IonChain {
    std::vector<double> positions_um; // strictly increasing
    std::vector<std::string> labels;  // optional; empty or one per ion

    void validate() const;
    std::size_t size() const noexcept { return positions_um.size(); }
    std::string label(std::size_t index) const;
};

enum class AddressingMode { SingleSide, DoubleSide };

/// Marker for a global beam whose intensity is the same at every ion.
struct UniformField {};

using SecondArm = std::variant<UniformField, BeamProfile>;

/// Two Raman arms focused on a chain. The Rabi rate follows
/// Omega ∝ sqrt(I1) sqrt(I2) and is normalized to `peak_rabi` (rad/s) at the
/// addressed position.
struct AddressingSystem {
    BeamProfile arm1;
    SecondArm arm2 = UniformField{};
    AddressingMode mode = AddressingMode::SingleSide;
    double peak_rabi = 0.0;

    void validate() const;
};

/// Unnormalized drive sqrt(I1(x) I2(x)); the uniform arm contributes 1.
double drive_strength(const AddressingSystem& system, double x_um);

double rabi_rate_at(const AddressingSystem& system, double x_um, double x_addressed_um);

double crosstalk_ratio(const AddressingSystem& system, double x_neighbor_um, double x_addressed_um);

/// Dense row-major matrix; row = addressed ion, column = victim ion.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Builds the system that addresses ion `addressed` of `chain`.
using SystemBuilder = std::function<AddressingSystem(std::size_t addressed, const IonChain& chain)>;

/// Entry (i, j) = crosstalk_ratio at ion j while ion i is addressed.
Matrix crosstalk_matrix(const SystemBuilder& builder, const IonChain& chain);

/// Induced Rabi rates (rad/s) under the per-ion coupling model
///   Omega_ij = kappa_j * crosstalk_ratio(system_i, x_j, x_i)
/// where kappa_j is ion j's own addressed rate.
Matrix induced_rate_matrix(const SystemBuilder& builder, const IonChain& chain,
                           std::span<const double> addressed_rates);

enum class Normalization {
    Victim,    // induced rate / victim's own addressed rate
    Addressed, // induced rate / rate of the ion currently addressed
};

/// Divides an induced-rate matrix by its diagonal along the chosen axis.
Matrix normalize_rates(const Matrix& induced, Normalization normalization);

struct ModeComparison {
    double intensity_crosstalk = 0.0;
    double rabi_crosstalk_ssa = 0.0;
    double rabi_crosstalk_dsa = 0.0;
};

/// Single- vs double-side crosstalk for one neighbor pair when both sides
/// share `profile`.
ModeComparison compare_ssa_dsa(const BeamProfile& profile, double x_addressed_um, double x_neighbor_um);
ModeComparison compare_ssa_dsa(double intensity_crosstalk);

struct LiteratureSystem {
    std::string_view name;
    std::string_view numerical_aperture;
    double intensity_crosstalk;
    std::string_view reported_rabi_crosstalk;
    double ion_spacing_um;
};

/// Published individual-addressing systems, for side-by-side reports.
std::span<const LiteratureSystem> literature_systems();

void write_matrix_csv(std::ostream& out, const Matrix& matrix, const IonChain& chain,
                      std::string_view unit);

} // namespace ionaddr
