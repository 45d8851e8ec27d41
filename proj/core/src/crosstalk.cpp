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

#include "ionaddr/crosstalk.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "ionaddr/error.hpp"

namespace ionaddr {

void IonChain::validate() const
{
    for (std::size_t i = 1; i < positions_um.size(); ++i) {
        if (!(positions_um[i] > positions_um[i - 1])) {
            std::ostringstream msg;
            msg << "ion positions must be strictly increasing (index " << i << ")";
            throw DomainError(msg.str());
        }
    }
    if (!labels.empty() && labels.size() != positions_um.size()) {
        throw DomainError("ion labels must match the number of positions");
    }
}

std::string IonChain::label(std::size_t index) const
{
    if (index < labels.size()) {
        return labels[index];
    }
    return "ion" + std::to_string(index);
}

void AddressingSystem::validate() const
{
    arm1.validate();
    const bool uniform = std::holds_alternative<UniformField>(arm2);
    if (mode == AddressingMode::SingleSide && !uniform) {
        throw DomainError("single-side addressing requires a uniform second arm");
    }
    if (mode == AddressingMode::DoubleSide) {
        if (uniform) {
            throw DomainError("double-side addressing requires two beam profiles");
        }
        std::get<BeamProfile>(arm2).validate();
    }
    if (!(peak_rabi >= 0.0)) {
        throw DomainError("peak Rabi rate must be nonnegative");
    }
}

double drive_strength(const AddressingSystem& system, double x_um)
{
    const double first = std::sqrt(intensity_at(system.arm1, x_um));
    if (const auto* other = std::get_if<BeamProfile>(&system.arm2)) {
        return first * std::sqrt(intensity_at(*other, x_um));
    }
    return first;
}

namespace {

void check_addressed(const AddressingSystem& system, double x_addressed_um)
{
    if (!(intensity_at(system.arm1, x_addressed_um) > 0.0)) {
        std::ostringstream msg;
        msg << "zero arm-1 intensity at addressed position " << x_addressed_um << " um";
        throw NormalizationError(msg.str());
    }
    if (const auto* other = std::get_if<BeamProfile>(&system.arm2);
        other && !(intensity_at(*other, x_addressed_um) > 0.0)) {
        std::ostringstream msg;
        msg << "zero arm-2 intensity at addressed position " << x_addressed_um << " um";
        throw NormalizationError(msg.str());
    }
}

} // namespace

double crosstalk_ratio(const AddressingSystem& system, double x_neighbor_um, double x_addressed_um)
{
    system.validate();
    check_addressed(system, x_addressed_um);
    // per-arm ratios keep the square roots separate so DSA with identical arms
    // reproduces I(x1)/I(x0) to rounding
    double ratio = std::sqrt(intensity_at(system.arm1, x_neighbor_um) / intensity_at(system.arm1, x_addressed_um));
    if (const auto* other = std::get_if<BeamProfile>(&system.arm2)) {
        ratio *= std::sqrt(intensity_at(*other, x_neighbor_um) / intensity_at(*other, x_addressed_um));
    }
    return ratio;
}

double rabi_rate_at(const AddressingSystem& system, double x_um, double x_addressed_um)
{
    return system.peak_rabi * crosstalk_ratio(system, x_um, x_addressed_um);
}

namespace {

std::string pair_context(const IonChain& chain, std::size_t i, std::size_t j)
{
    std::ostringstream msg;
    msg << "addressed " << chain.label(i) << ", victim " << chain.label(j) << " (" << i << "," << j << "): ";
    return msg.str();
}

// Calls entry(i, j, ratio) for every pair; the diagonal ratio is 1 once the
// addressed site is known to normalize.
template <typename Entry>
Matrix build_matrix(const SystemBuilder& builder, const IonChain& chain, Entry&& entry)
{
    chain.validate();
    if (chain.size() == 0) {
        throw DomainError("crosstalk matrix needs at least one ion");
    }
    const std::size_t n = chain.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const AddressingSystem system = builder(i, chain);
        for (std::size_t j = 0; j < n; ++j) {
            try {
                const double ratio =
                    i == j ? (check_addressed(system, chain.positions_um[i]), 1.0)
                           : crosstalk_ratio(system, chain.positions_um[j], chain.positions_um[i]);
                m(i, j) = entry(i, j, ratio);
            } catch (const NormalizationError& e) {
                throw NormalizationError(pair_context(chain, i, j) + e.what());
            }
        }
    }
    return m;
}

} // namespace

Matrix crosstalk_matrix(const SystemBuilder& builder, const IonChain& chain)
{
    return build_matrix(builder, chain, [](std::size_t, std::size_t, double ratio) { return ratio; });
}

Matrix induced_rate_matrix(const SystemBuilder& builder, const IonChain& chain,
                           std::span<const double> addressed_rates)
{
    if (addressed_rates.size() != chain.size()) {
        throw DomainError("one addressed Rabi rate per ion is required");
    }
    return build_matrix(builder, chain, [&](std::size_t, std::size_t j, double ratio) {
        return addressed_rates[j] * ratio;
    });
}

Matrix normalize_rates(const Matrix& induced, Normalization normalization)
{
    if (induced.rows() != induced.cols()) {
        throw DomainError("induced-rate matrix must be square");
    }
    Matrix out(induced.rows(), induced.cols());
    for (std::size_t i = 0; i < induced.rows(); ++i) {
        for (std::size_t j = 0; j < induced.cols(); ++j) {
            const double reference = normalization == Normalization::Victim ? induced(j, j) : induced(i, i);
            if (!(reference > 0.0)) {
                std::ostringstream msg;
                msg << "zero reference Rabi rate normalizing entry (" << i << "," << j << ")";
                throw NormalizationError(msg.str());
            }
            out(i, j) = induced(i, j) / reference;
        }
    }
    return out;
}

ModeComparison compare_ssa_dsa(const BeamProfile& profile, double x_addressed_um, double x_neighbor_um)
{
    AddressingSystem ssa{profile, UniformField{}, AddressingMode::SingleSide, 1.0};
    AddressingSystem dsa{profile, profile, AddressingMode::DoubleSide, 1.0};

    ModeComparison out;
    out.intensity_crosstalk = intensity_at(profile, x_neighbor_um) / intensity_at(profile, x_addressed_um);
    out.rabi_crosstalk_ssa = crosstalk_ratio(ssa, x_neighbor_um, x_addressed_um);
    out.rabi_crosstalk_dsa = crosstalk_ratio(dsa, x_neighbor_um, x_addressed_um);

    const double square = out.rabi_crosstalk_ssa * out.rabi_crosstalk_ssa;
    if (std::abs(square - out.rabi_crosstalk_dsa) > 4 * std::numeric_limits<double>::epsilon() * out.rabi_crosstalk_dsa) {
        throw std::logic_error("single-side crosstalk squared differs from double-side crosstalk");
    }
    return out;
}

ModeComparison compare_ssa_dsa(double intensity_crosstalk)
{
    if (!(intensity_crosstalk >= 0.0)) {
        throw DomainError("intensity crosstalk must be nonnegative");
    }
    return {intensity_crosstalk, std::sqrt(intensity_crosstalk), intensity_crosstalk};
}

std::span<const LiteratureSystem> literature_systems()
{
    static constexpr std::array<LiteratureSystem, 5> kSystems{{
        {"MCAOMs", "0.37", 1e-4, "1%-2%", 5.0},
        {"GLIAS", "0.37", 1e-4, "1% (estimate)", 4.0},
        {"AODs (single-side)", "0.6", 4e-6, "0.2%", 3.5},
        {"MEMS", "0.6", 4e-6, "0.2%-0.6%", 5.0},
        {"AODs (double-side)", "0.37x2", 1e-3, "0.06%-0.1%", 5.5},
    }};
    return kSystems;
}

void write_matrix_csv(std::ostream& out, const Matrix& matrix, const IonChain& chain, std::string_view unit)
{
    out << "addressed\\victim[" << unit << "]";
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        out << ',' << chain.label(j);
    }
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        out << chain.label(i);
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
            out << ',' << matrix(i, j);
        }
        out << '\n';
    }
}

} // namespace ionaddr
