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

#include "ionaddr/dynamics.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "ionaddr/error.hpp"

namespace ionaddr {

void SequenceTiming::validate() const
{
    for (double d : {doppler_us, eit_us, pump_us, raman_us, detect_us}) {
        if (!(d >= 0.0)) {
            throw DomainError("sequence durations must be nonnegative");
        }
    }
    if (repetitions < 1) {
        throw DomainError("sequence needs at least one repetition");
    }
}

double excitation_probability(double rabi_rad_s, double t_s, DecayModel decay)
{
    if (!(t_s >= 0.0)) {
        throw DomainError("interaction time must be nonnegative");
    }
    if (!(decay.rate_per_s >= 0.0)) {
        throw DomainError("decay rate must be nonnegative");
    }
    // sin^2 form avoids the 1 - cos cancellation at small angles
    const double half = std::sin(0.5 * rabi_rad_s * t_s);
    double p = half * half;
    if (decay.rate_per_s > 0.0) {
        p += 0.5 * std::cos(rabi_rad_s * t_s) * -std::expm1(-decay.rate_per_s * t_s);
    }
    return std::clamp(p, 0.0, 1.0);
}

SequenceDuration sequence_duration(const SequenceTiming& timing, double raman_us)
{
    timing.validate();
    if (!(raman_us >= 0.0)) {
        throw DomainError("Raman interaction time must be nonnegative");
    }
    SequenceDuration d;
    d.per_shot_us = timing.doppler_us + timing.eit_us + timing.pump_us + raman_us + timing.detect_us;
    d.total_us = d.per_shot_us * static_cast<double>(timing.repetitions);
    return d;
}

namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t substream_seed(std::uint64_t master, std::uint64_t ion, std::uint64_t point) noexcept
{
    const std::uint64_t s0 = mix(master);
    const std::uint64_t s1 = mix(s0 ^ (ion * 0x9E3779B97F4A7C15ULL + 1));
    return mix(s1 ^ (point * 0xBF58476D1CE4E5B9ULL + 2));
}

std::size_t sample_excitations(double p, std::size_t shots, std::uint64_t seed)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("probability outside [0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::size_t excited = 0;
    for (std::size_t k = 0; k < shots; ++k) {
        // 53-bit uniform in [0, 1); std::uniform_real_distribution is not
        // specified bit-for-bit across standard libraries
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        excited += u < p ? 1 : 0;
    }
    return excited;
}

AddressingSystem ScanTemplate::at(double beam_position_um) const
{
    AddressingSystem system;
    system.arm1 = scanned_shape.translated(beam_position_um);
    system.peak_rabi = 1.0;
    std::visit(
        [&](const auto& arm) {
            using T = std::decay_t<decltype(arm)>;
            if constexpr (std::is_same_v<T, UniformField>) {
                system.arm2 = UniformField{};
                system.mode = AddressingMode::SingleSide;
            } else if constexpr (std::is_same_v<T, CoScanned>) {
                system.arm2 = system.arm1;
                system.mode = AddressingMode::DoubleSide;
            } else {
                system.arm2 = arm;
                system.mode = AddressingMode::DoubleSide;
            }
        },
        second_arm);
    return system;
}

std::vector<double> scan_rabi_rates(const ScanTemplate& scan, const IonChain& chain, double beam_position_um)
{
    if (scan.peak_rabi.size() != chain.size()) {
        throw DomainError("scan template needs one peak Rabi rate per ion");
    }
    const AddressingSystem here = scan.at(beam_position_um);
    std::vector<double> rates(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const double x = chain.positions_um[j];
        const double reference = drive_strength(scan.at(x), x);
        if (!(reference > 0.0)) {
            std::ostringstream msg;
            msg << "no drive at " << chain.label(j) << " with the scanned beam centered on it";
            throw NormalizationError(msg.str());
        }
        rates[j] = scan.peak_rabi[j] * drive_strength(here, x) / reference;
    }
    return rates;
}

namespace {

ScanPoint sample_point(double variable, double rabi, double t_s, DecayModel decay, std::size_t shots,
                       std::uint64_t seed)
{
    ScanPoint pt;
    pt.scan_variable = variable;
    pt.rabi_rad_s = rabi;
    pt.p_exact = excitation_probability(rabi, t_s, decay);
    pt.shots = shots;
    pt.p_estimate =
        static_cast<double>(sample_excitations(pt.p_exact, shots, seed)) / static_cast<double>(shots);
    return pt;
}

std::vector<IonSeries> make_series(const IonChain& chain, std::size_t points)
{
    std::vector<IonSeries> ions(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) {
        ions[j].label = chain.label(j);
        ions[j].points.reserve(points);
    }
    return ions;
}

} // namespace

ScanResult frequency_scan(const ScanTemplate& scan, const AodChannel& channel, const IonChain& chain,
                          std::span<const double> frequencies_mhz, double t_fixed_us,
                          const SequenceTiming& timing, std::uint64_t seed, DecayModel decay)
{
    if (frequencies_mhz.empty()) {
        throw DomainError("frequency scan needs at least one frequency");
    }
    if (!(t_fixed_us > 0.0)) {
        throw DomainError("frequency scan needs a positive interaction time");
    }
    channel.validate();
    chain.validate();
    timing.validate();
    scan.scanned_shape.validate();

    ScanResult result;
    result.ions = make_series(chain, frequencies_mhz.size());
    const double t_s = t_fixed_us * 1e-6;
    for (std::size_t k = 0; k < frequencies_mhz.size(); ++k) {
        const double f = frequencies_mhz[k];
        const auto rates = scan_rabi_rates(scan, chain, tone_to_position(channel, f));
        for (std::size_t j = 0; j < chain.size(); ++j) {
            result.ions[j].points.push_back(
                sample_point(f, rates[j], t_s, decay, timing.repetitions, substream_seed(seed, j, k)));
        }
        result.acquisition_us += sequence_duration(timing, t_fixed_us).total_us;
    }
    return result;
}

ScanResult time_scan(const AddressingSystem& system, const IonChain& chain, double x_addressed_um,
                     std::span<const double> times_us, const SequenceTiming& timing, DecayModel decay,
                     std::uint64_t seed, std::span<const double> addressed_rates)
{
    if (times_us.empty()) {
        throw DomainError("time scan needs at least one time");
    }
    for (std::size_t k = 0; k < times_us.size(); ++k) {
        if (!(times_us[k] >= 0.0) || (k > 0 && times_us[k] < times_us[k - 1])) {
            throw DomainError("time scan times must be nonnegative and sorted ascending");
        }
    }
    if (!addressed_rates.empty() && addressed_rates.size() != chain.size()) {
        throw DomainError("one addressed Rabi rate per ion is required");
    }
    chain.validate();
    timing.validate();

    std::vector<double> rates(chain.size());
    for (std::size_t j = 0; j < chain.size(); ++j) {
        const double kappa = addressed_rates.empty() ? system.peak_rabi : addressed_rates[j];
        rates[j] = kappa * crosstalk_ratio(system, chain.positions_um[j], x_addressed_um);
    }

    ScanResult result;
    result.ions = make_series(chain, times_us.size());
    for (std::size_t k = 0; k < times_us.size(); ++k) {
        const double t_s = times_us[k] * 1e-6;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            result.ions[j].points.push_back(
                sample_point(times_us[k], rates[j], t_s, decay, timing.repetitions, substream_seed(seed, j, k)));
        }
        result.acquisition_us += sequence_duration(timing, times_us[k]).total_us;
    }
    return result;
}

void write_scan_csv(std::ostream& out, std::span<const IonSeries> ions, std::string_view variable_unit)
{
    out << "scan_variable[" << variable_unit << "],ion_label,p_estimate[prob],shots[count],p_exact[prob]\n";
    std::ostringstream row;
    row.precision(17);
    for (const auto& ion : ions) {
        for (const auto& pt : ion.points) {
            row.str({});
            row << pt.scan_variable << ',' << ion.label << ',' << pt.p_estimate << ',' << pt.shots << ','
                << pt.p_exact << '\n';
            out << row.str();
        }
    }
}

} // namespace ionaddr
