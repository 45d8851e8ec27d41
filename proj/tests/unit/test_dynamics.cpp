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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/dynamics.hpp"
#include "ionaddr/error.hpp"

using namespace ionaddr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

BeamProfile calibrated_spot(double x0, double ghost = 1e-3)
{
    BeamProfile p;
    p.spots.push_back({1.0, x0, 0.95});
    if (ghost > 0.0) {
        p.stray_spots.push_back({ghost, x0 - 5.5, 0.95});
        p.stray_spots.push_back({ghost, x0 + 5.5, 0.95});
    }
    return p;
}

AodChannel paper_channel()
{
    return calibrate_channel(77.5, {77.07, 0.0}, {78.03, 5.5}, 0.95);
}

std::string csv_of(const ScanResult& r, std::string_view unit)
{
    std::ostringstream out;
    write_scan_csv(out, r.ions, unit);
    return out.str();
}

} // namespace

TEST_CASE("qubit constants")
{
    const QubitSpec q;
    CHECK(q.hyperfine_splitting_ghz == 12.64);
    CHECK(q.initial_excitation == 0.0);
}

TEST_CASE("excitation probability examples")
{
    CHECK(excitation_probability(kTwoPi * 43.78e3, 0.0) == 0.0);
    CHECK_THAT(excitation_probability(kTwoPi * 43.78e3, 22.84e-6), WithinAbs(0.0, 1e-6));
    CHECK_THAT(excitation_probability(kTwoPi * 42.28, 5e-3), WithinAbs(0.38, 5e-4));
    CHECK_THAT(excitation_probability(kTwoPi * 42.28, 5e-3), WithinRel(0.379919863, 1e-8));
    CHECK_THAT(excitation_probability(1000.0, std::numbers::pi / 1000.0), WithinAbs(1.0, 1e-15));
    CHECK_THROWS_AS(excitation_probability(1.0, -1.0), DomainError);
    CHECK_THROWS_AS(excitation_probability(1.0, 1.0, {-1.0}), DomainError);
}

TEST_CASE("periodicity, bounds and decay envelope")
{
    for (double omega : {kTwoPi * 43.78e3, kTwoPi * 32.42e3, 275.0}) {
        const double period = kTwoPi / omega;
        for (int k = 0; k < 200; ++k) {
            const double t = period * k / 37.0;
            const double p = excitation_probability(omega, t);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            CHECK_THAT(excitation_probability(omega, t + period), WithinAbs(p, 1e-12));
        }
    }
    const DecayModel decay{3e3};
    const double omega = kTwoPi * 43.78e3;
    for (int k = 0; k <= 400; ++k) {
        const double t = 1e-6 * k;
        const double p = excitation_probability(omega, t, decay);
        const double env = std::exp(-decay.rate_per_s * t);
        CHECK(p >= 0.5 * (1.0 - env) - 1e-15);
        CHECK(p <= 0.5 * (1.0 + env) + 1e-15);
        CHECK_THAT(p, WithinAbs(0.5 * (1.0 - env * std::cos(omega * t)), 1e-14));
    }
}

TEST_CASE("sequence timing")
{
    const SequenceTiming defaults;
    const auto d = sequence_duration(defaults, 100.0);
    CHECK(d.per_shot_us == 3120.0);
    CHECK(d.total_us == 312000.0);
    CHECK(sequence_duration(defaults, 0.0).per_shot_us == 3020.0);
    const SequenceTiming bare{0.0, 0.0, 0.0, 0.0, 0.0, 1};
    CHECK(sequence_duration(bare, 5000.0).total_us == 5000.0);
    CHECK_THROWS_AS(sequence_duration({0, 0, 0, 0, 0, 0}, 1.0), DomainError);
    CHECK_THROWS_AS(sequence_duration({-1, 0, 0, 0, 0, 1}, 1.0), DomainError);
    CHECK_THROWS_AS(sequence_duration(defaults, -1.0), DomainError);
}

TEST_CASE("seed splitting and sampling")
{
    CHECK(substream_seed(1, 0, 0) != substream_seed(1, 0, 1));
    CHECK(substream_seed(1, 0, 1) != substream_seed(1, 1, 0));
    CHECK(substream_seed(1, 2, 3) == substream_seed(1, 2, 3));
    CHECK(substream_seed(1, 2, 3) != substream_seed(2, 2, 3));

    CHECK(sample_excitations(0.0, 1000, 5) == 0);
    CHECK(sample_excitations(1.0, 1000, 5) == 1000);
    CHECK(sample_excitations(0.3, 777, 99) == sample_excitations(0.3, 777, 99));
    CHECK_THROWS_AS(sample_excitations(1.5, 10, 1), DomainError);
}

TEST_CASE("shot convergence at 1e4 shots")
{
    const std::size_t n = 10000;
    int within = 0;
    int trials = 0;
    for (double p : {0.02, 0.1, 0.38, 0.5, 0.77, 0.99}) {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const double est = static_cast<double>(sample_excitations(p, n, substream_seed(42, s, 0))) / n;
            const double sigma = std::sqrt(p * (1.0 - p) / n);
            within += std::abs(est - p) <= 3.0 * sigma ? 1 : 0;
            ++trials;
        }
    }
    // 3 sigma covers 99.7%; allow a single stray draw among the trials
    CHECK(within >= trials - 1);
}

TEST_CASE("time scan with victim coupling")
{
    const IonChain chain{{0.0, 5.5}, {"A", "B"}};
    const AddressingSystem sys{calibrated_spot(5.5), calibrated_spot(5.5), AddressingMode::DoubleSide, 0.0};
    const std::vector<double> rates{kTwoPi * 43.78e3 * 0.966, kTwoPi * 32.42e3};
    const std::vector<double> times{0.0, 2500.0, 5000.0};
    SequenceTiming timing;
    timing.repetitions = 10000;
    const auto r = time_scan(sys, chain, 5.5, times, timing, {}, 9, rates);
    REQUIRE(r.ions.size() == 2);
    CHECK(r.ions[0].label == "A");
    CHECK_THAT(r.ions[0].points[0].rabi_rad_s, WithinRel(rates[0] * 1e-3, 1e-12));
    CHECK_THAT(r.ions[1].points[0].rabi_rad_s, WithinRel(rates[1], 1e-12));
    CHECK_THAT(r.ions[0].points[2].p_exact, WithinAbs(0.38, 0.005));
    CHECK(r.ions[0].points[0].p_estimate == 0.0);
    CHECK_THAT(r.acquisition_us, WithinRel(10000.0 * (3020.0 * 3 + 7500.0), 1e-12));

    SECTION("empty crosstalk leaves the neighbor dark")
    {
        BeamProfile far;
        far.spots.push_back({1.0, 5.5, 0.95});
        const IonChain wide{{-500.0, 5.5}, {}};
        const auto dark = time_scan({far, far, AddressingMode::DoubleSide, 1e5}, wide, 5.5, times, timing, {}, 1);
        for (const auto& pt : dark.ions[0].points) {
            CHECK(pt.p_exact == 0.0);
            CHECK(pt.p_estimate == 0.0);
        }
    }
    SECTION("time grid must be sorted")
    {
        const std::vector<double> bad{0.0, 5.0, 1.0};
        CHECK_THROWS_AS(time_scan(sys, chain, 5.5, bad, timing, {}, 1, rates), DomainError);
        CHECK_THROWS_AS(time_scan(sys, chain, 5.5, std::vector<double>{}, timing, {}, 1, rates), DomainError);
    }
}

TEST_CASE("frequency scan")
{
    const AodChannel ch = paper_channel();
    const IonChain chain{{0.0, 5.5}, {"A", "B"}};
    ScanTemplate scan;
    scan.scanned_shape = calibrated_spot(0.0);
    scan.second_arm = UniformField{};
    scan.peak_rabi = {kTwoPi * 43.78e3, kTwoPi * 32.42e3};
    SequenceTiming timing;

    SECTION("half period at ion A's site inverts it")
    {
        const double t_half = 0.5 / 43.78e3 * 1e6;
        const std::vector<double> f{77.07};
        const auto r = frequency_scan(scan, ch, chain, f, t_half, timing, 5);
        CHECK_THAT(r.ions[0].points[0].p_exact, WithinAbs(1.0, 1e-12));
        CHECK(r.ions[0].points[0].p_estimate >= 0.95);
        CHECK(r.ions[0].points[0].shots == 100);
    }
    SECTION("far from every ion nothing happens")
    {
        BeamProfile clean;
        clean.spots.push_back({1.0, 0.0, 0.95});
        scan.scanned_shape = clean;
        const std::vector<double> f{ch.frequency_mhz(-5.0 * 0.95), ch.frequency_mhz(5.5 + 5.0 * 0.95)};
        const auto r = frequency_scan(scan, ch, chain, f, 4.0, timing, 5);
        for (const auto& ion : r.ions) {
            for (const auto& pt : ion.points) {
                CHECK(pt.p_exact < 1e-10);
                CHECK(pt.p_estimate == 0.0);
            }
        }
    }
    SECTION("response peaks sit 0.96 MHz apart")
    {
        std::vector<double> f;
        for (int k = 0; k <= 100; ++k) {
            f.push_back(76.51 + 0.02 * k);
        }
        const auto r = frequency_scan(scan, ch, chain, f, 4.0, timing, 5);
        std::size_t best[2] = {0, 0};
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t k = 0; k < f.size(); ++k) {
                if (r.ions[j].points[k].p_exact > r.ions[j].points[best[j]].p_exact) {
                    best[j] = k;
                }
            }
        }
        CHECK_THAT(f[best[1]] - f[best[0]], WithinAbs(0.96, 1e-9));
    }
    SECTION("co-scanned arms give the double-side response")
    {
        scan.second_arm = CoScanned{};
        const auto rates = scan_rabi_rates(scan, chain, 0.95);
        CHECK_THAT(rates[0], WithinRel(scan.peak_rabi[0] * std::exp(-2.0), 1e-6));
        scan.second_arm = UniformField{};
        CHECK_THAT(scan_rabi_rates(scan, chain, 0.95)[0], WithinRel(scan.peak_rabi[0] * std::exp(-1.0), 1e-6));
    }
    SECTION("bad inputs")
    {
        CHECK_THROWS_AS(frequency_scan(scan, ch, chain, std::vector<double>{}, 4.0, timing, 1), DomainError);
        CHECK_THROWS_AS(frequency_scan(scan, ch, chain, std::vector<double>{77.0}, 0.0, timing, 1), DomainError);
        scan.peak_rabi.pop_back();
        CHECK_THROWS_AS(frequency_scan(scan, ch, chain, std::vector<double>{77.0}, 4.0, timing, 1), DomainError);
    }
}

TEST_CASE("scan output is deterministic and independent of the scan grid")
{
    const AodChannel ch = paper_channel();
    const IonChain chain{{0.0, 5.5}, {"A", "B"}};
    ScanTemplate scan;
    scan.scanned_shape = calibrated_spot(0.0);
    scan.peak_rabi = {kTwoPi * 43.78e3, kTwoPi * 32.42e3};
    std::vector<double> f;
    for (int k = 0; k < 60; ++k) {
        f.push_back(76.8 + 0.025 * k);
    }
    const SequenceTiming timing;
    const auto a = frequency_scan(scan, ch, chain, f, 4.0, timing, 1234);
    const auto b = frequency_scan(scan, ch, chain, f, 4.0, timing, 1234);
    CHECK(csv_of(a, "MHz") == csv_of(b, "MHz"));
    const auto c = frequency_scan(scan, ch, chain, f, 4.0, timing, 1235);
    CHECK(csv_of(a, "MHz") != csv_of(c, "MHz"));

    // a point's draw depends only on (seed, ion, index), not on the other points
    const std::vector<double> head(f.begin(), f.begin() + 10);
    const auto d = frequency_scan(scan, ch, chain, head, 4.0, timing, 1234);
    for (std::size_t k = 0; k < head.size(); ++k) {
        CHECK(d.ions[1].points[k].p_estimate == a.ions[1].points[k].p_estimate);
    }
}

TEST_CASE("scan CSV layout")
{
    ScanResult r;
    r.ions.push_back({"A", {{77.07, 0.25, 100, 0.2512, 1.0}}});
    const std::string csv = csv_of(r, "MHz");
    CHECK(csv.rfind("scan_variable[MHz],ion_label,p_estimate[prob],shots[count],p_exact[prob]\n", 0) == 0);
    CHECK(csv.find("\n77.069999999999993,A,0.25,100,0.25119999999999998\n") != std::string::npos);
}
