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
#include <random>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/crosstalk.hpp"
#include "ionaddr/error.hpp"

using namespace ionaddr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

AodChannel paper_channel()
{
    return calibrate_channel(77.5, {77.07, 0.0}, {78.03, 5.5}, 0.95);
}

} // namespace

TEST_CASE("two-point calibration")
{
    const AodChannel ch = paper_channel();
    CHECK_THAT(ch.position_coefficient_um_per_mhz, WithinRel(5.5 / 0.96, 1e-14));
    CHECK_THAT(ch.position_coefficient_um_per_mhz, WithinAbs(5.7292, 5e-5));
    CHECK_THAT(ch.center_position_um, WithinAbs(2.463541666666, 1e-9));
    CHECK_THAT(tone_to_position(ch, 77.07), WithinAbs(0.0, 1e-13));
    CHECK_THAT(tone_to_position(ch, 78.03), WithinRel(5.5, 1e-13));
    CHECK(tone_to_position(ch, 77.5) == ch.center_position_um);

    const AodChannel unit = calibrate_channel(77.5, {77.5, 0.0}, {78.5, 1.0}, 1.0);
    CHECK(unit.position_coefficient_um_per_mhz == 1.0);
    CHECK(unit.center_position_um == 0.0);

    CHECK_THROWS_AS(calibrate_channel(77.5, {77.0, 0.0}, {77.0, 1.0}, 1.0), CalibrationError);
    CHECK_THROWS_AS(calibrate_channel(77.5, {77.0, 0.0}, {78.0, 0.0}, 1.0), DomainError);
}

TEST_CASE("frequency map is affine and invertible")
{
    const AodChannel ch = paper_channel();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> f(70.0, 90.0);
    for (int i = 0; i < 500; ++i) {
        const double f1 = f(rng);
        const double f2 = f(rng);
        const double lhs = tone_to_position(ch, f1) - tone_to_position(ch, f2);
        CHECK_THAT(lhs, WithinAbs(ch.position_coefficient_um_per_mhz * (f1 - f2), 1e-12));
        CHECK_THAT(ch.frequency_mhz(ch.position_um(f1)), WithinAbs(f1, 1e-12));
    }
}

TEST_CASE("tone sets map to spots with amplitude-squared intensity")
{
    const AodChannel ch = paper_channel();
    SECTION("one full tone")
    {
        const auto p = toneset_to_profile(ch, ToneSet{{{77.07, 1.0, 0.0}}});
        REQUIRE(p.spots.size() == 1);
        CHECK_THAT(p.spots[0].center_um, WithinAbs(0.0, 1e-13));
        CHECK(p.spots[0].amplitude == 1.0);
        CHECK(p.spots[0].waist_um == 0.95);
        CHECK(p.stray_spots.empty());
    }
    SECTION("two half tones")
    {
        const auto p = toneset_to_profile(ch, ToneSet{{{77.07, 0.5, 0.0}, {78.03, 0.5, 1.0}}});
        REQUIRE(p.spots.size() == 2);
        CHECK(p.spots[0].amplitude == 0.25);
        CHECK(p.spots[1].amplitude == 0.25);
        CHECK_THAT(p.spots[1].center_um, WithinRel(5.5, 1e-13));
    }
    SECTION("ten tones at the ion spacing")
    {
        ToneSet t;
        for (int k = 0; k < 10; ++k) {
            t.tones.push_back({77.07 + 0.96 * k, 0.1, 0.0});
        }
        const auto p = toneset_to_profile(ch, t);
        REQUIRE(p.spots.size() == 10);
        for (std::size_t k = 1; k < 10; ++k) {
            CHECK_THAT(p.spots[k].center_um - p.spots[k - 1].center_um, WithinRel(5.5, 1e-12));
        }
    }
    SECTION("peak intensity equals a squared")
    {
        for (double a : {0.1, 0.37, 0.8, 1.0}) {
            const auto p = toneset_to_profile(ch, ToneSet{{{78.0, a, 0.0}}});
            CHECK_THAT(intensity_at(p, ch.position_um(78.0)), WithinRel(a * a, 1e-15));
        }
    }
}

TEST_CASE("tone set validation")
{
    const AodChannel ch = paper_channel();
    CHECK_THROWS_AS(toneset_to_profile(ch, ToneSet{{{77.0, 0.7, 0.0}, {78.0, 0.7, 0.0}}}), ToneSetError);
    CHECK_NOTHROW(toneset_to_profile(ch, ToneSet{{{77.0, 0.7, 0.0}, {78.0, 0.7, 0.0}}}, std::nullopt, {false, 0.0}));
    CHECK_THROWS_AS(toneset_to_profile(ch, ToneSet{{{77.0, 1.2, 0.0}}}, std::nullopt, {false, 0.0}), ToneSetError);
    CHECK_THROWS_AS(toneset_to_profile(ch, ToneSet{{{77.0, -0.1, 0.0}}}), ToneSetError);
    CHECK_THROWS_AS(toneset_to_profile(ch, ToneSet{{{77.0, 0.3, 0.0}, {77.0, 0.3, 0.0}}}), ToneSetError);
    CHECK_NOTHROW(toneset_to_profile(ch, ToneSet{{{77.0, 0.3, 0.0}, {77.001, 0.3, 0.0}}}));
}

TEST_CASE("stray model places ghosts relative to each tone")
{
    const AodChannel ch = paper_channel();
    StrayModel stray{{{-5.5, 1e-3, 0.0}, {5.5, 1e-3, 0.0}}};
    const auto p = toneset_to_profile(ch, ToneSet{{{77.07, 0.5, 0.0}}}, stray);
    REQUIRE(p.stray_spots.size() == 2);
    CHECK_THAT(p.stray_spots[1].center_um, WithinRel(5.5, 1e-12));
    CHECK(p.stray_spots[1].amplitude == 1e-3 * 0.25);
    CHECK(p.stray_spots[1].waist_um == 0.95);
    const double ratio = intensity_at(p, 5.5) / intensity_at(p, 0.0);
    CHECK_THAT(ratio, WithinRel(1e-3, 1e-9));
}

TEST_CASE("amplitude equalization")
{
    const AodChannel ch = paper_channel();
    SECTION("equal rates give equal amplitudes")
    {
        const std::vector<EqualizationTarget> t{{0.0, 1.0}, {5.5, 1.0}};
        const auto tones = equalize_amplitudes(ch, t);
        REQUIRE(tones.tones.size() == 2);
        CHECK(tones.tones[0].amplitude == tones.tones[1].amplitude);
        CHECK_THAT(tones.amplitude_sum(), WithinAbs(1.0, 1e-15));
        CHECK_THAT(tones.tones[0].frequency_mhz, WithinAbs(77.07, 1e-12));
        CHECK_THAT(tones.tones[1].frequency_mhz, WithinAbs(78.03, 1e-12));
    }
    SECTION("single target takes the full budget")
    {
        const std::vector<EqualizationTarget> t{{2.0, 5.0}};
        const auto tones = equalize_amplitudes(ch, t);
        CHECK(tones.tones.at(0).amplitude == 1.0);
    }
    SECTION("measured rates equalized to the smaller one, both arms on the tone set")
    {
        const double ra = 43.78;
        const double rb = 32.42;
        const std::vector<EqualizationTarget> t{{0.0, rb, ra}, {5.5, rb, rb}};
        const auto tones = equalize_amplitudes(ch, t, {DrivenArms::Both, true, 1e-3, std::nullopt});
        CHECK_THAT(tones.tones[0].amplitude / tones.tones[1].amplitude, WithinRel(0.8605351740323671, 1e-12));
    }
    SECTION("requested rates reproduced through the single-arm Rabi map")
    {
        const std::vector<double> desired{1.0, 0.6, 0.35, 0.8};
        std::vector<EqualizationTarget> t;
        for (std::size_t k = 0; k < desired.size(); ++k) {
            t.push_back({5.5 * static_cast<double>(k), desired[k], 0.0});
        }
        const auto tones = equalize_amplitudes(ch, t);
        const BeamProfile profile = toneset_to_profile(ch, tones);
        AddressingSystem ssa{profile, UniformField{}, AddressingMode::SingleSide, 1.0};
        const double base = drive_strength(ssa, 0.0) / desired[0];
        for (std::size_t k = 0; k < desired.size(); ++k) {
            CHECK_THAT(drive_strength(ssa, t[k].position_um) / base, WithinRel(desired[k], 1e-6));
        }
    }
    SECTION("infeasible budget names the tone")
    {
        const std::vector<EqualizationTarget> t{{0.0, 1.0}, {5.5, 1e-5}};
        try {
            equalize_amplitudes(ch, t);
            FAIL("expected a budget error");
        } catch (const BudgetError& e) {
            CHECK(std::string(e.what()).find("tone 1") != std::string::npos);
        }
    }
    SECTION("target outside the frequency range")
    {
        const std::vector<EqualizationTarget> t{{0.0, 1.0}, {50.0, 1.0}};
        EqualizeOptions opt;
        opt.frequency_range_mhz = std::pair{70.0, 85.0};
        CHECK_THROWS_AS(equalize_amplitudes(ch, t, opt), BudgetError);
    }
    SECTION("bad rates")
    {
        const std::vector<EqualizationTarget> t{{0.0, 0.0}};
        CHECK_THROWS_AS(equalize_amplitudes(ch, t), DomainError);
        CHECK_THROWS_AS(equalize_amplitudes(ch, std::span<const EqualizationTarget>{}), DomainError);
    }
}
