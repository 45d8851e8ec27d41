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

#include <benchmark/benchmark.h>

#include <numbers>
#include <vector>

#include "ionaddr/aod.hpp"
#include "ionaddr/dynamics.hpp"
#include "ionaddr/estimation.hpp"
#include "ionaddr/imaging.hpp"
#include "ionaddr/optics.hpp"

using namespace ionaddr;

namespace {

BeamProfile ten_spots()
{
    BeamProfile p;
    for (int k = 0; k < 10; ++k) {
        p.spots.push_back({1.0, 5.5 * k, 0.95});
    }
    return p;
}

void BM_IntensityAt(benchmark::State& state)
{
    const BeamProfile p = ten_spots();
    double x = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(intensity_at(p, x));
        x += 1e-3;
    }
}
BENCHMARK(BM_IntensityAt);

void BM_FitMultiGaussian(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    BeamProfile p;
    for (std::size_t k = 0; k < n; ++k) {
        p.spots.push_back({1.0 - 0.1 * static_cast<double>(k), 5.5 * static_cast<double>(k), 0.95});
    }
    std::vector<double> x, y;
    for (double v = -5.0; v <= 5.5 * static_cast<double>(n); v += 0.05) {
        x.push_back(v);
        y.push_back(intensity_at(p, v));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_multi_gaussian(x, y, n));
    }
}
BENCHMARK(BM_FitMultiGaussian)->Arg(1)->Arg(2)->Arg(4);

void BM_FrequencyScan(benchmark::State& state)
{
    const AodChannel channel{77.5, 5.5 / 0.96, 2.4635416666666665, 0.95};
    const IonChain chain{{0.0, 5.5}, {"A", "B"}};
    ScanTemplate scan;
    scan.scanned_shape.spots = {{1.0, 0.0, 0.95}};
    scan.peak_rabi = {2.0 * std::numbers::pi * 43.78e3, 2.0 * std::numbers::pi * 32.42e3};
    std::vector<double> f;
    for (double v = 76.5; v <= 78.5; v += 0.02) {
        f.push_back(v);
    }
    SequenceTiming timing;
    timing.repetitions = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(frequency_scan(scan, channel, chain, f, 4.0, timing, 1));
    }
}
BENCHMARK(BM_FrequencyScan)->Arg(100)->Arg(10000);

void BM_RenderImage(benchmark::State& state)
{
    const BeamProfile p = ten_spots();
    const PixelGrid grid{700, 60, 0.1, -10.0, -3.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_image(p, 1.0, grid, 100.0, 3.0, 5));
    }
}
BENCHMARK(BM_RenderImage);

} // namespace

BENCHMARK_MAIN();
