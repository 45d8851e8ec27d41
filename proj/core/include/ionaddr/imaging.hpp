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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ionaddr/crosstalk.hpp"
#include "ionaddr/optics.hpp"

namespace ionaddr {

/// Pixel lattice at the ion plane. Pixel (ix, iy) is centered at
/// (origin_x + ix * pitch, origin_y + iy * pitch).
struct PixelGrid {
    std::size_t width = 0;
    std::size_t height = 0;
    double pitch_um = 1.0;
    double origin_x_um = 0.0;
    double origin_y_um = 0.0;

    double x_um(std::size_t ix) const noexcept { return origin_x_um + static_cast<double>(ix) * pitch_um; }
    double y_um(std::size_t iy) const noexcept { return origin_y_um + static_cast<double>(iy) * pitch_um; }
    void validate() const;

    bool operator==(const PixelGrid&) const = default;
};

struct CameraImage {
    PixelGrid grid;
    std::vector<double> pixels; // row-major, `height` rows of `width`
    double magnification = 1.0; // re-imaging magnification, metadata only

    CameraImage() = default;
    explicit CameraImage(PixelGrid g, double fill = 0.0) : grid(g), pixels(g.width * g.height, fill) {}

    double& at(std::size_t ix, std::size_t iy) { return pixels[iy * grid.width + ix]; }
    double at(std::size_t ix, std::size_t iy) const { return pixels[iy * grid.width + ix]; }

    void validate() const;
};

/// Separable forward model: background + I(x) exp(-2 (y / w_t)^2) + noise,
/// clamped at zero. I(x) is the full 1-D profile including ghosts and floor.
CameraImage render_image(const BeamProfile& profile, double transverse_waist_um, const PixelGrid& grid,
                         double background, double noise_sigma, std::uint64_t seed);

inline constexpr std::size_t kDefaultBorderPx = 2;

/// Subtracts the (lower) median of the outer `border_px` frame and clamps at 0.
CameraImage subtract_background(const CameraImage& image, std::size_t border_px = kDefaultBorderPx);

/// Pixelwise maximum of background-subtracted exposures on one grid.
CameraImage stitch_images(std::span<const CameraImage> images);

struct SectionSample {
    double position_um = 0.0;
    double intensity = 0.0;
};

/// Bilinear samples along the line { p : p . n = offset }, n = (-sin a, cos a),
/// taken every pitch at positions s = k * pitch measured along
/// u = (cos a, sin a) from the foot point offset * n.
std::vector<SectionSample> cross_section(const CameraImage& image, double axis_angle_rad, double offset_um);

/// I(x_neighbor) / I(x_addressed), linearly interpolated along the section.
double intensity_crosstalk_at(std::span<const SectionSample> section, double x_addressed_um,
                              double x_neighbor_um);

void write_section_csv(std::ostream& out, std::span<const SectionSample> section);

/// Segmented photomultiplier at the image plane. Channel k spans
/// [k * pitch, k * pitch + width) in image-plane micrometres.
struct McpmtGeometry {
    double channel_width_um = 800.0;
    double channel_gap_um = 200.0;
    std::size_t n_channels = 32;
    double magnification = 200.0;
    double psf_sigma_um = 50.0;

    double pitch_um() const noexcept { return channel_width_um + channel_gap_um; }
    double extent_um() const noexcept;
    void validate() const;
};

struct ChannelAssignment {
    std::size_t channel = 0;
    double image_position_um = 0.0;
    double collected_fraction = 0.0;
    double leakage = 0.0;      // PSF mass landing on every other channel
    double off_detector = 0.0; // gaps plus outside the array
    bool in_gap = false;       // image fell between channels; nearest channel assigned
};

std::vector<ChannelAssignment> map_ions_to_channels(const IonChain& chain, const McpmtGeometry& geometry,
                                                    double alignment_offset_um);

enum class PgmEncoding { Ascii, Binary }; // P2, P5

/// Writes a portable graymap plus a JSON sidecar (`<path>.json`) with the
/// grid geometry and the intensity per count. Returns the count scale used;
/// a non-positive `count_scale` picks max(pixel) / maxval.
double write_pgm(const std::filesystem::path& path, const CameraImage& image, PgmEncoding encoding,
                 unsigned maxval = 65535, double count_scale = 0.0);

CameraImage read_pgm(const std::filesystem::path& path);

} // namespace ionaddr
