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

#include "ionaddr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ionaddr/error.hpp"
#include "ionaddr/io.hpp"

namespace ionaddr {

void PixelGrid::validate() const
{
    if (width == 0 || height == 0) {
        throw DomainError("pixel grid must be nonempty");
    }
    if (!(pitch_um > 0.0)) {
        throw DomainError("pixel pitch must be positive");
    }
}

void CameraImage::validate() const
{
    grid.validate();
    if (pixels.size() != grid.width * grid.height) {
        throw DomainError("pixel buffer does not match grid dimensions");
    }
    if (std::any_of(pixels.begin(), pixels.end(), [](double v) { return !(v >= 0.0); })) {
        throw DomainError("pixel values must be nonnegative");
    }
}

CameraImage render_image(const BeamProfile& profile, double transverse_waist_um, const PixelGrid& grid,
                         double background, double noise_sigma, std::uint64_t seed)
{
    profile.validate();
    grid.validate();
    if (!(transverse_waist_um > 0.0)) {
        throw DomainError("transverse waist must be positive");
    }
    if (!(noise_sigma >= 0.0)) {
        throw DomainError("noise sigma must be nonnegative");
    }

    std::vector<double> along(grid.width);
    for (std::size_t ix = 0; ix < grid.width; ++ix) {
        along[ix] = intensity_at(profile, grid.x_um(ix));
    }

    CameraImage image(grid);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
    for (std::size_t iy = 0; iy < grid.height; ++iy) {
        const double v = grid.y_um(iy) / transverse_waist_um;
        const double across = std::exp(-2.0 * v * v);
        for (std::size_t ix = 0; ix < grid.width; ++ix) {
            double value = background + along[ix] * across;
            if (noise_sigma > 0.0) {
                value += noise(rng);
            }
            image.at(ix, iy) = std::max(value, 0.0);
        }
    }
    return image;
}

CameraImage subtract_background(const CameraImage& image, std::size_t border_px)
{
    image.validate();
    const auto& g = image.grid;
    if (border_px == 0 || g.width <= 2 * border_px || g.height <= 2 * border_px) {
        std::ostringstream msg;
        msg << "degenerate geometry: " << g.width << "x" << g.height << " image has no interior inside a "
            << border_px << "-pixel border";
        throw DomainError(msg.str());
    }

    std::vector<double> frame;
    frame.reserve(2 * border_px * (g.width + g.height));
    for (std::size_t iy = 0; iy < g.height; ++iy) {
        const bool edge_row = iy < border_px || iy >= g.height - border_px;
        for (std::size_t ix = 0; ix < g.width; ++ix) {
            if (edge_row || ix < border_px || ix >= g.width - border_px) {
                frame.push_back(image.at(ix, iy));
            }
        }
    }
    // lower median: commutes with the clamp below, so a second pass is a no-op
    const auto mid = frame.begin() + static_cast<std::ptrdiff_t>((frame.size() - 1) / 2);
    std::nth_element(frame.begin(), mid, frame.end());
    const double level = *mid;

    CameraImage out = image;
    for (auto& v : out.pixels) {
        v = std::max(v - level, 0.0);
    }
    return out;
}

CameraImage stitch_images(std::span<const CameraImage> images)
{
    if (images.empty()) {
        throw DomainError("nothing to stitch");
    }
    CameraImage out = images.front();
    out.validate();
    for (std::size_t k = 1; k < images.size(); ++k) {
        const auto& img = images[k];
        if (!(img.grid == out.grid) || img.pixels.size() != out.pixels.size()) {
            std::ostringstream msg;
            msg << "image " << k << " grid does not match image 0";
            throw DomainError(msg.str());
        }
        std::transform(out.pixels.begin(), out.pixels.end(), img.pixels.begin(), out.pixels.begin(),
                       [](double a, double b) { return std::max(a, b); });
    }
    return out;
}

namespace {

// Parameter interval of p(s) = foot + s u that stays within [lo, hi] on one axis.
bool clip_axis(double foot, double dir, double lo, double hi, double& s_min, double& s_max)
{
    constexpr double kParallel = 1e-12;
    if (std::abs(dir) < kParallel) {
        return foot >= lo - 1e-9 && foot <= hi + 1e-9;
    }
    double a = (lo - foot) / dir;
    double b = (hi - foot) / dir;
    if (a > b) {
        std::swap(a, b);
    }
    s_min = std::max(s_min, a);
    s_max = std::min(s_max, b);
    return s_min <= s_max;
}

double bilinear(const CameraImage& image, double x, double y)
{
    const auto& g = image.grid;
    auto locate = [&](double coord, double origin, std::size_t n, std::size_t& i0, double& frac) {
        if (n == 1) {
            i0 = 0;
            frac = 0.0;
            return;
        }
        const double f = std::clamp((coord - origin) / g.pitch_um, 0.0, static_cast<double>(n - 1));
        i0 = std::min(static_cast<std::size_t>(f), n - 2);
        frac = f - static_cast<double>(i0);
    };
    std::size_t ix = 0;
    std::size_t iy = 0;
    double tx = 0.0;
    double ty = 0.0;
    locate(x, g.origin_x_um, g.width, ix, tx);
    locate(y, g.origin_y_um, g.height, iy, ty);
    const std::size_t ix1 = g.width == 1 ? ix : ix + 1;
    const std::size_t iy1 = g.height == 1 ? iy : iy + 1;
    const double top = (1.0 - tx) * image.at(ix, iy) + tx * image.at(ix1, iy);
    const double bottom = (1.0 - tx) * image.at(ix, iy1) + tx * image.at(ix1, iy1);
    return (1.0 - ty) * top + ty * bottom;
}

} // namespace

std::vector<SectionSample> cross_section(const CameraImage& image, double axis_angle_rad, double offset_um)
{
    image.validate();
    const auto& g = image.grid;
    const double ux = std::cos(axis_angle_rad);
    const double uy = std::sin(axis_angle_rad);
    const double fx = -offset_um * uy;
    const double fy = offset_um * ux;

    double s_min = -std::numeric_limits<double>::infinity();
    double s_max = std::numeric_limits<double>::infinity();
    const bool hit = clip_axis(fx, ux, g.origin_x_um, g.x_um(g.width - 1), s_min, s_max) &&
                     clip_axis(fy, uy, g.origin_y_um, g.y_um(g.height - 1), s_min, s_max);
    if (!hit) {
        throw EmptySectionError("section line misses the image");
    }

    const auto k_lo = static_cast<long long>(std::ceil(s_min / g.pitch_um - 1e-9));
    const auto k_hi = static_cast<long long>(std::floor(s_max / g.pitch_um + 1e-9));
    if (k_hi < k_lo) {
        throw EmptySectionError("section line crosses the image between samples");
    }
    std::vector<SectionSample> out;
    out.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (long long k = k_lo; k <= k_hi; ++k) {
        const double s = static_cast<double>(k) * g.pitch_um;
        out.push_back({s, bilinear(image, fx + s * ux, fy + s * uy)});
    }
    return out;
}

namespace {

double interpolate_section(std::span<const SectionSample> section, double x)
{
    const auto it = std::lower_bound(section.begin(), section.end(), x,
                                     [](const SectionSample& s, double v) { return s.position_um < v; });
    if (it == section.end()) {
        return section.back().intensity;
    }
    if (it == section.begin() || it->position_um == x) {
        return it->intensity;
    }
    const auto& a = *(it - 1);
    const auto& b = *it;
    const double t = (x - a.position_um) / (b.position_um - a.position_um);
    return (1.0 - t) * a.intensity + t * b.intensity;
}

} // namespace

double intensity_crosstalk_at(std::span<const SectionSample> section, double x_addressed_um, double x_neighbor_um)
{
    if (section.empty()) {
        throw EmptySectionError("empty section");
    }
    const double lo = section.front().position_um;
    const double hi = section.back().position_um;
    for (double x : {x_addressed_um, x_neighbor_um}) {
        if (x < lo || x > hi) {
            std::ostringstream msg;
            msg << "position " << x << " um outside section span [" << lo << ", " << hi << "]";
            throw DomainError(msg.str());
        }
    }
    const double addressed = interpolate_section(section, x_addressed_um);
    if (!(addressed > 0.0)) {
        throw NormalizationError("zero intensity at the addressed site");
    }
    return interpolate_section(section, x_neighbor_um) / addressed;
}

void write_section_csv(std::ostream& out, std::span<const SectionSample> section)
{
    out << "position[um],intensity[arb]\n";
    std::ostringstream row;
    row.precision(17);
    for (const auto& s : section) {
        row.str({});
        row << s.position_um << ',' << s.intensity << '\n';
        out << row.str();
    }
}

double McpmtGeometry::extent_um() const noexcept
{
    return n_channels == 0 ? 0.0 : static_cast<double>(n_channels - 1) * pitch_um() + channel_width_um;
}

void McpmtGeometry::validate() const
{
    if (!(channel_width_um > 0.0) || !(channel_gap_um > 0.0)) {
        throw DomainError("MCPMT channel width and gap must be positive");
    }
    if (n_channels == 0) {
        throw DomainError("MCPMT needs at least one channel");
    }
    if (!(magnification > 0.0) || !(psf_sigma_um > 0.0)) {
        throw DomainError("MCPMT magnification and PSF width must be positive");
    }
}

std::vector<ChannelAssignment> map_ions_to_channels(const IonChain& chain, const McpmtGeometry& geometry,
                                                    double alignment_offset_um)
{
    chain.validate();
    geometry.validate();
    const double pitch = geometry.pitch_um();
    const double extent = geometry.extent_um();

    std::vector<ChannelAssignment> out;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        ChannelAssignment a;
        a.image_position_um = geometry.magnification * chain.positions_um[i] + alignment_offset_um;
        const double x = a.image_position_um;
        if (x < 0.0 || x > extent) {
            std::ostringstream msg;
            msg << chain.label(i) << " images at " << x << " um, outside the detector [0, " << extent << "]";
            throw RangeError(msg.str());
        }
        // probability mass of the PSF inside [lo, hi)
        const double scale = 1.0 / (geometry.psf_sigma_um * std::numbers::sqrt2);
        auto mass = [&](double lo, double hi) {
            return 0.5 * (std::erfc((lo - x) * scale) - std::erfc((hi - x) * scale));
        };

        const auto slot = static_cast<std::size_t>(std::floor(x / pitch));
        const std::size_t k = std::min(slot, geometry.n_channels - 1);
        const double into = x - static_cast<double>(k) * pitch;
        if (into < geometry.channel_width_um) {
            a.channel = k;
        } else {
            a.in_gap = true;
            const double to_right = static_cast<double>(k + 1) * pitch - x;
            const double to_left = into - geometry.channel_width_um;
            a.channel = (to_right < to_left && k + 1 < geometry.n_channels) ? k + 1 : k;
        }

        double others = 0.0;
        double gaps = 0.0;
        for (std::size_t c = 0; c < geometry.n_channels; ++c) {
            const double lo = static_cast<double>(c) * pitch;
            const double m = mass(lo, lo + geometry.channel_width_um);
            if (c == a.channel) {
                a.collected_fraction = m;
            } else {
                others += m;
            }
            if (c + 1 < geometry.n_channels) {
                gaps += mass(lo + geometry.channel_width_um, lo + pitch);
            }
        }
        a.leakage = others;
        a.off_detector = gaps + 0.5 * std::erfc(x * scale) + 0.5 * std::erfc((extent - x) * scale);
        out.push_back(a);
    }
    return out;
}

double write_pgm(const std::filesystem::path& path, const CameraImage& image, PgmEncoding encoding,
                 unsigned maxval, double count_scale)
{
    image.validate();
    if (maxval == 0 || maxval > 65535) {
        throw DomainError("PGM maxval must be in [1, 65535]");
    }
    if (!(count_scale > 0.0)) {
        const double peak = *std::max_element(image.pixels.begin(), image.pixels.end());
        count_scale = peak > 0.0 ? peak / maxval : 1.0;
    }

    const auto& g = image.grid;
    std::string body;
    {
        std::ostringstream header;
        header << (encoding == PgmEncoding::Ascii ? "P2" : "P5") << '\n'
               << g.width << ' ' << g.height << '\n'
               << maxval << '\n';
        body = header.str();
    }
    const bool wide = maxval > 255;
    std::ostringstream ascii;
    for (std::size_t iy = 0; iy < g.height; ++iy) {
        for (std::size_t ix = 0; ix < g.width; ++ix) {
            const double counts = std::clamp(std::round(image.at(ix, iy) / count_scale), 0.0,
                                             static_cast<double>(maxval));
            const auto c = static_cast<unsigned>(counts);
            if (encoding == PgmEncoding::Ascii) {
                ascii << c << (ix + 1 == g.width ? '\n' : ' ');
            } else if (wide) {
                body.push_back(static_cast<char>((c >> 8) & 0xFF));
                body.push_back(static_cast<char>(c & 0xFF));
            } else {
                body.push_back(static_cast<char>(c));
            }
        }
    }
    body += ascii.str();

    nlohmann::json sidecar = {
        {"width", g.width},
        {"height", g.height},
        {"pitch_um", g.pitch_um},
        {"origin_x_um", g.origin_x_um},
        {"origin_y_um", g.origin_y_um},
        {"magnification", image.magnification},
        {"count_scale", count_scale},
        {"maxval", maxval},
    };
    write_file_atomic(path, body);
    write_file_atomic(std::filesystem::path(path.string() + ".json"), sidecar.dump(2) + "\n");
    return count_scale;
}

namespace {

std::string next_token(std::istream& in)
{
    std::string token;
    char c = 0;
    while (in.get(c)) {
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
            if (!token.empty()) {
                return token;
            }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!token.empty()) {
                return token;
            }
            continue;
        }
        token.push_back(c);
    }
    return token;
}

} // namespace

CameraImage read_pgm(const std::filesystem::path& path)
{
    const std::filesystem::path sidecar_path(path.string() + ".json");
    if (!std::filesystem::exists(sidecar_path)) {
        throw IoError("missing sidecar " + sidecar_path.string());
    }
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar " + sidecar_path.string() + ": " + e.what());
    }

    std::istringstream in(read_file(path));
    const std::string magic = next_token(in);
    if (magic != "P2" && magic != "P5") {
        throw IoError(path.string() + ": not a P2/P5 graymap");
    }
    std::size_t width = 0;
    std::size_t height = 0;
    unsigned maxval = 0;
    try {
        width = std::stoul(next_token(in));
        height = std::stoul(next_token(in));
        maxval = static_cast<unsigned>(std::stoul(next_token(in)));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed graymap header");
    }
    if (maxval == 0 || maxval > 65535) {
        throw IoError(path.string() + ": bad maxval");
    }

    CameraImage image;
    try {
        image.grid.width = width;
        image.grid.height = height;
        image.grid.pitch_um = sidecar.at("pitch_um").get<double>();
        image.grid.origin_x_um = sidecar.value("origin_x_um", 0.0);
        image.grid.origin_y_um = sidecar.value("origin_y_um", 0.0);
        image.magnification = sidecar.value("magnification", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad sidecar " + sidecar_path.string() + ": " + e.what());
    }
    if (sidecar.value("width", width) != width || sidecar.value("height", height) != height) {
        throw IoError("geometry mismatch between " + path.string() + " and its sidecar");
    }
    const double scale = sidecar.value("count_scale", 1.0);
    image.pixels.resize(width * height);

    if (magic == "P2") {
        for (auto& v : image.pixels) {
            const std::string tok = next_token(in);
            if (tok.empty()) {
                throw IoError(path.string() + ": truncated pixel data");
            }
            v = std::stod(tok) * scale;
        }
    } else {
        // exactly one whitespace byte follows maxval; next_token consumed it
        const bool wide = maxval > 255;
        for (auto& v : image.pixels) {
            unsigned c = 0;
            char b0 = 0;
            if (!in.get(b0)) {
                throw IoError(path.string() + ": truncated pixel data");
            }
            c = static_cast<unsigned char>(b0);
            if (wide) {
                char b1 = 0;
                if (!in.get(b1)) {
                    throw IoError(path.string() + ": truncated pixel data");
                }
                c = (c << 8) | static_cast<unsigned char>(b1);
            }
            v = static_cast<double>(c) * scale;
        }
    }
    image.validate();
    return image;
}

} // namespace ionaddr
