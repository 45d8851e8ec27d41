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

#include "ionaddr/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ionaddr/error.hpp"
#include "ionaddr/io.hpp"
#include "ionaddr/serialization.hpp"

namespace ionaddr::cli {

namespace {

using nlohmann::json;

constexpr double kCrosstalkLevel = 1e-3;
constexpr double kReadoutTolerance = 0.01;
constexpr std::uint64_t kCrosstalkStream = 0xC7A1u;

std::string file_stem(std::string_view label)
{
    std::string out;
    for (char c : label) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_';
        out += keep ? c : '_';
    }
    return out.empty() ? "ion" : out;
}

json base_report(const ScenarioConfig& cfg, std::string_view command)
{
    json r;
    r["command"] = command;
    r["scenario"] = cfg.name;
    r["source"] = cfg.source;
    r["mode"] = mode_name(cfg.mode);
    r["timing"] = cfg.timing;
    r["decay_rate_per_s"] = cfg.decay.rate_per_s;
    if (cfg.seed) {
        r["seed"] = *cfg.seed;
    }
    return r;
}

void write_json(const std::filesystem::path& path, const json& doc)
{
    write_file_atomic(path, doc.dump(2) + "\n");
}

std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return out;
}

std::vector<double> estimates(const IonSeries& series)
{
    std::vector<double> p;
    p.reserve(series.points.size());
    for (const auto& pt : series.points) {
        p.push_back(pt.p_estimate);
    }
    return p;
}

std::string scan_csv(const ScanResult& scan, std::string_view unit)
{
    std::ostringstream csv;
    write_scan_csv(csv, scan.ions, unit);
    return csv.str();
}

std::vector<double> seconds(std::span<const double> times_us)
{
    std::vector<double> t;
    t.reserve(times_us.size());
    for (double v : times_us) {
        t.push_back(v * 1e-6);
    }
    return t;
}

std::vector<double> time_grid(double t_max_us, std::size_t points, std::string_view flag)
{
    if (!(t_max_us > 0.0)) {
        throw DomainError(std::string(flag) + " must be positive");
    }
    if (points < 5) {
        throw DomainError("--points must be at least 5");
    }
    return linspace(0.0, t_max_us, points);
}

BeamProfile scaled(BeamProfile profile, double factor)
{
    for (auto& s : profile.spots) {
        s.amplitude *= factor;
    }
    for (auto& s : profile.stray_spots) {
        s.amplitude *= factor;
    }
    profile.floor *= factor;
    return profile;
}

PixelGrid image_grid(const ImagingConfig& im, std::span<const double> positions)
{
    const auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
    PixelGrid g;
    g.pitch_um = im.pitch_um;
    g.origin_x_um = *lo - im.margin_um;
    g.origin_y_um = -im.margin_um;
    g.width = static_cast<std::size_t>(std::llround((*hi - *lo + 2.0 * im.margin_um) / im.pitch_um)) + 1;
    g.height = static_cast<std::size_t>(std::llround(2.0 * im.margin_um / im.pitch_um)) + 1;
    return g;
}

std::optional<double> readout(std::span<const SectionSample> section, double addressed, double neighbor)
{
    try {
        return intensity_crosstalk_at(section, addressed, neighbor);
    } catch (const DomainError&) {
        return std::nullopt;
    } catch (const NormalizationError&) {
        return std::nullopt;
    }
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::pair<std::vector<double>, std::vector<double>> read_xy_csv(const std::filesystem::path& path)
{
    const std::string text = read_file(path);
    std::vector<double> x;
    std::vector<double> y;
    std::istringstream lines(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto comma = line.find(',');
        double a = 0.0;
        double b = 0.0;
        const char* first = line.data();
        const char* mid = comma == std::string::npos ? nullptr : line.data() + comma;
        const char* last = line.data() + line.size();
        if (mid == nullptr) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected two comma-separated columns");
        }
        const auto [pa, ea] = std::from_chars(first, mid, a);
        const char* rest = mid + 1;
        const auto next = std::find(rest, last, ',');
        const auto [pb, eb] = std::from_chars(rest, next, b);
        if (ea != std::errc() || eb != std::errc() || pa != mid || pb != next) {
            if (x.empty() && lineno == 1) {
                continue; // header row
            }
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a numeric row");
        }
        x.push_back(a);
        y.push_back(b);
    }
    return {x, y};
}

std::pair<std::vector<double>, std::vector<double>> sample_profile_document(const std::filesystem::path& path)
{
    BeamProfile profile;
    try {
        profile = parse_json(read_file(path), path.string()).get<BeamProfile>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (profile.spots.empty()) {
        throw ConfigError(path.string() + ": profile has no spots to sample");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double w_min = lo;
    for (const auto& s : profile.spots) {
        lo = std::min(lo, s.center_um - 4.0 * s.waist_um);
        hi = std::max(hi, s.center_um + 4.0 * s.waist_um);
        w_min = std::min(w_min, s.waist_um);
    }
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / (w_min / 20.0))) + 1;
    std::vector<double> x = linspace(lo, hi, n);
    std::vector<double> y;
    y.reserve(n);
    for (double v : x) {
        y.push_back(intensity_at(profile, v));
    }
    return {x, y};
}

} // namespace

ScanFrequencyResult cmd_scan_frequency(const ScenarioConfig& config, const ScanFrequencyOptions& options)
{
    if (!(options.step_mhz > 0.0) || !(options.stop_mhz > options.start_mhz)) {
        throw DomainError("need --freq-stop > --freq-start and a positive --freq-step");
    }
    const std::uint64_t seed = config.require_seed("scan-frequency");
    const auto n = static_cast<std::size_t>(std::floor((options.stop_mhz - options.start_mhz) / options.step_mhz + 1e-9)) + 1;
    std::vector<double> freqs(n);
    for (std::size_t k = 0; k < n; ++k) {
        freqs[k] = options.start_mhz + options.step_mhz * static_cast<double>(k);
    }

    ScanFrequencyResult res;
    res.scan = frequency_scan(scan_template(config), config.channel, config.chain, freqs, options.raman_time_us,
                              config.timing, seed, config.decay);
    const auto dir = output_directory(config);
    res.csv_path = dir / "scan_frequency.csv";
    write_file_atomic(res.csv_path, scan_csv(res.scan, "MHz"));

    std::vector<std::string> problems;
    json fits = json::array();
    for (const auto& series : res.scan.ions) {
        const auto p = estimates(series);
        IonScanFit f;
        f.label = series.label;
        f.fit = fit_multi_gaussian(freqs, p, 1);
        f.peak = interpret_scan_fit(f.fit, config.channel).front();
        const bool flat = *std::max_element(p.begin(), p.end()) <= 0.0;
        const bool inside = f.peak.center_mhz >= options.start_mhz && f.peak.center_mhz <= options.stop_mhz;
        if (flat || !(f.peak.amplitude > 0.0) || !inside) {
            problems.push_back("no peak for ion " + series.label + " inside the scanned range");
        } else if (!f.fit.converged) {
            problems.push_back("fit for ion " + series.label + " did not converge");
        }
        json entry = f.peak;
        entry["label"] = f.label;
        entry["fit"] = f.fit;
        fits.push_back(entry);
        res.fits.push_back(std::move(f));
    }
    if (problems.empty()) {
        std::vector<double> centers;
        for (const auto& f : res.fits) {
            centers.push_back(f.peak.center_um);
        }
        std::sort(centers.begin(), centers.end());
        for (std::size_t k = 1; k < centers.size(); ++k) {
            res.spacings_um.push_back(centers[k] - centers[k - 1]);
        }
    }

    json report = base_report(config, "scan-frequency");
    report["scan"] = {{"start_mhz", options.start_mhz},
                      {"stop_mhz", options.stop_mhz},
                      {"step_mhz", options.step_mhz},
                      {"points", n},
                      {"raman_time_us", options.raman_time_us},
                      {"scan_arms", config.scan_arms == ScanArms::One ? "one" : "both"},
                      {"acquisition_s", res.scan.acquisition_us * 1e-6}};
    report["fits"] = fits;
    report["spacings_um"] = res.spacings_um;
    report["waist_note"] =
        "waist_um_direct is the fitted width mapped to position; waist_um_intensity_squared assumes the "
        "excitation follows intensity squared";
    report["problems"] = problems;
    res.report_path = dir / "scan_frequency_fit.json";
    write_json(res.report_path, report);

    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) {
            msg += (msg.empty() ? "" : "; ") + p;
        }
        throw FitError(msg);
    }
    return res;
}

RabiResult cmd_rabi(const ScenarioConfig& config, const RabiOptions& options)
{
    const std::uint64_t seed = config.require_seed("rabi");
    const auto times = time_grid(options.t_max_us, options.points, "--t-max");

    RabiResult res;
    res.addressed = ion_index(config, options.ion);
    const double x = config.chain.positions_um[res.addressed];
    res.scan = time_scan(addressing_system(config, res.addressed), config.chain, x, times, config.timing,
                         config.decay, seed, config.peak_rabi);
    const auto dir = output_directory(config);
    const std::string stem = "rabi_" + file_stem(config.chain.label(res.addressed));
    res.csv_path = dir / (stem + ".csv");
    write_file_atomic(res.csv_path, scan_csv(res.scan, "us"));

    const double peak = config.peak_rabi[res.addressed];
    res.nominal_period_us = peak > 0.0 ? 2.0 * std::numbers::pi / peak * 1e6 : 0.0;
    res.fit = fit_rabi_flopping(seconds(times), estimates(res.scan.ions[res.addressed]));

    json report = base_report(config, "rabi");
    report["addressed"] = config.chain.label(res.addressed);
    report["t_max_us"] = options.t_max_us;
    report["points"] = options.points;
    report["fit"] = res.fit;
    report["nominal_period_us"] = res.nominal_period_us;
    report["period_relative_error"] = res.fit.period_s() * 1e6 / res.nominal_period_us - 1.0;
    json victims = json::array();
    for (std::size_t j = 0; j < config.chain.size(); ++j) {
        if (j != res.addressed) {
            victims.push_back({{"label", config.chain.label(j)},
                               {"rabi_rad_s", res.scan.ions[j].points.front().rabi_rad_s},
                               {"p_final", res.scan.ions[j].points.back().p_estimate}});
        }
    }
    report["victims"] = victims;
    res.report_path = dir / (stem + ".json");
    write_json(res.report_path, report);
    if (!res.fit.converged) {
        throw FitError("Rabi fit for ion " + config.chain.label(res.addressed) + " did not converge");
    }
    return res;
}

CrosstalkResult cmd_crosstalk(const ScenarioConfig& config, const CrosstalkOptions& options)
{
    if (config.chain.size() < 2) {
        throw DomainError("crosstalk needs at least two ions");
    }
    const std::uint64_t seed = config.require_seed("crosstalk");
    const auto times = time_grid(options.t_long_us, options.points, "--t-long");
    const auto t_s = seconds(times);
    const double t_final = t_s.back();
    const auto dir = output_directory(config);

    CrosstalkResult res;
    res.analytic = crosstalk_matrix(system_builder(config), config.chain);
    const Matrix induced = induced_rate_matrix(system_builder(config), config.chain, config.peak_rabi);
    {
        std::ostringstream csv;
        write_matrix_csv(csv, res.analytic, config.chain, "ratio");
        write_file_atomic(dir / "crosstalk_matrix.csv", csv.str());
        csv.str({});
        write_matrix_csv(csv, induced, config.chain, "rad/s");
        write_file_atomic(dir / "induced_rates.csv", csv.str());
    }

    json entries = json::array();
    for (std::size_t i = 0; i < config.chain.size(); ++i) {
        const ScanResult scan =
            time_scan(addressing_system(config, i), config.chain, config.chain.positions_um[i], times, config.timing,
                      config.decay, substream_seed(seed, i, kCrosstalkStream), config.peak_rabi);
        write_file_atomic(dir / ("crosstalk_" + file_stem(config.chain.label(i)) + ".csv"), scan_csv(scan, "us"));
        for (std::size_t j = 0; j < config.chain.size(); ++j) {
            if (j == i) {
                continue;
            }
            CrosstalkEntry e;
            e.addressed = i;
            e.victim = j;
            const auto p = estimates(scan.ions[j]);
            e.p_final = p.back();
            try {
                e.omega_victim = fit_rabi_flopping(t_s, p).omega;
                e.method = "fit";
            } catch (const AmbiguityError&) {
                e.omega_victim = extract_slow_rabi(e.p_final, t_final);
                e.method = "final_point";
            }
            const double kappa_victim = config.peak_rabi[j];
            const double kappa_addressed = config.peak_rabi[i];
            e.victim_normalized = kappa_victim > 0.0 ? e.omega_victim / kappa_victim : 0.0;
            e.addressed_normalized = kappa_addressed > 0.0 ? e.omega_victim / kappa_addressed : 0.0;
            e.analytic = res.analytic(i, j);
            entries.push_back({{"addressed", config.chain.label(i)},
                               {"victim", config.chain.label(j)},
                               {"p_final", e.p_final},
                               {"omega_victim_rad_s", e.omega_victim},
                               {"method", e.method},
                               {"victim_normalized", e.victim_normalized},
                               {"addressed_normalized", e.addressed_normalized},
                               {"analytic", e.analytic}});
            res.entries.push_back(std::move(e));
        }
    }

    json report = base_report(config, "crosstalk");
    report["t_long_us"] = options.t_long_us;
    report["points"] = options.points;
    report["default_normalization"] = "victim";
    report["entries"] = entries;
    res.report_path = dir / "crosstalk_report.json";
    write_json(res.report_path, report);
    return res;
}

CompareModesResult cmd_compare_modes(const ScenarioConfig& config)
{
    CompareModesResult res;
    json pairs = json::array();
    for (std::size_t i = 0; i < config.chain.size(); ++i) {
        const BeamProfile profile = arm_profile(config, i);
        for (std::size_t j : {i - 1, i + 1}) {
            if (j >= config.chain.size()) {
                continue; // i - 1 wraps for i == 0
            }
            PairComparison pc{i, j,
                              compare_ssa_dsa(profile, config.chain.positions_um[i], config.chain.positions_um[j])};
            json row = pc.values;
            row["addressed"] = config.chain.label(i);
            row["neighbor"] = config.chain.label(j);
            pairs.push_back(row);
            res.pairs.push_back(pc);
        }
    }
    json literature = json::array();
    for (const auto& sys : literature_systems()) {
        const ModeComparison mc = compare_ssa_dsa(sys.intensity_crosstalk);
        json row = mc;
        row["system"] = sys.name;
        row["numerical_aperture"] = sys.numerical_aperture;
        row["reported_rabi_crosstalk"] = sys.reported_rabi_crosstalk;
        row["ion_spacing_um"] = sys.ion_spacing_um;
        literature.push_back(row);
        res.literature.push_back(mc);
    }

    json report = base_report(config, "compare-modes");
    report["pairs"] = pairs;
    report["literature"] = literature;
    const auto dir = output_directory(config);
    res.report_path = dir / "compare_modes.json";
    write_json(res.report_path, report);

    std::ostringstream csv;
    csv.precision(17);
    csv << "addressed,neighbor,intensity_crosstalk[ratio],rabi_crosstalk_ssa[ratio],rabi_crosstalk_dsa[ratio]\n";
    for (const auto& pc : res.pairs) {
        csv << config.chain.label(pc.addressed) << ',' << config.chain.label(pc.neighbor) << ','
            << pc.values.intensity_crosstalk << ',' << pc.values.rabi_crosstalk_ssa << ','
            << pc.values.rabi_crosstalk_dsa << '\n';
    }
    write_file_atomic(dir / "compare_modes.csv", csv.str());
    return res;
}

ImagePipelineResult cmd_image_pipeline(const ScenarioConfig& config, const ImagePipelineOptions& options)
{
    const ImagingConfig& im = config.imaging;
    std::vector<double> freqs = im.tone_frequencies_mhz.empty() ? config.ion_frequencies_mhz : im.tone_frequencies_mhz;
    std::vector<double> sites;
    for (double f : freqs) {
        sites.push_back(config.channel.position_um(f));
    }
    std::vector<std::size_t> order(sites.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sites[a] < sites[b]; });
    {
        std::vector<double> f2;
        std::vector<double> s2;
        for (std::size_t k : order) {
            f2.push_back(freqs[k]);
            s2.push_back(sites[k]);
        }
        freqs = std::move(f2);
        sites = std::move(s2);
    }
    if (sites.empty()) {
        throw ConfigError(config.source + ": imaging needs at least one tone");
    }

    const auto dir = output_directory(config);
    std::vector<CameraImage> raw;
    if (options.images.empty()) {
        const PixelGrid grid = image_grid(im, sites);
        const double wt = im.transverse_waist_um > 0.0 ? im.transverse_waist_um : config.channel.nominal_waist_um;
        const std::uint64_t seed = im.noise_sigma > 0.0 ? config.require_seed("image-pipeline") : config.seed.value_or(0);
        if (options.per_tone) {
            for (std::size_t k = 0; k < freqs.size(); ++k) {
                const ToneSet one{{DriveTone{freqs[k], 1.0, 0.0}}};
                const BeamProfile profile =
                    scaled(toneset_to_profile(config.channel, one, config.stray, {true, config.floor}), im.peak_counts);
                raw.push_back(render_image(profile, wt, grid, im.background, im.noise_sigma, substream_seed(seed, k, 0)));
                write_pgm(dir / ("tone_" + std::to_string(k) + ".pgm"), raw.back(), PgmEncoding::Binary);
            }
        } else {
            ToneSet all;
            const double share = 1.0 / static_cast<double>(freqs.size());
            for (double f : freqs) {
                all.tones.push_back({f, share, 0.0});
            }
            const BeamProfile profile = scaled(toneset_to_profile(config.channel, all, config.stray, {true, config.floor}),
                                               im.peak_counts / (share * share));
            raw.push_back(render_image(profile, wt, grid, im.background, im.noise_sigma, substream_seed(seed, 0, 0)));
            write_pgm(dir / "composite_raw.pgm", raw.back(), PgmEncoding::Binary);
        }
    } else {
        for (const auto& path : options.images) {
            raw.push_back(read_pgm(path));
        }
        if (options.per_tone && raw.size() != sites.size()) {
            throw ConfigError("per-tone mode needs one image per tone (" + std::to_string(sites.size()) + "), got " +
                              std::to_string(raw.size()));
        }
    }

    std::vector<CameraImage> clean;
    for (const auto& image : raw) {
        clean.push_back(subtract_background(image));
    }
    const CameraImage composite = stitch_images(clean);

    ImagePipelineResult res;
    res.section = cross_section(composite, im.axis_angle_rad, im.section_offset_um);
    if (options.per_tone) {
        for (std::size_t k = 0; k < clean.size(); ++k) {
            const auto section = cross_section(clean[k], im.axis_angle_rad, im.section_offset_um);
            ToneReadout t;
            t.position_um = sites[k];
            if (k > 0) {
                t.left = readout(section, sites[k], sites[k - 1]);
            }
            if (k + 1 < sites.size()) {
                t.right = readout(section, sites[k], sites[k + 1]);
            }
            for (const auto& v : {t.left, t.right}) {
                if (v) {
                    res.max_crosstalk = std::max(res.max_crosstalk.value_or(0.0), *v);
                }
            }
            res.tones.push_back(t);
        }
    }
    res.at_or_below_1e3 = res.max_crosstalk && *res.max_crosstalk <= kCrosstalkLevel * (1.0 + kReadoutTolerance);
    res.channels = map_ions_to_channels(config.chain, im.mcpmt, im.alignment_offset_um);

    write_pgm(dir / "stitched.pgm", composite, PgmEncoding::Binary);
    {
        std::ostringstream csv;
        write_section_csv(csv, res.section);
        write_file_atomic(dir / "section.csv", csv.str());
    }

    json report = base_report(config, "image-pipeline");
    report["input"] = options.images.empty() ? "synthetic" : "files";
    report["layout"] = options.per_tone ? "per_tone" : "composite";
    report["images"] = clean.size();
    json tones = json::array();
    for (std::size_t k = 0; k < res.tones.size(); ++k) {
        tones.push_back({{"frequency_mhz", k < freqs.size() ? json(freqs[k]) : json(nullptr)},
                         {"position_um", res.tones[k].position_um},
                         {"crosstalk_left", optional_number(res.tones[k].left)},
                         {"crosstalk_right", optional_number(res.tones[k].right)}});
    }
    report["tones"] = tones;
    report["max_neighbor_crosstalk"] = optional_number(res.max_crosstalk);
    report["at_or_below_1e-3"] = res.at_or_below_1e3;
    if (!options.per_tone) {
        report["note"] = "neighbor crosstalk needs per-tone images; composite section exported only";
    }
    json channels = json::array();
    for (std::size_t j = 0; j < res.channels.size(); ++j) {
        const auto& c = res.channels[j];
        channels.push_back({{"ion", config.chain.label(j)},
                            {"channel", c.channel},
                            {"image_position_um", c.image_position_um},
                            {"collected_fraction", c.collected_fraction},
                            {"leakage", c.leakage},
                            {"off_detector", c.off_detector},
                            {"in_gap", c.in_gap}});
    }
    report["mcpmt"] = channels;
    res.report_path = dir / "image_pipeline.json";
    write_json(res.report_path, report);
    return res;
}

FitProfileResult cmd_fit_profile(const std::filesystem::path& output_dir, const FitProfileOptions& options)
{
    auto [x, y] = options.input.extension() == ".json" ? sample_profile_document(options.input)
                                                        : read_xy_csv(options.input);
    FitProfileResult res;
    res.fit = fit_multi_gaussian(x, y, options.spots);
    res.summary = extract_spacing_and_waist(res.fit);

    json report;
    report["command"] = "fit-profile";
    report["input"] = options.input.string();
    report["points"] = x.size();
    report["fit"] = res.fit;
    report["spacings_um"] = res.summary.spacings_um;
    report["mean_spacing_um"] = optional_number(res.summary.mean_spacing_um);
    report["mean_waist_um"] = res.summary.mean_waist_um;
    res.report_path = output_dir / "fit_profile.json";
    write_json(res.report_path, report);
    if (!res.fit.converged) {
        throw FitError("profile fit did not converge");
    }
    return res;
}

int exit_code_for(const std::exception& e) noexcept
{
    const auto* err = dynamic_cast<const Error*>(&e);
    if (err == nullptr) {
        return kExitDomain;
    }
    switch (err->kind()) {
    case ErrorKind::Config:
        return kExitConfig;
    case ErrorKind::NoConvergence:
    case ErrorKind::Ambiguity:
        return kExitNumeric;
    case ErrorKind::Io:
        return kExitIo;
    default:
        return kExitDomain;
    }
}

} // namespace ionaddr::cli
