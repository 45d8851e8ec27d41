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

#include "ionaddr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "ionaddr/error.hpp"

namespace ionaddr {

namespace {

// ---------------------------------------------------------------------------
// Levenberg-Marquardt with Marquardt diagonal scaling.

struct LmProblem {
    // Fills residuals and, when `jac` is non-null, the Jacobian dr/dp.
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)> evaluate;
    // Maps a trial point back into the feasible set; false rejects it.
    std::function<bool(Eigen::VectorXd&)> project;
};

struct LmOutcome {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double ssr = 0.0;
    double initial_ssr = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(const LmProblem& problem, Eigen::VectorXd start, const FitOptions& options)
{
    LmOutcome out;
    out.params = std::move(start);
    problem.evaluate(out.params, out.residuals, &out.jacobian);
    out.ssr = out.residuals.squaredNorm();
    out.initial_ssr = out.ssr;

    double lambda = 1e-3;
    Eigen::VectorXd trial_r;
    Eigen::MatrixXd trial_j;
    while (out.iterations < options.max_iterations) {
        const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residuals;
        if (!std::isfinite(out.ssr)) {
            break;
        }
        if (gradient.norm() < options.gradient_tolerance || out.ssr == 0.0) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd normal = out.jacobian.transpose() * out.jacobian;
        Eigen::VectorXd scale = normal.diagonal();
        const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
        scale = scale.cwiseMax(floor);

        bool accepted = false;
        double accepted_lambda = lambda;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = normal;
            damped.diagonal() += lambda * scale;
            Eigen::VectorXd trial = out.params - damped.ldlt().solve(gradient);
            if (!trial.allFinite() || !problem.project(trial)) {
                lambda *= 10.0;
                continue;
            }
            problem.evaluate(trial, trial_r, nullptr);
            const double trial_ssr = trial_r.squaredNorm();
            if (std::isfinite(trial_ssr) && trial_ssr < out.ssr) {
                const double relative_change = (out.ssr - trial_ssr) / out.ssr;
                out.params = std::move(trial);
                problem.evaluate(out.params, out.residuals, &out.jacobian);
                out.ssr = out.residuals.squaredNorm();
                accepted = true;
                accepted_lambda = lambda;
                lambda = std::max(lambda * 0.1, 1e-15);
                ++out.iterations;
                // only trust a small change when the step was nearly Gauss-Newton
                if (relative_change < options.relative_tolerance && accepted_lambda <= 1.0) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // no descent direction left at working precision: a local minimum
            out.converged = true;
            break;
        }
        if (out.converged) {
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multi-Gaussian helpers

double median_of(std::vector<double> v)
{
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct SortedData {
    std::vector<double> x;
    std::vector<double> y;
};

SortedData sorted_copy(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw DomainError("x and y must have the same length");
    }
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    SortedData d;
    d.x.reserve(x.size());
    d.y.reserve(y.size());
    for (std::size_t i : order) {
        if (!d.x.empty() && x[i] == d.x.back()) {
            throw DomainError("x values must be distinct");
        }
        d.x.push_back(x[i]);
        d.y.push_back(y[i]);
    }
    return d;
}

// Half-width at `half_level` around index `peak`, by linear interpolation.
std::optional<double> half_width(const SortedData& d, std::span<const double> values, std::size_t peak,
                                 double half_level)
{
    std::optional<double> left;
    std::optional<double> right;
    for (std::size_t i = peak; i-- > 0;) {
        if (values[i] < half_level) {
            const double f = (half_level - values[i]) / (values[i + 1] - values[i]);
            left = d.x[peak] - (d.x[i] + f * (d.x[i + 1] - d.x[i]));
            break;
        }
    }
    for (std::size_t i = peak + 1; i < values.size(); ++i) {
        if (values[i] < half_level) {
            const double f = (values[i - 1] - half_level) / (values[i - 1] - values[i]);
            right = (d.x[i - 1] + f * (d.x[i] - d.x[i - 1])) - d.x[peak];
            break;
        }
    }
    if (left && right) {
        return 0.5 * (*left + *right);
    }
    return left ? left : right;
}

constexpr double kFwhmToWaist = 0.8493218002880191; // 1 / sqrt(2 ln 2)

GaussianSpot spot_at(const SortedData& d, std::span<const double> values, std::size_t peak, double baseline,
                     double fallback_waist)
{
    const double height = values[peak];
    const auto hw = half_width(d, values, peak, baseline + 0.5 * (height - baseline));
    const double waist = hw && *hw > 0.0 ? kFwhmToWaist * 2.0 * *hw : fallback_waist;
    return {std::max(height, 0.0), d.x[peak], waist};
}

void check_fit_input(std::span<const double> x, std::span<const double> y, std::size_t n_spots)
{
    if (n_spots == 0) {
        throw DomainError("at least one spot is required");
    }
    if (x.size() != y.size()) {
        throw DomainError("x and y must have the same length");
    }
    if (x.size() < 3 * n_spots) {
        std::ostringstream msg;
        msg << "insufficient data: " << x.size() << " points for " << n_spots << " spots (need "
            << 3 * n_spots << ")";
        throw DomainError(msg.str());
    }
}

} // namespace

std::vector<GaussianSpot> seed_spots(std::span<const double> x, std::span<const double> y, std::size_t n_spots)
{
    check_fit_input(x, y, n_spots);
    const SortedData d = sorted_copy(x, y);
    const std::size_t n = d.x.size();

    const double med = median_of(d.y);
    std::vector<double> deviation(n);
    std::transform(d.y.begin(), d.y.end(), deviation.begin(), [&](double v) { return std::abs(v - med); });
    const double mad = median_of(deviation);
    const double threshold = med + 5.0 * mad;
    const double span = d.x.back() - d.x.front();
    const double fallback_waist = span / (4.0 * static_cast<double>(n_spots));

    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = i == 0 || d.y[i] >= d.y[i - 1];
        const bool right_ok = i + 1 == n || d.y[i] > d.y[i + 1];
        if (left_ok && right_ok && d.y[i] > threshold && d.y[i] > med) {
            peaks.push_back(i);
        }
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return d.y[a] > d.y[b]; });

    // a noise ripple on one peak's flank is not a second peak: demand a valley below half height
    std::vector<std::size_t> kept;
    for (std::size_t c : peaks) {
        if (kept.size() == n_spots) {
            break;
        }
        const double half = med + 0.5 * (d.y[c] - med);
        const bool separated = std::all_of(kept.begin(), kept.end(), [&](std::size_t a) {
            const auto lo = d.y.begin() + static_cast<std::ptrdiff_t>(std::min(a, c));
            const auto hi = d.y.begin() + static_cast<std::ptrdiff_t>(std::max(a, c)) + 1;
            return *std::min_element(lo, hi) < half;
        });
        if (separated) {
            kept.push_back(c);
        }
    }
    peaks = std::move(kept);

    std::vector<GaussianSpot> spots;
    for (std::size_t p : peaks) {
        spots.push_back(spot_at(d, d.y, p, std::min(med, d.y[p]), fallback_waist));
    }

    // greedy fill on what the detected peaks leave unexplained
    std::vector<double> residual(n);
    while (spots.size() < n_spots) {
        for (std::size_t i = 0; i < n; ++i) {
            double model = 0.0;
            for (const auto& s : spots) {
                model += s(d.x[i]);
            }
            residual[i] = d.y[i] - model;
        }
        const auto it = std::max_element(residual.begin(), residual.end());
        const auto idx = static_cast<std::size_t>(it - residual.begin());
        if (*it > 0.0) {
            spots.push_back(spot_at(d, residual, idx, 0.0, fallback_waist));
        } else {
            spots.push_back({0.0, d.x[idx], fallback_waist});
        }
    }
    return spots;
}

FitResult fit_multi_gaussian(std::span<const double> x, std::span<const double> y, std::size_t n_spots,
                             const std::optional<std::vector<GaussianSpot>>& init, FitOptions options)
{
    check_fit_input(x, y, n_spots);
    const SortedData d = sorted_copy(x, y);

    std::vector<GaussianSpot> start = init ? *init : seed_spots(x, y, n_spots);
    if (start.size() != n_spots) {
        throw DomainError("initialization must provide exactly n_spots spots");
    }
    for (const auto& s : start) {
        s.validate();
    }

    const std::size_t m = d.x.size();
    const std::size_t np = 3 * n_spots;
    Eigen::VectorXd p0(static_cast<Eigen::Index>(np));
    for (std::size_t k = 0; k < n_spots; ++k) {
        p0(3 * k) = start[k].amplitude;
        p0(3 * k + 1) = start[k].center_um;
        p0(3 * k + 2) = start[k].waist_um;
    }

    LmProblem problem;
    problem.evaluate = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(np));
        }
        for (std::size_t i = 0; i < m; ++i) {
            double model = 0.0;
            for (std::size_t k = 0; k < n_spots; ++k) {
                const auto c = static_cast<Eigen::Index>(3 * k);
                const double a = p(c);
                const double w = p(c + 2);
                const double u = (d.x[i] - p(c + 1)) / w;
                const double e = std::exp(-2.0 * u * u);
                model += a * e;
                if (jac) {
                    const auto row = static_cast<Eigen::Index>(i);
                    (*jac)(row, c) = e;
                    (*jac)(row, c + 1) = a * e * 4.0 * u / w;
                    (*jac)(row, c + 2) = a * e * 4.0 * u * u / w;
                }
            }
            r(static_cast<Eigen::Index>(i)) = model - d.y[i];
        }
    };
    problem.project = [&](Eigen::VectorXd& p) {
        for (std::size_t k = 0; k < n_spots; ++k) {
            const auto c = static_cast<Eigen::Index>(3 * k);
            p(c) = std::max(p(c), 0.0);
            if (!(p(c + 2) > 0.0)) {
                return false;
            }
        }
        return true;
    };

    const LmOutcome lm = levenberg_marquardt(problem, p0, options);

    FitResult out;
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    out.residual_norm = std::sqrt(lm.ssr);
    out.initial_residual_norm = std::sqrt(lm.initial_ssr);

    std::vector<std::size_t> order(n_spots);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return lm.params(static_cast<Eigen::Index>(3 * a + 1)) < lm.params(static_cast<Eigen::Index>(3 * b + 1));
    });
    const double dof = m > np ? static_cast<double>(m - np) : 1.0;
    const double rms = std::sqrt(lm.ssr / dof);
    for (std::size_t k : order) {
        const auto c = static_cast<Eigen::Index>(3 * k);
        out.spots.push_back({lm.params(c), lm.params(c + 1), lm.params(c + 2)});
        for (Eigen::Index q = 0; q < 3; ++q) {
            const double s = lm.jacobian.col(c + q).norm();
            out.sensitivity.push_back(s);
            out.uncertainty.push_back(s > 0.0 ? rms / s : std::numeric_limits<double>::infinity());
        }
    }
    return out;
}

SpacingAndWaist extract_spacing_and_waist(const FitResult& fit)
{
    if (fit.spots.empty()) {
        throw DomainError("fit has no spots");
    }
    std::vector<GaussianSpot> spots = fit.spots;
    std::sort(spots.begin(), spots.end(),
              [](const GaussianSpot& a, const GaussianSpot& b) { return a.center_um < b.center_um; });

    SpacingAndWaist out;
    double waist_sum = 0.0;
    for (std::size_t k = 0; k < spots.size(); ++k) {
        waist_sum += spots[k].waist_um;
        if (k > 0) {
            out.spacings_um.push_back(spots[k].center_um - spots[k - 1].center_um);
        }
    }
    out.mean_waist_um = waist_sum / static_cast<double>(spots.size());
    if (!out.spacings_um.empty()) {
        out.mean_spacing_um = std::accumulate(out.spacings_um.begin(), out.spacings_um.end(), 0.0) /
                              static_cast<double>(out.spacings_um.size());
    }
    return out;
}

std::vector<ScanPeak> interpret_scan_fit(const FitResult& fit, const AodChannel& channel)
{
    channel.validate();
    const double coefficient = std::abs(channel.position_coefficient_um_per_mhz);
    std::vector<ScanPeak> peaks;
    for (const auto& s : fit.spots) {
        ScanPeak p;
        p.amplitude = s.amplitude;
        p.center_mhz = s.center_um; // fitted abscissa is frequency here
        p.center_um = channel.position_um(s.center_um);
        p.waist_mhz = s.waist_um;
        p.waist_um_direct = s.waist_um * coefficient;
        p.waist_um_intensity_squared = p.waist_um_direct * std::numbers::sqrt2;
        peaks.push_back(p);
    }
    return peaks;
}

double RabiFit::period_s() const noexcept
{
    return 2.0 * std::numbers::pi / omega;
}

RabiFit fit_rabi_flopping(std::span<const double> t_s, std::span<const double> p, std::optional<double> init_omega,
                          FitOptions options)
{
    if (t_s.size() != p.size()) {
        throw DomainError("time and probability series differ in length");
    }
    if (t_s.size() < 5) {
        throw DomainError("Rabi fit needs at least 5 points");
    }
    const SortedData d = sorted_copy(t_s, p);
    const std::size_t m = d.x.size();
    const double t_max = d.x.back();
    const double t_min = d.x.front();
    if (!(t_max > 0.0) || t_min < 0.0) {
        throw DomainError("Rabi fit needs nonnegative times with a positive maximum");
    }
    const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
    if (*hi - *lo < 1e-9) {
        throw AmbiguityError("flat data: no oscillation to fit; use extract_slow_rabi on a single long-time point");
    }

    // work in units of t_max so both parameters are O(1..100)
    std::vector<double> tau(m);
    std::transform(d.x.begin(), d.x.end(), tau.begin(), [&](double t) { return t / t_max; });
    const double span = tau.back() - tau.front();
    double min_step = span;
    for (std::size_t i = 1; i < m; ++i) {
        min_step = std::min(min_step, tau[i] - tau[i - 1]);
    }

    std::vector<double> starts;
    if (init_omega) {
        if (!(*init_omega > 0.0)) {
            throw DomainError("initial Rabi frequency must be positive");
        }
        starts.push_back(*init_omega * t_max);
    } else {
        const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(m);
        const double w_lo = 0.5 * std::numbers::pi / span;
        const double w_hi = std::numbers::pi / min_step;
        const double dw = std::numbers::pi / (8.0 * span);
        std::vector<std::pair<double, double>> spectrum;
        for (double w = w_lo; w <= w_hi; w += dw) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t i = 0; i < m; ++i) {
                acc += 2.0 * (d.y[i] - mean) * std::polar(1.0, -w * tau[i]);
            }
            spectrum.emplace_back(w, std::norm(acc));
        }
        std::vector<std::pair<double, double>> maxima;
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
            const bool left = k == 0 || spectrum[k].second >= spectrum[k - 1].second;
            const bool right = k + 1 == spectrum.size() || spectrum[k].second > spectrum[k + 1].second;
            if (left && right) {
                maxima.push_back(spectrum[k]);
            }
        }
        std::sort(maxima.begin(), maxima.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t k = 0; k < std::min<std::size_t>(3, maxima.size()); ++k) {
            starts.push_back(maxima[k].first);
        }
        if (starts.empty()) {
            starts.push_back(w_lo);
        }
    }

    LmProblem problem;
    problem.evaluate = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(static_cast<Eigen::Index>(m));
        if (jac) {
            jac->resize(static_cast<Eigen::Index>(m), 2);
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const double envelope = std::exp(-q(1) * tau[i]);
            const double c = std::cos(q(0) * tau[i]);
            r(row) = 0.5 * (1.0 - envelope * c) - d.y[i];
            if (jac) {
                (*jac)(row, 0) = 0.5 * envelope * tau[i] * std::sin(q(0) * tau[i]);
                (*jac)(row, 1) = 0.5 * envelope * tau[i] * c;
            }
        }
    };
    problem.project = [](Eigen::VectorXd& q) {
        q(1) = std::max(q(1), 0.0);
        return q(0) > 0.0;
    };

    std::optional<LmOutcome> best;
    for (double w0 : starts) {
        Eigen::VectorXd q0(2);
        q0 << w0, 0.0;
        LmOutcome lm = levenberg_marquardt(problem, q0, options);
        if (!best || lm.ssr < best->ssr) {
            best = std::move(lm);
        }
    }

    RabiFit fit;
    fit.omega = best->params(0) / t_max;
    fit.decay_rate = best->params(1) / t_max;
    fit.residual_norm = std::sqrt(best->ssr);
    fit.iterations = best->iterations;
    fit.converged = best->converged;
    if (best->params(0) * span < std::numbers::pi) {
        std::ostringstream msg;
        msg << "data span " << (t_max - t_min) << " s covers less than half a Rabi period (fitted "
            << fit.omega << " rad/s); use extract_slow_rabi";
        throw AmbiguityError(msg.str());
    }
    return fit;
}

double extract_slow_rabi(double p_final, double t_s)
{
    if (!(t_s > 0.0)) {
        throw DomainError("extract_slow_rabi needs a positive time");
    }
    if (!(p_final >= 0.0 && p_final <= 1.0)) {
        throw DomainError("excitation probability outside [0, 1]");
    }
    // arccos(1 - 2p) written so it stays accurate as p -> 0
    return 2.0 * std::atan2(std::sqrt(p_final), std::sqrt(1.0 - p_final)) / t_s;
}

double rabi_crosstalk(double p_final_victim, double t_s, double omega_reference)
{
    if (!(omega_reference > 0.0)) {
        throw DomainError("reference Rabi frequency must be positive");
    }
    return extract_slow_rabi(p_final_victim, t_s) / omega_reference;
}

} // namespace ionaddr
