#include "quench/analysis.hpp"

#include "quench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace quench {

PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys, std::span<const double> sigmas)
{
    if (xs.size() != ys.size())
        throw ConfigError("fit_power_law: xs and ys differ in length");
    if (xs.size() < 3)
        throw ConfigError("fit_power_law needs at least 3 points");
    if (!sigmas.empty() && sigmas.size() != xs.size())
        throw ConfigError("fit_power_law: sigmas length mismatch");

    const std::size_t n = xs.size();
    std::vector<double> u(n), v(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw ConfigError("fit_power_law: data must be positive");
        u[i] = std::log(xs[i]);
        v[i] = std::log(ys[i]);
        if (!sigmas.empty()) {
            if (!(sigmas[i] > 0.0))
                throw ConfigError("fit_power_law: sigmas must be positive");
            // d(log y) = sigma / y
            w[i] = (ys[i] / sigmas[i]) * (ys[i] / sigmas[i]);
        }
    }

    double sw = 0, su = 0, sv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        su += w[i] * u[i];
        sv += w[i] * v[i];
    }
    const double ubar = su / sw, vbar = sv / sw;
    double suu = 0, suv = 0, svv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        suu += w[i] * (u[i] - ubar) * (u[i] - ubar);
        suv += w[i] * (u[i] - ubar) * (v[i] - vbar);
        svv += w[i] * (v[i] - vbar) * (v[i] - vbar);
    }
    if (!(suu > 0.0))
        throw ConfigError("fit_power_law: xs must not all be equal");

    PowerLawFit fit;
    fit.n_points = n;
    fit.exponent = suv / suu;
    const double intercept = vbar - fit.exponent * ubar;
    fit.amplitude = std::exp(intercept);
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = v[i] - intercept - fit.exponent * u[i];
        ssr += w[i] * r * r;
    }
    fit.r_squared = svv > 0.0 ? std::clamp(1.0 - ssr / svv, 0.0, 1.0) : 1.0;
    // normalised weights: residual variance estimated from the scatter
    fit.exponent_stderr = std::sqrt(ssr / double(n - 2) / suu);
    return fit;
}

std::optional<double> departure_time(const OccupancySeries& series, double factor)
{
    if (!(factor > 0.0))
        throw ConfigError("departure_time: factor must be positive");
    const auto& t = series.times;
    double prev_ratio = NAN;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double eq = series.nbar_eq[i];
        if (std::isnan(eq))
            break;
        const double ratio = eq / series.nbar[i];
        if (ratio >= factor) {
            if (i == 0 || std::isnan(prev_ratio))
                return t[i];
            const double f = (factor - prev_ratio) / (ratio - prev_ratio);
            return t[i - 1] + f * (t[i] - t[i - 1]);
        }
        prev_ratio = ratio;
    }
    return std::nullopt;
}

RmsEstimate ensemble_rms(std::span<const long> samples)
{
    if (samples.empty())
        throw ConfigError("ensemble_rms needs at least one sample");
    const std::size_t n = samples.size();
    double sum_sq = 0.0;
    for (long w : samples)
        sum_sq += double(w) * double(w);
    RmsEstimate r;
    r.rms = std::sqrt(sum_sq / double(n));
    if (n < 2)
        return r;
    // leave-one-out estimates, then the usual jackknife variance
    std::vector<double> loo(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = double(samples[i]);
        loo[i] = std::sqrt(std::max(sum_sq - w * w, 0.0) / double(n - 1));
        mean += loo[i];
    }
    mean /= double(n);
    double var = 0.0;
    for (double x : loo)
        var += (x - mean) * (x - mean);
    var /= double(n);
    r.stderr_ = std::sqrt(double(n - 1) * var);
    return r;
}

} // namespace quench
