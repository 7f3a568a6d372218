#pragma once

#include "quench/linear_qkt.hpp"

#include <cstddef>
#include <optional>
#include <span>

namespace quench {

struct PowerLawFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double exponent_stderr = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

/// Least-squares line through (log x, log y), y = amplitude * x^exponent.
/// With `sigmas` (absolute errors on y) each point is weighted by (y / sigma)^2.
PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys,
                          std::span<const double> sigmas = {});

/// First time with nbar_eq / nbar >= factor, linearly interpolated between
/// samples. Stops looking once nbar_eq is undefined (past the crossing).
std::optional<double> departure_time(const OccupancySeries& series, double factor);

struct RmsEstimate {
    double rms = 0.0;
    double stderr_ = 0.0;
};

/// sqrt(<W^2>) with a jackknife standard error.
RmsEstimate ensemble_rms(std::span<const long> samples);

} // namespace quench
