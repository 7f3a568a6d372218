#include "quench/linear_qkt.hpp"

#include "quench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace quench {

namespace {

using State1 = std::array<double, 1>;

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be positive and finite");
}

void check_mode(const ModeSpec& m)
{
    require_positive(m.gamma0, "Gamma0");
    if (!(m.energy >= 0.0))
        throw ConfigError("mode energy must be non-negative");
}

double equilibrium_or_nan(const QuenchSchedule& s, const ModeSpec& m, double t)
{
    const Drive d = s.eval(t);
    const double x = d.beta * m.energy - d.beta_mu;
    return x > 0.0 ? 1.0 / std::expm1(x) : std::numeric_limits<double>::quiet_NaN();
}

// Tolerated undershoot below zero before an excursion counts as a failure.
constexpr double kNegativeTolerance = 1e-9;

} // namespace

double occupancy_rhs(double n, double t, const QuenchSchedule& s, const ModeSpec& m)
{
    const Drive d = s.eval(t);
    const double x = d.beta * m.energy - d.beta_mu;
    // e^{bm} (1 - e^{x}) = -e^{bm} expm1(x), accurate near the crossing
    return m.gamma0 * std::exp(d.beta_mu) * (1.0 - std::expm1(x) * n);
}

double equilibrium_occupancy(const QuenchSchedule& s, const ModeSpec& m, double t)
{
    const Drive d = s.eval(t);
    const double x = d.beta * m.energy - d.beta_mu;
    if (!(x > 0.0))
        throw std::domain_error("equilibrium occupation undefined: beta (E_k - mu) = " + std::to_string(x) +
                                " at t = " + std::to_string(t));
    return 1.0 / std::expm1(x);
}

OccupancySeries integrate_occupancy(const QuenchSchedule& s, const ModeSpec& m, double t_i, double t_f,
                                    double n_i, const OccupancyOptions& opts)
{
    check_mode(m);
    if (!(t_i < t_f))
        throw ConfigError("integrate_occupancy requires t_i < t_f");
    if (!(n_i >= 0.0))
        throw ConfigError("initial occupation must be non-negative");
    if (opts.samples < 2)
        throw ConfigError("at least two output samples are required");

    OccupancySeries out{.times = {}, .nbar = {}, .nbar_eq = {}, .schedule = s, .mode = m};
    out.times.reserve(opts.samples);
    out.nbar.reserve(opts.samples);
    out.nbar_eq.reserve(opts.samples);

    auto record = [&](double t, double n) {
        out.times.push_back(t);
        out.nbar.push_back(n);
        out.nbar_eq.push_back(equilibrium_or_nan(s, m, t));
    };

    auto sys = [&](const State1& x, State1& dxdt, double t) { dxdt[0] = occupancy_rhs(x[0], t, s, m); };

    ode::Integrator<1> integ(opts.ode);
    State1 x{n_i};
    double t = t_i;
    record(t, n_i);

    const double span = t_f - t_i;
    for (std::size_t i = 1; i < opts.samples; ++i) {
        const double target = (i + 1 == opts.samples) ? t_f : t_i + span * double(i) / double(opts.samples - 1);
        const bool completed = integ.advance(sys, x, t, target, [&](double tt, const State1& xx) {
            if (xx[0] < -kNegativeTolerance * std::max(1.0, n_i))
                throw NumericalError("occupation went negative (" + std::to_string(xx[0]) + ")", tt);
            return xx[0] <= opts.n_cap;
        });
        record(t, x[0]);
        if (!completed) {
            out.halted_at_cap = true;
            break;
        }
    }
    return out;
}

OccupancySeries integrate_from_equilibrium(const QuenchSchedule& s, const ModeSpec& m, double t_i, double t_f,
                                           const OccupancyOptions& opts)
{
    return integrate_occupancy(s, m, t_i, t_f, equilibrium_occupancy(s, m, t_i), opts);
}

double freeze_out_time(double tau_q, double gamma0)
{
    require_positive(tau_q, "tau_Q");
    require_positive(gamma0, "Gamma0");
    return std::sqrt(tau_q / gamma0);
}

double frozen_correlation_length(double tau_q, double gamma0)
{
    require_positive(tau_q, "tau_Q");
    require_positive(gamma0, "Gamma0");
    return std::pow(gamma0 * tau_q, 0.25);
}

std::vector<int> competitive_modes(std::span<const ModeSpec> spectrum, double beta, double tau_q, double gamma0)
{
    if (spectrum.empty())
        throw ConfigError("competitive_modes needs a non-empty spectrum");
    require_positive(beta, "beta");
    require_positive(tau_q, "tau_Q");
    require_positive(gamma0, "Gamma0");
    const double threshold = 1.0 / std::sqrt(gamma0 * tau_q);
    std::vector<int> labels;
    for (const auto& m : spectrum)
        if (beta * m.energy < threshold)
            labels.push_back(m.label);
    return labels;
}

double mode_bias_time(const QuenchSchedule& s, const ModeSpec& m)
{
    if (s.kind() != ScheduleKind::LinearBias)
        throw ConfigError("bias time is defined for linear-bias schedules only");
    return s.theta() + s.beta_c() * m.energy * s.tau_q();
}

double validate_lag_solution(const QuenchSchedule& s, const ModeSpec& m, double lo, double hi,
                             const OccupancyOptions& opts)
{
    check_mode(m);
    if (s.kind() != ScheduleKind::LinearBias)
        throw ConfigError("validate_lag_solution requires a linear-bias schedule");
    if (!(lo < hi) || !(lo < 0.0))
        throw ConfigError("lag window must satisfy lo < hi and lo < 0");

    const double theta_k = mode_bias_time(s, m);
    const double t_hat = freeze_out_time(s.tau_q(), m.gamma0);
    const double t0 = theta_k + lo * t_hat;
    const double t1 = theta_k + hi * t_hat;
    const double n0 = equilibrium_occupancy(s, m, t0);

    auto full = [&](const State1& x, State1& dxdt, double t) { dxdt[0] = occupancy_rhs(x[0], t, s, m); };
    auto linearized = [&](const State1& x, State1& dxdt, double t) {
        const Drive d = s.eval(t);
        dxdt[0] = m.gamma0 * std::exp(d.beta_mu) * (1.0 + (t - theta_k) / s.tau_q() * x[0]);
    };

    ode::Integrator<1> a(opts.ode), b(opts.ode);
    State1 xa{n0}, xb{n0};
    double ta = t0, tb = t0;
    double worst = 0.0;
    const std::size_t samples = std::max<std::size_t>(opts.samples, 2);
    for (std::size_t i = 1; i < samples; ++i) {
        const double target = t0 + (t1 - t0) * double(i) / double(samples - 1);
        a.advance(full, xa, ta, target);
        b.advance(linearized, xb, tb, target);
        worst = std::max(worst, std::abs(xb[0] - xa[0]) / std::abs(xa[0]));
    }
    return worst;
}

std::optional<double> time_to_reach(const QuenchSchedule& s, const ModeSpec& m, double t_i, double t_max,
                                    double target, const OccupancyOptions& opts)
{
    check_mode(m);
    const double n_i = equilibrium_occupancy(s, m, t_i);
    if (n_i >= target)
        return t_i;

    auto sys = [&](const State1& x, State1& dxdt, double t) { dxdt[0] = occupancy_rhs(x[0], t, s, m); };
    ode::Integrator<1> integ(opts.ode);
    State1 x{n_i};
    double t = t_i;
    double t_prev = t;
    State1 x_prev = x;
    const bool finished = integ.advance(sys, x, t, t_max, [&](double tt, const State1& xx) {
        if (xx[0] >= target)
            return false;
        t_prev = tt;
        x_prev = xx;
        return true;
    });
    if (finished)
        return std::nullopt;

    // bisect inside the bracketing step by re-integrating from its left end
    double lo = t_prev, hi = t;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        ode::Integrator<1> sub(opts.ode);
        State1 y = x_prev;
        double tt = t_prev;
        sub.advance(sys, y, tt, mid);
        (y[0] >= target ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace quench
