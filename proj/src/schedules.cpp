#include "quench/schedules.hpp"

#include "quench/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace quench {

namespace {

void require_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string(name) + " must be positive and finite, got " + std::to_string(v));
}

} // namespace

QuenchSchedule QuenchSchedule::linear_bias(double tau_q, double theta, double beta_ref, TimeWindow window)
{
    require_positive(tau_q, "tau_Q");
    require_positive(beta_ref, "beta_ref");
    if (!std::isfinite(theta))
        throw ConfigError("bias time theta must be finite");
    if (!(window.lo < window.hi))
        throw ConfigError("validity window must satisfy lo < hi");
    QuenchSchedule s;
    s.kind_ = ScheduleKind::LinearBias;
    s.tau_q_ = tau_q;
    s.theta_ = theta;
    s.beta_c_ = beta_ref;
    s.window_ = window;
    return s;
}

QuenchSchedule QuenchSchedule::tanh(double tau_q, double beta_c, bool varying_beta)
{
    require_positive(tau_q, "tau_Q");
    require_positive(beta_c, "beta_c");
    QuenchSchedule s;
    s.kind_ = ScheduleKind::Tanh;
    s.tau_q_ = tau_q;
    s.beta_c_ = beta_c;
    s.varying_beta_ = varying_beta;
    return s;
}

QuenchSchedule QuenchSchedule::constant(double beta, double mu)
{
    require_positive(beta, "beta");
    if (!std::isfinite(mu))
        throw ConfigError("mu must be finite");
    QuenchSchedule s;
    s.kind_ = ScheduleKind::Constant;
    s.beta_c_ = beta;
    s.mu_const_ = mu;
    return s;
}

Drive QuenchSchedule::eval(double t) const
{
    if (!window_.contains(t))
        throw std::out_of_range("schedule evaluated at t = " + std::to_string(t) +
                                " outside its validity window");
    switch (kind_) {
    case ScheduleKind::LinearBias: {
        const double bm = (t - theta_) / tau_q_;
        return {beta_c_, bm / beta_c_, bm};
    }
    case ScheduleKind::Tanh: {
        const double bm = std::tanh(t / tau_q_);
        const double beta = varying_beta_ ? beta_c_ * std::exp(bm) : beta_c_;
        return {beta, bm / beta, bm};
    }
    case ScheduleKind::Constant:
        return {beta_c_, mu_const_, beta_c_ * mu_const_};
    }
    throw std::logic_error("unknown schedule kind");
}

std::optional<double> QuenchSchedule::crossing_time() const
{
    switch (kind_) {
    case ScheduleKind::LinearBias:
        return theta_;
    case ScheduleKind::Tanh:
        return 0.0;
    case ScheduleKind::Constant:
        break;
    }
    return std::nullopt;
}

double QuenchSchedule::max_beta_mu() const
{
    switch (kind_) {
    case ScheduleKind::LinearBias:
        return (window_.hi - theta_) / tau_q_;
    case ScheduleKind::Tanh:
        return std::isfinite(window_.hi) ? std::tanh(window_.hi / tau_q_) : 1.0;
    case ScheduleKind::Constant:
        return beta_c_ * mu_const_;
    }
    return 0.0;
}

} // namespace quench
