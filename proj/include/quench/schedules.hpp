#pragma once

#include <limits>
#include <optional>

namespace quench {

/// Instantaneous thermodynamic drive. beta_mu is the primary quantity;
/// mu is derived so that beta * mu reproduces beta_mu.
struct Drive {
    double beta;
    double mu;
    double beta_mu;
};

struct TimeWindow {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double t) const { return t >= lo && t <= hi; }
};

enum class ScheduleKind { LinearBias, Tanh, Constant };

/// Time-dependent quench protocol beta(t), mu(t).
///
/// Times are in units of the reference collision time 1/Gamma0, energies in
/// units fixed by the caller's choice of beta. Schedules are immutable.
///
///  - LinearBias:  beta*mu = (t - theta) / tau_Q, beta held at beta_ref.
///  - Tanh:        beta*mu = tanh(t / tau_Q); beta = beta_c * exp(tanh(t / tau_Q))
///                 when the temperature follows the quench, otherwise beta_c.
///  - Constant:    fixed (beta, mu).
class QuenchSchedule {
public:
    static QuenchSchedule linear_bias(double tau_q, double theta, double beta_ref = 1.0,
                                      TimeWindow window = {});
    static QuenchSchedule tanh(double tau_q, double beta_c, bool varying_beta = true);
    static QuenchSchedule constant(double beta, double mu);

    /// Throws std::out_of_range outside the validity window.
    Drive eval(double t) const;

    ScheduleKind kind() const { return kind_; }
    double tau_q() const { return tau_q_; }
    double theta() const { return theta_; }
    double beta_c() const { return beta_c_; }
    bool varying_beta() const { return varying_beta_; }
    const TimeWindow& window() const { return window_; }

    /// Time at which beta*mu crosses zero, if the schedule crosses.
    std::optional<double> crossing_time() const;

    /// Upper bound of beta*mu over the validity window.
    double max_beta_mu() const;

private:
    QuenchSchedule() = default;

    ScheduleKind kind_ = ScheduleKind::Constant;
    double tau_q_ = 1.0;
    double theta_ = 0.0;
    double beta_c_ = 1.0;  // beta_ref for LinearBias, beta for Constant
    double mu_const_ = 0.0;
    bool varying_beta_ = false;
    TimeWindow window_;
};

} // namespace quench
