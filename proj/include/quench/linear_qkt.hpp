#pragma once

#include "quench/ode.hpp"
#include "quench/schedules.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace quench {

/// One condensate-band mode: energy E_k (reference energy units), the common
/// scattering rate Gamma0 (inverse time) and an integer label, e.g. the ring
/// wavenumber k.
struct ModeSpec {
    double energy = 0.0;
    double gamma0 = 1.0;
    int label = 0;
};

/// Mean occupation of one mode sampled on a time grid. nbar_eq holds the
/// instantaneous Bose-Einstein value where it exists and NaN past the crossing.
struct OccupancySeries {
    std::vector<double> times;
    std::vector<double> nbar;
    std::vector<double> nbar_eq;
    QuenchSchedule schedule;
    ModeSpec mode;
    /// True when integration stopped because nbar exceeded the cap.
    bool halted_at_cap = false;
};

struct OccupancyOptions {
    ode::Options ode{};
    /// The linear theory is abandoned once nbar exceeds this.
    double n_cap = 1e6;
    /// Number of uniformly spaced output samples over [t_i, t_f].
    std::size_t samples = 4001;
};

/// Right-hand side of the occupation rate equation:
/// Gamma0 e^{beta mu} [1 + (1 - e^{beta (E_k - mu)}) n].
double occupancy_rhs(double n, double t, const QuenchSchedule& s, const ModeSpec& m);

/// (e^{beta (E_k - mu)} - 1)^{-1}; throws std::domain_error at or past the crossing.
double equilibrium_occupancy(const QuenchSchedule& s, const ModeSpec& m, double t);

OccupancySeries integrate_occupancy(const QuenchSchedule& s, const ModeSpec& m, double t_i, double t_f,
                                    double n_i, const OccupancyOptions& opts = {});

/// Same as integrate_occupancy, seeded with the equilibrium value at t_i.
OccupancySeries integrate_from_equilibrium(const QuenchSchedule& s, const ModeSpec& m, double t_i,
                                           double t_f, const OccupancyOptions& opts = {});

/// t_hat = sqrt(tau_Q / Gamma0).
double freeze_out_time(double tau_q, double gamma0);

/// xi_hat / lambda_Tc = (Gamma0 tau_Q)^{1/4}.
double frozen_correlation_length(double tau_q, double gamma0);

/// Labels of modes with beta E_k < (Gamma0 tau_Q)^{-1/2}, in input order.
std::vector<int> competitive_modes(std::span<const ModeSpec> spectrum, double beta, double tau_q,
                                   double gamma0);

/// Time at which beta (mu - E_k) crosses zero under a linear-bias schedule,
/// i.e. the mode's bias time theta_k = theta + beta E_k tau_Q.
double mode_bias_time(const QuenchSchedule& s, const ModeSpec& m);

/// Compares the occupation equation under the full enhancement factor with the
/// same equation where (1 - e^{beta (E_k - mu)}) is replaced by (t - theta_k)/tau_Q.
/// Both runs start at theta_k + lo * t_hat from the full equilibrium value;
/// returns max |n_lin - n_full| / n_full over [theta_k + lo t_hat, theta_k + hi t_hat].
double validate_lag_solution(const QuenchSchedule& s, const ModeSpec& m, double lo = -3.0, double hi = 1.0,
                             const OccupancyOptions& opts = {});

/// First time after t_i at which nbar (seeded at equilibrium at t_i) reaches
/// `target`; nullopt if it does not by t_max.
std::optional<double> time_to_reach(const QuenchSchedule& s, const ModeSpec& m, double t_i, double t_max,
                                    double target, const OccupancyOptions& opts = {});

} // namespace quench
