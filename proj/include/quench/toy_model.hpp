#pragma once

#include "quench/schedules.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace quench {

/// Two-mode toy model parameters. `energy` is the level spacing E; the
/// dimensionless bias beta*E follows from the schedule's beta(t).
struct ToyParams {
    double energy = 1.0;
    double n_c = 10.0;
    double gamma = 1.0;
    /// Rate for reservoir scattering off the condensate. Defaults to beta(t) E Gamma.
    std::optional<double> gamma_tilde;
    /// Optional time profile multiplying gamma (and the default gamma_tilde).
    std::function<double(double)> gamma_profile;

    double gamma_at(double t) const { return gamma_profile ? gamma * gamma_profile(t) : gamma; }
    double gamma_tilde_at(double t, double beta) const
    {
        return gamma_tilde ? (gamma_profile ? *gamma_tilde * gamma_profile(t) : *gamma_tilde)
                           : beta * energy * gamma_at(t);
    }
    void validate() const;
};

/// E [n1 + (n0^2 + n1^2 + 4 n0 n1) / (2 N_c)].
double toy_energy(double n0, double n1, const ToyParams& params);

/// p(n0, n1) on the triangle n0 + n1 <= n_max, stored row-major in an
/// (n_max+1) x (n_max+1) array. Entries outside the triangle are always zero.
class ProbabilityGrid {
public:
    explicit ProbabilityGrid(int n_max, double t = 0.0);

    static ProbabilityGrid point_mass(int n_max, int n0, int n1, double t = 0.0);

    int n_max() const { return n_max_; }
    int stride() const { return n_max_ + 1; }
    bool in_domain(int n0, int n1) const { return n0 >= 0 && n1 >= 0 && n0 + n1 <= n_max_; }

    double operator()(int n0, int n1) const { return p_[index(n0, n1)]; }
    double& operator()(int n0, int n1) { return p_[index(n0, n1)]; }
    /// Zero outside the domain.
    double at(int n0, int n1) const { return in_domain(n0, n1) ? p_[index(n0, n1)] : 0.0; }

    std::span<double> data() { return p_; }
    std::span<const double> data() const { return p_; }

    double total() const;
    /// Mass on cells with n0 + n1 >= n_max - width.
    double boundary_mass(int width = 2) const;
    double min_entry() const;
    /// Sum over n0 + n1 == n.
    double anti_diagonal_sum(int n) const;

    double t = 0.0;

private:
    std::size_t index(int n0, int n1) const { return std::size_t(n0) * std::size_t(n_max_ + 1) + std::size_t(n1); }

    int n_max_;
    std::vector<double> p_;
};

/// dp/dt of the diagonal two-mode master equation at fixed (beta, mu, gamma,
/// gamma_tilde). Fluxes across the truncation boundary are zero.
std::vector<double> master_rhs(const ProbabilityGrid& grid, double beta, double mu, double gamma,
                               double gamma_tilde, const ToyParams& params);

/// Convenience overload: rates taken from params at time grid.t.
std::vector<double> master_rhs(const ProbabilityGrid& grid, double beta, double mu, const ToyParams& params);

/// Shifted-Gibbs state p* ~ exp[(beta mu + beta E / (2 N_c))(n0 + n1) - beta H(n0, n1)],
/// which zeroes every exchange bracket of the master equation.
ProbabilityGrid stationary_distribution(double beta, double mu, const ToyParams& params, int n_max);

struct MasterDiagnostics {
    double t;
    double total_drift;    // sum p - 1
    double boundary_mass;
    double min_entry;
};

struct MasterOptions {
    std::vector<double> output_times;
    /// Abort once the boundary band carries more mass than this.
    double leakage_threshold = 1e-10;
    int boundary_width = 2;
    /// dt = cfl / (max total exit rate); RK4 is stable for cfl up to ~1.39.
    double cfl = 1.0;
    double negative_tolerance = 1e-12;
};

struct MasterTrajectory {
    std::vector<ProbabilityGrid> snapshots;  // one per output time, plus the final state
    std::vector<MasterDiagnostics> diagnostics;
    std::size_t steps = 0;
};

/// Classical RK4 with step size tied to the largest exit rate.
MasterTrajectory evolve_master(ProbabilityGrid grid, const QuenchSchedule& s, const ToyParams& params, double t_f,
                               const MasterOptions& opts = {});

struct Moments {
    std::array<double, 2> mean{};
    std::array<std::array<double, 2>, 2> cov{};
};

Moments marginal_moments(const ProbabilityGrid& grid);

double total_variation(const ProbabilityGrid& a, const ProbabilityGrid& b);

} // namespace quench
