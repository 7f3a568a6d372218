#pragma once

#include "quench/ode.hpp"
#include "quench/schedules.hpp"
#include "quench/toy_model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quench {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

struct FlowState {
    double n0 = 0.0;
    double n1 = 0.0;
    double t = 0.0;
};

enum class FlowKind { Qkt, Tdgl };

const char* to_string(FlowKind kind);

/// Deterministic drift of the continuum limit of the master equation:
///   dn0/dt = G n0 [e^{bm} - e^{a(n0 + 2 n1)}] + 2 Gt n0 n1 e^{-a|D|/2} sinh(a D / 2)
///   dn1/dt = G n1 [e^{bm} - e^{a(N_c + n1 + 2 n0)}] - 2 Gt n0 n1 e^{-a|D|/2} sinh(a D / 2)
/// with a = beta E / N_c, D = N_c + n0 - n1 and Gt = Gamma_tilde (beta E Gamma by default).
Vec2 qkt_drift(const FlowState& s, double beta, double mu, const ToyParams& params);

/// The Ginzburg-Landau part of qkt_drift: exchange terms removed.
Vec2 tdgl_drift(const FlowState& s, double beta, double mu, const ToyParams& params);

/// Just the exchange (scattering off the condensate) contribution to qkt_drift.
Vec2 exchange_drift(const FlowState& s, double beta, double mu, const ToyParams& params);

Vec2 drift(FlowKind kind, const FlowState& s, double beta, double mu, const ToyParams& params);

struct Jump {
    int d0;
    int d1;
    double rate;
};

/// Exact transition rates out of (n0, n1) implied by the master equation
/// (gain/loss in each mode and the two exchange directions). Evaluated at
/// real-valued occupations when the state is not on the lattice.
std::array<Jump, 6> jump_rates(const FlowState& s, double beta, double mu, const ToyParams& params);

/// Sum over jumps of (jump vector) x rate.
Vec2 first_jump_moment(const FlowState& s, double beta, double mu, const ToyParams& params);

/// |first_jump_moment - qkt_drift| / |first_jump_moment| (Euclidean norms).
double drift_oracle_check(const FlowState& s, double beta, double mu, const ToyParams& params);

/// D = 1/2 sum over jumps of (jump)(jump)^T x rate.
Mat2 diffusion_matrix(const FlowState& s, double beta, double mu, const ToyParams& params);

/// Central finite-difference Jacobian of the drift, step max(1, 1e-4 n);
/// one-sided where the central stencil would leave n >= 0.
Mat2 drift_jacobian(FlowKind kind, const FlowState& s, double beta, double mu, const ToyParams& params);

struct FlowOptions {
    ode::Options ode{.rtol = 1e-8, .atol = 1e-8, .initial_step = 1e-3};
    /// Number of uniformly spaced output samples (the last is t_f).
    std::size_t samples = 201;
};

std::vector<FlowState> integrate_flow(FlowState start, FlowKind kind, const QuenchSchedule& s,
                                      const ToyParams& params, double t_f, const FlowOptions& opts = {});

struct GaussianState {
    Vec2 mean{};
    Mat2 cov{};
    double t = 0.0;
};

struct Ellipse {
    Vec2 center{};
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle = 0.0;  // of the major axis, radians from the n0 axis
};

/// Chi-square quantile with two degrees of freedom enclosing 68% of the mass: -2 ln(0.32).
inline constexpr double kChi2Contour68 = 2.2788685663767296;

Ellipse contour68(const GaussianState& g);

struct GaussianOptions {
    std::vector<double> output_times;
    ode::Options ode{.rtol = 1e-8, .atol = 1e-8, .initial_step = 1e-4};
    /// Drop the diffusion source; the covariance then evolves only by transport.
    bool diffusion = true;
    /// Tolerated negative eigenvalue, relative to max(1, trace C), before aborting.
    double psd_tolerance = 1e-12;
};

/// Moment closure: mean follows qkt_drift, covariance obeys C' = J C + C J^T + 2 D.
/// Returns the state at every output time inside (g.t, t_f) and at t_f.
std::vector<GaussianState> evolve_gaussian(GaussianState g, const QuenchSchedule& s, const ToyParams& params,
                                           double t_f, const GaussianOptions& opts = {});

/// Evenly spaced seeds on n0 + n1 = total, endpoints included, ordered by n0.
std::vector<FlowState> seed_line(double total, std::size_t count, double t_s);

struct StochasticSeeds {
    std::vector<FlowState> states;
    std::vector<std::string> warnings;
};

/// n_k = |psi_k|^2 with psi_k a complex Gaussian of variance nbar_k.
StochasticSeeds seed_exponential(Vec2 nbars, std::size_t count, std::uint64_t seed, double t_s = 0.0);

/// Coherent start time: when the linear-theory occupation of mode 0
/// (E = 0, rate Gamma) first reaches `target`, seeded at equilibrium at t_i.
std::optional<double> coherent_start_time(const QuenchSchedule& s, const ToyParams& params, double target,
                                          double t_i, double t_max);

enum class Outcome { Ground, MetastableVortex, Undecided };

const char* to_string(Outcome o);

struct ClassifyOptions {
    /// Quasi-static means |dn_j/dt| tau_Q / (n_j + 1) below this for both modes.
    double smallness = 1e-3;
};

Outcome classify_outcome(const FlowState& final_state, FlowKind kind, const QuenchSchedule& s,
                         const ToyParams& params, const ClassifyOptions& opts = {});

struct MetastableOptions {
    /// End of integration; defaults to 5 tau_Q past the crossing.
    std::optional<double> t_end;
    ClassifyOptions classify{};
    FlowOptions flow{};
    unsigned workers = 1;
};

struct MetastableResult {
    double fraction = 0.0;  // metastable / total
    double stderr_ = 0.0;   // binomial
    std::size_t metastable = 0;
    std::size_t ground = 0;
    std::size_t undecided = 0;
    std::vector<Outcome> outcomes;
    std::vector<FlowState> finals;
};

MetastableResult metastable_probability(std::span<const FlowState> seeds, FlowKind kind, const QuenchSchedule& s,
                                        const ToyParams& params, const MetastableOptions& opts = {});

} // namespace quench
