#pragma once

#include "quench/analysis.hpp"
#include "quench/schedules.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace quench {

using Complex = std::complex<double>;

/// Order parameter on a periodic 1D lattice of circumference `length`
/// (units of the thermal wavelength at T_c).
struct RingField {
    std::vector<Complex> psi;
    double length = 0.0;
    double t = 0.0;

    std::size_t sites() const { return psi.size(); }
    double dx() const { return length / double(psi.size()); }
    /// Throws ConfigError unless sites >= 8, length > 0 and every entry is finite.
    void validate() const;
};

/// Wraps an angle into (-pi, pi]; -pi maps to +pi.
double wrap_phase(double angle);

/// (1/2pi) sum_j wrap(arg psi_{j+1} - arg psi_j), cyclic. Throws
/// UndefinedWinding naming the first site with psi == 0.
long winding_number(const RingField& field);

/// Mean occupations indexed by signed wavenumber k in [-k_max, k_max].
struct ModeOccupations {
    int k_max = 0;
    std::vector<double> nbar;  // nbar[k + k_max]

    double at(int k) const { return nbar[std::size_t(k + k_max)]; }
    /// Builds the symmetric table nbar_{-k} = nbar_k from values for k = 0..k_max.
    static ModeOccupations symmetric(std::span<const double> by_abs_k);
};

/// psi_j = sum_k psi_k e^{2 pi i k j / N} / sqrt(L) with independent complex
/// Gaussian psi_k of variance nbar_k.
RingField sample_initial_field(const ModeOccupations& nbars, std::size_t n_sites, double length, std::uint64_t seed,
                               double t = 0.0);

/// Dimensionless lattice kinetic energy (2/dx)^2 sin^2(pi k / N) of mode k,
/// the symbol of the three-point Laplacian.
double lattice_mode_energy(int k, std::size_t n_sites, double length);

struct RingOptions {
    /// beta_c Lambda; the self-interaction enters as (beta / beta_c) * lambda.
    double lambda = 1.0;
    /// Relaxation time multiplying psi-dot.
    double tau0 = 1.0;
    double dt = 0.1;
    /// Snapshots are taken at these times (inside (t0, t_f)) and at t_f.
    std::vector<double> output_times;
    /// Record density range and winding every this many steps; 0 disables.
    std::size_t monitor_every = 0;
};

struct RingMonitor {
    double t = 0.0;
    double min_density = 0.0;
    double max_density = 0.0;
    double mean_density = 0.0;
    std::optional<long> winding;
};

struct RingTrajectory {
    std::vector<RingField> snapshots;
    std::vector<RingMonitor> monitor;
    std::size_t steps = 0;
};

/// tau0 psi-dot = (beta/beta_c) lap psi + beta mu psi - (beta/beta_c) lambda |psi|^2 psi.
/// Strang splitting: the local part is solved exactly (logistic density,
/// phase frozen), the Laplacian exactly in Fourier space. Aborts with
/// NumericalError when |psi| exceeds 10 max(sqrt(max beta mu / lambda), max |psi(t0)|).
RingTrajectory integrate_ring(RingField field, const QuenchSchedule& s, double t_f, const RingOptions& opts = {});

/// Integer winding of N_d independent uniform phases around the ring.
long random_walk_winding(std::size_t n_domains, std::uint64_t seed);

enum class Pipeline { RingTdgl, RandomWalk };

const char* to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& name);

struct RingScanParams {
    double length = 256.0;
    std::size_t sites = 256;
    double gamma0 = 1.0;
    double beta_c = 1.0;
    double lambda = 1.0;
    /// Relaxation time in units of 1/Gamma0. 2 makes the linearised growth of
    /// |psi_k|^2 equal the small-occupation growth rate of nbar_k.
    double tau0 = 2.0;
    /// Largest |k| seeded; negative means N/2 - 1.
    int k_max = -1;
    /// Linear kinetics starts at this multiple of tau_Q (in equilibrium).
    double qkt_start = -3.0;
    /// Handoff to the field equation at this multiple of t_hat.
    double handoff = 1.0;
    /// Field evolution ends at this multiple of tau_Q.
    double t_end = 3.0;
    double dt = 0.1;
};

struct WindingSample {
    double tau_q = 0.0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    long winding = 0;
    double mean_density = 0.0;
    bool aborted = false;
    std::string error;
};

struct ScanRow {
    double tau_q = 0.0;
    double xi_hat = 0.0;
    std::size_t n_domains = 0;
    std::size_t runs = 0;     // successful runs
    std::size_t aborted = 0;
    double w_rms = 0.0;
    double w_rms_stderr = 0.0;
    Pipeline pipeline = Pipeline::RandomWalk;
};

struct ScanOptions {
    std::vector<double> tau_qs;
    std::size_t runs = 100;
    Pipeline pipeline = Pipeline::RandomWalk;
    RingScanParams params{};
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::vector<WindingSample> samples;
    /// W_rms vs tau_Q; present when at least three distinct tau_Q have data.
    std::optional<PowerLawFit> fit;
};

/// Occupations handed to the field equation: nbar_k at the handoff time for
/// |k| <= k_max, from the linear kinetics under beta mu = tanh(t / tau_Q) with
/// beta E_k the lattice mode energy.
ModeOccupations handoff_occupations(double tau_q, const RingScanParams& p);

/// N_d = round(L / xi_hat), at least 1.
std::size_t domain_count(double length, double tau_q, double gamma0);

/// Ensemble RMS winding per tau_Q. runs == 0 yields an empty table.
ScanResult kz_scan(const ScanOptions& opts);

} // namespace quench
