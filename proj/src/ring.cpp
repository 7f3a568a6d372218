#include "quench/ring.hpp"

#include "quench/errors.hpp"
#include "quench/linear_qkt.hpp"
#include "quench/parallel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>

namespace quench {

namespace {

constexpr double kPi = std::numbers::pi;

// Planning is not thread-safe in FFTW; execution on fresh arrays is.
struct FftPlans {
    fftw_plan forward;
    fftw_plan backward;
};

FftPlans plans_for(std::size_t n)
{
    static std::mutex lock;
    static std::map<std::size_t, FftPlans> cache;
    std::lock_guard guard(lock);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;
    std::vector<Complex> buf(n);
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    FftPlans plans{fftw_plan_dft_1d(int(n), p, p, FFTW_FORWARD, flags),
                   fftw_plan_dft_1d(int(n), p, p, FFTW_BACKWARD, flags)};
    cache.emplace(n, plans);
    return plans;
}

void execute(fftw_plan plan, std::vector<Complex>& data)
{
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

} // namespace

void RingField::validate() const
{
    if (psi.size() < 8)
        throw ConfigError("ring needs at least 8 sites");
    if (!(length > 0.0) || !std::isfinite(length))
        throw ConfigError("ring length must be positive");
    for (const Complex& z : psi)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw ConfigError("ring field contains non-finite entries");
}

double wrap_phase(double angle)
{
    double w = std::remainder(angle, 2.0 * kPi);
    if (w <= -kPi)
        w += 2.0 * kPi;
    return w;
}

long winding_number(const RingField& field)
{
    const std::size_t n = field.psi.size();
    for (std::size_t j = 0; j < n; ++j)
        if (field.psi[j] == Complex{})
            throw UndefinedWinding(j);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Complex next = field.psi[(j + 1) % n];
        // arg(next * conj(cur)) is the wrapped difference, except that atan2 puts -pi at -pi
        double d = std::arg(next * std::conj(field.psi[j]));
        if (d <= -kPi)
            d = kPi;
        total += d;
    }
    return std::lround(total / (2.0 * kPi));
}

ModeOccupations ModeOccupations::symmetric(std::span<const double> by_abs_k)
{
    if (by_abs_k.empty())
        throw ConfigError("need at least the k = 0 occupation");
    ModeOccupations m;
    m.k_max = int(by_abs_k.size()) - 1;
    m.nbar.resize(2 * by_abs_k.size() - 1);
    for (int k = -m.k_max; k <= m.k_max; ++k)
        m.nbar[std::size_t(k + m.k_max)] = by_abs_k[std::size_t(std::abs(k))];
    return m;
}

RingField sample_initial_field(const ModeOccupations& nbars, std::size_t n_sites, double length, std::uint64_t seed,
                               double t)
{
    if (n_sites < 8)
        throw ConfigError("ring needs at least 8 sites");
    if (nbars.k_max < 0 || nbars.nbar.size() != std::size_t(2 * nbars.k_max + 1))
        throw ConfigError("malformed mode occupation table");
    if (2 * std::size_t(nbars.k_max) >= n_sites)
        throw ConfigError("k_max = " + std::to_string(nbars.k_max) + " too large for " + std::to_string(n_sites) +
                          " sites (need k_max < N/2)");
    for (double v : nbars.nbar)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("mode occupations must be finite and non-negative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Complex> modes(n_sites);
    for (int k = -nbars.k_max; k <= nbars.k_max; ++k) {
        const double sd = std::sqrt(0.5 * nbars.at(k));
        const double re = normal(rng), im = normal(rng);
        modes[std::size_t((k + long(n_sites)) % long(n_sites))] = {sd * re, sd * im};
    }
    execute(plans_for(n_sites).backward, modes);
    const double norm = 1.0 / std::sqrt(length);
    for (Complex& z : modes)
        z *= norm;
    return RingField{std::move(modes), length, t};
}

double lattice_mode_energy(int k, std::size_t n_sites, double length)
{
    const double dx = length / double(n_sites);
    const double s = std::sin(kPi * double(k) / double(n_sites));
    return 4.0 * s * s / (dx * dx);
}

namespace {

RingMonitor observe(const RingField& f)
{
    RingMonitor m;
    m.t = f.t;
    m.min_density = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const Complex& z : f.psi) {
        const double rho = std::norm(z);
        m.min_density = std::min(m.min_density, rho);
        m.max_density = std::max(m.max_density, rho);
        sum += rho;
    }
    m.mean_density = sum / double(f.psi.size());
    if (m.min_density > 0.0)
        m.winding = winding_number(f);
    return m;
}

} // namespace

RingTrajectory integrate_ring(RingField field, const QuenchSchedule& s, double t_f, const RingOptions& opts)
{
    field.validate();
    if (!(opts.lambda > 0.0))
        throw ConfigError("self-interaction must be positive");
    if (!(opts.tau0 > 0.0))
        throw ConfigError("relaxation time must be positive");
    if (!(opts.dt > 0.0))
        throw ConfigError("ring time step must be positive");
    if (!(t_f >= field.t))
        throw ConfigError("integrate_ring: t_f precedes the field time");

    const std::size_t n = field.sites();
    const FftPlans plans = plans_for(n);
    std::vector<double> kinetic(n);
    for (std::size_t k = 0; k < n; ++k)
        kinetic[k] = lattice_mode_energy(int(k), n, field.length);

    double max_abs0 = 0.0;
    for (const Complex& z : field.psi)
        max_abs0 = std::max(max_abs0, std::abs(z));
    const double bm_max = s.max_beta_mu();
    const double ceiling =
        10.0 * std::max(std::isfinite(bm_max) ? std::sqrt(std::max(bm_max, 0.0) / opts.lambda) : HUGE_VAL, max_abs0);
    const double ceiling_sq = ceiling * ceiling;

    const double inv_tau = 1.0 / opts.tau0;
    auto local = [&](double t_mid, double h) {
        const Drive d = s.eval(t_mid);
        const double ratio = d.beta / s.beta_c();
        const double a = d.beta_mu * inv_tau;
        const double b = ratio * opts.lambda * inv_tau;
        const double g = std::exp(2.0 * a * h);
        const double growth = a != 0.0 ? std::expm1(2.0 * a * h) / a : 2.0 * h;
        for (Complex& z : field.psi) {
            const double rho = std::norm(z);
            z *= std::sqrt(g / (1.0 + b * rho * growth));
        }
    };
    auto diffuse = [&](double t_mid, double h) {
        const Drive d = s.eval(t_mid);
        const double c = d.beta / s.beta_c() * inv_tau * h;
        execute(plans.forward, field.psi);
        const double inv_n = 1.0 / double(n);
        for (std::size_t k = 0; k < n; ++k)
            field.psi[k] *= std::exp(-c * kinetic[k]) * inv_n;
        execute(plans.backward, field.psi);
    };

    std::vector<double> targets;
    for (double t : opts.output_times)
        if (t > field.t && t < t_f)
            targets.push_back(t);
    std::sort(targets.begin(), targets.end());
    targets.push_back(t_f);

    RingTrajectory out;
    if (opts.monitor_every > 0)
        out.monitor.push_back(observe(field));
    for (double target : targets) {
        while (field.t < target) {
            double h = std::min(opts.dt, target - field.t);
            // avoid a sliver step before the target
            if (target - field.t - h < 1e-9 * opts.dt)
                h = target - field.t;
            const double t0 = field.t;
            local(t0 + 0.25 * h, 0.5 * h);
            diffuse(t0 + 0.5 * h, h);
            local(t0 + 0.75 * h, 0.5 * h);
            field.t = (h == target - t0) ? target : t0 + h;
            ++out.steps;

            double peak = 0.0;
            for (const Complex& z : field.psi)
                peak = std::max(peak, std::norm(z));
            if (!std::isfinite(peak) || peak > ceiling_sq)
                throw NumericalError("ring field blew up: max |psi| = " + std::to_string(std::sqrt(peak)), field.t);
            if (opts.monitor_every > 0 && out.steps % opts.monitor_every == 0)
                out.monitor.push_back(observe(field));
        }
        out.snapshots.push_back(field);
    }
    if (opts.monitor_every > 0 && out.monitor.back().t != field.t)
        out.monitor.push_back(observe(field));
    return out;
}

long random_walk_winding(std::size_t n_domains, std::uint64_t seed)
{
    if (n_domains == 0)
        throw ConfigError("random walk needs at least one domain");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    const double first = phase(rng);
    double prev = first, total = 0.0;
    for (std::size_t i = 1; i < n_domains; ++i) {
        const double th = phase(rng);
        total += wrap_phase(th - prev);
        prev = th;
    }
    total += wrap_phase(first - prev);
    return std::lround(total / (2.0 * kPi));
}

const char* to_string(Pipeline p) { return p == Pipeline::RingTdgl ? "ring-tdgl" : "random-walk"; }

Pipeline parse_pipeline(const std::string& name)
{
    if (name == "ring-tdgl")
        return Pipeline::RingTdgl;
    if (name == "random-walk")
        return Pipeline::RandomWalk;
    throw ConfigError("unknown pipeline '" + name + "' (expected ring-tdgl or random-walk)");
}

std::size_t domain_count(double length, double tau_q, double gamma0)
{
    const double xi = frozen_correlation_length(tau_q, gamma0);
    return std::max<std::size_t>(1, std::size_t(std::llround(length / xi)));
}

ModeOccupations handoff_occupations(double tau_q, const RingScanParams& p)
{
    const int k_max = p.k_max < 0 ? int(p.sites / 2) - 1 : p.k_max;
    if (2 * std::size_t(k_max) >= p.sites)
        throw ConfigError("k_max too large for the lattice");
    const auto s = QuenchSchedule::tanh(tau_q, p.beta_c, false);
    const double t_i = p.qkt_start * tau_q;
    const double t_h = p.handoff * freeze_out_time(tau_q, p.gamma0);
    OccupancyOptions opts;
    opts.samples = 2;
    opts.n_cap = std::numeric_limits<double>::infinity();
    std::vector<double> by_k(std::size_t(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) {
        const ModeSpec mode{lattice_mode_energy(k, p.sites, p.length) / p.beta_c, p.gamma0, k};
        by_k[std::size_t(k)] = integrate_from_equilibrium(s, mode, t_i, t_h, opts).nbar.back();
    }
    return ModeOccupations::symmetric(by_k);
}

ScanResult kz_scan(const ScanOptions& opts)
{
    ScanResult result;
    if (opts.runs == 0)
        return result;
    if (opts.tau_qs.empty())
        throw ConfigError("scan needs at least one tau_q");
    for (double tq : opts.tau_qs)
        if (!(tq > 0.0))
            throw ConfigError("tau_q values must be positive");
    const RingScanParams& p = opts.params;
    if (!(p.length > 0.0) || !(p.gamma0 > 0.0))
        throw ConfigError("length and gamma0 must be positive");

    const std::size_t per = opts.runs;
    result.samples.resize(opts.tau_qs.size() * per);

    for (std::size_t q = 0; q < opts.tau_qs.size(); ++q) {
        const double tau_q = opts.tau_qs[q];
        ScanRow row;
        row.tau_q = tau_q;
        row.xi_hat = frozen_correlation_length(tau_q, p.gamma0);
        row.n_domains = domain_count(p.length, tau_q, p.gamma0);
        row.pipeline = opts.pipeline;

        std::optional<ModeOccupations> seeds;
        std::optional<QuenchSchedule> schedule;
        RingOptions ring_opts;
        double t_h = 0.0, t_end = 0.0;
        if (opts.pipeline == Pipeline::RingTdgl) {
            seeds = handoff_occupations(tau_q, p);
            schedule = QuenchSchedule::tanh(tau_q, p.beta_c, false);
            ring_opts.lambda = p.lambda;
            ring_opts.tau0 = p.tau0 / p.gamma0;
            ring_opts.dt = p.dt;
            t_h = p.handoff * freeze_out_time(tau_q, p.gamma0);
            t_end = std::max(p.t_end * tau_q, t_h);
        }

        parallel_for(per, opts.workers, [&](std::size_t r) {
            WindingSample& w = result.samples[q * per + r];
            w.tau_q = tau_q;
            w.run = r;
            w.seed = derive_seed(opts.seed, q * per + r);
            if (opts.pipeline == Pipeline::RandomWalk) {
                w.winding = random_walk_winding(row.n_domains, w.seed);
                return;
            }
            try {
                RingField f = sample_initial_field(*seeds, p.sites, p.length, w.seed, t_h);
                auto traj = integrate_ring(std::move(f), *schedule, t_end, ring_opts);
                const RingField& fin = traj.snapshots.back();
                w.winding = winding_number(fin);
                double sum = 0.0;
                for (const Complex& z : fin.psi)
                    sum += std::norm(z);
                w.mean_density = sum / double(fin.sites());
            } catch (const NumericalError& e) {
                w.aborted = true;
                w.error = e.what();
            } catch (const UndefinedWinding& e) {
                w.aborted = true;
                w.error = e.what();
            }
        });

        std::vector<long> ws;
        for (std::size_t r = 0; r < per; ++r) {
            const WindingSample& w = result.samples[q * per + r];
            if (w.aborted)
                ++row.aborted;
            else
                ws.push_back(w.winding);
        }
        row.runs = ws.size();
        if (!ws.empty()) {
            const RmsEstimate est = ensemble_rms(ws);
            row.w_rms = est.rms;
            row.w_rms_stderr = est.stderr_;
        }
        result.rows.push_back(row);
    }

    std::vector<double> xs, ys;
    std::set<double> distinct;
    for (const ScanRow& row : result.rows)
        if (row.runs > 0 && row.w_rms > 0.0) {
            xs.push_back(row.tau_q);
            ys.push_back(row.w_rms);
            distinct.insert(row.tau_q);
        }
    if (distinct.size() >= 3)
        result.fit = fit_power_law(xs, ys);
    return result;
}

} // namespace quench
