#include "quench/toy_model.hpp"

#include "quench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace quench {

void ToyParams::validate() const
{
    if (!(n_c > 0.0) || !std::isfinite(n_c))
        throw ConfigError("N_c must be positive");
    if (!(energy >= 0.0) || !std::isfinite(energy))
        throw ConfigError("level spacing E must be non-negative");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
        throw ConfigError("Gamma must be non-negative");
    if (gamma_tilde && !(*gamma_tilde >= 0.0))
        throw ConfigError("Gamma_tilde must be non-negative");
}

double toy_energy(double n0, double n1, const ToyParams& params)
{
    return params.energy * (n1 + (n0 * n0 + n1 * n1 + 4.0 * n0 * n1) / (2.0 * params.n_c));
}

ProbabilityGrid::ProbabilityGrid(int n_max, double t0) : t(t0), n_max_(n_max)
{
    if (n_max < 1)
        throw ConfigError("probability grid needs n_max >= 1");
    p_.assign(std::size_t(n_max + 1) * std::size_t(n_max + 1), 0.0);
}

ProbabilityGrid ProbabilityGrid::point_mass(int n_max, int n0, int n1, double t0)
{
    ProbabilityGrid g(n_max, t0);
    if (!g.in_domain(n0, n1))
        throw ConfigError("point mass outside the grid");
    g(n0, n1) = 1.0;
    return g;
}

double ProbabilityGrid::total() const
{
    double s = 0.0;
    for (double v : p_)
        s += v;
    return s;
}

double ProbabilityGrid::boundary_mass(int width) const
{
    double s = 0.0;
    for (int n0 = 0; n0 <= n_max_; ++n0)
        for (int n1 = std::max(0, n_max_ - width - n0); n0 + n1 <= n_max_; ++n1)
            s += (*this)(n0, n1);
    return s;
}

double ProbabilityGrid::min_entry() const { return *std::min_element(p_.begin(), p_.end()); }

double ProbabilityGrid::anti_diagonal_sum(int n) const
{
    double s = 0.0;
    for (int n0 = 0; n0 <= n; ++n0)
        s += at(n0, n - n0);
    return s;
}

namespace {

// Per-evaluation rate tables; every exponent depends on one integer combination
// of (n0, n1), so the grid sweep performs no transcendental calls.
struct RateTables {
    double ebm;
    std::vector<double> r_down;  // e^{a m}, m = n0 + 2 n1
    std::vector<double> s_down;  // e^{a (N_c + m)}, m = 2 n0 + n1
    std::vector<double> t_fwd;   // e^{-a|D|/2} e^{+aD/2}, D = N_c + j, j = n0 + 1 - n1 (offset n_max)
    std::vector<double> t_bwd;   // e^{-a|D|/2} e^{-aD/2}

    RateTables(int n_max, double beta, double beta_mu, const ToyParams& params)
    {
        const double a = beta * params.energy / params.n_c;
        ebm = std::exp(beta_mu);
        r_down.resize(std::size_t(2 * n_max + 1));
        s_down.resize(std::size_t(2 * n_max + 1));
        for (int m = 0; m <= 2 * n_max; ++m) {
            r_down[std::size_t(m)] = std::exp(a * m);
            s_down[std::size_t(m)] = std::exp(a * (params.n_c + m));
        }
        t_fwd.resize(std::size_t(2 * n_max + 2));
        t_bwd.resize(std::size_t(2 * n_max + 2));
        for (int j = -n_max; j <= n_max + 1; ++j) {
            const double d = params.n_c + j;
            const double damp = std::exp(-0.5 * a * std::abs(d));
            t_fwd[std::size_t(j + n_max)] = damp * std::exp(0.5 * a * d);
            t_bwd[std::size_t(j + n_max)] = damp * std::exp(-0.5 * a * d);
        }
    }
};

// dp = generator applied to p. Fluxes are accumulated edge by edge so that the
// column sums of the generator vanish up to rounding.
void apply_generator(const double* p, double* dp, int n_max, const RateTables& tab, double gamma, double gamma_tilde)
{
    const std::size_t w = std::size_t(n_max + 1);
    std::fill(dp, dp + w * w, 0.0);
    for (int n0 = 0; n0 <= n_max; ++n0) {
        const double* row = p + std::size_t(n0) * w;
        const double* next = row + w;
        double* drow = dp + std::size_t(n0) * w;
        double* dnext = drow + w;
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            const double pc = row[n1];
            const bool interior = n0 + n1 < n_max;
            if (interior) {
                // R: (n0, n1) <-> (n0 + 1, n1)
                const double fr = gamma * (n0 + 1) * (tab.ebm * pc - tab.r_down[std::size_t(n0 + 2 * n1)] * next[n1]);
                drow[n1] -= fr;
                dnext[n1] += fr;
                // S: (n0, n1) <-> (n0, n1 + 1)
                const double fs =
                    gamma * (n1 + 1) * (tab.ebm * pc - tab.s_down[std::size_t(2 * n0 + n1)] * row[n1 + 1]);
                drow[n1] -= fs;
                drow[n1 + 1] += fs;
            }
            if (n1 >= 1 && gamma_tilde != 0.0) {
                // T: (n0, n1) <-> (n0 + 1, n1 - 1)
                const std::size_t j = std::size_t(n0 + 1 - n1 + n_max);
                const double ft = gamma_tilde * double(n0 + 1) * double(n1) *
                                  (tab.t_fwd[j] * pc - tab.t_bwd[j] * next[n1 - 1]);
                drow[n1] -= ft;
                dnext[n1 - 1] += ft;
            }
        }
    }
}

double max_exit_rate(int n_max, const RateTables& tab, double gamma, double gamma_tilde)
{
    double worst = 0.0;
    for (int n0 = 0; n0 <= n_max; ++n0) {
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            double r = 0.0;
            if (n0 + n1 < n_max)
                r += gamma * (n0 + n1 + 2) * tab.ebm;
            if (n0 > 0)
                r += gamma * n0 * tab.r_down[std::size_t(n0 - 1 + 2 * n1)];
            if (n1 > 0)
                r += gamma * n1 * tab.s_down[std::size_t(2 * n0 + n1 - 1)];
            if (n1 > 0)
                r += gamma_tilde * double(n0 + 1) * n1 * tab.t_fwd[std::size_t(n0 + 1 - n1 + n_max)];
            if (n0 > 0)
                r += gamma_tilde * double(n0) * (n1 + 1) * tab.t_bwd[std::size_t(n0 - n1 - 1 + n_max)];
            worst = std::max(worst, r);
        }
    }
    return worst;
}

} // namespace

std::vector<double> master_rhs(const ProbabilityGrid& grid, double beta, double mu, double gamma, double gamma_tilde,
                               const ToyParams& params)
{
    params.validate();
    const RateTables tab(grid.n_max(), beta, beta * mu, params);
    std::vector<double> dp(grid.data().size());
    apply_generator(grid.data().data(), dp.data(), grid.n_max(), tab, gamma, gamma_tilde);
    return dp;
}

std::vector<double> master_rhs(const ProbabilityGrid& grid, double beta, double mu, const ToyParams& params)
{
    return master_rhs(grid, beta, mu, params.gamma_at(grid.t), params.gamma_tilde_at(grid.t, beta), params);
}

ProbabilityGrid stationary_distribution(double beta, double mu, const ToyParams& params, int n_max)
{
    params.validate();
    const double a = beta * params.energy / params.n_c;
    const double shifted = beta * mu + 0.5 * a;
    ProbabilityGrid g(n_max);
    double top = -std::numeric_limits<double>::infinity();
    for (int n0 = 0; n0 <= n_max; ++n0)
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            const double lp = shifted * (n0 + n1) - beta * toy_energy(n0, n1, params);
            g(n0, n1) = lp;
            top = std::max(top, lp);
        }
    if (!std::isfinite(top))
        throw NumericalError("stationary distribution: non-finite log weight", 0.0);
    double z = 0.0;
    for (int n0 = 0; n0 <= n_max; ++n0)
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            const double v = std::exp(g(n0, n1) - top);
            g(n0, n1) = v;
            z += v;
        }
    if (!(z > 0.0) || !std::isfinite(z))
        throw NumericalError("stationary distribution: normalization overflow", 0.0);
    for (double& v : g.data())
        v /= z;
    return g;
}

MasterTrajectory evolve_master(ProbabilityGrid grid, const QuenchSchedule& s, const ToyParams& params, double t_f,
                               const MasterOptions& opts)
{
    params.validate();
    if (!(t_f >= grid.t))
        throw ConfigError("evolve_master: t_f precedes the grid time");
    if (!(std::abs(grid.total() - 1.0) <= 1e-9))
        throw ConfigError("evolve_master: initial grid is not normalized");

    std::vector<double> outputs;
    for (double t : opts.output_times)
        if (t > grid.t && t < t_f)
            outputs.push_back(t);
    std::sort(outputs.begin(), outputs.end());
    outputs.push_back(t_f);

    const int n_max = grid.n_max();
    const std::size_t size = grid.data().size();
    std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);

    MasterTrajectory out;
    auto diagnose = [&](const ProbabilityGrid& g) {
        const MasterDiagnostics d{g.t, g.total() - 1.0, g.boundary_mass(opts.boundary_width), g.min_entry()};
        out.diagnostics.push_back(d);
        if (d.boundary_mass > opts.leakage_threshold)
            throw NumericalError("boundary mass " + std::to_string(d.boundary_mass) + " exceeds leakage threshold",
                                 g.t);
        if (d.min_entry < -opts.negative_tolerance)
            throw NumericalError("negative probability " + std::to_string(d.min_entry), g.t);
    };
    diagnose(grid);

    auto eval = [&](double t, const double* p, double* dp) {
        const Drive d = s.eval(t);
        const RateTables tab(n_max, d.beta, d.beta_mu, params);
        apply_generator(p, dp, n_max, tab, params.gamma_at(t), params.gamma_tilde_at(t, d.beta));
    };

    double* p = grid.data().data();
    std::size_t next_output = 0;
    while (next_output < outputs.size()) {
        const double target = outputs[next_output];
        while (grid.t < target) {
            const Drive d = s.eval(grid.t);
            const RateTables tab(n_max, d.beta, d.beta_mu, params);
            const double rate = max_exit_rate(n_max, tab, params.gamma_at(grid.t), params.gamma_tilde_at(grid.t, d.beta));
            double dt = rate > 0.0 ? opts.cfl / rate : target - grid.t;
            bool last = false;
            if (grid.t + dt >= target) {
                dt = target - grid.t;
                last = true;
            }
            const double t0 = grid.t;
            eval(t0, p, k1.data());
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = p[i] + 0.5 * dt * k1[i];
            eval(t0 + 0.5 * dt, tmp.data(), k2.data());
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = p[i] + 0.5 * dt * k2[i];
            eval(t0 + 0.5 * dt, tmp.data(), k3.data());
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = p[i] + dt * k3[i];
            eval(t0 + dt, tmp.data(), k4.data());
            for (std::size_t i = 0; i < size; ++i)
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            grid.t = last ? target : t0 + dt;
            ++out.steps;
            if (grid.min_entry() < -opts.negative_tolerance)
                throw NumericalError("negative probability " + std::to_string(grid.min_entry()), grid.t);
        }
        diagnose(grid);
        out.snapshots.push_back(grid);
        ++next_output;
    }
    return out;
}

Moments marginal_moments(const ProbabilityGrid& grid)
{
    Moments m;
    const int n_max = grid.n_max();
    double z = 0.0, s0 = 0.0, s1 = 0.0;
    for (int n0 = 0; n0 <= n_max; ++n0)
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            const double p = grid(n0, n1);
            z += p;
            s0 += p * n0;
            s1 += p * n1;
        }
    m.mean = {s0 / z, s1 / z};
    double c00 = 0.0, c01 = 0.0, c11 = 0.0;
    for (int n0 = 0; n0 <= n_max; ++n0)
        for (int n1 = 0; n0 + n1 <= n_max; ++n1) {
            const double p = grid(n0, n1);
            const double d0 = n0 - m.mean[0], d1 = n1 - m.mean[1];
            c00 += p * d0 * d0;
            c01 += p * d0 * d1;
            c11 += p * d1 * d1;
        }
    m.cov = {{{c00 / z, c01 / z}, {c01 / z, c11 / z}}};
    return m;
}

double total_variation(const ProbabilityGrid& a, const ProbabilityGrid& b)
{
    if (a.n_max() != b.n_max())
        throw ConfigError("total_variation: grid sizes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i)
        s += std::abs(a.data()[i] - b.data()[i]);
    return 0.5 * s;
}

} // namespace quench
