#include "quench/flow.hpp"

#include "quench/errors.hpp"
#include "quench/linear_qkt.hpp"
#include "quench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace quench {

const char* to_string(FlowKind kind) { return kind == FlowKind::Qkt ? "qkt" : "tdgl"; }

const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::Ground:
        return "ground";
    case Outcome::MetastableVortex:
        return "metastable-vortex";
    case Outcome::Undecided:
        return "undecided";
    }
    return "?";
}

namespace {

struct DriftTerms {
    double gl0, gl1;  // Ginzburg-Landau part
    double ex;        // exchange flux, enters +ex in dn0 and -ex in dn1
};

DriftTerms drift_terms(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const double a = beta * params.energy / params.n_c;
    const double bm = beta * mu;
    const double g = params.gamma_at(s.t);
    const double gt = params.gamma_tilde_at(s.t, beta);
    const double ebm = std::exp(bm);
    const double d = params.n_c + s.n0 - s.n1;
    DriftTerms out;
    out.gl0 = g * s.n0 * (ebm - std::exp(a * (s.n0 + 2.0 * s.n1)));
    out.gl1 = g * s.n1 * (ebm - std::exp(a * (params.n_c + s.n1 + 2.0 * s.n0)));
    out.ex = 2.0 * gt * s.n0 * s.n1 * std::exp(-0.5 * a * std::abs(d)) * std::sinh(0.5 * a * d);
    return out;
}

} // namespace

Vec2 qkt_drift(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const DriftTerms d = drift_terms(s, beta, mu, params);
    return {d.gl0 + d.ex, d.gl1 - d.ex};
}

Vec2 tdgl_drift(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const DriftTerms d = drift_terms(s, beta, mu, params);
    return {d.gl0, d.gl1};
}

Vec2 exchange_drift(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const DriftTerms d = drift_terms(s, beta, mu, params);
    return {d.ex, -d.ex};
}

Vec2 drift(FlowKind kind, const FlowState& s, double beta, double mu, const ToyParams& params)
{
    return kind == FlowKind::Qkt ? qkt_drift(s, beta, mu, params) : tdgl_drift(s, beta, mu, params);
}

std::array<Jump, 6> jump_rates(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const double a = beta * params.energy / params.n_c;
    const double ebm = std::exp(beta * mu);
    const double g = params.gamma_at(s.t);
    const double gt = params.gamma_tilde_at(s.t, beta);
    const double n0 = s.n0, n1 = s.n1;
    // exchange 1 -> 0 crosses the bond with D = N_c + (n0 + 1) - n1; 0 -> 1 the bond with D = N_c + n0 - (n1 + 1)
    const double d_fwd = params.n_c + n0 + 1.0 - n1;
    const double d_bwd = params.n_c + n0 - n1 - 1.0;
    return {{
        {+1, 0, g * (n0 + 1.0) * ebm},
        {-1, 0, g * n0 * std::exp(a * (n0 - 1.0 + 2.0 * n1))},
        {0, +1, g * (n1 + 1.0) * ebm},
        {0, -1, g * n1 * std::exp(a * (params.n_c + 2.0 * n0 + n1 - 1.0))},
        {+1, -1, gt * (n0 + 1.0) * n1 * std::exp(-0.5 * a * std::abs(d_fwd) + 0.5 * a * d_fwd)},
        {-1, +1, gt * n0 * (n1 + 1.0) * std::exp(-0.5 * a * std::abs(d_bwd) - 0.5 * a * d_bwd)},
    }};
}

Vec2 first_jump_moment(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    Vec2 m{0.0, 0.0};
    for (const Jump& j : jump_rates(s, beta, mu, params)) {
        m[0] += j.d0 * j.rate;
        m[1] += j.d1 * j.rate;
    }
    return m;
}

double drift_oracle_check(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    const Vec2 exact = first_jump_moment(s, beta, mu, params);
    const Vec2 approx = qkt_drift(s, beta, mu, params);
    const double num = std::hypot(exact[0] - approx[0], exact[1] - approx[1]);
    const double den = std::hypot(exact[0], exact[1]);
    return den > 0.0 ? num / den : num;
}

Mat2 diffusion_matrix(const FlowState& s, double beta, double mu, const ToyParams& params)
{
    Mat2 d{};
    for (const Jump& j : jump_rates(s, beta, mu, params)) {
        d[0][0] += 0.5 * j.d0 * j.d0 * j.rate;
        d[0][1] += 0.5 * j.d0 * j.d1 * j.rate;
        d[1][1] += 0.5 * j.d1 * j.d1 * j.rate;
    }
    d[1][0] = d[0][1];
    return d;
}

Mat2 drift_jacobian(FlowKind kind, const FlowState& s, double beta, double mu, const ToyParams& params)
{
    Mat2 jac{};
    for (int col = 0; col < 2; ++col) {
        const double n = col == 0 ? s.n0 : s.n1;
        const double h = std::max(1.0, 1e-4 * std::abs(n));
        FlowState plus = s, minus = s;
        (col == 0 ? plus.n0 : plus.n1) += h;
        double width = 2.0 * h;
        if (n - h >= 0.0)
            (col == 0 ? minus.n0 : minus.n1) -= h;
        else
            width = h;
        const Vec2 fp = drift(kind, plus, beta, mu, params);
        const Vec2 fm = drift(kind, minus, beta, mu, params);
        jac[0][col] = (fp[0] - fm[0]) / width;
        jac[1][col] = (fp[1] - fm[1]) / width;
    }
    return jac;
}

std::vector<FlowState> integrate_flow(FlowState start, FlowKind kind, const QuenchSchedule& s,
                                      const ToyParams& params, double t_f, const FlowOptions& opts)
{
    params.validate();
    if (!(start.n0 >= 0.0 && start.n1 >= 0.0))
        throw ConfigError("flow start must have non-negative occupations");
    if (!(t_f >= start.t))
        throw ConfigError("integrate_flow: t_f precedes the start time");

    using State = ode::Integrator<2>::State;
    auto sys = [&](const State& x, State& dxdt, double t) {
        const Drive d = s.eval(t);
        const Vec2 f = drift(kind, {x[0], x[1], t}, d.beta, d.mu, params);
        dxdt = {f[0], f[1]};
    };

    std::vector<FlowState> out;
    out.push_back(start);
    if (t_f == start.t)
        return out;

    ode::Integrator<2> integ(opts.ode);
    State x{start.n0, start.n1};
    double t = start.t;
    const std::size_t samples = std::max<std::size_t>(opts.samples, 2);
    for (std::size_t i = 1; i < samples; ++i) {
        const double target = i + 1 == samples ? t_f : start.t + (t_f - start.t) * double(i) / double(samples - 1);
        integ.advance(sys, x, t, target);
        // both axes are invariant; clip roundoff below zero
        out.push_back({std::max(x[0], 0.0), std::max(x[1], 0.0), t});
    }
    return out;
}

Ellipse contour68(const GaussianState& g)
{
    const double a = g.cov[0][0], b = g.cov[0][1], c = g.cov[1][1];
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    const double l1 = std::max(mid + rad, 0.0);
    const double l2 = std::max(mid - rad, 0.0);
    Ellipse e;
    e.center = g.mean;
    e.semi_major = std::sqrt(kChi2Contour68 * l1);
    e.semi_minor = std::sqrt(kChi2Contour68 * l2);
    e.angle = 0.5 * std::atan2(2.0 * b, a - c);
    return e;
}

namespace {

double min_eigenvalue(const Mat2& c)
{
    const double mid = 0.5 * (c[0][0] + c[1][1]);
    return mid - std::hypot(0.5 * (c[0][0] - c[1][1]), c[0][1]);
}

GaussianState clipped(GaussianState g)
{
    // project onto the PSD cone by zeroing negative eigenvalues
    const double a = g.cov[0][0], b = g.cov[0][1], c = g.cov[1][1];
    if (min_eigenvalue(g.cov) >= 0.0)
        return g;
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    const double l1 = std::max(mid + rad, 0.0);
    const double th = 0.5 * std::atan2(2.0 * b, a - c);
    const double cs = std::cos(th), sn = std::sin(th);
    g.cov = {{{l1 * cs * cs, l1 * cs * sn}, {l1 * cs * sn, l1 * sn * sn}}};
    return g;
}

} // namespace

std::vector<GaussianState> evolve_gaussian(GaussianState g, const QuenchSchedule& s, const ToyParams& params,
                                           double t_f, const GaussianOptions& opts)
{
    params.validate();
    if (!(t_f >= g.t))
        throw ConfigError("evolve_gaussian: t_f precedes the start time");
    if (std::abs(g.cov[0][1] - g.cov[1][0]) > 0.0)
        throw ConfigError("evolve_gaussian: covariance must be symmetric");

    using State = ode::Integrator<5>::State;
    auto sys = [&](const State& y, State& dy, double t) {
        const Drive d = s.eval(t);
        const FlowState m{y[0], y[1], t};
        const Vec2 f = qkt_drift(m, d.beta, d.mu, params);
        const Mat2 j = drift_jacobian(FlowKind::Qkt, m, d.beta, d.mu, params);
        const Mat2 c{{{y[2], y[3]}, {y[3], y[4]}}};
        Mat2 b{};
        if (opts.diffusion) {
            const Mat2 dm = diffusion_matrix({std::max(y[0], 0.0), std::max(y[1], 0.0), t}, d.beta, d.mu, params);
            b = {{{2.0 * dm[0][0], 2.0 * dm[0][1]}, {2.0 * dm[1][0], 2.0 * dm[1][1]}}};
        }
        // (J C)_{ik} = sum_l J_il C_lk ; C' = J C + (J C)^T + B
        Mat2 jc{};
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                jc[i][k] = j[i][0] * c[0][k] + j[i][1] * c[1][k];
        dy[0] = f[0];
        dy[1] = f[1];
        dy[2] = 2.0 * jc[0][0] + b[0][0];
        dy[3] = jc[0][1] + jc[1][0] + b[0][1];
        dy[4] = 2.0 * jc[1][1] + b[1][1];
    };

    std::vector<double> outputs;
    for (double t : opts.output_times)
        if (t > g.t && t < t_f)
            outputs.push_back(t);
    std::sort(outputs.begin(), outputs.end());
    outputs.push_back(t_f);

    ode::Integrator<5> integ(opts.ode);
    State y{g.mean[0], g.mean[1], g.cov[0][0], g.cov[0][1], g.cov[1][1]};
    double t = g.t;
    auto check_psd = [&](double tt, const State& yy) {
        const Mat2 c{{{yy[2], yy[3]}, {yy[3], yy[4]}}};
        const double scale = std::max(1.0, c[0][0] + c[1][1]);
        if (min_eigenvalue(c) < -opts.psd_tolerance * scale)
            throw NumericalError("covariance lost positive semidefiniteness", tt);
        return true;
    };

    std::vector<GaussianState> out;
    for (double target : outputs) {
        integ.advance(sys, y, t, target, check_psd);
        out.push_back(clipped({{y[0], y[1]}, {{{y[2], y[3]}, {y[3], y[4]}}}, t}));
    }
    return out;
}

std::vector<FlowState> seed_line(double total, std::size_t count, double t_s)
{
    if (count == 0)
        throw ConfigError("seed_line needs count >= 1");
    if (!(total >= 0.0))
        throw ConfigError("seed_line total must be non-negative");
    std::vector<FlowState> seeds;
    seeds.reserve(count);
    if (count == 1) {
        seeds.push_back({0.5 * total, 0.5 * total, t_s});
        return seeds;
    }
    for (std::size_t i = 0; i < count; ++i) {
        const double n0 = total * double(i) / double(count - 1);
        seeds.push_back({n0, i + 1 == count ? 0.0 : total - n0, t_s});
    }
    return seeds;
}

StochasticSeeds seed_exponential(Vec2 nbars, std::size_t count, std::uint64_t seed, double t_s)
{
    if (count == 0)
        throw ConfigError("seed_exponential needs count >= 1");
    if (!(nbars[0] >= 0.0 && nbars[1] >= 0.0))
        throw ConfigError("mean occupations must be non-negative");
    StochasticSeeds out;
    if (nbars[0] == 0.0 && nbars[1] == 0.0)
        out.warnings.push_back("all mean occupations are zero: every seed sits at the absorbing origin");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    out.states.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Vec2 n{};
        for (int k = 0; k < 2; ++k) {
            const double re = normal(rng), im = normal(rng);
            n[k] = 0.5 * nbars[k] * (re * re + im * im);
        }
        out.states.push_back({n[0], n[1], t_s});
    }
    return out;
}

std::optional<double> coherent_start_time(const QuenchSchedule& s, const ToyParams& params, double target,
                                          double t_i, double t_max)
{
    const ModeSpec ground{0.0, params.gamma, 0};
    return time_to_reach(s, ground, t_i, t_max, target);
}

Outcome classify_outcome(const FlowState& f, FlowKind kind, const QuenchSchedule& s, const ToyParams& params,
                         const ClassifyOptions& opts)
{
    if (!(f.n0 + f.n1 > params.n_c + 1.0))
        return Outcome::Undecided;
    const Drive d = s.eval(f.t);
    const Vec2 v = drift(kind, f, d.beta, d.mu, params);
    const double tau = s.kind() == ScheduleKind::Constant ? 1.0 : s.tau_q();
    const bool settled = std::abs(v[0]) * tau / (f.n0 + 1.0) < opts.smallness &&
                         std::abs(v[1]) * tau / (f.n1 + 1.0) < opts.smallness;
    if (!settled)
        return Outcome::Undecided;
    if (f.n1 > f.n0)
        return Outcome::MetastableVortex;
    if (f.n0 > f.n1)
        return Outcome::Ground;
    return Outcome::Undecided;
}

MetastableResult metastable_probability(std::span<const FlowState> seeds, FlowKind kind, const QuenchSchedule& s,
                                        const ToyParams& params, const MetastableOptions& opts)
{
    if (seeds.empty())
        throw ConfigError("metastable_probability needs at least one seed");
    double t_end = 0.0;
    if (opts.t_end)
        t_end = *opts.t_end;
    else if (auto tc = s.crossing_time())
        t_end = *tc + 5.0 * s.tau_q();
    else
        throw ConfigError("metastable_probability: t_end required for schedules without a crossing");

    MetastableResult r;
    r.outcomes.resize(seeds.size());
    r.finals.resize(seeds.size());
    parallel_for(seeds.size(), opts.workers, [&](std::size_t i) {
        std::vector<FlowState> traj;
        try {
            traj = integrate_flow(seeds[i], kind, s, params, t_end, opts.flow);
        } catch (const NumericalError& e) {
            throw e.prefixed("seed " + std::to_string(i) + ": ");
        }
        r.finals[i] = traj.back();
        r.outcomes[i] = classify_outcome(traj.back(), kind, s, params, opts.classify);
    });
    for (Outcome o : r.outcomes) {
        if (o == Outcome::MetastableVortex)
            ++r.metastable;
        else if (o == Outcome::Ground)
            ++r.ground;
        else
            ++r.undecided;
    }
    const double n = double(seeds.size());
    r.fraction = double(r.metastable) / n;
    r.stderr_ = std::sqrt(r.fraction * (1.0 - r.fraction) / n);
    return r;
}

} // namespace quench
