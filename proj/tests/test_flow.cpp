#include <doctest.h>

#include "quench/errors.hpp"
#include "quench/flow.hpp"

#include <cmath>
#include <vector>

using namespace quench;

namespace {

ToyParams toy(double bE, double nc, double gamma = 1.0)
{
    ToyParams p;
    p.energy = bE;
    p.n_c = nc;
    p.gamma = gamma;
    return p;
}

} // namespace

TEST_CASE("drift at a reference point")
{
    const auto p = toy(0.05, 100.0);
    const Vec2 q = qkt_drift({100, 100, 0}, 1.0, 0.5, p);
    const double ex = 2.0 * 0.05 * 100.0 * std::exp(-0.025) * std::sinh(0.025);
    CHECK(q[0] == doctest::Approx(100.0 * (std::exp(0.5) - std::exp(0.15) + ex)));
    CHECK(q[1] == doctest::Approx(100.0 * (std::exp(0.5) - std::exp(0.2) - ex)));
    CHECK(q[0] == doctest::Approx(73.07).epsilon(1e-4));
    CHECK(q[1] == doctest::Approx(18.35).epsilon(1e-3));

    const Vec2 d = tdgl_drift({100, 100, 0}, 1.0, 0.5, p);
    CHECK(d[0] == doctest::Approx(48.69).epsilon(1e-4));
    CHECK(d[1] == doctest::Approx(42.73).epsilon(1e-4));
}

TEST_CASE("axis fixed point of the TDGL drift")
{
    const auto p = toy(0.05, 100.0);
    const Vec2 d = tdgl_drift({2000, 0, 0}, 1.0, 1.0, p);
    CHECK(std::abs(d[0]) < 1e-9);
    CHECK(d[1] == 0.0);
}

TEST_CASE("property: axes are invariant and the origin is fixed")
{
    for (double bm : {-0.5, 0.0, 0.7})
        for (double bE : {0.01, 0.05})
            for (double nc : {10.0, 100.0})
                for (double n : {0.0, 3.0, 250.0, 4000.0}) {
                    const auto p = toy(bE, nc);
                    for (FlowKind k : {FlowKind::Qkt, FlowKind::Tdgl}) {
                        CHECK(drift(k, {n, 0, 0}, 1.0, bm, p)[1] == 0.0);
                        CHECK(drift(k, {0, n, 0}, 1.0, bm, p)[0] == 0.0);
                        const Vec2 o = drift(k, {0, 0, 0}, 1.0, bm, p);
                        CHECK(o[0] == 0.0);
                        CHECK(o[1] == 0.0);
                    }
                }
}

TEST_CASE("property: exchange terms conserve n0 + n1")
{
    for (double n0 : {1.0, 40.0, 333.0})
        for (double n1 : {2.0, 90.0, 700.0}) {
            const auto p = toy(0.05, 100.0);
            const Vec2 e = exchange_drift({n0, n1, 0}, 1.0, 0.2, p);
            CHECK(e[0] + e[1] == 0.0);
            const Vec2 q = qkt_drift({n0, n1, 0}, 1.0, 0.2, p);
            const Vec2 d = tdgl_drift({n0, n1, 0}, 1.0, 0.2, p);
            CHECK(q[0] - d[0] == doctest::Approx(e[0]));
        }
}

TEST_CASE("drift against the exact first jump moment")
{
    // values from an independent evaluation of the jump rates
    const auto p = toy(0.05, 100.0);
    CHECK(drift_oracle_check({200, 200, 0}, 1.0, 0.5, p) == doctest::Approx(0.01573507012).epsilon(1e-8));
    CHECK(drift_oracle_check({1000, 1000, 0}, 1.0, 0.5, p) == doctest::Approx(0.005611588995).epsilon(1e-8));
    const Vec2 m = first_jump_moment({200, 200, 0}, 1.0, 0.5, p);
    CHECK(m[0] == doctest::Approx(158.62879818));
    CHECK(m[1] == doctest::Approx(-49.35129517));

    // on an axis both vanish in the empty direction
    CHECK(first_jump_moment({300, 0, 0}, 1.0, 0.5, p)[1] > 0.0);  // spontaneous gain
    CHECK(qkt_drift({300, 0, 0}, 1.0, 0.5, p)[1] == 0.0);

    double worst = 0.0;
    for (double bm : {-0.5, 0.0, 0.5})
        for (double bE : {0.01, 0.05})
            for (double nc : {10.0, 100.0})
                worst = std::max(worst, drift_oracle_check({1000, 1000, 0}, 1.0, bm, toy(bE, nc)));
    CHECK(worst == doctest::Approx(0.0056).epsilon(0.2));
    CHECK(worst < 0.01);
}

TEST_CASE("diffusion matrix")
{
    SUBCASE("origin below threshold")
    {
        const Mat2 d = diffusion_matrix({0, 0, 0}, 1.0, -1.0, toy(0.05, 10.0));
        CHECK(d[0][0] == doctest::Approx(0.5 * std::exp(-1.0)));
        CHECK(d[1][1] == doctest::Approx(0.5 * std::exp(-1.0)));
        CHECK(d[0][1] == 0.0);
    }
    SUBCASE("no exchange, no cross term")
    {
        auto p = toy(0.05, 10.0);
        p.gamma_tilde = 0.0;
        const Mat2 d = diffusion_matrix({30, 40, 0}, 1.0, 0.3, p);
        CHECK(d[0][1] == 0.0);
    }
    SUBCASE("exchange only is singular along (1,1)")
    {
        auto p = toy(0.05, 10.0, 0.0);
        p.gamma_tilde = 1.0;
        const Mat2 d = diffusion_matrix({30, 40, 0}, 1.0, 0.3, p);
        CHECK(d[0][0] == doctest::Approx(d[1][1]));
        CHECK(d[0][1] == doctest::Approx(-d[0][0]));
        CHECK(d[0][0] > 0.0);
    }
}

TEST_CASE("Gaussian closure without diffusion follows the drift")
{
    const auto s = QuenchSchedule::tanh(20.0, 1.0, false);
    const auto p = toy(0.01, 10.0);
    GaussianOptions go;
    go.diffusion = false;
    const auto g = evolve_gaussian({{20, 30}, {}, 0.0}, s, p, 20.0, go);
    const auto f = integrate_flow({20, 30, 0.0}, FlowKind::Qkt, s, p, 20.0);
    CHECK(g.back().cov[0][0] == 0.0);
    CHECK(g.back().cov[1][1] == 0.0);
    CHECK(g.back().mean[0] == doctest::Approx(f.back().n0).epsilon(1e-6));
    CHECK(g.back().mean[1] == doctest::Approx(f.back().n1).epsilon(1e-6));
}

TEST_CASE("68% contour")
{
    GaussianState g{{1, 2}, {{{4, 0}, {0, 1}}}, 0};
    const Ellipse e = contour68(g);
    CHECK(e.semi_major == doctest::Approx(2.0 * std::sqrt(kChi2Contour68)));
    CHECK(e.semi_minor == doctest::Approx(std::sqrt(kChi2Contour68)));
    CHECK(e.angle == doctest::Approx(0.0));
    CHECK(kChi2Contour68 == doctest::Approx(-2.0 * std::log(0.32)).epsilon(1e-15));
    const Ellipse z = contour68({{1, 1}, {}, 0});
    CHECK(z.semi_major == 0.0);
}

TEST_CASE("diffusion is strong for the slow protocol and weak for the fast one")
{
    // start time where the coherent mode reaches (2 beta E)^{-1}; ratios at
    // t_s + 0.05 tau_Q frozen from an independent closure integration
    struct Case {
        double be, tq, ts, ratio;
    } cases[] = {{0.01, 40.0, 9.5225, 1.752}, {0.001, 10.0, 8.4074, 0.248}};
    double ratio[2];
    for (int i = 0; i < 2; ++i) {
        const auto s = QuenchSchedule::tanh(cases[i].tq, 1.0, false);
        const auto p = toy(cases[i].be, 10.0);
        const double total = 1.0 / (2.0 * cases[i].be);
        const auto ts = coherent_start_time(s, p, total, -4.0 * cases[i].tq, 4.0 * cases[i].tq);
        REQUIRE(ts.has_value());
        CHECK(*ts == doctest::Approx(cases[i].ts).epsilon(1e-4));
        GaussianOptions go;
        const auto g = evolve_gaussian({{total / 2, total / 2}, {}, *ts}, s, p, *ts + 0.05 * cases[i].tq, go);
        const double disp = std::hypot(g.back().mean[0] - total / 2, g.back().mean[1] - total / 2);
        ratio[i] = contour68(g.back()).semi_major / disp;
        CHECK(ratio[i] == doctest::Approx(cases[i].ratio).epsilon(2e-3));
    }
    CHECK(ratio[0] > 0.5);
    CHECK(ratio[1] < 0.3);
}

TEST_CASE("line seeds")
{
    const auto seeds = seed_line(500.0, 5, 3.0);
    REQUIRE(seeds.size() == 5);
    const double expect[] = {0, 125, 250, 375, 500};
    for (int i = 0; i < 5; ++i) {
        CHECK(seeds[std::size_t(i)].n0 == expect[i]);
        CHECK(seeds[std::size_t(i)].n0 + seeds[std::size_t(i)].n1 == 500.0);
        CHECK(seeds[std::size_t(i)].t == 3.0);
    }
    CHECK(seed_line(10.0, 1, 0.0)[0].n0 == 5.0);
    CHECK_THROWS_AS(seed_line(10.0, 0, 0.0), ConfigError);
}

TEST_CASE("exponential seeds")
{
    const auto axis = seed_exponential({7.0, 0.0}, 100, 1);
    for (const auto& s : axis.states)
        CHECK(s.n1 == 0.0);
    const std::size_t count = 20000;
    const auto e = seed_exponential({5.0, 5.0}, count, 99);
    double mean = 0.0;
    for (const auto& s : e.states)
        mean += s.n0;
    mean /= double(count);
    CHECK(std::abs(mean - 5.0) < 3.0 * 5.0 / std::sqrt(double(count)));
    CHECK(e.warnings.empty());
    CHECK(seed_exponential({0.0, 0.0}, 3, 1).warnings.size() == 1);
}

TEST_CASE("outcome classification")
{
    const auto s = QuenchSchedule::tanh(10.0, 1.0, false);
    auto p = toy(0.05, 100.0);
    // tdgl fixed points on the axes at the saturated drive: n* = N_c tanh(5) / beta E
    const double nstar = 100.0 * std::tanh(5.0) / 0.05;
    CHECK(classify_outcome({nstar, 0, 50}, FlowKind::Tdgl, s, p) == Outcome::Ground);
    const double nstar1 = nstar - 100.0;
    CHECK(classify_outcome({0, nstar1, 50}, FlowKind::Tdgl, s, p) == Outcome::MetastableVortex);
    CHECK(classify_outcome({50, 51, 50}, FlowKind::Tdgl, s, p) == Outcome::Undecided);
    CHECK(classify_outcome({nstar * 0.5, 0, 50}, FlowKind::Tdgl, s, p) == Outcome::Undecided);
}

TEST_CASE("axis seeds have trivial outcomes")
{
    const auto s = QuenchSchedule::tanh(10.0, 1.0, true);
    const auto p = toy(0.01, 100.0);
    const std::vector<FlowState> on0 = {{10, 0, 3.2}, {40, 0, 3.2}};
    const std::vector<FlowState> on1 = {{0, 10, 3.2}, {0, 40, 3.2}};
    for (FlowKind k : {FlowKind::Qkt, FlowKind::Tdgl}) {
        CHECK(metastable_probability(on0, k, s, p).fraction == 0.0);
        CHECK(metastable_probability(on1, k, s, p).fraction == 1.0);
    }
}

TEST_CASE("slow quench: TDGL overestimates metastability")
{
    const double tq = 100.0, be = 0.05;
    const auto s = QuenchSchedule::tanh(tq, 1.0, true);
    const auto p = toy(be, 100.0);
    std::vector<FlowState> upper;
    for (const auto& f : seed_line(1.0 / (2.0 * be), 41, std::sqrt(tq)))
        if (f.n1 > f.n0)
            upper.push_back(f);
    REQUIRE(upper.size() == 20);
    const auto q = metastable_probability(upper, FlowKind::Qkt, s, p);
    const auto d = metastable_probability(upper, FlowKind::Tdgl, s, p);
    CHECK(q.metastable == 1);
    CHECK(d.metastable == 6);
    CHECK(q.undecided == 0);
    CHECK(d.fraction > q.fraction);
    CHECK(q.stderr_ == doctest::Approx(std::sqrt(0.05 * 0.95 / 20)));
}

TEST_CASE("worker count does not change results")
{
    const auto s = QuenchSchedule::tanh(10.0, 1.0, true);
    const auto p = toy(0.01, 100.0);
    const auto seeds = seed_line(50.0, 16, std::sqrt(10.0));
    MetastableOptions one, many;
    many.workers = 4;
    const auto a = metastable_probability(seeds, FlowKind::Qkt, s, p, one);
    const auto b = metastable_probability(seeds, FlowKind::Qkt, s, p, many);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CHECK(a.finals[i].n0 == b.finals[i].n0);
        CHECK(a.finals[i].n1 == b.finals[i].n1);
        CHECK(a.outcomes[i] == b.outcomes[i]);
    }
}
