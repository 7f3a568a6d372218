#include <doctest.h>

#include "quench/errors.hpp"
#include "quench/parallel.hpp"
#include "quench/ring.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace quench;

namespace {

constexpr double kPi = std::numbers::pi;

RingField twist(std::size_t n, double turns, double length = 64.0)
{
    RingField f{std::vector<Complex>(n), length, 0.0};
    for (std::size_t j = 0; j < n; ++j)
        f.psi[j] = std::polar(1.0, 2.0 * kPi * turns * double(j) / double(n));
    return f;
}

double skewness(const std::vector<long>& w)
{
    double m = 0.0;
    for (long x : w)
        m += double(x);
    m /= double(w.size());
    double m2 = 0.0, m3 = 0.0;
    for (long x : w) {
        const double d = double(x) - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= double(w.size());
    m3 /= double(w.size());
    return m3 / std::pow(m2, 1.5);
}

} // namespace

TEST_CASE("phase wrapping convention")
{
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(0.5) == doctest::Approx(0.5));
    CHECK(wrap_phase(2.0 * kPi + 0.25) == doctest::Approx(0.25));
    CHECK(wrap_phase(-0.25) == doctest::Approx(-0.25));
}

TEST_CASE("winding of simple fields")
{
    CHECK(winding_number(twist(32, 0.0)) == 0);
    CHECK(winding_number(twist(32, 1.0)) == 1);
    CHECK(winding_number(twist(32, -2.0)) == -2);
    CHECK(winding_number(twist(64, 5.0)) == 5);
}

TEST_CASE("zero amplitude leaves the winding undefined")
{
    auto f = twist(16, 1.0);
    f.psi[9] = 0.0;
    try {
        (void)winding_number(f);
        FAIL("expected UndefinedWinding");
    } catch (const UndefinedWinding& e) {
        CHECK(e.site() == 9);
    }
}

TEST_CASE("property: winding ignores global phase and positive rescaling")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        RingField f{std::vector<Complex>(24), 24.0, 0.0};
        for (auto& z : f.psi)
            z = {g(rng), g(rng)};
        const long w = winding_number(f);
        RingField rotated = f, scaled = f;
        const Complex phase = std::polar(1.0, u(rng));
        for (std::size_t j = 0; j < f.sites(); ++j) {
            rotated.psi[j] *= phase;
            scaled.psi[j] *= u(rng);
        }
        CHECK(winding_number(rotated) == w);
        CHECK(winding_number(scaled) == w);
    }
}

TEST_CASE("initial field sampling")
{
    SUBCASE("only k = 0 gives a uniform phase")
    {
        const auto occ = ModeOccupations::symmetric(std::vector<double>{5.0, 0.0, 0.0});
        const auto f = sample_initial_field(occ, 32, 32.0, 11);
        for (const auto& z : f.psi)
            CHECK(std::arg(z) == doctest::Approx(std::arg(f.psi[0])));
        CHECK(winding_number(f) == 0);
    }
    SUBCASE("only k = +1 winds once")
    {
        ModeOccupations occ;
        occ.k_max = 2;
        occ.nbar = {0, 0, 0, 3.0, 0};
        for (std::uint64_t seed = 0; seed < 50; ++seed)
            CHECK(winding_number(sample_initial_field(occ, 32, 32.0, seed)) == 1);
    }
    SUBCASE("mode variances match the means")
    {
        const std::vector<double> nbar = {4.0, 2.0, 0.5, 1.0};
        const auto occ = ModeOccupations::symmetric(nbar);
        const std::size_t n = 32;
        const double length = 16.0;
        const int draws = 10000;
        std::vector<double> acc(2 * nbar.size() - 1, 0.0);
        for (int d = 0; d < draws; ++d) {
            const auto f = sample_initial_field(occ, n, length, derive_seed(5, std::uint64_t(d)));
            for (int k = -occ.k_max; k <= occ.k_max; ++k) {
                Complex c{};
                for (std::size_t j = 0; j < n; ++j)
                    c += f.psi[j] * std::polar(1.0, -2.0 * kPi * double(k) * double(j) / double(n));
                c *= std::sqrt(length) / double(n);
                acc[std::size_t(k + occ.k_max)] += std::norm(c);
            }
        }
        for (int k = -occ.k_max; k <= occ.k_max; ++k) {
            const double mean = acc[std::size_t(k + occ.k_max)] / draws;
            CHECK(std::abs(mean / occ.at(k) - 1.0) < 0.05);
        }
    }
    SUBCASE("k_max must fit the lattice")
    {
        const auto occ = ModeOccupations::symmetric(std::vector<double>(17, 1.0));
        CHECK_THROWS_AS(sample_initial_field(occ, 32, 32.0, 1), ConfigError);
        CHECK_THROWS_AS(sample_initial_field(ModeOccupations::symmetric(std::vector<double>{1.0}), 4, 4.0, 1),
                        ConfigError);
    }
}

TEST_CASE("supercritical drive saturates at mu / Lambda")
{
    for (auto [beta, mu, lambda] : {std::tuple{1.0, 1.0, 1.0}, std::tuple{2.0, 0.5, 0.25}}) {
        const auto s = QuenchSchedule::constant(beta, mu);
        RingField f{std::vector<Complex>(32, Complex{0.01, 0.0}), 32.0, 0.0};
        for (std::size_t j = 0; j < 32; ++j)
            f.psi[j] *= 1.0 + 0.01 * std::sin(2.0 * kPi * double(j) / 32.0);
        RingOptions opts;
        opts.lambda = lambda;
        const auto traj = integrate_ring(f, s, 80.0, opts);
        const double target = beta * mu / lambda;  // mu / Lambda
        for (const auto& z : traj.snapshots.back().psi)
            CHECK(std::abs(std::norm(z) - target) <= 1e-6 * target);
    }
}

TEST_CASE("subcritical drive decays to zero")
{
    const auto s = QuenchSchedule::constant(1.0, -1.0);
    auto f = twist(32, 1.0, 32.0);
    const auto traj = integrate_ring(f, s, 20.0);
    for (const auto& z : traj.snapshots.back().psi)
        CHECK(std::abs(z) < 1e-8);
}

TEST_CASE("winding is conserved once the density is high")
{
    const auto s = QuenchSchedule::constant(1.0, 1.0);
    auto f = twist(64, 1.0, 64.0);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 0.05);
    for (auto& z : f.psi)
        z = 0.05 * z + Complex{g(rng), g(rng)} * 0.1;
    RingOptions opts;
    opts.monitor_every = 5;
    const auto traj = integrate_ring(f, s, 40.0, opts);
    bool settled = false;
    std::optional<long> frozen;
    for (const auto& m : traj.monitor) {
        if (!settled && m.min_density > 0.5) {
            settled = true;
            frozen = m.winding;
        }
        if (settled)
            CHECK(m.winding == frozen);
    }
    CHECK(settled);
    CHECK(frozen == 1);
}

TEST_CASE("ring option validation")
{
    const auto s = QuenchSchedule::constant(1.0, 1.0);
    RingOptions bad;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(integrate_ring(twist(16, 1.0), s, 1.0, bad), ConfigError);
    RingOptions bad_dt;
    bad_dt.dt = 0.0;
    CHECK_THROWS_AS(integrate_ring(twist(16, 1.0), s, 1.0, bad_dt), ConfigError);
    CHECK_THROWS_AS(integrate_ring(twist(4, 1.0), s, 1.0), ConfigError);
}

TEST_CASE("random-walk winding")
{
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        CHECK(random_walk_winding(1, seed) == 0);
        CHECK(random_walk_winding(2, seed) == 0);
    }
    CHECK_THROWS_AS(random_walk_winding(0, 1), ConfigError);

    const std::size_t samples = 100000;
    std::vector<long> w(samples);
    for (std::size_t i = 0; i < samples; ++i)
        w[i] = random_walk_winding(64, derive_seed(21, i));
    const RmsEstimate est = ensemble_rms(w);
    CHECK(std::abs(est.rms / std::sqrt(64.0 / 12.0) - 1.0) < 0.03);
    CHECK(std::abs(skewness(w)) <= 0.05);

    std::vector<long> w3(samples);
    for (std::size_t i = 0; i < samples; ++i)
        w3[i] = random_walk_winding(3, derive_seed(22, i));
    CHECK(std::abs(skewness(w3)) <= 0.05);
}

TEST_CASE("domain counts follow the frozen correlation length")
{
    CHECK(domain_count(1024.0, 16.0, 1.0) == 512);
    CHECK(domain_count(1024.0, 256.0, 1.0) == 256);
    CHECK(domain_count(1024.0, 4096.0, 1.0) == 128);
    CHECK(domain_count(1.0, 1e8, 1.0) == 1);
}

TEST_CASE("random-walk scan")
{
    ScanOptions o;
    o.tau_qs = {16.0, 256.0, 4096.0};
    o.runs = 20000;
    o.params.length = 1024.0;
    o.seed = 4;
    const auto r = kz_scan(o);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].n_domains == 512);
    CHECK(r.rows[2].n_domains == 128);
    CHECK(r.rows[1].xi_hat == doctest::Approx(4.0));
    REQUIRE(r.fit.has_value());
    CHECK(std::abs(r.fit->exponent + 0.125) < 0.03);

    ScanOptions none = o;
    none.runs = 0;
    none.tau_qs = {16.0};
    none.pipeline = Pipeline::RingTdgl;
    const auto empty = kz_scan(none);
    CHECK(empty.rows.empty());
    CHECK(empty.samples.empty());
    CHECK_FALSE(empty.fit.has_value());
}

TEST_CASE("ring scan is independent of the worker count")
{
    ScanOptions o;
    o.tau_qs = {16.0};
    o.runs = 6;
    o.pipeline = Pipeline::RingTdgl;
    o.params.length = 64.0;
    o.params.sites = 64;
    o.seed = 9;
    const auto a = kz_scan(o);
    o.workers = 3;
    const auto b = kz_scan(o);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].winding == b.samples[i].winding);
        CHECK(a.samples[i].mean_density == b.samples[i].mean_density);
        CHECK_FALSE(a.samples[i].aborted);
    }
    CHECK(a.rows[0].runs == 6);
}

TEST_CASE("handoff occupations")
{
    RingScanParams p;
    p.length = 64.0;
    p.sites = 64;
    const auto occ = handoff_occupations(64.0, p);
    CHECK(occ.k_max == 31);
    for (int k = 1; k <= occ.k_max; ++k) {
        CHECK(occ.at(k) == occ.at(-k));
        CHECK(occ.at(k) <= occ.at(k - 1));
        CHECK(occ.at(k) > 0.0);
    }
    CHECK(parse_pipeline("ring-tdgl") == Pipeline::RingTdgl);
    CHECK_THROWS_AS(parse_pipeline("nope"), ConfigError);
}
