#include <doctest.h>

#include "quench/analysis.hpp"
#include "quench/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace quench;

TEST_CASE("exact power laws")
{
    const std::vector<double> xs = {1, 2, 4, 8, 16};
    std::vector<double> sq, kz;
    for (double x : xs) {
        sq.push_back(x * x);
        kz.push_back(5.0 * std::pow(x, -0.125));
    }
    const auto a = fit_power_law(xs, sq);
    CHECK(a.exponent == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(a.r_squared == doctest::Approx(1.0));
    CHECK(a.n_points == 5);
    const auto b = fit_power_law(xs, kz);
    CHECK(b.exponent == doctest::Approx(-0.125).epsilon(1e-13));
    CHECK(b.amplitude == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(b.exponent_stderr < 1e-12);
}

TEST_CASE("noisy square-root law")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> eps(-0.01, 0.01);
    std::vector<double> xs, ys;
    for (double x = 1.0; x <= 1e4; x *= 1.5) {
        xs.push_back(x);
        ys.push_back(std::sqrt(x) * (1.0 + eps(rng)));
    }
    const auto f = fit_power_law(xs, ys);
    CHECK(std::abs(f.exponent - 0.5) < 0.01);
    CHECK(f.exponent_stderr > 0.0);
    CHECK(f.r_squared > 0.99);
    CHECK(f.r_squared <= 1.0);

    std::vector<double> sig(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
        sig[i] = 0.01 * ys[i];
    CHECK(std::abs(fit_power_law(xs, ys, sig).exponent - 0.5) < 0.01);
}

TEST_CASE("property: fits are scale-equivariant")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs, ys;
        for (int i = 0; i < 6; ++i) {
            xs.push_back(u(rng) * (i + 1));
            ys.push_back(u(rng));
        }
        const auto f = fit_power_law(xs, ys);
        const double c = u(rng) * 10.0;
        std::vector<double> scaled(xs);
        for (double& x : scaled)
            x *= c;
        const auto g = fit_power_law(scaled, ys);
        CHECK(std::abs(g.exponent - f.exponent) < 1e-12);
        CHECK(g.amplitude == doctest::Approx(f.amplitude * std::pow(c, -f.exponent)).epsilon(1e-12));
    }
}

TEST_CASE("fit preconditions")
{
    const std::vector<double> two = {1, 2};
    CHECK_THROWS_AS(fit_power_law(two, two), ConfigError);
    const std::vector<double> xs = {1, 2, 3}, bad = {1, -2, 3}, zero = {0, 2, 3};
    CHECK_THROWS_AS(fit_power_law(xs, bad), ConfigError);
    CHECK_THROWS_AS(fit_power_law(zero, xs), ConfigError);
}

TEST_CASE("departure time")
{
    OccupancySeries s{.times = {0, 1, 2, 3},
                      .nbar = {1, 1, 1, 1},
                      .nbar_eq = {1, 1.5, 2.5, std::numeric_limits<double>::quiet_NaN()},
                      .schedule = QuenchSchedule::constant(1.0, -1.0),
                      .mode = {}};
    CHECK(*departure_time(s, 1.0) == 0.0);
    CHECK(*departure_time(s, 2.0) == doctest::Approx(1.5));
    CHECK_FALSE(departure_time(s, 3.0).has_value());

    OccupancySeries same = s;
    same.nbar_eq = same.nbar;
    CHECK_FALSE(departure_time(same, 2.0).has_value());

    double prev = -1.0;
    for (double f = 1.0; f <= 2.5; f += 0.1) {
        const double t = *departure_time(s, f);
        CHECK(t >= prev);
        prev = t;
    }
}

TEST_CASE("ensemble rms")
{
    const std::vector<long> zeros(10, 0);
    CHECK(ensemble_rms(zeros).rms == 0.0);
    CHECK(ensemble_rms(zeros).stderr_ == 0.0);
    const std::vector<long> pm = {1, -1};
    CHECK(ensemble_rms(pm).rms == 1.0);
    CHECK(ensemble_rms(pm).stderr_ == 0.0);
    const std::vector<long> mixed = {0, 2, -2, 1, 3};
    CHECK(ensemble_rms(mixed).rms == doctest::Approx(std::sqrt(18.0 / 5.0)));
    CHECK(ensemble_rms(mixed).stderr_ > 0.0);
    CHECK_THROWS_AS(ensemble_rms(std::vector<long>{}), ConfigError);
}
