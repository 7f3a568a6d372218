#include <doctest.h>

#include "quench/analysis.hpp"
#include "quench/errors.hpp"
#include "quench/linear_qkt.hpp"

#include <chrono>
#include <cmath>
#include <vector>

using namespace quench;

namespace {

double nbar_at(const OccupancySeries& s, double t)
{
    for (std::size_t i = 1; i < s.times.size(); ++i)
        if (s.times[i] >= t) {
            const double f = (t - s.times[i - 1]) / (s.times[i] - s.times[i - 1]);
            return s.nbar[i - 1] + f * (s.nbar[i] - s.nbar[i - 1]);
        }
    return s.nbar.back();
}

} // namespace

TEST_CASE("static drive relaxes to the Bose-Einstein value")
{
    const auto s = QuenchSchedule::constant(1.0, -0.5);
    const ModeSpec m{0.0, 1.0, 0};
    const auto t0 = std::chrono::steady_clock::now();
    const auto series = integrate_occupancy(s, m, 0.0, 100.0, 0.0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double target = 1.0 / std::expm1(0.5);
    CHECK(std::abs(series.nbar.back() - target) / target < 1e-6);
    CHECK(secs < 1.0);
}

TEST_CASE("equilibrium occupancy")
{
    const auto s = QuenchSchedule::linear_bias(100.0, 0.0);
    const ModeSpec m{0.0, 1.0, 0};
    CHECK(equilibrium_occupancy(s, m, -100.0) == doctest::Approx(1.0 / std::expm1(1.0)));
    CHECK_THROWS_AS(equilibrium_occupancy(s, m, 0.0), std::domain_error);
    CHECK_THROWS_AS(equilibrium_occupancy(s, m, 5.0), std::domain_error);
}

TEST_CASE("freeze-out scales")
{
    CHECK(freeze_out_time(100.0, 1.0) == doctest::Approx(10.0));
    CHECK(freeze_out_time(1e4, 1.0) == doctest::Approx(100.0));
    CHECK(frozen_correlation_length(16.0, 1.0) == doctest::Approx(2.0));
    CHECK(frozen_correlation_length(256.0, 1.0) == doctest::Approx(4.0));
    CHECK(frozen_correlation_length(4096.0, 1.0) == doctest::Approx(8.0));
    CHECK_THROWS_AS(freeze_out_time(-1.0, 1.0), ConfigError);
}

TEST_CASE("competitive modes use a strict bound")
{
    std::vector<ModeSpec> spectrum;
    for (int k = 0; k <= 4; ++k)
        spectrum.push_back({0.01 * k * k, 1.0, k});
    // (Gamma0 tau_Q)^{-1/2} = 0.1 at tau_Q = 100
    const auto labels = competitive_modes(spectrum, 1.0, 100.0, 1.0);
    CHECK(labels == std::vector<int>{0, 1, 2, 3});
    std::vector<ModeSpec> edge{{0.1, 1.0, 7}};
    CHECK(competitive_modes(edge, 1.0, 100.0, 1.0).empty());
}

TEST_CASE("mode bias time")
{
    const auto s = QuenchSchedule::linear_bias(100.0, 5.0);
    CHECK(mode_bias_time(s, {0.02, 1.0, 1}) == doctest::Approx(7.0));
}

TEST_CASE("occupations lag equilibrium before the crossing")
{
    // reference values from an independent high-order integration
    const auto s = QuenchSchedule::linear_bias(100.0, 0.0);
    OccupancyOptions opts;
    opts.samples = 5301;  // every 0.1
    const auto series = integrate_from_equilibrium(s, {0.0, 1.0, 0}, -500.0, 30.0, opts);
    const double n_half = nbar_at(series, -5.0);
    CHECK(n_half == doctest::Approx(8.13203606).epsilon(1e-5));
    CHECK(n_half < equilibrium_occupancy(s, {0.0, 1.0, 0}, -5.0));

    SUBCASE("explosive growth after the crossing")
    {
        const double n1 = nbar_at(series, 10.0);
        const double n3 = nbar_at(series, 30.0);
        CHECK(n1 == doctest::Approx(34.89579228).epsilon(1e-5));
        CHECK(nbar_at(series, 20.0) == doctest::Approx(208.4915729).epsilon(1e-5));
        CHECK(n3 == doctest::Approx(3667.458281).epsilon(1e-5));
        CHECK(n3 > 10.0 * n1);
    }
}

TEST_CASE("departure times follow the square-root law")
{
    const double taus[] = {1e2, std::pow(10.0, 2.5), 1e3, std::pow(10.0, 3.5), 1e4};
    const double expected[] = {-6.618847482, -11.36494973, -19.82601811, -34.88331074, -61.66543139};
    std::vector<double> xs, ys;
    for (int i = 0; i < 5; ++i) {
        const auto s = QuenchSchedule::linear_bias(taus[i], 0.0);
        OccupancyOptions opts;
        opts.samples = 20001;
        const auto series = integrate_from_equilibrium(s, {0.0, 1.0, 0}, -5.0 * taus[i], 0.0, opts);
        const auto td = departure_time(series, 2.0);
        REQUIRE(td.has_value());
        CHECK(*td == doctest::Approx(expected[i]).epsilon(1e-3));
        xs.push_back(taus[i]);
        ys.push_back(-*td);
    }
    const double t_hat = freeze_out_time(1e4, 1.0);
    CHECK(-ys.back() <= -0.5 * t_hat);
    CHECK(-ys.back() >= -2.0 * t_hat);
    const PowerLawFit fit = fit_power_law(xs, ys);
    CHECK(std::abs(fit.exponent - 0.5) < 0.05);
}

TEST_CASE("linearised lag equation tracks the full one")
{
    // frozen from an independent integration of both equations
    const auto s400 = QuenchSchedule::linear_bias(400.0, 0.0);
    const auto s4 = QuenchSchedule::linear_bias(4.0, 0.0);
    const ModeSpec m{0.0, 1.0, 0};
    CHECK(validate_lag_solution(s400, m, -3.0, 1.0) == doctest::Approx(0.050105).epsilon(2e-3));
    CHECK(validate_lag_solution(s400, m, -0.1, 0.1) == doctest::Approx(1.65e-5).epsilon(2e-2));
    CHECK(validate_lag_solution(s4, m, -3.0, 1.0) == doctest::Approx(0.3993).epsilon(2e-3));
    CHECK(validate_lag_solution(s4, m, -0.1, 0.1) == doctest::Approx(1.65e-4).epsilon(2e-2));
}

TEST_CASE("time to reach a target occupation")
{
    const auto s = QuenchSchedule::linear_bias(100.0, 0.0);
    const ModeSpec m{0.0, 1.0, 0};
    const auto t = time_to_reach(s, m, -500.0, 100.0, 34.89579228);
    REQUIRE(t.has_value());
    CHECK(*t == doctest::Approx(10.0).epsilon(1e-4));
    CHECK_FALSE(time_to_reach(s, m, -500.0, -400.0, 1e3).has_value());
}

TEST_CASE("invalid integration requests")
{
    const auto s = QuenchSchedule::constant(1.0, -1.0);
    CHECK_THROWS_AS(integrate_occupancy(s, {0.0, 1.0, 0}, 1.0, 0.0, 0.0), ConfigError);
    CHECK_THROWS_AS(integrate_occupancy(s, {0.0, 1.0, 0}, 0.0, 1.0, -1.0), ConfigError);
    CHECK_THROWS_AS(integrate_occupancy(s, {-1.0, 1.0, 0}, 0.0, 1.0, 0.0), ConfigError);
    CHECK_THROWS_AS(integrate_occupancy(s, {0.0, 0.0, 0}, 0.0, 1.0, 0.0), ConfigError);
}
