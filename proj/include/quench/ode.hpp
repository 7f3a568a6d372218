#pragma once

#include "quench/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace quench::ode {

struct Options {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 1e-3;
    /// Step sizes below min_step * max(1, |t|) are treated as stiffness failure.
    double min_step = 1e-13;
    std::size_t max_steps = 50'000'000;
};

/// Adaptive Dormand-Prince 5(4) driver over a fixed-size state.
///
/// The step size persists between advance() calls so that integrating across a
/// grid of output times does not restart the controller at every node.
template <std::size_t N>
class Integrator {
public:
    using State = std::array<double, N>;

    explicit Integrator(Options opts = {})
        : opts_(opts),
          stepper_(boost::numeric::odeint::make_controlled(
              opts.atol, opts.rtol, boost::numeric::odeint::runge_kutta_dopri5<State>())),
          dt_(opts.initial_step) {}

    /// Integrate x from t to t_target. `on_step(t, x)` is called after every
    /// accepted step and may return false to halt early; returns false in that case.
    template <class System, class OnStep>
    bool advance(System&& sys, State& x, double& t, double t_target, OnStep&& on_step)
    {
        namespace odeint = boost::numeric::odeint;
        while (t < t_target) {
            const double remaining = t_target - t;
            const bool last = dt_ >= remaining;
            double dt = last ? remaining : dt_;
            if (dt < opts_.min_step * std::max(1.0, std::abs(t)) && !last)
                throw NumericalError("step size underflow (stiff or singular right-hand side)", t);
            if (++steps_ > opts_.max_steps)
                throw NumericalError("step budget exhausted", t);
            const double t_before = t;
            const auto res = stepper_.try_step(sys, x, t, dt);
            if (res == odeint::success) {
                if (last)
                    t = t_target;  // avoid drift from t_before + dt
                else
                    dt_ = dt;
                if (!on_step(t, x))
                    return false;
            } else {
                dt_ = dt;
                if (t != t_before)
                    throw std::logic_error("odeint advanced time on a rejected step");
                if (dt_ < opts_.min_step * std::max(1.0, std::abs(t)))
                    throw NumericalError("step size underflow (stiff or singular right-hand side)", t);
            }
            for (double v : x)
                if (!std::isfinite(v))
                    throw NumericalError("non-finite state", t);
        }
        return true;
    }

    template <class System>
    void advance(System&& sys, State& x, double& t, double t_target)
    {
        advance(sys, x, t, t_target, [](double, const State&) { return true; });
    }

    std::size_t steps() const { return steps_; }

private:
    using Controlled = decltype(boost::numeric::odeint::make_controlled(
        0.0, 0.0, boost::numeric::odeint::runge_kutta_dopri5<State>()));

    Options opts_;
    Controlled stepper_;
    double dt_;
    std::size_t steps_ = 0;
};

} // namespace quench::ode
