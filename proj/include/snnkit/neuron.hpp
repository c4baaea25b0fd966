#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace snnkit {

enum class ResetMode {
    to_zero,   // membrane cleared to 0 on spike
    subtract,  // threshold subtracted on spike
};

struct NeuronParams {
    double beta = 0.95;        // per-step membrane decay factor, [0, 1)
    double threshold = 1.0;    // firing threshold, > 0
    ResetMode reset_mode = ResetMode::to_zero;
    int refractory_steps = 0;  // post-spike suppression window
    double step_gain = 1.0;    // Lapicque input scale (step duration / capacitance)
    double u_rest = 0.0;       // resting potential for the hardware-form recurrence
};

struct NeuronState {
    double u = 0.0;
    int refractory_remaining = 0;
};

// One discrete update.  `candidate` is the pre-threshold membrane value;
// the refractory wrapper needs it to keep integrating while firing is
// suppressed.
struct StepResult {
    NeuronState state;
    bool spike = false;
    double candidate = 0.0;
};

namespace detail {

inline StepResult gate(double candidate, bool fires, const NeuronParams& p,
                       int refractory_remaining) {
    StepResult r;
    r.candidate = candidate;
    r.spike = fires;
    if (fires) {
        r.state.u = p.reset_mode == ResetMode::to_zero ? 0.0 : candidate - p.threshold;
    } else {
        r.state.u = candidate;
    }
    r.state.refractory_remaining = refractory_remaining;
    return r;
}

}  // namespace detail

// Leak-free integrator: u' = u + step_gain * i, firing on a strict
// threshold crossing with reset to zero.
inline StepResult lapicque_step(NeuronState s, double i_in, const NeuronParams& p) {
    const double candidate = s.u + p.step_gain * i_in;
    return detail::gate(candidate, candidate > p.threshold, p, s.refractory_remaining);
}

// Leaky integrate-and-fire: u' = beta * u + i, firing when the candidate
// reaches or surpasses the threshold.
inline StepResult lif_step(NeuronState s, double i_in, const NeuronParams& p) {
    const double candidate = p.beta * s.u + i_in;
    return detail::gate(candidate, candidate >= p.threshold, p, s.refractory_remaining);
}

// Floating-point twin of the fixed-point neuron unit's recurrence
// u' = beta * u + i - u_rest.  Threshold and reset semantics match
// lif_step; with u_rest = 0 the two are identical.
inline StepResult lif_hw_float_step(NeuronState s, double i_in, const NeuronParams& p) {
    const double candidate = p.beta * s.u + i_in - p.u_rest;
    return detail::gate(candidate, candidate >= p.threshold, p, s.refractory_remaining);
}

// Refractory wrapper around any bare step function.  While the window is
// open the membrane keeps integrating (the candidate is stored) but the
// spike is forced to 0; an emitted spike re-arms the window.
template <typename StepFn>
StepResult apply_refractory(StepFn&& step, NeuronState s, double i_in, const NeuronParams& p) {
    StepResult r = step(s, i_in, p);
    if (s.refractory_remaining > 0) {
        r.spike = false;
        r.state.u = r.candidate;
        r.state.refractory_remaining = s.refractory_remaining - 1;
        return r;
    }
    r.state.refractory_remaining = r.spike ? p.refractory_steps : 0;
    return r;
}

// RC circuit analogue of the leaky neuron: tau * du/dt = -(u - u_rest) + R*I
// with tau = R*C, driven by a step input current.
struct RCParams {
    double resistance = 1.0;
    double capacitance = 1.0;
    double u_rest = 0.0;
    double current = 0.0;  // step input, switched on at t = 0

    double tau() const { return resistance * capacitance; }
};

// Exact step response from u(0) = u_rest.
inline double rc_closed_form(double t, const RCParams& rc) {
    return rc.u_rest + rc.resistance * rc.current * (1.0 - std::exp(-t / rc.tau()));
}

// Forward-Euler trajectory, n_steps updates from u(0) = u_rest; returns
// n_steps + 1 samples.  dt >= 2*tau makes the scheme unstable and is
// rejected.
inline std::vector<double> rc_integrate(const RCParams& rc, double dt, int n_steps) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("rc_integrate: dt must be positive");
    }
    if (dt >= 2.0 * rc.tau()) {
        throw std::invalid_argument("rc_integrate: dt >= 2*tau is unstable");
    }
    std::vector<double> traj;
    traj.reserve(static_cast<size_t>(n_steps) + 1);
    double u = rc.u_rest;
    traj.push_back(u);
    const double drive = rc.resistance * rc.current;
    for (int k = 0; k < n_steps; ++k) {
        u += dt / rc.tau() * (-(u - rc.u_rest) + drive);
        traj.push_back(u);
    }
    return traj;
}

}  // namespace snnkit
