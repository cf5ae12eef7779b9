#pragma once

#include <cmath>

/// Scalar per-neuron and per-filter step math, shared by the build-time rate
/// solvers, the executor kernels and the reference interpreter so that all
/// paths perform identical floating-point operations.
namespace neng {

/// Steady-state LIF firing rate for input current j (rate in Hz, j in
/// threshold units). Total and continuous: zero at and below threshold.
template <class T>
T lif_rate_t(T j, T tau_rc, T tau_ref) {
    if (j <= T(1)) return T(0);
    return T(1) / (tau_ref + tau_rc * std::log1p(T(1) / (j - T(1))));
}

inline double lif_rate(double j, double tau_rc = 0.02, double tau_ref = 0.002) {
    return lif_rate_t<double>(j, tau_rc, tau_ref);
}

template <class T>
T relu_rate(T j, T amplitude) {
    return j > T(0) ? amplitude * j : T(0);
}

struct LowpassCoeff {
    double a = 0.0;  // state feedback
    double b = 1.0;  // input weight
};

/// Discretized first-order lowpass: y[k+1] = a*y[k] + b*x[k].
inline LowpassCoeff lowpass_coefficients(double tau, double dt) {
    if (tau <= 0.0) return {0.0, 1.0};
    double a = std::exp(-dt / tau);
    return {a, 1.0 - a};
}

template <class T>
T lowpass_step(T coef_a, T coef_b, T state, T in) {
    return coef_a * state + coef_b * in;
}

template <class T>
struct LifState {
    T out;
    T voltage;
    T refractory;
};

/// One exact-integration step of a spiking LIF neuron. `refractory` holds the
/// refractory time remaining at the start of the step; the returned value is
/// the remainder at the end of the step. On threshold crossing the spike time
/// within the step is solved exactly and folded into the refractory period.
template <class T>
LifState<T> lif_spike_step(T j, T voltage, T refractory, T dt, T tau_rc, T tau_ref,
                           T amplitude) {
    T delta = dt - refractory;
    if (delta < T(0)) delta = T(0);
    if (delta > dt) delta = dt;

    T v = voltage - (j - voltage) * std::expm1(-delta / tau_rc);
    if (v < T(0)) v = T(0);

    LifState<T> next;
    if (v > T(1)) {
        T since_spike = -tau_rc * std::log1p(-(v - T(1)) / (j - T(1)));
        next.out = amplitude / dt;
        next.voltage = T(0);
        next.refractory = tau_ref - since_spike;
    } else {
        next.out = T(0);
        next.voltage = v;
        next.refractory = refractory > dt ? refractory - dt : T(0);
    }
    return next;
}

}  // namespace neng
