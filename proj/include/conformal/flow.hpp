#pragma once

// Semi-implicit integrator for the normalized Yamabe flow
//   d/dt u^{(n+2)/(n-2)} = ((n+2)/4) ( (4(n-1)/(n-2)) Delta_0 u - R_0 u
//                                      + r_{g(t)} u^{(n+2)/(n-2)} ),
// kept in the unit-volume gauge, with monotonicity, conservation and
// concentration diagnostics.

#include <string>
#include <vector>

#include "conformal/manifold.hpp"

namespace conformal {

struct FlowState {
    double t = 0.0;
    Field u;
    double volume = 0.0;        // conformal volume (1 in gauge)
    double r = 0.0;             // mean scalar curvature of g(t)
    double energy = 0.0;        // Yamabe energy (equals r in gauge)
    double sup_u = 0.0;
    double sup_residual = 0.0;  // sup |R_tilde - r|
};

struct FlowSample {
    double t = 0.0, r = 0.0, energy = 0.0, volume = 0.0;
    double sup_u = 0.0, sup_residual = 0.0;
    double l2_residual_sq = 0.0;  // int (R - r)^2 dvol_{g(t)}
    double lp_residual = 0.0;     // int |R - r|^{2n/(n+2)} dvol_{g(t)}
    double concentration = 0.0;   // optional monitor column
};

struct FlowConfig {
    ManifoldPtr manifold;
    Field u0;
    double dt_init = 1e-4;
    double dt_max = 0.25;
    double growth = 1.3;            // step growth after accepted steps
    double tol_sup_residual = 1e-6; // stop criterion
    double t_max = 1e4;
    int sample_every = 1;
    double monitor_radius = 0.0;    // record concentration when > 0
};

struct Trajectory {
    std::vector<FlowSample> samples;
    FlowState final_state;
    bool converged = false;
    std::string status;
};

// Normalize to unit volume and fill the caches.
FlowState make_flow_state(const ManifoldPtr& m, const Field& u0);

struct StepOutcome {
    FlowState state;
    double dt_used = 0.0;
    bool aborted = false; // step-size underflow (dt < 1e-14)
};

// One semi-implicit update at the requested dt; rejects (halving dt) until
// positivity and r-monotonicity hold.
StepOutcome flow_step(const FlowState& s, double dt);

Trajectory run_flow(const FlowConfig& config);

// Max over sampled t of the relative deviation in
//   r(t) - r(T) = ((n-2)/2) int_t^T int (R - r)^2 dvol dtau.
// Requires a converged trajectory.
double energy_identity_check(const Trajectory& tr);

// Max over center nodes p of int_{B_radius(p)} u^{2n/(n-2)} dvol_0.
double concentration_monitor(const FlowState& s, double radius);

struct LojasiewiczFit {
    bool valid = false;
    double gamma_hat = 0.0;
    double slope = 0.0;
    double fit_residual = 0.0; // rms residual of the log-log fit
    int points = 0;
};

// Tail fit of log(E - r_inf) against log int |R - r_inf|^{2n/(n+2)} dvol.
// Diagnostic only.
LojasiewiczFit lojasiewicz_fit(const Trajectory& tr);

} // namespace conformal
