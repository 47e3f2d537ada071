#pragma once

// Adaptive Gauss-Kronrod quadrature and the half-line transform used for
// the radial improper integrals (substitution r = t/(1-t)).

#include <functional>

namespace conformal {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
    int subdivisions = 0;
};

// Adaptive G7-K15 on [a, b]. Nodes are interior, so integrable endpoint
// behavior is tolerated.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol = 1e-10, double abs_tol = 1e-14,
                              int max_subdivisions = 4000);

// Integral over [0, inf) via r = t/(1-t), dr = dt/(1-t)^2.
QuadResult integrate_half_line(const std::function<double(double)>& f, double rel_tol = 1e-10,
                               double abs_tol = 1e-14);

} // namespace conformal
