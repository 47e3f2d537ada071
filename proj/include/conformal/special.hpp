#pragma once

// Special constants and small analytic helpers shared across modules.
// All geometric constants come from Gamma-function formulas, never from
// hard-coded decimals.

#include <cmath>
#include <stdexcept>

namespace conformal {

inline constexpr double kPi = 3.14159265358979323846;

// Surface area of the unit (n-1)-sphere embedded in R^n: 2 pi^{n/2} / Gamma(n/2).
inline double sphere_area(int n) {
    if (n < 1) throw std::invalid_argument("sphere_area: n >= 1 required");
    return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

// Riemannian volume of the unit round sphere S^n: 2 pi^{(n+1)/2} / Gamma((n+1)/2).
inline double sphere_volume(int n) {
    if (n < 1) throw std::invalid_argument("sphere_volume: n >= 1 required");
    return 2.0 * std::pow(kPi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

// Yamabe energy of the round metric on S^n: n(n-1) Vol(S^n)^{2/n}.
inline double yamabe_constant_sphere(int n) {
    if (n < 3) throw std::invalid_argument("yamabe_constant_sphere: n >= 3 required");
    return static_cast<double>(n) * (n - 1) * std::pow(sphere_volume(n), 2.0 / n);
}

// Euler Beta function via log-Gamma (stable for large arguments).
inline double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// C-infinity step: 1 for t <= 0, 0 for t >= 1, monotone in between.
// Built from f(t) = exp(-1/t).
inline double smooth_step_down(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double f1 = std::exp(-1.0 / (1.0 - t));
    const double f0 = std::exp(-1.0 / t);
    return f1 / (f0 + f1);
}

// Cutoff profile eta with eta(t) = 1 for t <= 1, eta(t) = 0 for t >= 2.
inline double cutoff_eta(double t) { return smooth_step_down(t - 1.0); }

} // namespace conformal
