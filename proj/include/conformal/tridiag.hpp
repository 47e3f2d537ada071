#pragma once

// Thomas solves for tridiagonal and cyclic-tridiagonal systems
// (Sherman-Morrison for the periodic corner entries).

#include <stdexcept>
#include <vector>

namespace conformal {

// lo[i] u_{i-1} + di[i] u_i + up[i] u_{i+1} = rhs[i]; lo[0], up[n-1] unused.
inline std::vector<double> solve_tridiagonal(std::vector<double> lo, std::vector<double> di,
                                             std::vector<double> up, std::vector<double> rhs) {
    const std::size_t n = di.size();
    if (n == 0 || lo.size() != n || up.size() != n || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lo[i] / di[i - 1];
        di[i] -= w * up[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / di[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - up[i] * x[i + 1]) / di[i];
    return x;
}

// Cyclic variant: additionally lo[0] couples to u_{n-1} and up[n-1] to u_0.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& lo,
                                                    const std::vector<double>& di,
                                                    const std::vector<double>& up,
                                                    const std::vector<double>& rhs) {
    const std::size_t n = di.size();
    if (n < 3) throw std::invalid_argument("solve_cyclic_tridiagonal: n >= 3 required");
    const double alpha = lo[0], beta = up[n - 1];
    const double gamma = -di[0];
    std::vector<double> d2(di);
    d2[0] = di[0] - gamma;
    d2[n - 1] = di[n - 1] - alpha * beta / gamma;
    std::vector<double> u_vec(n, 0.0);
    u_vec[0] = gamma;
    u_vec[n - 1] = alpha;
    std::vector<double> lo2(lo), up2(up);
    lo2[0] = 0.0;
    up2[n - 1] = 0.0;
    std::vector<double> y = solve_tridiagonal(lo2, d2, up2, rhs);
    std::vector<double> z = solve_tridiagonal(lo2, d2, up2, u_vec);
    const double vy = y[0] + (beta / gamma) * y[n - 1];
    const double vz = z[0] + (beta / gamma) * z[n - 1];
    const double factor = vy / (1.0 + vz);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
    return x;
}

} // namespace conformal
