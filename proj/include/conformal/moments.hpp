#pragma once

// Exact angular averages of monomials over the unit sphere S^{n-1} in R^n,
// via the pairing formula: for even exponents e_i,
//   <x^e> = prod_i (e_i - 1)!! / [n (n+2) ... (n + 2k - 2)],  2k = sum e_i.
// Any odd exponent makes the average vanish by antipodal symmetry.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "conformal/special.hpp"

namespace conformal {

// Average over S^{n-1} of prod_i xhat_i^{e[i]}. Supports total degree <= 8.
inline double sphere_monomial_average(const std::vector<int>& exponents, int n) {
    if (n < 1) throw std::invalid_argument("sphere_monomial_average: n >= 1");
    long total = 0;
    for (int e : exponents) {
        if (e < 0) throw std::invalid_argument("sphere_monomial_average: negative exponent");
        total += e;
    }
    if (total > 8) throw std::invalid_argument("sphere_monomial_average: degree > 8 unsupported");
    for (int e : exponents)
        if (e % 2 == 1) return 0.0;
    if (total == 0) return 1.0;
    const long k = total / 2;
    double num = 1.0;
    for (int e : exponents)
        for (int m = e - 1; m >= 1; m -= 2) num *= m; // (e-1)!!
    double den = 1.0;
    for (long j = 0; j < k; ++j) den *= static_cast<double>(n + 2 * j);
    return num / den;
}

// Integral over S^{n-1} of the same monomial.
inline double sphere_monomial_integral(const std::vector<int>& exponents, int n) {
    return sphere_monomial_average(exponents, n) * sphere_area(n);
}

// Moment denominators n(n+2)...(n+2k-2), used by the mean-value expansions.
inline double sphere_moment_denominator(int n, int k) {
    double den = 1.0;
    for (int j = 0; j < k; ++j) den *= static_cast<double>(n + 2 * j);
    return den;
}

} // namespace conformal
