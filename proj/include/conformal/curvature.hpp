#pragma once

// Finite-difference curvature of a metric field x -> g(x) on a Euclidean
// chart: Riemann, Weyl, and first/second covariant derivatives of Weyl,
// with optional Richardson extrapolation over the step size.

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace conformal {

using MetricField = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct CurvatureReport {
    int n = 0;
    double fd_step = 0.0;
    double scalar = 0.0;          // scalar curvature at x0
    std::vector<double> riemann;  // rank-4, all covariant, (i,j,k,l)
    std::vector<double> weyl;     // rank-4
    std::vector<double> grad_weyl;   // rank-5, slot 0 = derivative direction
    std::vector<double> hess_weyl;   // rank-6, slots 0,1 = derivative directions
    double riemann_norm = 0.0;    // g-contracted Frobenius norms
    double weyl_norm = 0.0;
    double grad_weyl_norm = 0.0;
    double hess_weyl_norm = 0.0;
    // Richardson error estimates (difference between steps / 3), zero when
    // extrapolation is off.
    double err_weyl = 0.0;
    double err_grad_weyl = 0.0;
    double err_hess_weyl = 0.0;
};

// Centered differences of order 2; with richardson=true the whole pipeline
// runs at fd_step and 2*fd_step and extrapolates. Rejects metrics that are
// not positive definite at x0.
CurvatureReport curvature_at(const MetricField& g, const Eigen::VectorXd& x0,
                             double fd_step = 1e-3, bool richardson = false);

} // namespace conformal
