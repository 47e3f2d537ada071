#include "conformal/perturbation.hpp"

#include <cmath>

#include "conformal/special.hpp"

namespace conformal {

Eigen::MatrixXd QuadraticHField::evaluate(const Eigen::VectorXd& x) const {
    const int n = dim();
    if (x.size() != n) throw std::invalid_argument("QuadraticHField: point dimension mismatch");
    const AlgebraicWeyl& w = *w_;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = i; k < n; ++k) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) {
                if (x[p] == 0.0) continue;
                double inner = 0.0;
                for (int q = 0; q < n; ++q) inner += w(i, p, k, q) * x[q];
                acc += x[p] * inner;
            }
            h(i, k) = acc;
            h(k, i) = acc;
        }
    return h;
}

Eigen::MatrixXd QuadraticHField::evaluate_bar(const Eigen::VectorXd& x) const {
    return (1.0 - x.squaredNorm()) * evaluate(x);
}

namespace {

// 1 on [0, rho], 0 on [1, inf), smooth monotone blend in (rho, 1).
double core_cutoff(double r, double rho) {
    if (rho >= 1.0) return r < 1.0 ? 1.0 : 0.0;
    return smooth_step_down((r - rho) / (1.0 - rho));
}

} // namespace

Eigen::MatrixXd PerturbationField::evaluate(const Eigen::VectorXd& x) const {
    const int n = dim();
    if (x.size() != n) throw std::invalid_argument("PerturbationField: point dimension mismatch");
    const double r2 = x.squaredNorm();
    if (spec_.mode == PerturbationSpec::Mode::kSingleBump) {
        const double r = std::sqrt(r2);
        if (r >= 1.0) return Eigen::MatrixXd::Zero(n, n);
        const double cut = core_cutoff(r, spec_.rho);
        if (cut == 0.0) return Eigen::MatrixXd::Zero(n, n);
        const double amp = spec_.mu * (spec_.lambda * spec_.lambda - r2) * cut;
        return amp * h_.evaluate(x);
    }
    // Sequence mode: bumps at y_N = (1/N, 0, ..., 0) of radius 1/(2 N^2) and
    // amplitude scale 2^{-2N}; beyond ~the 53rd bump everything is below
    // double precision.
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    const int n_max = spec_.n0 + 64;
    Eigen::VectorXd y(n);
    for (int N = spec_.n0; N <= n_max; ++N) {
        y = x;
        y[0] -= 1.0 / N;
        const double d = y.norm();
        const double arg = 4.0 * N * N * d;
        if (arg >= 2.0) continue;
        const double scale = std::pow(2.0, -N);
        if (scale * scale < 1e-300) break;
        const double amp = cutoff_eta(arg) * scale * (scale - d * d);
        if (amp == 0.0) continue;
        acc += amp * h_.evaluate(y);
    }
    return acc;
}

Eigen::MatrixXd PerturbationField::metric(const Eigen::VectorXd& x) const {
    return metric_exp(evaluate(x));
}

double PerturbationField::measure_alpha(int samples_per_axis, double fd_step) const {
    const int n = dim();
    // Sample |h| + |dh| + |d2h| on an axis-aligned cloud inside the unit ball;
    // derivatives by centered differences along each axis.
    double worst = 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const int m = samples_per_axis;
    for (int axis = 0; axis < std::min(n, 3); ++axis)
        for (int s = 0; s < m; ++s) {
            x.setZero();
            x[axis] = -0.95 + 1.9 * s / (m - 1);
            const Eigen::MatrixXd h0 = evaluate(x);
            double d1 = 0.0, d2 = 0.0;
            for (int a = 0; a < n; ++a) {
                Eigen::VectorXd xp = x, xm = x;
                xp[a] += fd_step;
                xm[a] -= fd_step;
                const Eigen::MatrixXd hp = evaluate(xp);
                const Eigen::MatrixXd hm = evaluate(xm);
                d1 += ((hp - hm) / (2.0 * fd_step)).squaredNorm();
                d2 += ((hp - 2.0 * h0 + hm) / (fd_step * fd_step)).squaredNorm();
            }
            worst = std::max(worst, h0.norm() + std::sqrt(d1) + std::sqrt(d2));
        }
    return worst;
}

Eigen::MatrixXd metric_exp(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols()) throw std::invalid_argument("metric_exp: square matrix required");
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + h.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("metric_exp: symmetric matrix required");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
    return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
           es.eigenvectors().transpose();
}

} // namespace conformal
