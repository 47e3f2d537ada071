#pragma once

// The Lyapunov-Schmidt reduced functional
//   F(xi, eps) = 1/2 int sum Hbar_il Hbar_kl d_i u d_k u
//                - (n-2)/(16(n-1)) int sum (d_l Hbar_ik)^2 u^2
//                + int sum Hbar_ik d_i d_k u . z,
// its closed form at xi = 0, the critical pair eps_*, the dimension
// threshold, and the constrained z-equation solved per spherical-harmonic
// sector.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conformal/weyl.hpp"

namespace conformal {

class ReducedEnergyContext {
  public:
    ReducedEnergyContext(int n, std::shared_ptr<const AlgebraicWeyl> w,
                         double radial_truncation = 0.0, int radial_grid_size = 4000,
                         int harmonic_degree_max = 6);

    int dim() const { return n_; }
    const AlgebraicWeyl& weyl() const { return *w_; }
    std::shared_ptr<const AlgebraicWeyl> weyl_ptr() const { return w_; }
    double radial_truncation(double eps) const;
    int radial_grid_size() const { return radial_grid_size_; }
    int harmonic_degree_max() const { return harmonic_degree_max_; }

    // M_qb = sum_{ikl} (W_ilkq + W_iqkl)(W_ilkb + W_ibkl); x M x is the
    // gradient-square polynomial sum (d_l H_ik)^2 and tr M is the coupling
    // norm sum (W_ijkl + W_ilkj)^2.
    const Eigen::MatrixXd& gradient_matrix() const { return m_; }
    double coupling() const { return tr_m_; }

  private:
    int n_;
    std::shared_ptr<const AlgebraicWeyl> w_;
    double radial_truncation_;
    int radial_grid_size_;
    int harmonic_degree_max_;
    Eigen::MatrixXd m_;
    double tr_m_ = 0.0;
};

struct F0Terms {
    double total = 0.0;
    double term1 = 0.0; // Hbar Hbar du du integral, assembled by Wick pairings
    double term2 = 0.0; // gradient-square integral, assembled by moment chain
    double term3 = 0.0; // z-coupling integral
    bool quadrature_converged = true;
    double quadrature_error = 0.0;
};

// The paper's closed form for F(0, eps); requires n >= 11 (n = 10 has a
// singular denominator).
double F0_closed_form(const ReducedEnergyContext& ctx, double eps);
double F0_closed_form(int n, double coupling, double eps);

// Independent assembly of the three integrals at xi = 0: exact angular
// moments x adaptive radial quadrature. term1 and term3 vanish by the
// antisymmetric W contractions and are reported as computed.
F0Terms F0_quadrature(const ReducedEnergyContext& ctx, double eps);

struct CriticalEpsilon {
    double eps;
    int f_second_derivative_sign; // sign of d^2F/deps^2 at the root
};
// All positive critical points of F(0, .); empty when the discriminant
// 9 - 8ab is negative (a = (n-8)/(n+4), b = (n+8)/(n-10)). Depends only on n.
std::vector<CriticalEpsilon> critical_epsilon(int n);

// Smallest n in [lo, hi] whose bracket has an interior critical pair.
std::optional<int> critical_dimension_scan(int lo, int hi);

struct ZSectorSolution {
    int degree = 0;            // harmonic degree j
    std::string label;
    std::vector<double> radial;          // z_j at the radial nodes
    double multiplier = 0.0;             // Lagrange multiplier (j <= 1)
    double constraint_residual = 0.0;    // re-verified constraint integral
    double source_scale = 0.0;           // sup |radial source|
};

struct ZSolution {
    std::vector<double> rho;  // radial grid
    std::vector<ZSectorSolution> sectors;
    double term3 = 0.0;       // int f z
    double max_constraint_residual = 0.0;
};

// Constrained solve of Delta z + n(n+2) u_eps^{4/(n-2)} z = sum Hbar d d u
// in E_{(xi,eps)}, by harmonic-sector radial boundary-value problems with
// bordered constraints in the j = 0, 1 sectors.
ZSolution z_solve(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi, double eps);

struct FGeneralTerms {
    double total = 0.0, term1 = 0.0, term2 = 0.0, term3 = 0.0;
};
FGeneralTerms F_general_terms(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi,
                              double eps);
double F_general(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi, double eps);

} // namespace conformal
