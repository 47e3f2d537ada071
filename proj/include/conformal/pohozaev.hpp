#pragma once

// Term-by-term evaluation of the generalized Pohozaev identity for solutions
// of the (possibly subcritical) Yamabe equation on conformally flat balls
// g = e^{2 phi} delta. Vector fields are multivariate polynomials so the
// angular integrals reduce to exact sphere moments; only the radial
// direction is quadratured.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "conformal/manifold.hpp"

namespace conformal {

struct Monomial {
    double coef = 0.0;
    std::vector<int> exp; // one exponent per coordinate
};

struct Poly {
    int n = 0;
    std::vector<Monomial> terms;

    static Poly zero(int n) { return Poly{n, {}}; }
    static Poly constant(int n, double c);
    static Poly coordinate(int n, int i);

    Poly derivative(int i) const;
    Poly multiply(const Poly& other) const;
    Poly scaled(double a) const;
    Poly plus(const Poly& other) const;
    double evaluate(const Eigen::VectorXd& x) const;
    int degree() const;
};

struct PolyVectorField {
    int n = 0;
    std::vector<Poly> comp;

    static PolyVectorField dilation(int n);                  // V = x
    static PolyVectorField constant_direction(int n, int i); // V = e_i
    // V = c x^exp e_i
    static PolyVectorField monomial(int n, int i, double c, std::vector<int> exp);
    PolyVectorField plus(const PolyVectorField& other) const;
    Poly divergence_flat() const;
    Poly dot_x() const; // sum_i V^i x_i
};

struct PohozaevProblem {
    ManifoldPtr ball; // ConformallyFlatBall
    // Radial solution data; urr may be empty (finite differences then).
    std::function<double(double)> u, ur, urr;
    PolyVectorField v;
    double delta = 0.0;
    bool grid_quadrature = false; // trapezoid on the manifold grid instead of adaptive
    RadialProfile phi;            // same profile the ball was built with
};

// Wrap a nodal Field (with FD derivatives) into the radial callbacks.
void attach_field_solution(PohozaevProblem& p, const Field& u);

struct PohozaevReport {
    double deformation = 0.0;   // -1/2 int [def V]^{ij} d_i u d_j u
    double rg_coupling = 0.0;   // R_g volume term
    double bdry_vgradu = 0.0;   // int <V,grad u><grad u,nu>
    double bdry_gradsq = 0.0;   // -1/2 int |grad u|^2 <V,nu>
    double bdry_divv = 0.0;     // (n-2)/(2n) int u <grad u,nu> div V
    double bdry_power = 0.0;    // (n-2)^2/2 int u^{2n/(n-2)-delta} <V,nu>
    double rhs_divgrad = 0.0;   // (n-2)/(2n) int u <grad u, grad div V>
    double rhs_delta = 0.0;     // -(n-2)^2/2 delta int u^{p-delta} <V,grad u>
    double lhs_total = 0.0, rhs_total = 0.0, residual = 0.0;
    double pde_residual = 0.0;  // sup of the (star_delta) residual of u
    std::string warning;
    int level = 0; // node count of the radial grid
};

PohozaevReport pohozaev_terms(const PohozaevProblem& p);

// Trace-free symmetrized contravariant derivative of V at x for g = e^{2phi} delta.
Eigen::MatrixXd deformation_tensor(const PolyVectorField& v, const RadialProfile& phi,
                                   const Eigen::VectorXd& x);

struct RefinementStudy {
    std::vector<int> levels;
    std::vector<double> residuals;
    double estimated_order = 0.0;
    bool order_measured = false; // false when residuals sit at round-off
};

// Re-run with doubled grids; order estimated from successive residual ratios.
RefinementStudy refinement_study(const PohozaevProblem& p, int levels);

void write_pohozaev_csv(const std::vector<PohozaevReport>& reports, const std::string& path);

} // namespace conformal
