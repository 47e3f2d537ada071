#include <cmath>

#include "conformal/pohozaev.hpp"
#include "conformal/special.hpp"
#include "doctest.h"

using namespace conformal;

namespace {

RadialProfile flat_profile() {
    RadialProfile p;
    p.phi = [](double) { return 0.0; };
    p.dphi = [](double) { return 0.0; };
    p.ddphi = [](double) { return 0.0; };
    return p;
}

RadialProfile stereographic_profile() {
    RadialProfile p;
    p.phi = [](double r) { return std::log(2.0 / (1.0 + r * r)); };
    p.dphi = [](double r) { return -2.0 * r / (1.0 + r * r); };
    p.ddphi = [](double r) {
        const double w = 1.0 + r * r;
        return (2.0 * r * r - 2.0) / (w * w);
    };
    return p;
}

PohozaevProblem classical_problem(int n, int grid) {
    PohozaevProblem p;
    p.phi = flat_profile();
    p.ball = ModelManifold::flat_ball(n, 1.0, grid);
    const double m = 0.5 * (n - 2);
    p.u = [m](double r) { return std::pow(1.0 + r * r, -m); };
    p.ur = [m](double r) { return -2.0 * m * r * std::pow(1.0 + r * r, -m - 1.0); };
    p.urr = [m](double r) {
        const double w = 1.0 + r * r;
        return -2.0 * m * (std::pow(w, -m - 1.0) - 2.0 * (m + 1.0) * r * r * std::pow(w, -m - 2.0));
    };
    p.v = PolyVectorField::dilation(n);
    p.delta = 0.0;
    return p;
}

} // namespace

TEST_CASE("deformation tensor on conformal Killing fields") {
    const int n = 4;
    RadialProfile flat = flat_profile();
    Eigen::VectorXd x(n);
    x << 0.3, -0.2, 0.5, 0.1;
    // dilation and translations are conformal Killing for the flat metric
    CHECK(deformation_tensor(PolyVectorField::dilation(n), flat, x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(deformation_tensor(PolyVectorField::constant_direction(n, 2), flat, x)
              .cwiseAbs()
              .maxCoeff() < 1e-14);

    // V = (x1^2, 0, ..., 0): hand formula 2 x1 (2 e1 e1 - (2/n) I)
    std::vector<int> exp(n, 0);
    exp[0] = 2;
    PolyVectorField v = PolyVectorField::monomial(n, 0, 1.0, exp);
    Eigen::MatrixXd d = deformation_tensor(v, flat, x);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(n, n);
    expect(0, 0) = 2.0 * x[0] * 2.0;
    for (int i = 0; i < n; ++i) expect(i, i) -= 2.0 * x[0] * 2.0 / n;
    CHECK((d - expect).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("classical flat-ball identity for the standard bubble") {
    for (int n : {4, 5}) {
        PohozaevProblem p = classical_problem(n, 200);
        PohozaevReport rep = pohozaev_terms(p);
        CHECK(rep.pde_residual < 1e-10);
        CHECK(rep.warning.empty());
        // interior terms vanish individually: V = x is conformal Killing,
        // R_g = 0, div V constant, delta = 0
        CHECK(std::abs(rep.deformation) < 1e-10);
        CHECK(std::abs(rep.rg_coupling) < 1e-14);
        CHECK(std::abs(rep.rhs_divgrad) < 1e-14);
        CHECK(rep.rhs_delta == 0.0);
        CHECK(rep.residual < 1e-8);

        // translation field
        p.v = PolyVectorField::constant_direction(n, 0);
        PohozaevReport rep2 = pohozaev_terms(p);
        CHECK(rep2.residual < 1e-8);
    }
}

TEST_CASE("stereographic ball with the constant solution: order-2 refinement") {
    const int n = 4;
    PohozaevProblem p;
    p.phi = stereographic_profile();
    p.ball = ModelManifold::conformal_ball(n, p.phi, 1.0, 40);
    const double u0 = std::pow(0.25, (n - 2.0) / 4.0);
    p.u = [u0](double) { return u0; };
    p.ur = [](double) { return 0.0; };
    p.urr = [](double) { return 0.0; };
    // generic polynomial field
    std::vector<int> e1(n, 0);
    e1[0] = 2;
    std::vector<int> e2(n, 0);
    e2[1] = 1;
    e2[2] = 1;
    p.v = PolyVectorField::monomial(n, 0, 0.7, e1)
              .plus(PolyVectorField::monomial(n, 1, -0.4, e2))
              .plus(PolyVectorField::dilation(n));
    p.delta = 0.0;
    p.grid_quadrature = true;

    PohozaevReport rep = pohozaev_terms(p);
    CHECK(rep.pde_residual < 1e-9);

    RefinementStudy study = refinement_study(p, 4);
    REQUIRE(study.order_measured);
    CHECK(study.estimated_order == doctest::Approx(2.0).epsilon(0.1));
    CHECK(study.residuals.back() < study.residuals.front());
}

TEST_CASE("negative control: a non-solution does not satisfy the identity") {
    const int n = 4;
    PohozaevProblem p = classical_problem(n, 40);
    // poison the profile
    p.u = [](double r) { return 1.0 / (1.0 + 0.5 * r * r); };
    p.ur = [](double r) {
        const double w = 1.0 + 0.5 * r * r;
        return -r / (w * w);
    };
    p.urr = nullptr;
    p.grid_quadrature = true;
    PohozaevReport rep = pohozaev_terms(p);
    CHECK_FALSE(rep.warning.empty());
    RefinementStudy study = refinement_study(p, 3);
    // residual converges to a nonzero defect, not to zero
    CHECK(study.residuals.back() > 1e-3);
    if (study.order_measured) CHECK(study.estimated_order < 1.0);
}

TEST_CASE("linearity in the vector field") {
    const int n = 4;
    PohozaevProblem p = classical_problem(n, 80);
    PohozaevProblem p1 = p, p2 = p;
    std::vector<int> e(n, 0);
    e[1] = 2;
    p1.v = PolyVectorField::dilation(n);
    p2.v = PolyVectorField::monomial(n, 1, 0.5, e);
    p.v = p1.v.plus(p2.v);
    PohozaevReport r1 = pohozaev_terms(p1);
    PohozaevReport r2 = pohozaev_terms(p2);
    PohozaevReport r12 = pohozaev_terms(p);
    const double scale = std::abs(r12.lhs_total) + std::abs(r1.lhs_total) + 1.0;
    CHECK(std::abs(r12.deformation - r1.deformation - r2.deformation) < 1e-12 * scale);
    CHECK(std::abs(r12.bdry_power - r1.bdry_power - r2.bdry_power) < 1e-12 * scale);
    CHECK(std::abs(r12.lhs_total - r1.lhs_total - r2.lhs_total) < 1e-12 * scale);
    CHECK(std::abs(r12.rhs_total - r1.rhs_total - r2.rhs_total) < 1e-12 * scale);
}

TEST_CASE("delta guard and field-sampled path") {
    const int n = 4;
    PohozaevProblem p = classical_problem(n, 100);
    p.delta = 2.5; // >= 4/(n-2) = 2
    CHECK_THROWS_AS(pohozaev_terms(p), std::invalid_argument);

    p = classical_problem(n, 400);
    std::vector<double> vals(p.ball->node_count());
    for (int i = 0; i < p.ball->node_count(); ++i) vals[i] = p.u(p.ball->nodes()[i]);
    attach_field_solution(p, Field(p.ball, std::move(vals)));
    PohozaevReport rep = pohozaev_terms(p);
    CHECK(rep.residual < 5e-4); // grid-order accuracy
}
