#include <cmath>
#include <memory>

#include "conformal/quadrature.hpp"
#include "conformal/reduced_energy.hpp"
#include "conformal/special.hpp"
#include "doctest.h"

using namespace conformal;

namespace {

std::shared_ptr<const AlgebraicWeyl> shared_weyl(int n, unsigned seed) {
    return std::make_shared<AlgebraicWeyl>(random_weyl(n, seed));
}

// Direct evaluation of G(x) = sum_{ikl} (d_l Hbar_ik)^2 straight from W,
// independent of the chain representation used by the implementation.
double g_direct(const AlgebraicWeyl& w, const Eigen::VectorXd& x) {
    const int n = w.dim();
    const double s = x.squaredNorm();
    // H(x)
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) acc += w(i, p, k, q) * x[p] * x[q];
            h(i, k) = acc;
        }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                double dh = 0.0;
                for (int q = 0; q < n; ++q) dh += (w(i, l, k, q) + w(i, q, k, l)) * x[q];
                const double v = -2.0 * x[l] * h(i, k) + (1.0 - s) * dh;
                total += v * v;
            }
    return total;
}

// Exact Laplacian of a polynomial of degree <= 7 by the 7-point stencil.
double stencil_laplacian(const std::function<double(Eigen::VectorXd)>& f, Eigen::VectorXd x,
                         double step) {
    static const double kC[7] = {2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0};
    const int n = static_cast<int>(x.size());
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
        double d2 = 0.0;
        for (int k = -3; k <= 3; ++k) {
            Eigen::VectorXd y = x;
            y[a] += k * step;
            d2 += kC[k + 3] * f(y);
        }
        acc += d2 / (180.0 * step * step);
    }
    return acc;
}

} // namespace

TEST_CASE("critical epsilon roots: exact rationals at n = 52") {
    auto roots = critical_epsilon(52);
    REQUIRE(roots.size() == 2);
    // exact-arithmetic oracle: a = 44/56, b = 60/42, disc = 9 - 8ab = 1/49,
    // s = (3 -+ 1/7)/(4b) -> {1/2, 11/20}
    CHECK(roots[0].eps * roots[0].eps == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(roots[1].eps * roots[1].eps == doctest::Approx(0.55).epsilon(1e-14));
    CHECK(roots[0].eps == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(roots[1].eps == doctest::Approx(std::sqrt(0.55)).epsilon(1e-14));
    // one max, one min of F(0, .)
    CHECK(roots[0].f_second_derivative_sign * roots[1].f_second_derivative_sign == -1);
}

TEST_CASE("critical dimension scan") {
    CHECK(critical_epsilon(51).empty());
    auto first = critical_dimension_scan(11, 80);
    REQUIRE(first.has_value());
    CHECK(*first == 52);
    auto tail = critical_dimension_scan(53, 80);
    REQUIRE(tail.has_value());
    CHECK(*tail == 53);
    CHECK_FALSE(critical_dimension_scan(11, 50).has_value());
    // discriminant condition n^2 - 54 n + 152 >= 0 as the integer oracle
    for (int n = 11; n <= 80; ++n) {
        const bool has = !critical_epsilon(n).empty();
        const bool disc = static_cast<long>(n) * n - 54L * n + 152L >= 0;
        CHECK(has == disc);
    }
    // large-n limit: both roots real and positive
    auto big = critical_epsilon(10000);
    REQUIRE(big.size() == 2);
    CHECK(big[0].eps > 0.0);
    CHECK(big[1].eps > big[0].eps);
}

TEST_CASE("closed form guards and limits") {
    CHECK_THROWS_AS(F0_closed_form(10, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(critical_epsilon(9), std::invalid_argument);
    CHECK(F0_closed_form(12, 0.0, 0.7) == 0.0); // W = 0

    // small-eps behavior: leading term eps^4
    const double f1 = F0_closed_form(13, 1.0, 1e-3);
    const double f2 = F0_closed_form(13, 1.0, 2e-3);
    CHECK(f2 / f1 == doctest::Approx(16.0).epsilon(1e-4));
    CHECK(f1 < 0.0); // negative bracket prefactor with positive leading coefficient
}

TEST_CASE("context: gradient matrix trace equals the coupling norm") {
    const int n = 12;
    auto w = shared_weyl(n, 5);
    ReducedEnergyContext ctx(n, w, 60.0, 1200);
    CHECK(ctx.coupling() == doctest::Approx(weyl_coupling_norm(*w)).epsilon(1e-12));
    CHECK(ctx.gradient_matrix().rows() == n);
    // M symmetric positive semidefinite
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ctx.gradient_matrix());
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * ctx.coupling());
}

TEST_CASE("moment chain against exact stencil Laplacians") {
    const int n = 11;
    auto w = shared_weyl(n, 23);
    ReducedEnergyContext ctx(n, w, 60.0, 800);
    const AlgebraicWeyl& ww = *w;

    Eigen::VectorXd xi(n);
    xi.setZero();
    xi[0] = 0.31;
    xi[2] = -0.17;
    xi[5] = 0.08;

    auto g_fn = [&ww](Eigen::VectorXd x) { return g_direct(ww, x); };

    // Blocks Q, P at xi for the chain evaluation.
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) acc += ww(i, p, k, q) * xi[p] * xi[q];
            h(i, k) = acc;
        }
    const double q_val = h.squaredNorm();
    const double p_val = xi.dot(ctx.gradient_matrix() * xi);
    const double s = xi.squaredNorm();
    const double tr_m = ctx.coupling();

    // G itself
    const double g_chain = (12.0 * s - 8.0) * q_val + (1.0 - s) * (1.0 - s) * p_val;
    CHECK(g_chain == doctest::Approx(g_fn(xi)).epsilon(1e-11));

    // Delta G: chain formula vs exact stencil
    const double dg_chain = (24.0 * n + 192.0) * q_val +
                            ((4.0 * n + 48.0) * s - 4.0 * n - 32.0) * p_val +
                            2.0 * (1.0 - s) * (1.0 - s) * tr_m;
    const double dg_stencil = stencil_laplacian(g_fn, xi, 0.05);
    CHECK(dg_chain == doctest::Approx(dg_stencil).epsilon(1e-9));

    // Delta^2 G
    auto dg_fn = [&](Eigen::VectorXd x) { return stencil_laplacian(g_fn, x, 0.05); };
    const double d2g_chain = (8.0 * n * n + 176.0 * n + 768.0) * p_val +
                             ((16.0 * n + 112.0) * s - 16.0 * n - 64.0) * tr_m;
    const double d2g_stencil = stencil_laplacian(dg_fn, xi, 0.05);
    CHECK(d2g_chain == doctest::Approx(d2g_stencil).epsilon(1e-7));

    // Delta^3 G is constant
    auto d2g_fn = [&](Eigen::VectorXd x) {
        Eigen::MatrixXd hx = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                double acc = 0.0;
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) acc += ww(i, p, k, q) * x[p] * x[q];
                hx(i, k) = acc;
            }
        const double qv = hx.squaredNorm();
        (void)qv;
        const double pv = x.dot(ctx.gradient_matrix() * x);
        return (8.0 * n * n + 176.0 * n + 768.0) * pv +
               ((16.0 * n + 112.0) * x.squaredNorm() - 16.0 * n - 64.0) * tr_m;
    };
    const double d3g_chain = (48.0 * n * n + 576.0 * n + 1536.0) * tr_m;
    const double d3g_stencil = stencil_laplacian(d2g_fn, xi, 0.05);
    CHECK(d3g_chain == doctest::Approx(d3g_stencil).epsilon(1e-8));
}

TEST_CASE("F0 quadrature matches the closed form") {
    const int n = 12;
    auto w = shared_weyl(n, 3);
    ReducedEnergyContext ctx(n, w, 80.0, 2000);
    for (double eps : {0.3, 0.7, 1.0}) {
        const double closed = F0_closed_form(ctx, eps);
        F0Terms terms = F0_quadrature(ctx, eps);
        CHECK(terms.quadrature_converged);
        CHECK(std::abs(terms.total - closed) / std::abs(closed) < 1e-6);
        CHECK(std::abs(terms.term1) <= 1e-10 * std::abs(terms.term2));
        CHECK(std::abs(terms.term3) <= 1e-10 * std::abs(terms.term2));
    }
    // W = 0: all terms vanish
    auto z = std::make_shared<AlgebraicWeyl>(AlgebraicWeyl::zero(n));
    ReducedEnergyContext zctx(n, z, 80.0, 800);
    F0Terms zero_terms = F0_quadrature(zctx, 0.5);
    CHECK(zero_terms.total == 0.0);
}

TEST_CASE("z solve: zero source at xi = 0, constraints, grid order") {
    const int n = 12;
    auto w = shared_weyl(n, 8);
    ReducedEnergyContext ctx(n, w, 50.0, 1500);

    ZSolution z0 = z_solve(ctx, Eigen::VectorXd::Zero(n), 0.7);
    double sup = 0.0, src = 0.0;
    for (const auto& sec : z0.sectors) {
        for (double v : sec.radial) sup = std::max(sup, std::abs(v));
        src = std::max(src, sec.source_scale);
    }
    CHECK(src < 1e-12 * weyl_coupling_norm(*w)); // sources cancel through W antisymmetry
    CHECK(sup < 1e-12);
    CHECK(std::abs(z0.term3) < 1e-20);

    Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
    xi[1] = 0.25;
    xi[4] = -0.1;
    ZSolution z1 = z_solve(ctx, xi, 0.7);
    CHECK(z1.max_constraint_residual < 1e-10);
    bool nontrivial = false;
    for (const auto& sec : z1.sectors)
        for (double v : sec.radial)
            if (std::abs(v) > 1e-8) nontrivial = true;
    CHECK(nontrivial);

    // order-2 convergence under radial grid doubling
    ReducedEnergyContext c1(n, w, 40.0, 500);
    ReducedEnergyContext c2(n, w, 40.0, 1000);
    ReducedEnergyContext c3(n, w, 40.0, 2000);
    ZSolution s1 = z_solve(c1, xi, 0.7);
    ZSolution s2 = z_solve(c2, xi, 0.7);
    ZSolution s3 = z_solve(c3, xi, 0.7);
    // compare a nonzero sector on shared nodes
    std::size_t sector = 0;
    double best = 0.0;
    for (std::size_t t = 0; t < s1.sectors.size(); ++t) {
        double mag = 0.0;
        for (double v : s1.sectors[t].radial) mag = std::max(mag, std::abs(v));
        if (mag > best) {
            best = mag;
            sector = t;
        }
    }
    auto diff = [&](const ZSolution& a, const ZSolution& b) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.sectors[sector].radial.size(); ++i)
            worst = std::max(worst,
                             std::abs(a.sectors[sector].radial[i] - b.sectors[sector].radial[2 * i]));
        return worst;
    };
    const double e1 = diff(s1, s2), e2 = diff(s2, s3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
}

TEST_CASE("F general: evenness, flat derivative at zero, closed-form consistency") {
    const int n = 12;
    auto w = shared_weyl(n, 4);
    ReducedEnergyContext ctx(n, w, 80.0, 2000);
    const double eps = 0.7;

    const double f0 = F_general(ctx, Eigen::VectorXd::Zero(n), eps);
    const double closed = F0_closed_form(ctx, eps);
    CHECK(std::abs(f0 - closed) / std::abs(closed) < 1e-6);

    std::vector<Eigen::VectorXd> dirs;
    Eigen::VectorXd d1 = Eigen::VectorXd::Zero(n);
    d1[0] = 1.0;
    dirs.push_back(d1);
    Eigen::VectorXd d2 = Eigen::VectorXd::Zero(n);
    d2[1] = std::sqrt(0.5);
    d2[3] = std::sqrt(0.5);
    dirs.push_back(d2);
    Eigen::VectorXd d3 = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    dirs.push_back(d3);
    for (const auto& dir : dirs) {
        const Eigen::VectorXd xi = 0.3 * dir;
        const double fp = F_general(ctx, xi, eps);
        const double fm = F_general(ctx, Eigen::VectorXd(-xi), eps);
        CHECK(std::abs(fp - fm) <= 1e-8 * std::abs(fp));
    }

    // centered difference of F along xi at 0 vanishes
    const Eigen::VectorXd step = 0.05 * d1;
    const double deriv =
        (F_general(ctx, step, eps) - F_general(ctx, Eigen::VectorXd(-step), eps)) / 0.1;
    CHECK(std::abs(deriv) <= 1e-8 * std::abs(f0) / 0.1 + 1e-12);
}

TEST_CASE("context guards") {
    auto w = shared_weyl(12, 2);
    CHECK_THROWS_AS(ReducedEnergyContext(10, shared_weyl(10, 2)), std::invalid_argument);
    CHECK_THROWS_AS(ReducedEnergyContext(12, w, 0.0, 4000, 4), std::invalid_argument);
    ReducedEnergyContext ok(12, w);
    CHECK(ok.radial_truncation(0.5) == doctest::Approx(100.0));
    CHECK(ok.radial_truncation(2.0) == doctest::Approx(200.0));
}
