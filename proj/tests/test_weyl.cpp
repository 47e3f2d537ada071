#include <Eigen/Dense>
#include <random>

#include "conformal/perturbation.hpp"
#include "conformal/weyl.hpp"
#include "doctest.h"

using namespace conformal;

namespace {

std::vector<double> random_tensor(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> t(static_cast<std::size_t>(n) * n * n * n);
    for (double& v : t) v = uni(rng);
    return t;
}

} // namespace

TEST_CASE("projection lands in the symmetry class and is idempotent") {
    const int n = 6;
    AlgebraicWeyl w = project_to_weyl(random_tensor(n, 7), n);
    CHECK(w.max_antisymmetry_violation() < 1e-12);
    CHECK(w.max_bianchi_violation() < 1e-12);
    CHECK(w.max_trace_violation() < 1e-12);

    AlgebraicWeyl w2 = project_to_weyl(w.data(), n);
    double worst = 0.0;
    for (std::size_t i = 0; i < w.data().size(); ++i)
        worst = std::max(worst, std::abs(w.data()[i] - w2.data()[i]));
    CHECK(worst < 1e-12);
}

TEST_CASE("random tensors at n = 10 project cleanly") {
    AlgebraicWeyl w = project_to_weyl(random_tensor(10, 3), 10);
    CHECK(w.max_antisymmetry_violation() < 1e-12);
    CHECK(w.max_bianchi_violation() < 1e-12);
    CHECK(w.max_trace_violation() < 1e-12);
    CHECK(w.frobenius_norm() > 0.1);
}

TEST_CASE("dimension three kills the class; dimension four has dimension 10") {
    // rank oracle: project a spanning family and measure the span.
    for (int n : {3, 4}) {
        const int draws = 40;
        const int len = n * n * n * n;
        Eigen::MatrixXd basis(len, draws);
        for (int d = 0; d < draws; ++d) {
            AlgebraicWeyl w = project_to_weyl(random_tensor(n, 100 + d), n);
            for (int i = 0; i < len; ++i) basis(i, d) = w.data()[i];
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0] &&
                svd.singularValues()[0] > 1e-14)
                ++rank;
        // dim = n(n+1)(n+2)(n-3)/12: 0 at n=3, 10 at n=4
        if (n == 3) {
            double sup = 0.0;
            for (int d = 0; d < draws; ++d) sup = std::max(sup, basis.col(d).cwiseAbs().maxCoeff());
            CHECK(sup < 1e-13);
        } else {
            CHECK(rank == 10);
        }
    }
}

TEST_CASE("coupling norm") {
    AlgebraicWeyl z = AlgebraicWeyl::zero(5);
    CHECK(weyl_coupling_norm(z) == 0.0);

    AlgebraicWeyl w = random_weyl(8, 11);
    const double base = weyl_coupling_norm(w);
    CHECK(base > 0.0);

    // scaling by s multiplies the norm by s^2
    AlgebraicWeyl ws = w;
    for (double& v : ws.data()) v *= 3.0;
    CHECK(weyl_coupling_norm(ws) == doctest::Approx(9.0 * base).epsilon(1e-13));

    // identity of the symmetry class: sum (W_ijkl + W_ilkj)^2 = 3 |W|^2
    const double f = w.frobenius_norm();
    CHECK(base == doctest::Approx(3.0 * f * f).epsilon(1e-12));
}

TEST_CASE("random_weyl determinism and guards") {
    AlgebraicWeyl a = random_weyl(10, 1);
    AlgebraicWeyl b = random_weyl(10, 1);
    CHECK(a.data() == b.data());
    AlgebraicWeyl c = random_weyl(10, 2);
    CHECK(a.data() != c.data());
    CHECK_THROWS_AS(random_weyl(3, 5), std::invalid_argument);
    CHECK_THROWS_AS(project_to_weyl(std::vector<double>(16, 1.0), 2), std::invalid_argument);
}

TEST_CASE("quadratic field H: trace-free and H(x) x = 0") {
    auto w = std::make_shared<AlgebraicWeyl>(random_weyl(9, 21));
    QuadraticHField h(w);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd x(9);
        for (int i = 0; i < 9; ++i) x[i] = uni(rng);
        Eigen::MatrixXd hm = h.evaluate(x);
        const double scale = 1.0 + hm.cwiseAbs().maxCoeff();
        CHECK(std::abs(hm.trace()) < 1e-13 * scale);
        CHECK((hm * x).cwiseAbs().maxCoeff() < 1e-13 * scale * x.norm());
        CHECK((hm - hm.transpose()).cwiseAbs().maxCoeff() < 1e-14 * scale);
        // Hbar = (1 - |x|^2) H
        Eigen::MatrixXd hb = h.evaluate_bar(x);
        CHECK((hb - (1.0 - x.squaredNorm()) * hm).cwiseAbs().maxCoeff() < 1e-13 * scale);
    }
}
