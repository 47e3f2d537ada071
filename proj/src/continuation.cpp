#include "conformal/continuation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "conformal/special.hpp"
#include "conformal/tridiag.hpp"

namespace conformal {

namespace {

// Residual of the reduced equation on the half-period sigma-grid,
//   T(u) = kappa/L^2 D2 u - R0 u + c u^{p-delta},
// with even (Neumann) closures at both ends.
struct Discretization {
    const SteadyProblem* p;
    int nodes;   // grid + 1
    double hs;   // sigma step = (1/2)/grid

    explicit Discretization(const SteadyProblem& prob)
        : p(&prob), nodes(prob.grid + 1), hs(0.5 / prob.grid) {}

    void d2(const std::vector<double>& u, std::vector<double>& out) const {
        const double inv = 1.0 / (hs * hs);
        out.resize(nodes);
        out[0] = 2.0 * (u[1] - u[0]) * inv;
        for (int i = 1; i < nodes - 1; ++i) out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv;
        out[nodes - 1] = 2.0 * (u[nodes - 2] - u[nodes - 1]) * inv;
    }

    std::vector<double> residual(const std::vector<double>& u, double length, double delta) const {
        std::vector<double> lap;
        d2(u, lap);
        const double kl = p->kappa() / (length * length);
        const double r0 = p->r0(), c = p->c(), pw = p->p() - delta;
        std::vector<double> out(nodes);
        for (int i = 0; i < nodes; ++i)
            out[i] = kl * lap[i] - r0 * u[i] + c * std::pow(u[i], pw);
        return out;
    }

    // Tridiagonal Jacobian of the residual.
    void jacobian(const std::vector<double>& u, double length, double delta,
                  std::vector<double>& lo, std::vector<double>& di,
                  std::vector<double>& up) const {
        const double inv = p->kappa() / (length * length * hs * hs);
        const double r0 = p->r0(), c = p->c(), pw = p->p() - delta;
        lo.assign(nodes, 0.0);
        di.assign(nodes, 0.0);
        up.assign(nodes, 0.0);
        for (int i = 0; i < nodes; ++i) {
            const double diag_nl = -r0 + c * pw * std::pow(u[i], pw - 1.0);
            if (i == 0) {
                di[0] = -2.0 * inv + diag_nl;
                up[0] = 2.0 * inv;
            } else if (i == nodes - 1) {
                lo[i] = 2.0 * inv;
                di[i] = -2.0 * inv + diag_nl;
            } else {
                lo[i] = inv;
                up[i] = inv;
                di[i] = -2.0 * inv + diag_nl;
            }
        }
    }
};

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Sphere-harmonic multiplicity on S^{n-1} c R^n: dim H_j.
long harmonic_multiplicity(int n, int j) {
    if (j == 0) return 1;
    auto binom = [](long a, long b) {
        if (b < 0 || b > a) return 0L;
        long r = 1;
        for (long i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
        return r;
    };
    return binom(n + j - 1, j) - binom(n + j - 3, j - 2);
}

// Unconstrained negative count of the sigma-grid second variation in the
// spherical j = 0 sector (used for crossing detection along branches).
int negative_count_j0(const SteadyProblem& p, const std::vector<double>& u, double length,
                      double delta, Eigen::VectorXd* crossing_vec = nullptr) {
    Discretization d(p);
    const int nodes = d.nodes;
    const double hs = d.hs;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nodes, nodes);
    Eigen::VectorXd mass(nodes);
    const double kl = p.kappa() / (length * length);
    const double r0 = p.r0(), c = p.c(), pw = p.p() - delta;
    for (int i = 0; i < nodes - 1; ++i) {
        const double w = kl / hs; // kappa/L^2 * h * (1/h)^2
        k(i, i) += w;
        k(i + 1, i + 1) += w;
        k(i, i + 1) -= w;
        k(i + 1, i) -= w;
    }
    for (int i = 0; i < nodes; ++i) {
        mass[i] = (i == 0 || i == nodes - 1) ? 0.5 * hs : hs;
        k(i, i) += mass[i] * (r0 - c * pw * std::pow(u[i], pw - 1.0));
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
        k, Eigen::MatrixXd(mass.asDiagonal()));
    int neg = 0;
    int min_idx = 0;
    for (int i = 0; i < nodes; ++i) {
        if (es.eigenvalues()[i] < 0.0) ++neg;
        if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[min_idx])) min_idx = i;
    }
    if (crossing_vec) *crossing_vec = es.eigenvectors().col(min_idx);
    return neg;
}

SolutionRecord finish_record(const SteadyProblem& p, std::vector<double> u, double length,
                             double delta, int iters) {
    SolutionRecord rec;
    rec.u = std::move(u);
    rec.delta = delta;
    rec.length = length;
    rec.newton_iterations = iters;
    rec.sup_u = max_abs(rec.u);
    // Independent residual check on the mirrored cyclic grid.
    SteadyProblem q = p;
    q.length = length;
    q.delta = delta;
    Field full = mirror_to_product(q, rec.u);
    const ModelManifold& m = *full.manifold;
    std::vector<double> lap = m.laplacian(full.values);
    double worst = 0.0;
    const double pw = p.p() - delta;
    for (int i = 0; i < m.node_count(); ++i) {
        const double r = p.kappa() * lap[i] - p.r0() * full.values[i] +
                         p.c() * std::pow(full.values[i], pw);
        worst = std::max(worst, std::abs(r));
    }
    rec.residual = worst;
    rec.energy = yamabe_energy(full);
    return rec;
}

} // namespace

double SteadyProblem::constant_solution() const {
    return std::pow(r0() / c(), 1.0 / (p() - 1.0 - delta));
}

void SteadyProblem::validate() const {
    if (n < 3) throw std::invalid_argument("SteadyProblem: n >= 3 required");
    if (length <= 0.0) throw std::invalid_argument("SteadyProblem: L > 0 required");
    if (delta < 0.0 || delta >= 4.0 / (n - 2))
        throw std::invalid_argument("SteadyProblem: delta in [0, 4/(n-2)) required");
    if (grid < 8) throw std::invalid_argument("SteadyProblem: grid too coarse");
}

SolutionRecord newton_solve(const SteadyProblem& p, const std::vector<double>& u_init, double tol,
                            int max_iter) {
    p.validate();
    Discretization d(p);
    if (static_cast<int>(u_init.size()) != d.nodes)
        throw std::invalid_argument("newton_solve: seed length mismatch");
    for (double v : u_init)
        if (!(v > 0.0)) throw std::invalid_argument("newton_solve: positive seed required");

    std::vector<double> u = u_init;
    std::vector<double> res = d.residual(u, p.length, p.delta);
    double rnorm = max_abs(res);
    int iter = 0;
    for (; iter < max_iter && rnorm > tol; ++iter) {
        std::vector<double> lo, di, up;
        d.jacobian(u, p.length, p.delta, lo, di, up);
        std::vector<double> rhs(res);
        for (double& v : rhs) v = -v;
        std::vector<double> step = solve_tridiagonal(lo, di, up, rhs);
        double lambda = 1.0;
        bool accepted = false;
        for (int back = 0; back < 40; ++back) {
            std::vector<double> trial(u);
            bool positive = true;
            for (int i = 0; i < d.nodes; ++i) {
                trial[i] += lambda * step[i];
                if (!(trial[i] > 0.0)) positive = false;
            }
            if (positive) {
                std::vector<double> tres = d.residual(trial, p.length, p.delta);
                const double tnorm = max_abs(tres);
                if (tnorm < rnorm * (1.0 - 0.25 * lambda) || tnorm < tol) {
                    u = std::move(trial);
                    res = std::move(tres);
                    rnorm = tnorm;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) throw std::runtime_error("newton_solve: damping failed (positivity lost or stagnation)");
    }
    if (rnorm > tol) throw std::runtime_error("newton_solve: no convergence after max iterations");
    return finish_record(p, std::move(u), p.length, p.delta, iter);
}

std::vector<double> bifurcation_points_constant_branch(int n, double delta, int j_max) {
    if (n < 3) throw std::invalid_argument("bifurcation_points_constant_branch: n >= 3");
    if (delta < 0.0 || delta >= 4.0 / (n - 2))
        throw std::invalid_argument("bifurcation_points_constant_branch: delta out of range");
    std::vector<double> out;
    const double root = std::sqrt((n - 2.0) * (1.0 - delta * (n - 2.0) / 4.0));
    for (int j = 1; j <= j_max; ++j) out.push_back(2.0 * kPi * j / root);
    return out;
}

int morse_index(const SteadyProblem& p, SolutionRecord& rec, int j_max) {
    Discretization d(p);
    const int nodes = d.nodes;
    const double hs = d.hs;
    const double kl = p.kappa() / (rec.length * rec.length);
    const double r0 = p.r0(), c = p.c(), pw = p.p() - rec.delta;

    Eigen::VectorXd mass(nodes), pot0(nodes);
    for (int i = 0; i < nodes; ++i) {
        mass[i] = (i == 0 || i == nodes - 1) ? 0.5 * hs : hs;
        pot0[i] = r0 - c * pw * std::pow(rec.u[i], pw - 1.0);
    }
    // Tail guard: sectors beyond j_max must be positive.
    const double lam_next = static_cast<double>(j_max + 1) * (j_max + 1 + p.n - 2);
    if (p.kappa() * lam_next + pot0.minCoeff() <= 0.0)
        throw std::invalid_argument("morse_index: j_max too small for the tail bound");

    const double eig_scale = kl * 4.0 * kPi * kPi + (p.p() - 1.0) * r0;
    const double degeneracy_tol = 1e-7 * eig_scale;

    long index = 0;
    double min_abs = 1e300;
    for (int j = 0; j <= j_max; ++j) {
        const double lam_j = static_cast<double>(j) * (j + p.n - 2);
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nodes, nodes);
        for (int i = 0; i < nodes - 1; ++i) {
            const double w = kl / hs;
            k(i, i) += w;
            k(i + 1, i + 1) += w;
            k(i, i + 1) -= w;
            k(i + 1, i) -= w;
        }
        for (int i = 0; i < nodes; ++i)
            k(i, i) += mass[i] * (p.kappa() * lam_j + pot0[i]);

        Eigen::VectorXd eigs;
        if (j == 0) {
            // Volume constraint: w with int u^{p-delta} w = 0. Transform to
            // y = M^{1/2} w and remove the constraint direction by a
            // Householder reflection.
            Eigen::VectorXd ms = mass.cwiseSqrt();
            Eigen::MatrixXd a = ms.cwiseInverse().asDiagonal() * k *
                                ms.cwiseInverse().asDiagonal();
            Eigen::VectorXd v(nodes);
            for (int i = 0; i < nodes; ++i) v[i] = ms[i] * std::pow(rec.u[i], pw);
            v.normalize();
            Eigen::VectorXd e1 = Eigen::VectorXd::Zero(nodes);
            e1[0] = 1.0;
            Eigen::VectorXd w = v - e1;
            Eigen::MatrixXd h = Eigen::MatrixXd::Identity(nodes, nodes);
            if (w.norm() > 1e-14) {
                w.normalize();
                h -= 2.0 * w * w.transpose();
            }
            Eigen::MatrixXd ha = h.transpose() * a * h;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                ha.bottomRightCorner(nodes - 1, nodes - 1));
            eigs = es.eigenvalues();
        } else {
            Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
                k, Eigen::MatrixXd(mass.asDiagonal()));
            eigs = es.eigenvalues();
        }
        const long mult = harmonic_multiplicity(p.n, j);
        for (int i = 0; i < eigs.size(); ++i) {
            if (eigs[i] < -degeneracy_tol) index += mult;
            min_abs = std::min(min_abs, std::abs(eigs[i]));
        }
        // Higher sectors only shift upward; once strictly positive, stop.
        if (eigs.minCoeff() > 0.0 && p.kappa() * lam_j + pot0.minCoeff() > 0.0 && j > 0) break;
    }
    rec.morse_index = static_cast<int>(index);
    rec.min_abs_eigenvalue = min_abs;
    rec.nondegenerate = min_abs > degeneracy_tol;
    return rec.morse_index;
}

Branch continue_branch(const SteadyProblem& p, const SolutionRecord& start, SweepKind kind,
                       double target, double ds, int max_steps) {
    p.validate();
    Discretization d(p);
    const int nodes = d.nodes;
    Branch branch;

    auto param_of = [&](const SolutionRecord& r) {
        return kind == SweepKind::kDelta ? r.delta : r.length;
    };
    auto make_problem = [&](double param) {
        SteadyProblem q = p;
        if (kind == SweepKind::kDelta)
            q.delta = param;
        else
            q.length = param;
        return q;
    };

    SolutionRecord cur = start;
    branch.records.push_back(cur);
    double param = param_of(cur);
    const double dir0 = target > param ? 1.0 : -1.0;

    // Initial tangent: pure parameter direction.
    Eigen::VectorXd tang = Eigen::VectorXd::Zero(nodes + 1);
    tang[nodes] = dir0;
    int prev_neg = negative_count_j0(p, cur.u, cur.length, cur.delta);
    double prev_param_dir = dir0;

    for (int step = 0; step < max_steps; ++step) {
        if ((dir0 > 0 && param >= target - 1e-12) || (dir0 < 0 && param <= target + 1e-12)) break;
        double step_ds = ds;
        bool accepted = false;
        Eigen::VectorXd xpred(nodes + 1);
        SolutionRecord next;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            for (int i = 0; i < nodes; ++i) xpred[i] = cur.u[i] + step_ds * tang[i];
            double ppred = param + step_ds * tang[nodes];
            // Clip so the corrector lands exactly on the target at the end.
            if ((dir0 > 0 && ppred > target) || (dir0 < 0 && ppred < target)) ppred = target;

            // Corrector: Newton on [T(u,param); tang.(X - Xpred)] with the
            // parameter frozen at the clipped prediction when it hit target.
            Eigen::VectorXd x(nodes + 1);
            for (int i = 0; i < nodes; ++i) x[i] = std::max(xpred[i], 1e-8);
            x[nodes] = ppred;
            bool ok = false;
            for (int it = 0; it < 40; ++it) {
                SteadyProblem q = make_problem(x[nodes]);
                std::vector<double> u(x.data(), x.data() + nodes);
                std::vector<double> res = d.residual(u, q.length, q.delta);
                // augmented residual
                double arc = 0.0;
                for (int i = 0; i < nodes; ++i) arc += tang[i] * (x[i] - cur.u[i]);
                arc += tang[nodes] * (x[nodes] - param);
                arc -= step_ds;
                const double rnorm = std::max(max_abs(res), std::abs(arc));
                if (rnorm < 1e-10) {
                    ok = true;
                    break;
                }
                // Bordered Jacobian.
                Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nodes + 1, nodes + 1);
                std::vector<double> lo, di, up;
                d.jacobian(u, q.length, q.delta, lo, di, up);
                for (int i = 0; i < nodes; ++i) {
                    jac(i, i) = di[i];
                    if (i > 0) jac(i, i - 1) = lo[i];
                    if (i + 1 < nodes) jac(i, i + 1) = up[i];
                }
                // dT/dparam
                if (kind == SweepKind::kDelta) {
                    const double c = p.c();
                    for (int i = 0; i < nodes; ++i)
                        jac(i, nodes) = -c * std::pow(u[i], p.p() - q.delta) * std::log(u[i]);
                } else {
                    std::vector<double> lap;
                    d.d2(u, lap);
                    for (int i = 0; i < nodes; ++i)
                        jac(i, nodes) = -2.0 * p.kappa() / (q.length * q.length * q.length) * lap[i];
                }
                for (int i = 0; i <= nodes; ++i) jac(nodes, i) = tang[i];
                Eigen::VectorXd rhs(nodes + 1);
                for (int i = 0; i < nodes; ++i) rhs[i] = -res[i];
                rhs[nodes] = -arc;
                Eigen::VectorXd dx = jac.partialPivLu().solve(rhs);
                x += dx;
                for (int i = 0; i < nodes; ++i)
                    if (!(x[i] > 0.0)) x[i] = 1e-10;
            }
            if (ok) {
                SteadyProblem q = make_problem(x[nodes]);
                std::vector<double> u(x.data(), x.data() + nodes);
                next = finish_record(q, std::move(u), q.length, q.delta, 0);
                accepted = true;
            } else {
                step_ds *= 0.5;
                if (step_ds < 1e-10) throw std::runtime_error("continue_branch: step underflow");
            }
        }
        if (!accepted) throw std::runtime_error("continue_branch: corrector failed");

        // New secant tangent.
        Eigen::VectorXd newtang(nodes + 1);
        for (int i = 0; i < nodes; ++i) newtang[i] = next.u[i] - cur.u[i];
        newtang[nodes] = param_of(next) - param;
        const double nrm = newtang.norm();
        if (nrm > 0) newtang /= nrm;

        // Turning point: the parameter component of the tangent flips sign.
        if (prev_param_dir * newtang[nodes] < 0.0)
            branch.turning_points.push_back(param_of(next));
        prev_param_dir = newtang[nodes] == 0.0 ? prev_param_dir : (newtang[nodes] > 0 ? 1.0 : -1.0);

        // Simple bifurcation: negative count of the j=0 second variation changes.
        SteadyProblem qn = make_problem(param_of(next));
        const int neg = negative_count_j0(qn, next.u, next.length, next.delta);
        if (neg != prev_neg) {
            // Locate the crossing by bisection between the two parameters.
            double lo_p = param, hi_p = param_of(next);
            std::vector<double> u_lo = cur.u;
            for (int b = 0; b < 40 && std::abs(hi_p - lo_p) > 1e-6 * std::max(1.0, std::abs(hi_p));
                 ++b) {
                const double mid = 0.5 * (lo_p + hi_p);
                SteadyProblem qm = make_problem(mid);
                SolutionRecord rm = newton_solve(qm, u_lo);
                const int nm = negative_count_j0(qm, rm.u, qm.length, qm.delta);
                if (nm == prev_neg) {
                    lo_p = mid;
                    u_lo = rm.u;
                } else {
                    hi_p = mid;
                }
            }
            branch.bifurcation_points.push_back(0.5 * (lo_p + hi_p));
        }
        prev_neg = neg;

        tang = newtang;
        cur = std::move(next);
        param = param_of(cur);
        branch.records.push_back(cur);
    }
    return branch;
}

SolutionRecord switch_branch(const SteadyProblem& p, const SolutionRecord& on_branch,
                             double amplitude) {
    Eigen::VectorXd vec;
    negative_count_j0(p, on_branch.u, on_branch.length, on_branch.delta, &vec);
    std::vector<double> seed(on_branch.u);
    const double scale = amplitude * on_branch.sup_u / std::max(1e-14, vec.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < seed.size(); ++i)
        seed[i] = std::max(1e-8, seed[i] + scale * vec[static_cast<int>(i)]);
    return newton_solve(p, seed);
}

MorseCheck morse_inequality_check(const std::vector<SolutionRecord>& records, int l_max) {
    MorseCheck out;
    out.caveat = "enumeration restricted to the rotationally symmetric even class; "
                 "counts are lower bounds on the full solution set";
    int max_index = 0;
    for (const SolutionRecord& r : records) {
        if (!r.nondegenerate)
            throw std::invalid_argument("morse_inequality_check: degenerate record present");
        if (r.morse_index < 0)
            throw std::invalid_argument("morse_inequality_check: record without Morse index");
        max_index = std::max(max_index, r.morse_index);
    }
    out.counts.assign(std::max(l_max, max_index) + 1, 0);
    for (const SolutionRecord& r : records) out.counts[r.morse_index] += 1;
    out.all_pass = true;
    for (int l = 0; l <= l_max; ++l) {
        long acc = 0;
        for (int k = 0; k <= l; ++k) {
            const long nk = k < static_cast<int>(out.counts.size()) ? out.counts[k] : 0;
            acc += ((l - k) % 2 == 0 ? 1 : -1) * nk;
        }
        MorseCheckRow row;
        row.l = l;
        row.alternating_sum = acc;
        row.pass = acc >= (l % 2 == 0 ? 1 : -1);
        out.all_pass = out.all_pass && row.pass;
        out.rows.push_back(row);
    }
    return out;
}

std::vector<SolutionRecord> enumerate_solutions(const SteadyProblem& p, int j_max) {
    p.validate();
    Discretization d(p);
    const int nodes = d.nodes;
    const double u0 = p.constant_solution();
    std::vector<std::vector<double>> seeds;
    seeds.push_back(std::vector<double>(nodes, u0));
    for (int mode = 1; mode <= 2; ++mode)
        for (double amp : {0.1, 0.25, 0.4, 0.6, 0.8})
            for (double sign : {1.0, -1.0}) {
                std::vector<double> s(nodes);
                for (int i = 0; i < nodes; ++i) {
                    const double sigma = i * d.hs;
                    s[i] = u0 * (1.0 + sign * amp * std::cos(2.0 * kPi * mode * sigma));
                }
                bool pos = true;
                for (double v : s) pos = pos && v > 0.0;
                if (pos) seeds.push_back(std::move(s));
            }

    std::vector<SolutionRecord> found;
    for (const auto& seed : seeds) {
        SolutionRecord rec;
        try {
            rec = newton_solve(p, seed);
        } catch (const std::exception&) {
            continue;
        }
        bool duplicate = false;
        for (const SolutionRecord& r : found) {
            double dist = 0.0;
            for (int i = 0; i < nodes; ++i) dist = std::max(dist, std::abs(r.u[i] - rec.u[i]));
            if (dist < 1e-6 * std::max(1.0, rec.sup_u)) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        morse_index(p, rec, j_max);
        found.push_back(std::move(rec));
    }
    std::sort(found.begin(), found.end(),
              [](const SolutionRecord& a, const SolutionRecord& b) { return a.sup_u < b.sup_u; });
    return found;
}

ShootingResult shooting_enumeration(const SteadyProblem& p, double a_lo, double a_hi,
                                    int scan_points) {
    p.validate();
    const double u0 = p.constant_solution();
    if (a_lo <= 0.0) a_lo = 0.15 * u0;
    if (a_hi <= 0.0) a_hi = 4.0 * u0;
    const double half = 0.5 * p.length;
    const int steps = 4000;
    const double h = half / steps;
    const double kap = p.kappa(), r0 = p.r0(), c = p.c(), pw = p.p() - p.delta;

    // u'' = (R0 u - c u^{p-delta}) / kappa, integrated by classical RK4.
    auto shoot = [&](double a) -> double {
        double u = a, v = 0.0;
        auto acc = [&](double uu) { return (r0 * uu - c * std::pow(uu, pw)) / kap; };
        for (int i = 0; i < steps; ++i) {
            if (!(u > 0.0) || u > 50.0 * u0) return std::nan("");
            const double k1u = v, k1v = acc(u);
            const double k2u = v + 0.5 * h * k1v, k2v = acc(u + 0.5 * h * k1u);
            const double k3u = v + 0.5 * h * k2v, k3v = acc(u + 0.5 * h * k2u);
            const double k4u = v + h * k3v, k4v = acc(u + h * k3u);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        return v;
    };

    ShootingResult out;
    double prev_a = a_lo, prev_f = shoot(a_lo);
    for (int i = 1; i <= scan_points; ++i) {
        const double a = a_lo + (a_hi - a_lo) * i / scan_points;
        const double f = shoot(a);
        if (std::isfinite(prev_f) && std::isfinite(f) &&
            ((prev_f < 0 && f > 0) || (prev_f > 0 && f < 0) || f == 0.0)) {
            double lo = prev_a, hi = a, flo = prev_f;
            for (int b = 0; b < 60; ++b) {
                const double mid = 0.5 * (lo + hi);
                const double fm = shoot(mid);
                if (!std::isfinite(fm)) break;
                if ((flo < 0) == (fm < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            out.initial_values.push_back(0.5 * (lo + hi));
        }
        prev_a = a;
        prev_f = f;
    }
    out.count = static_cast<int>(out.initial_values.size());
    return out;
}

Field mirror_to_product(const SteadyProblem& p, const std::vector<double>& u_half) {
    const int n_half = static_cast<int>(u_half.size()); // grid + 1
    const int full = 2 * (n_half - 1);
    ManifoldPtr m = ModelManifold::product_sl(p.n, p.length, full);
    std::vector<double> v(full);
    for (int k = 0; k < full; ++k) v[k] = u_half[k < n_half ? k : full - k];
    return Field(m, std::move(v));
}

void write_branch_csv(const Branch& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_branch_csv: cannot open " + path);
    out << "arc_index,delta,L,energy,morse_index,nondegenerate,sup_u,residual\n";
    out.precision(17);
    for (std::size_t i = 0; i < b.records.size(); ++i) {
        const SolutionRecord& r = b.records[i];
        out << i << ',' << r.delta << ',' << r.length << ',' << r.energy << ',' << r.morse_index
            << ',' << (r.nondegenerate ? 1 : 0) << ',' << r.sup_u << ',' << r.residual << '\n';
    }
}

} // namespace conformal
