#include "conformal/reduced_energy.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>

#include "conformal/moments.hpp"
#include "conformal/quadrature.hpp"
#include "conformal/special.hpp"

namespace conformal {

namespace {

// ---------------------------------------------------------------------------
// Laplacian calculus on polynomials of the form sum_m s^m B, s = |x|^2, where
// B4 is a homogeneous quartic with x.grad B4 = 4 B4 and Delta B4 = alpha B2,
// B2 a homogeneous quadratic with Delta B2 = beta. Closed under Delta:
//   Delta(s^m B4) = 2m(n+2m+6) s^{m-1} B4 + alpha s^m B2
//   Delta(s^m B2) = 2m(n+2m+2) s^{m-1} B2 + beta  s^m
//   Delta(s^m)    = 2m(n+2m-2) s^{m-1}
// ---------------------------------------------------------------------------
struct PolyChain {
    static constexpr int kM = 10;
    int n = 0;
    double alpha = 0.0, beta = 0.0;
    double c4[kM] = {0}, c2[kM] = {0}, c0[kM] = {0};

    PolyChain laplacian() const {
        PolyChain out;
        out.n = n;
        out.alpha = alpha;
        out.beta = beta;
        for (int m = 0; m < kM; ++m) {
            if (c4[m] != 0.0) {
                if (m > 0) out.c4[m - 1] += c4[m] * 2.0 * m * (n + 2 * m + 6);
                out.c2[m] += c4[m] * alpha;
            }
            if (c2[m] != 0.0) {
                if (m > 0) out.c2[m - 1] += c2[m] * 2.0 * m * (n + 2 * m + 2);
                out.c0[m] += c2[m] * beta;
            }
            if (c0[m] != 0.0 && m > 0) out.c0[m - 1] += c0[m] * 2.0 * m * (n + 2 * m - 2);
        }
        return out;
    }

    bool empty() const {
        for (int m = 0; m < kM; ++m)
            if (c4[m] != 0.0 || c2[m] != 0.0 || c0[m] != 0.0) return false;
        return true;
    }

    double eval(double s, double b4, double b2) const {
        double acc = 0.0, sm = 1.0;
        for (int m = 0; m < kM; ++m) {
            acc += sm * (c4[m] * b4 + c2[m] * b2 + c0[m]);
            sm *= s;
        }
        return acc;
    }
};

// Radial integrals, all evaluated in log space to survive large n.
//   R2_k = int rho^{n-1+2k} u_eps(rho)^2 drho
//   R1_k = int U'(rho)^2 rho^{2k-2} rho^{n-1} drho
QuadResult radial_u2(int n, double eps, int k) {
    const double le = std::log(eps);
    return integrate_half_line([n, eps, k, le](double rho) {
        if (rho <= 0.0) return 0.0;
        return std::exp((n - 1 + 2 * k) * std::log(rho) + (n - 2) * le +
                        (2 - n) * std::log(eps * eps + rho * rho));
    });
}

QuadResult radial_du2(int n, double eps, int k) {
    const double le = std::log(eps);
    QuadResult q = integrate_half_line([n, eps, k, le](double rho) {
        if (rho <= 0.0) return 0.0;
        return std::exp((n - 1 + 2 * k) * std::log(rho) + (n - 2) * le -
                        n * std::log(eps * eps + rho * rho));
    });
    q.value *= (n - 2.0) * (n - 2.0);
    q.error_estimate *= (n - 2.0) * (n - 2.0);
    return q;
}

// The six Wick pairings of the sixth moment in term1 at xi = 0; each is a
// full contraction of W x W and their sum cancels through the antisymmetries.
double term1_pairing_sum(const AlgebraicWeyl& w) {
    const int n = w.dim();
    double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0, c6 = 0;
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p)
            for (int l = 0; l < n; ++l)
                for (int q = 0; q < n; ++q) {
                    const double v = w(i, p, l, q);
                    if (v == 0.0) continue;
                    c1 += v * v;
                    c2 += v * w(i, q, l, p);
                    c3 += v * w(p, i, l, q);
                    c4 += v * w(q, i, l, p);
                    c5 += v * w(p, q, l, i);
                    c6 += v * w(q, p, l, i);
                }
    return c1 + c2 + c3 + c4 + c5 + c6;
}

} // namespace

ReducedEnergyContext::ReducedEnergyContext(int n, std::shared_ptr<const AlgebraicWeyl> w,
                                           double radial_truncation, int radial_grid_size,
                                           int harmonic_degree_max)
    : n_(n), w_(std::move(w)), radial_truncation_(radial_truncation),
      radial_grid_size_(radial_grid_size), harmonic_degree_max_(harmonic_degree_max) {
    if (n_ < 11)
        throw std::invalid_argument(
            "ReducedEnergyContext: n >= 11 required (closed form has an (n-10) denominator)");
    if (!w_ || w_->dim() != n_)
        throw std::invalid_argument("ReducedEnergyContext: tensor dimension mismatch");
    if (harmonic_degree_max_ < 6)
        throw std::invalid_argument("ReducedEnergyContext: harmonicDegreeMax >= 6 required");
    if (radial_grid_size_ < 64)
        throw std::invalid_argument("ReducedEnergyContext: radial grid too coarse");

    // M_qb via rank-one accumulation over (i, l, k).
    const AlgebraicWeyl& ww = *w_;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::VectorXd row1(n_), s2(n_), s3(n_);
    for (int i = 0; i < n_; ++i)
        for (int l = 0; l < n_; ++l)
            for (int k = 0; k < n_; ++k) {
                for (int q = 0; q < n_; ++q) {
                    row1[q] = ww(i, l, k, q);
                    s2[q] = ww(i, q, k, l);
                }
                s3 = s2; // same slice: W_{i b k l} over b equals W_{i q k l} over q
                a.noalias() += row1 * row1.transpose();
                b.noalias() += row1 * s2.transpose();
                c.noalias() += s3 * s3.transpose();
            }
    m_ = a + b + b.transpose() + c;
    tr_m_ = m_.trace();
}

double ReducedEnergyContext::radial_truncation(double eps) const {
    if (radial_truncation_ > 0.0) return radial_truncation_;
    return 100.0 * std::max(eps, 1.0);
}

double F0_closed_form(int n, double coupling, double eps) {
    if (n == 10) throw std::invalid_argument("F0_closed_form: n = 10 singular denominator");
    if (n < 11) throw std::invalid_argument("F0_closed_form: n >= 11 required");
    if (eps <= 0.0) throw std::invalid_argument("F0_closed_form: eps > 0 required");
    const double i_n = 0.5 * beta_fn(0.5 * (n + 4), 0.5 * (n - 8));
    const double pref = (n - 2.0) * (n + 4.0) /
                        (16.0 * n * (n - 1.0) * (n + 2.0)) * sphere_area(n) * coupling;
    const double e2 = eps * eps;
    const double bracket = (n - 8.0) / (n + 4.0) * e2 * e2 - 2.0 * e2 * e2 * e2 +
                           (n + 8.0) / (n - 10.0) * e2 * e2 * e2 * e2;
    return -pref * bracket * i_n;
}

double F0_closed_form(const ReducedEnergyContext& ctx, double eps) {
    return F0_closed_form(ctx.dim(), weyl_coupling_norm(ctx.weyl()), eps);
}

namespace {

// Chain for G(x) = sum (d_l Hbar_ik)^2 = (12 s - 8) Q + (1 - s)^2 P with
// Q = sum H_ik^2 (Delta Q = 2P), P = x M x (Delta P = 2 tr M).
PolyChain make_g_chain(int n, double tr_m) {
    PolyChain g;
    g.n = n;
    g.alpha = 2.0;
    g.beta = 2.0 * tr_m;
    g.c4[0] = -8.0;
    g.c4[1] = 12.0;
    g.c2[0] = 1.0;
    g.c2[1] = -2.0;
    g.c2[2] = 1.0;
    return g;
}

// Mean-value expansion: avg over the unit sphere of p(xi + rho yhat)
//   = sum_k rho^{2k} (Delta^k p)(xi) / (2^k k! n(n+2)...(n+2k-2)).
std::vector<double> mean_value_coeffs(const PolyChain& chain, int n, double s, double b4,
                                      double b2) {
    std::vector<double> out;
    PolyChain cur = chain;
    double denom = 1.0;
    for (int k = 0; k < PolyChain::kM; ++k) {
        if (cur.empty()) break;
        out.push_back(cur.eval(s, b4, b2) / denom);
        cur = cur.laplacian();
        denom *= 2.0 * (k + 1) * (n + 2 * k);
    }
    return out;
}

} // namespace

std::vector<CriticalEpsilon> critical_epsilon(int n) {
    if (n < 11) throw std::invalid_argument("critical_epsilon: n >= 11 required");
    const double a = (n - 8.0) / (n + 4.0);
    const double b = (n + 8.0) / (n - 10.0);
    const double disc = 9.0 - 8.0 * a * b;
    std::vector<CriticalEpsilon> out;
    if (disc < 0.0) return out;
    const double root = std::sqrt(disc);
    for (double s : {(3.0 - root) / (4.0 * b), (3.0 + root) / (4.0 * b)}) {
        if (!(s > 0.0)) continue;
        CriticalEpsilon ce;
        ce.eps = std::sqrt(s);
        // F(0,.) = -C g with C > 0 and g = a e^4 - 2 e^6 + b e^8.
        const double gpp = 12.0 * a * s - 60.0 * s * s + 56.0 * b * s * s * s;
        ce.f_second_derivative_sign = gpp > 0.0 ? -1 : (gpp < 0.0 ? 1 : 0);
        out.push_back(ce);
        if (disc == 0.0) break;
    }
    return out;
}

std::optional<int> critical_dimension_scan(int lo, int hi) {
    for (int n = std::max(lo, 11); n <= hi; ++n) {
        if (n == 10) continue;
        if (!critical_epsilon(n).empty()) return n;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// z-equation machinery
// ---------------------------------------------------------------------------
namespace {

struct SectorComponent {
    int j = 0;
    int family = 0; // 0: second-derivative contraction prefactor, 1: trace prefactor
    std::vector<std::pair<int, double>> poly; // radial polynomial sum c rho^p
    Eigen::VectorXd vec;   // j == 1
    Eigen::MatrixXd mat;   // j == 2, trace-free
    std::vector<double> s3; // j == 3, flat symmetric 3-tensor of the cubic
    Eigen::VectorXd t3, ell3;
    std::vector<double> z;  // solved radial profile
    double multiplier = 0.0;
    double constraint_residual = 0.0;
    double source_scale = 0.0;
    std::string label;
};

double poly_eval(const std::vector<std::pair<int, double>>& poly, double rho) {
    double acc = 0.0;
    for (const auto& [p, c] : poly) acc += c * std::pow(rho, p);
    return acc;
}

// Angular Gram integral over S^{n-1} between two components of equal degree.
double angular_gram(const SectorComponent& a, const SectorComponent& b, int n) {
    if (a.j != b.j) return 0.0;
    const double area = sphere_area(n);
    switch (a.j) {
        case 0: return area;
        case 1: return area * a.vec.dot(b.vec) / n;
        case 2: return area * 2.0 * (a.mat.array() * b.mat.array()).sum() /
                       (static_cast<double>(n) * (n + 2));
        case 3: {
            double ss = 0.0;
            for (std::size_t i = 0; i < a.s3.size(); ++i) ss += a.s3[i] * b.s3[i];
            const double d6 = sphere_moment_denominator(n, 3);
            const double d4 = sphere_moment_denominator(n, 2);
            double g = (6.0 * ss + 9.0 * a.t3.dot(b.t3)) / d6;
            g -= 3.0 * (a.t3.dot(b.ell3) + b.t3.dot(a.ell3)) / d4;
            g += a.ell3.dot(b.ell3) / n;
            return area * g;
        }
        default: throw std::logic_error("angular_gram: unsupported degree");
    }
}

// Sector components of (A - 2 xi.y - |y|^2)(q0 + q1.y + y^T Q2 y) with
// A = 1 - |xi|^2, decomposed into harmonic pieces of degree <= 3.
void append_family(std::vector<SectorComponent>& out, int family, const Eigen::VectorXd& xi,
                   double q0, const Eigen::VectorXd& q1, const Eigen::MatrixXd& q2,
                   const std::string& tag) {
    const int n = static_cast<int>(xi.size());
    const double a = 1.0 - xi.squaredNorm();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd d = a * q2 - (xi * q1.transpose() + q1 * xi.transpose()) - q0 * eye;

    { // degree 0 sector: radial polynomial
        SectorComponent c;
        c.j = 0;
        c.family = family;
        c.poly = {{0, a * q0}, {2, d.trace() / n}, {4, -q2.trace() / n}};
        c.label = tag + ":j0";
        out.push_back(std::move(c));
    }
    { // degree 1, rho^1
        SectorComponent c;
        c.j = 1;
        c.family = family;
        c.vec = a * q1 - 2.0 * q0 * xi;
        c.poly = {{1, 1.0}};
        c.label = tag + ":j1a";
        out.push_back(std::move(c));
    }
    const Eigen::VectorXd ell =
        (-8.0 * q2 * xi - 4.0 * q2.trace() * xi - (2.0 * n + 4.0) * q1) / (2.0 * n + 4.0);
    { // degree 1, rho^3 (trace of the cubic piece)
        SectorComponent c;
        c.j = 1;
        c.family = family;
        c.vec = ell;
        c.poly = {{3, 1.0}};
        c.label = tag + ":j1b";
        out.push_back(std::move(c));
    }
    { // degree 2, rho^2
        SectorComponent c;
        c.j = 2;
        c.family = family;
        c.mat = d - (d.trace() / n) * eye;
        c.poly = {{2, 1.0}};
        c.label = tag + ":j2a";
        out.push_back(std::move(c));
    }
    { // degree 2, rho^4
        SectorComponent c;
        c.j = 2;
        c.family = family;
        c.mat = -(q2 - (q2.trace() / n) * eye);
        c.poly = {{4, 1.0}};
        c.label = tag + ":j2b";
        out.push_back(std::move(c));
    }
    { // degree 3 harmonic of c(y) = -2(xi.y)(y Q2 y) - (q1.y)|y|^2, rho^3
        SectorComponent c;
        c.j = 3;
        c.family = family;
        c.s3.assign(static_cast<std::size_t>(n) * n * n, 0.0);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                for (int r = 0; r < n; ++r) {
                    double v = -(2.0 / 3.0) * (xi[p] * q2(q, r) + xi[q] * q2(p, r) +
                                               xi[r] * q2(p, q));
                    v -= (1.0 / 3.0) * (q1[p] * (q == r) + q1[q] * (p == r) + q1[r] * (p == q));
                    c.s3[(static_cast<std::size_t>(p) * n + q) * n + r] = v;
                }
        c.t3 = Eigen::VectorXd::Zero(n);
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) acc += c.s3[(static_cast<std::size_t>(p) * n + p) * n + r];
            c.t3[r] = acc;
        }
        c.ell3 = 3.0 * c.t3 / (n + 2.0);
        c.poly = {{3, 1.0}};
        c.label = tag + ":j3";
        out.push_back(std::move(c));
    }
}

struct RadialGrid {
    std::vector<double> rho;
    std::vector<double> weight; // trapezoid x rho^{n-1}
    double h = 0.0;
};

RadialGrid make_radial_grid(int n, double r_max, int grid_size) {
    RadialGrid g;
    g.h = r_max / grid_size;
    g.rho.resize(grid_size + 1);
    g.weight.resize(grid_size + 1);
    for (int i = 0; i <= grid_size; ++i) {
        g.rho[i] = i * g.h;
        const double scale = (i == 0 || i == grid_size) ? 0.5 : 1.0;
        g.weight[i] = scale * g.h * std::pow(g.rho[i], n - 1);
    }
    return g;
}

// Solve z'' + ((n-1)/rho) z' - (j(j+n-2)/rho^2) z + V z = f with regularity
// at 0 and the decay Robin condition at r_max; sectors j <= 1 get a bordered
// constraint row against the E_{(xi,eps)} density.
void solve_sector(SectorComponent& comp, const RadialGrid& grid, int n, double eps,
                  const std::vector<double>& potential,
                  const std::vector<double>& constraint_density) {
    const int j = comp.j;
    const int nodes = static_cast<int>(grid.rho.size());
    const bool bordered = j <= 1 && !constraint_density.empty();
    const int dim = nodes + (bordered ? 1 : 0);
    const double h = grid.h;
    const double lam = static_cast<double>(j) * (j + n - 2);

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    comp.source_scale = 0.0;

    auto source_at = [&](int i) {
        const double rho = grid.rho[i];
        const double w = eps * eps + rho * rho;
        const double m = 0.5 * (n - 2);
        const double pref =
            comp.family == 0
                ? 4.0 * m * (m + 1.0) * std::pow(eps, m) * std::pow(w, -m - 2.0)
                : -2.0 * m * std::pow(eps, m) * std::pow(w, -m - 1.0);
        return pref * poly_eval(comp.poly, rho);
    };

    // rho = 0 row
    if (j == 0) {
        trip.emplace_back(0, 0, -2.0 * n / (h * h) + potential[0]);
        trip.emplace_back(0, 1, 2.0 * n / (h * h));
        rhs[0] = source_at(0);
    } else {
        trip.emplace_back(0, 0, 1.0);
        rhs[0] = 0.0;
    }
    for (int i = 1; i < nodes - 1; ++i) {
        const double rho = grid.rho[i];
        const double lo = 1.0 / (h * h) - (n - 1) / (2.0 * h * rho);
        const double up = 1.0 / (h * h) + (n - 1) / (2.0 * h * rho);
        const double di = -2.0 / (h * h) - lam / (rho * rho) + potential[i];
        trip.emplace_back(i, i - 1, lo);
        trip.emplace_back(i, i, di);
        trip.emplace_back(i, i + 1, up);
        rhs[i] = source_at(i);
    }
    { // Robin z' + ((n-2+j)/R) z = 0 via ghost elimination
        const int i = nodes - 1;
        const double rho = grid.rho[i];
        const double lo = 1.0 / (h * h) - (n - 1) / (2.0 * h * rho);
        const double up = 1.0 / (h * h) + (n - 1) / (2.0 * h * rho);
        const double di = -2.0 / (h * h) - lam / (rho * rho) + potential[i];
        const double robin = (n - 2.0 + j) / rho;
        trip.emplace_back(i, i - 1, lo + up);
        trip.emplace_back(i, i, di - up * 2.0 * h * robin);
        rhs[i] = source_at(i);
    }
    for (int i = 0; i < nodes; ++i) comp.source_scale = std::max(comp.source_scale, std::abs(rhs[i]));

    if (bordered) {
        for (int i = 0; i < nodes; ++i) {
            const double c = constraint_density[i];
            const double w = grid.weight[i];
            if (!(j >= 1 && i == 0)) trip.emplace_back(i, nodes, c); // multiplier column
            trip.emplace_back(nodes, i, w * c);
        }
    }

    Eigen::SparseMatrix<double> mat(dim, dim);
    mat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("z_solve: singular bordered system in sector " + comp.label);
    Eigen::VectorXd sol = lu.solve(rhs);

    comp.z.assign(nodes, 0.0);
    for (int i = 0; i < nodes; ++i) comp.z[i] = sol[i];
    comp.multiplier = bordered ? sol[nodes] : 0.0;

    if (bordered) {
        double dot = 0.0, nc = 0.0, nz = 0.0;
        for (int i = 0; i < nodes; ++i) {
            dot += grid.weight[i] * constraint_density[i] * comp.z[i];
            nc += grid.weight[i] * constraint_density[i] * constraint_density[i];
            nz += grid.weight[i] * comp.z[i] * comp.z[i];
        }
        const double scale = std::sqrt(std::max(nc * nz, 1e-300));
        comp.constraint_residual = std::abs(dot) / std::max(scale, 1e-300);
    }
}

} // namespace

ZSolution z_solve(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi, double eps) {
    const int n = ctx.dim();
    if (xi.size() != n) throw std::invalid_argument("z_solve: xi dimension mismatch");
    if (eps <= 0.0) throw std::invalid_argument("z_solve: eps > 0 required");
    const AlgebraicWeyl& w = ctx.weyl();

    // Source reduction: sum_ik Hbar_ik(x) d_i d_k u =
    //   bhat(rho) (1-|x|^2) x^T Cbar x + chat(rho) (1-|x|^2) x^T Tbar x,
    // with C_pq = sum_ik xi_i xi_k W_ipkq (the yy-contraction collapses to
    // xi^T H(x) xi because H(x)x = 0) and Tr_pq = sum_i W_ipiq the trace
    // residual of the projected tensor.
    Eigen::MatrixXd cmat = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                if (xi[i] == 0.0) continue;
                double inner = 0.0;
                for (int k = 0; k < n; ++k) inner += w(i, p, k, q) * xi[k];
                acc += xi[i] * inner;
            }
            cmat(p, q) = acc;
        }
    Eigen::MatrixXd cbar = 0.5 * (cmat + cmat.transpose());
    Eigen::MatrixXd tr = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += w(i, p, i, q);
            tr(p, q) = acc;
        }
    Eigen::MatrixXd tbar = 0.5 * (tr + tr.transpose());

    std::vector<SectorComponent> comps;
    append_family(comps, 0, xi, xi.dot(cbar * xi), 2.0 * cbar * xi, cbar, "dd");
    append_family(comps, 1, xi, xi.dot(tbar * xi), 2.0 * tbar * xi, tbar, "tr");

    const double r_max = ctx.radial_truncation(eps);
    RadialGrid grid = make_radial_grid(n, r_max, ctx.radial_grid_size());
    const int nodes = static_cast<int>(grid.rho.size());

    std::vector<double> potential(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double q = eps / (eps * eps + grid.rho[i] * grid.rho[i]);
        potential[i] = static_cast<double>(n) * (n + 2) * q * q;
    }
    const double pexp = (n + 2.0) / (n - 2.0);
    std::vector<double> cons0(nodes), cons1(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double rho = grid.rho[i];
        const double wq = eps * eps + rho * rho;
        const double u = std::pow(eps / wq, 0.5 * (n - 2));
        const double up = std::pow(u, pexp);
        cons0[i] = (eps * eps - rho * rho) / wq * up;
        cons1[i] = 2.0 * eps * rho / wq * up;
    }

    ZSolution out;
    out.rho = grid.rho;
    static const std::vector<double> kNoConstraint;
    for (SectorComponent& c : comps) {
        solve_sector(c, grid, n, eps, potential,
                     c.j <= 1 ? (c.j == 0 ? cons0 : cons1) : kNoConstraint);
        out.max_constraint_residual = std::max(out.max_constraint_residual, c.constraint_residual);
    }

    // term3 = int f z over R^n through the sector Gram matrix.
    double term3 = 0.0;
    const double m = 0.5 * (n - 2);
    for (const SectorComponent& a : comps)
        for (const SectorComponent& b : comps) {
            if (a.j != b.j) continue;
            const double gram = angular_gram(a, b, n);
            if (gram == 0.0) continue;
            double radial = 0.0;
            for (int i = 0; i < nodes; ++i) {
                const double rho = grid.rho[i];
                const double wq = eps * eps + rho * rho;
                const double pref =
                    a.family == 0
                        ? 4.0 * m * (m + 1.0) * std::pow(eps, m) * std::pow(wq, -m - 2.0)
                        : -2.0 * m * std::pow(eps, m) * std::pow(wq, -m - 1.0);
                radial += grid.weight[i] * pref * poly_eval(a.poly, rho) * b.z[i];
            }
            term3 += radial * gram;
        }
    out.term3 = term3;

    for (SectorComponent& c : comps) {
        ZSectorSolution s;
        s.degree = c.j;
        s.label = c.label;
        s.radial = std::move(c.z);
        s.multiplier = c.multiplier;
        s.constraint_residual = c.constraint_residual;
        s.source_scale = c.source_scale;
        out.sectors.push_back(std::move(s));
    }
    return out;
}

F0Terms F0_quadrature(const ReducedEnergyContext& ctx, double eps) {
    const int n = ctx.dim();
    if (eps <= 0.0) throw std::invalid_argument("F0_quadrature: eps > 0 required");
    const double area = sphere_area(n);
    F0Terms out;

    // term2 via the moment chain at xi = 0.
    PolyChain g = make_g_chain(n, ctx.coupling());
    std::vector<double> coeffs = mean_value_coeffs(g, n, 0.0, 0.0, 0.0);
    double t2 = 0.0, err = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (coeffs[k] == 0.0) continue;
        QuadResult q = radial_u2(n, eps, static_cast<int>(k));
        if (!q.converged) out.quadrature_converged = false;
        err += std::abs(coeffs[k]) * q.error_estimate;
        t2 += coeffs[k] * q.value;
    }
    out.term2 = -(n - 2.0) / (16.0 * (n - 1.0)) * area * t2;
    out.quadrature_error = (n - 2.0) / (16.0 * (n - 1.0)) * area * err;

    // term1 via the sixth-moment Wick pairings (cancels through the W
    // antisymmetries; assembled numerically, not assumed).
    const double pair_sum = term1_pairing_sum(ctx.weyl());
    const double avg_a = pair_sum / sphere_moment_denominator(n, 3);
    const double le = std::log(eps);
    QuadResult t1rad = integrate_half_line([n, eps, le](double rho) {
        if (rho <= 0.0) return 0.0;
        const double one_m = 1.0 - rho * rho;
        return (n - 2.0) * (n - 2.0) * one_m * one_m *
               std::exp((n + 5) * std::log(rho) + (n - 2) * le -
                        n * std::log(eps * eps + rho * rho));
    });
    if (!t1rad.converged) out.quadrature_converged = false;
    out.term1 = 0.5 * area * avg_a * t1rad.value;

    // term3 via the constrained z-solve at xi = 0.
    ZSolution z = z_solve(ctx, Eigen::VectorXd::Zero(n), eps);
    out.term3 = z.term3;

    out.total = out.term1 + out.term2 + out.term3;
    return out;
}

FGeneralTerms F_general_terms(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi,
                              double eps) {
    const int n = ctx.dim();
    if (xi.size() != n) throw std::invalid_argument("F_general: xi dimension mismatch");
    if (eps <= 0.0) throw std::invalid_argument("F_general: eps > 0 required");
    const AlgebraicWeyl& w = ctx.weyl();
    const double area = sphere_area(n);
    const double s = xi.squaredNorm();
    FGeneralTerms out;

    // term2: G-chain evaluated at xi.
    Eigen::MatrixXd hxi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p) {
                if (xi[p] == 0.0) continue;
                double inner = 0.0;
                for (int q = 0; q < n; ++q) inner += w(i, p, k, q) * xi[q];
                acc += xi[p] * inner;
            }
            hxi(i, k) = acc;
        }
    const double q_val = hxi.squaredNorm();
    const double p_val = xi.dot(ctx.gradient_matrix() * xi);
    PolyChain g = make_g_chain(n, ctx.coupling());
    std::vector<double> c2 = mean_value_coeffs(g, n, s, q_val, p_val);
    double t2 = 0.0;
    for (std::size_t k = 0; k < c2.size(); ++k) {
        if (c2[k] == 0.0) continue;
        t2 += c2[k] * radial_u2(n, eps, static_cast<int>(k)).value;
    }
    out.term2 = -(n - 2.0) / (16.0 * (n - 1.0)) * area * t2;

    // term1: Hbar(x)(x - xi) = -(1-|x|^2) H(x) xi, so the integrand reduces
    // to U'(rho)^2 rho^{-2} (1-s)^2 |H(x) xi|^2; chain with N = |H(x) xi|^2.
    Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(n, n);
    double n_val = 0.0;
    {
        Eigen::MatrixXd abar(n, n);
        for (int i = 0; i < n; ++i) {
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q) {
                    double acc = 0.0;
                    for (int k = 0; k < n; ++k) acc += w(i, p, k, q) * xi[k];
                    abar(p, q) = acc;
                }
            abar = 0.5 * (abar + abar.transpose()).eval();
            const double v = xi.dot(abar * xi);
            n_val += v * v;
            kmat.noalias() += abar * abar;
        }
    }
    PolyChain phi;
    phi.n = n;
    phi.alpha = 8.0;
    phi.beta = 2.0 * kmat.trace();
    phi.c4[0] = 1.0;
    phi.c4[1] = -2.0;
    phi.c4[2] = 1.0;
    std::vector<double> c1 = mean_value_coeffs(phi, n, s, n_val, xi.dot(kmat * xi));
    double t1 = 0.0;
    for (std::size_t k = 0; k < c1.size(); ++k) {
        if (c1[k] == 0.0) continue;
        t1 += c1[k] * radial_du2(n, eps, static_cast<int>(k)).value;
    }
    out.term1 = 0.5 * area * t1;

    out.term3 = z_solve(ctx, xi, eps).term3;
    out.total = out.term1 + out.term2 + out.term3;
    return out;
}

double F_general(const ReducedEnergyContext& ctx, const Eigen::VectorXd& xi, double eps) {
    return F_general_terms(ctx, xi, eps).total;
}

} // namespace conformal
