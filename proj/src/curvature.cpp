#include "conformal/curvature.hpp"

#include <cmath>
#include <stdexcept>

namespace conformal {

namespace {

inline std::size_t id4(int n, int i, int j, int k, int l) {
    return ((static_cast<std::size_t>(i) * n + j) * n + k) * n + l;
}
inline std::size_t id5(int n, int m, int i, int j, int k, int l) {
    return (((static_cast<std::size_t>(m) * n + i) * n + j) * n + k) * n + l;
}
inline std::size_t id6(int n, int a, int b, int i, int j, int k, int l) {
    return ((((static_cast<std::size_t>(a) * n + b) * n + i) * n + j) * n + k) * n + l;
}

struct MetricJet {
    Eigen::MatrixXd g;                              // g_ij
    Eigen::MatrixXd gi;                             // g^ij
    std::vector<Eigen::MatrixXd> dg;                // dg[a](i,j) = d_a g_ij
    std::vector<std::vector<Eigen::MatrixXd>> ddg;  // ddg[a][b] = d_a d_b g_ij
    std::vector<Eigen::MatrixXd> gamma;             // gamma[c](a,b) = Gamma^c_ab
};

MetricJet metric_jet(const MetricField& g, const Eigen::VectorXd& x, double h) {
    const int n = static_cast<int>(x.size());
    MetricJet jet;
    jet.g = g(x);
    Eigen::LLT<Eigen::MatrixXd> llt(jet.g);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("curvature_at: metric not positive definite");
    jet.gi = jet.g.inverse();

    std::vector<Eigen::MatrixXd> gp(n), gm(n);
    Eigen::VectorXd y = x;
    for (int a = 0; a < n; ++a) {
        y[a] = x[a] + h;
        gp[a] = g(y);
        y[a] = x[a] - h;
        gm[a] = g(y);
        y[a] = x[a];
    }
    jet.dg.resize(n);
    for (int a = 0; a < n; ++a) jet.dg[a] = (gp[a] - gm[a]) / (2.0 * h);

    jet.ddg.assign(n, std::vector<Eigen::MatrixXd>(n));
    for (int a = 0; a < n; ++a) jet.ddg[a][a] = (gp[a] - 2.0 * jet.g + gm[a]) / (h * h);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            Eigen::VectorXd z = x;
            z[a] += h;
            z[b] += h;
            Eigen::MatrixXd gpp = g(z);
            z[b] -= 2.0 * h;
            Eigen::MatrixXd gpm = g(z);
            z[a] -= 2.0 * h;
            Eigen::MatrixXd gmm = g(z);
            z[b] += 2.0 * h;
            Eigen::MatrixXd gmp = g(z);
            jet.ddg[a][b] = (gpp - gpm - gmp + gmm) / (4.0 * h * h);
            jet.ddg[b][a] = jet.ddg[a][b];
        }

    jet.gamma.resize(n);
    for (int c = 0; c < n; ++c) {
        jet.gamma[c] = Eigen::MatrixXd::Zero(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double acc = 0.0;
                for (int d = 0; d < n; ++d)
                    acc += jet.gi(c, d) * (jet.dg[a](d, b) + jet.dg[b](d, a) - jet.dg[d](a, b));
                jet.gamma[c](a, b) = 0.5 * acc;
            }
    }
    return jet;
}

// All-covariant Riemann tensor,
//   R_ijkl = (g_il,jk + g_jk,il - g_ik,jl - g_jl,ik)/2
//            + g_ef (Gamma^e_jk Gamma^f_il - Gamma^e_jl Gamma^f_ik),
// normalized so the unit round sphere has R_ijkl = g_ik g_jl - g_il g_jk.
std::vector<double> riemann_from_jet(const MetricJet& jet) {
    const int n = static_cast<int>(jet.g.rows());
    std::vector<double> r(static_cast<std::size_t>(n) * n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double v = 0.5 * (jet.ddg[j][k](i, l) + jet.ddg[i][l](j, k) -
                                      jet.ddg[j][l](i, k) - jet.ddg[i][k](j, l));
                    double quad = 0.0;
                    for (int e = 0; e < n; ++e)
                        for (int f = 0; f < n; ++f)
                            quad += jet.g(e, f) * (jet.gamma[e](j, k) * jet.gamma[f](i, l) -
                                                   jet.gamma[e](j, l) * jet.gamma[f](i, k));
                    r[id4(n, i, j, k, l)] = v + quad;
                }
    return r;
}

// Weyl = Riemann minus Ricci/scalar parts (Kulkarni-Nomizu against g).
std::vector<double> weyl_from_riemann(const std::vector<double>& riem, const MetricJet& jet,
                                      double* scalar_out) {
    const int n = static_cast<int>(jet.g.rows());
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) acc += jet.gi(i, k) * riem[id4(n, i, j, k, l)];
            ric(j, l) = acc;
        }
    const double scal = (jet.gi.array() * ric.array()).sum();
    if (scalar_out) *scalar_out = scal;
    Eigen::MatrixXd e = ric - (scal / n) * jet.g;

    std::vector<double> w(riem);
    const double c1 = 1.0 / (n - 2);
    const double c2 = scal / (2.0 * n * (n - 1));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double eg = e(i, k) * jet.g(j, l) + e(j, l) * jet.g(i, k) -
                                      e(i, l) * jet.g(j, k) - e(j, k) * jet.g(i, l);
                    const double gg = 2.0 * (jet.g(i, k) * jet.g(j, l) - jet.g(i, l) * jet.g(j, k));
                    w[id4(n, i, j, k, l)] -= c1 * eg + c2 * gg;
                }
    return w;
}

std::vector<double> weyl_at_point(const MetricField& g, const Eigen::VectorXd& x, double h,
                                  double* scalar_out = nullptr) {
    MetricJet jet = metric_jet(g, x, h);
    return weyl_from_riemann(riemann_from_jet(jet), jet, scalar_out);
}

// Covariant derivative of a rank-4 covariant tensor field known at x +- h e_m.
std::vector<double> covariant_grad4(const MetricField& g, const Eigen::VectorXd& x, double h,
                                    const std::vector<double>& w_center, const MetricJet& jet) {
    const int n = static_cast<int>(x.size());
    std::vector<double> grad(static_cast<std::size_t>(n) * n * n * n * n, 0.0);
    Eigen::VectorXd y = x;
    for (int m = 0; m < n; ++m) {
        y[m] = x[m] + h;
        std::vector<double> wp = weyl_at_point(g, y, h);
        y[m] = x[m] - h;
        std::vector<double> wm = weyl_at_point(g, y, h);
        y[m] = x[m];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double v = (wp[id4(n, i, j, k, l)] - wm[id4(n, i, j, k, l)]) / (2.0 * h);
                        for (int p = 0; p < n; ++p) {
                            v -= jet.gamma[p](m, i) * w_center[id4(n, p, j, k, l)];
                            v -= jet.gamma[p](m, j) * w_center[id4(n, i, p, k, l)];
                            v -= jet.gamma[p](m, k) * w_center[id4(n, i, j, p, l)];
                            v -= jet.gamma[p](m, l) * w_center[id4(n, i, j, k, p)];
                        }
                        grad[id5(n, m, i, j, k, l)] = v;
                    }
    }
    return grad;
}

// g-contracted Frobenius norm of a flat tensor of the given rank.
double tensor_norm(const std::vector<double>& t, int n, int rank, const Eigen::MatrixXd& gi) {
    // Raise one slot at a time, then contract with the original.
    std::vector<double> raised(t);
    std::size_t total = t.size();
    std::vector<double> tmp(total);
    std::size_t stride = total / n; // stride of slot 0
    for (int slot = 0; slot < rank; ++slot) {
        // stride of this slot in the flat layout
        std::size_t s = total;
        for (int q = 0; q <= slot; ++q) s /= n;
        for (std::size_t base = 0; base < total; ++base) tmp[base] = 0.0;
        for (std::size_t idx = 0; idx < total; ++idx) {
            const int a = static_cast<int>((idx / s) % n);
            const std::size_t rem = idx - static_cast<std::size_t>(a) * s;
            // accumulate gi(a,b) * raised[... b ...]
            double acc = 0.0;
            for (int b = 0; b < n; ++b) acc += gi(a, b) * raised[rem + static_cast<std::size_t>(b) * s];
            tmp[idx] = acc;
        }
        raised.swap(tmp);
    }
    (void)stride;
    double acc = 0.0;
    for (std::size_t i = 0; i < total; ++i) acc += raised[i] * t[i];
    return std::sqrt(std::max(0.0, acc));
}

struct RawReport {
    double scalar;
    std::vector<double> riem, weyl, grad, hess;
};

RawReport compute_raw(const MetricField& g, const Eigen::VectorXd& x0, double h) {
    const int n = static_cast<int>(x0.size());
    RawReport out;
    MetricJet jet = metric_jet(g, x0, h);
    out.riem = riemann_from_jet(jet);
    out.weyl = weyl_from_riemann(out.riem, jet, &out.scalar);
    out.grad = covariant_grad4(g, x0, h, out.weyl, jet);

    // Second covariant derivative: difference the (nabla W) field, then
    // correct every slot of the rank-5 tensor with Gamma at the center.
    out.hess.assign(static_cast<std::size_t>(n) * n * n * n * n * n, 0.0);
    Eigen::VectorXd y = x0;
    for (int a = 0; a < n; ++a) {
        y[a] = x0[a] + h;
        MetricJet jp = metric_jet(g, y, h);
        std::vector<double> wc_p = weyl_from_riemann(riemann_from_jet(jp), jp, nullptr);
        std::vector<double> gp = covariant_grad4(g, y, h, wc_p, jp);
        y[a] = x0[a] - h;
        MetricJet jm = metric_jet(g, y, h);
        std::vector<double> wc_m = weyl_from_riemann(riemann_from_jet(jm), jm, nullptr);
        std::vector<double> gm = covariant_grad4(g, y, h, wc_m, jm);
        y[a] = x0[a];
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        for (int l = 0; l < n; ++l) {
                            double v = (gp[id5(n, m, i, j, k, l)] - gm[id5(n, m, i, j, k, l)]) /
                                       (2.0 * h);
                            for (int p = 0; p < n; ++p) {
                                v -= jet.gamma[p](a, m) * out.grad[id5(n, p, i, j, k, l)];
                                v -= jet.gamma[p](a, i) * out.grad[id5(n, m, p, j, k, l)];
                                v -= jet.gamma[p](a, j) * out.grad[id5(n, m, i, p, k, l)];
                                v -= jet.gamma[p](a, k) * out.grad[id5(n, m, i, j, p, l)];
                                v -= jet.gamma[p](a, l) * out.grad[id5(n, m, i, j, k, p)];
                            }
                            out.hess[id6(n, a, m, i, j, k, l)] = v;
                        }
    }
    return out;
}

} // namespace

CurvatureReport curvature_at(const MetricField& g, const Eigen::VectorXd& x0, double fd_step,
                             bool richardson) {
    if (fd_step <= 0.0) throw std::invalid_argument("curvature_at: fd_step > 0 required");
    const int n = static_cast<int>(x0.size());
    if (n < 3) throw std::invalid_argument("curvature_at: n >= 3 required");

    RawReport fine = compute_raw(g, x0, fd_step);
    CurvatureReport rep;
    rep.n = n;
    rep.fd_step = fd_step;

    Eigen::MatrixXd g0 = g(x0);
    Eigen::MatrixXd gi = g0.inverse();

    if (!richardson) {
        rep.scalar = fine.scalar;
        rep.riemann = fine.riem;
        rep.weyl = fine.weyl;
        rep.grad_weyl = fine.grad;
        rep.hess_weyl = fine.hess;
    } else {
        RawReport coarse = compute_raw(g, x0, 2.0 * fd_step);
        auto extrap = [](std::vector<double>& out, const std::vector<double>& f,
                         const std::vector<double>& c) {
            out.resize(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) out[i] = (4.0 * f[i] - c[i]) / 3.0;
        };
        rep.scalar = (4.0 * fine.scalar - coarse.scalar) / 3.0;
        extrap(rep.riemann, fine.riem, coarse.riem);
        extrap(rep.weyl, fine.weyl, coarse.weyl);
        extrap(rep.grad_weyl, fine.grad, coarse.grad);
        extrap(rep.hess_weyl, fine.hess, coarse.hess);
        auto diff_norm = [n, &gi](const std::vector<double>& a, const std::vector<double>& b,
                                  int rank) {
            std::vector<double> d(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) / 3.0;
            return tensor_norm(d, n, rank, gi);
        };
        rep.err_weyl = diff_norm(fine.weyl, coarse.weyl, 4);
        rep.err_grad_weyl = diff_norm(fine.grad, coarse.grad, 5);
        rep.err_hess_weyl = diff_norm(fine.hess, coarse.hess, 6);
    }

    rep.riemann_norm = tensor_norm(rep.riemann, n, 4, gi);
    rep.weyl_norm = tensor_norm(rep.weyl, n, 4, gi);
    rep.grad_weyl_norm = tensor_norm(rep.grad_weyl, n, 5, gi);
    rep.hess_weyl_norm = tensor_norm(rep.hess_weyl, n, 6, gi);
    return rep;
}

} // namespace conformal
