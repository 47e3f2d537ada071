#include "conformal/pohozaev.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "conformal/moments.hpp"
#include "conformal/quadrature.hpp"
#include "conformal/special.hpp"

namespace conformal {

// --- small multivariate polynomial algebra -------------------------------

Poly Poly::constant(int n, double c) {
    Poly p{n, {}};
    if (c != 0.0) p.terms.push_back({c, std::vector<int>(n, 0)});
    return p;
}

Poly Poly::coordinate(int n, int i) {
    Poly p{n, {}};
    Monomial m{1.0, std::vector<int>(n, 0)};
    m.exp[i] = 1;
    p.terms.push_back(std::move(m));
    return p;
}

Poly Poly::derivative(int i) const {
    Poly out{n, {}};
    for (const Monomial& m : terms) {
        if (m.exp[i] == 0) continue;
        Monomial d = m;
        d.coef *= d.exp[i];
        d.exp[i] -= 1;
        out.terms.push_back(std::move(d));
    }
    return out;
}

Poly Poly::multiply(const Poly& other) const {
    Poly out{n, {}};
    for (const Monomial& a : terms)
        for (const Monomial& b : other.terms) {
            Monomial m{a.coef * b.coef, a.exp};
            for (int i = 0; i < n; ++i) m.exp[i] += b.exp[i];
            out.terms.push_back(std::move(m));
        }
    return out;
}

Poly Poly::scaled(double a) const {
    Poly out(*this);
    for (Monomial& m : out.terms) m.coef *= a;
    return out;
}

Poly Poly::plus(const Poly& other) const {
    Poly out(*this);
    out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
    return out;
}

double Poly::evaluate(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (const Monomial& m : terms) {
        double v = m.coef;
        for (int i = 0; i < n; ++i)
            for (int e = 0; e < m.exp[i]; ++e) v *= x[i];
        acc += v;
    }
    return acc;
}

int Poly::degree() const {
    int d = 0;
    for (const Monomial& m : terms) {
        int t = 0;
        for (int e : m.exp) t += e;
        d = std::max(d, t);
    }
    return d;
}

PolyVectorField PolyVectorField::dilation(int n) {
    PolyVectorField v{n, {}};
    for (int i = 0; i < n; ++i) v.comp.push_back(Poly::coordinate(n, i));
    return v;
}

PolyVectorField PolyVectorField::constant_direction(int n, int i) {
    PolyVectorField v{n, {}};
    for (int k = 0; k < n; ++k) v.comp.push_back(Poly::constant(n, k == i ? 1.0 : 0.0));
    return v;
}

PolyVectorField PolyVectorField::monomial(int n, int i, double c, std::vector<int> exp) {
    PolyVectorField v{n, {}};
    for (int k = 0; k < n; ++k) v.comp.push_back(Poly::zero(n));
    Monomial m{c, std::move(exp)};
    v.comp[i].terms.push_back(std::move(m));
    return v;
}

PolyVectorField PolyVectorField::plus(const PolyVectorField& other) const {
    PolyVectorField out{n, {}};
    for (int i = 0; i < n; ++i) out.comp.push_back(comp[i].plus(other.comp[i]));
    return out;
}

Poly PolyVectorField::divergence_flat() const {
    Poly out = Poly::zero(n);
    for (int i = 0; i < n; ++i) out = out.plus(comp[i].derivative(i));
    return out;
}

Poly PolyVectorField::dot_x() const {
    Poly out = Poly::zero(n);
    for (int i = 0; i < n; ++i) out = out.plus(comp[i].multiply(Poly::coordinate(n, i)));
    return out;
}

// --- integration backend --------------------------------------------------

namespace {

using RadialFn = std::function<double(double)>;

// One integrand piece: polynomial angular part x radial weight.
struct Piece {
    Poly poly;
    RadialFn radial;
};

// int_Ball P(x) w(r) dvol_g
//   = sum_alpha c_alpha <xhat^alpha> |S^{n-1}| int_0^a w(r) r^{|alpha|+n-1} e^{n phi} dr.
double integrate_volume(const std::vector<Piece>& pieces, const ModelManifold& ball,
                        bool grid_quadrature, const RadialProfile& phi) {
    const int n = ball.dim();
    const double a = ball.length();
    const double area = sphere_area(n);
    double total = 0.0;
    for (const Piece& piece : pieces) {
        // group monomials by total degree
        std::map<int, double> weight_by_degree; // degree -> sum coef * moment
        for (const Monomial& m : piece.poly.terms) {
            const double avg = sphere_monomial_average(m.exp, n);
            if (avg == 0.0) continue;
            int deg = 0;
            for (int e : m.exp) deg += e;
            weight_by_degree[deg] += m.coef * avg;
        }
        for (const auto& [deg, w] : weight_by_degree) {
            if (w == 0.0) continue;
            auto f = [&](double r) {
                return piece.radial(r) * std::pow(r, deg + n - 1) * std::exp(n * phi.phi(r));
            };
            double val;
            if (grid_quadrature) {
                const auto& nodes = ball.nodes();
                const double h = ball.step();
                val = 0.0;
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    const double scale = (i == 0 || i + 1 == nodes.size()) ? 0.5 : 1.0;
                    val += scale * h * f(nodes[i]);
                }
            } else {
                val = integrate_adaptive(f, 0.0, a, 1e-12).value;
            }
            total += area * w * val;
        }
    }
    return total;
}

// int_{|x|=a} P(x) c dsigma_g with dsigma_g = e^{(n-1)phi(a)} a^{n-1} dsigma_hat.
double integrate_boundary(const Poly& poly, double factor, const ModelManifold& ball,
                          const RadialProfile& phi) {
    const int n = ball.dim();
    const double a = ball.length();
    double acc = 0.0;
    for (const Monomial& m : poly.terms) {
        const double avg = sphere_monomial_average(m.exp, n);
        if (avg == 0.0) continue;
        int deg = 0;
        for (int e : m.exp) deg += e;
        acc += m.coef * avg * std::pow(a, deg);
    }
    return acc * factor * sphere_area(n) * std::pow(a, n - 1) *
           std::exp((n - 1) * phi.phi(a));
}

} // namespace

void attach_field_solution(PohozaevProblem& p, const Field& u) {
    if (u.manifold != p.ball) throw std::invalid_argument("attach_field_solution: manifold mismatch");
    auto m = p.ball;
    auto values = std::make_shared<std::vector<double>>(u.values);
    const double h = m->step();
    const int count = m->node_count();
    auto interp = [m, values, h, count](double r) {
        const double x = std::min(std::max(r / h, 0.0), count - 1.0);
        const int i = std::min(count - 2, static_cast<int>(x));
        const double f = x - i;
        return (*values)[i] * (1.0 - f) + (*values)[i + 1] * f;
    };
    auto deriv = [m, values, h, count](double r) {
        const double x = std::min(std::max(r / h, 0.0), count - 1.0);
        int i = std::min(count - 2, std::max(1, static_cast<int>(std::lround(x))));
        return ((*values)[i + 1] - (*values)[i - 1]) / (2.0 * h);
    };
    p.u = interp;
    p.ur = deriv;
    p.urr = nullptr;
    p.grid_quadrature = true;
}

PohozaevReport pohozaev_terms(const PohozaevProblem& p) {
    const ModelManifold& ball = *p.ball;
    if (ball.kind() != ManifoldKind::kConformallyFlatBall)
        throw std::invalid_argument("pohozaev_terms: ball manifold required");
    const int n = ball.dim();
    const double a = ball.length();
    if (p.delta < 0.0 || p.delta >= 4.0 / (n - 2))
        throw std::invalid_argument("pohozaev_terms: delta in [0, 4/(n-2)) required");
    const RadialProfile& phi = p.phi;
    const double pexp = (n + 2.0) / (n - 2.0);
    const double qexp = 2.0 * n / (n - 2.0);

    auto u = p.u;
    auto ur = p.ur;
    auto em2phi = [&phi](double r) { return std::exp(-2.0 * phi.phi(r)); };
    auto guard_r = [](double r) { return std::max(r, 1e-14); };

    PohozaevReport rep;
    rep.level = ball.node_count();

    // Volume LHS: deformation term.
    {
        Poly dvxx = Poly::zero(n); // sum_ij d_i V^j x_i x_j
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                dvxx = dvxx.plus(p.v.comp[j].derivative(i).multiply(
                    Poly::coordinate(n, i).multiply(Poly::coordinate(n, j))));
        Poly vx = p.v.dot_x();
        Poly divv = p.v.divergence_flat();
        std::vector<Piece> pieces;
        // -1/2 e^{-2phi} ur^2 [ 2 (dV xhat xhat) + 2 phi' (V.x)/r - (2/n)(div V + n phi'(V.x)/r) ]
        pieces.push_back({dvxx, [&](double r) {
                              const double rr = guard_r(r);
                              return -em2phi(r) * ur(r) * ur(r) / (rr * rr);
                          }});
        pieces.push_back({vx, [&](double r) {
                              const double rr = guard_r(r);
                              return -em2phi(r) * ur(r) * ur(r) * phi.dphi(r) / rr;
                          }});
        pieces.push_back({divv, [&](double r) {
                              return (1.0 / n) * em2phi(r) * ur(r) * ur(r);
                          }});
        pieces.push_back({vx, [&](double r) {
                              const double rr = guard_r(r);
                              return em2phi(r) * ur(r) * ur(r) * phi.dphi(r) / rr;
                          }});
        rep.deformation = integrate_volume(pieces, ball, p.grid_quadrature, phi);
    }

    // Volume LHS: R_g coupling.
    {
        auto rg = [&](double r) {
            const double dp = phi.dphi(r);
            const double ddp = phi.ddphi(r);
            const double lap = (r == 0.0) ? n * ddp : ddp + (n - 1) * dp / guard_r(r);
            return std::exp(-2.0 * phi.phi(r)) *
                   (-2.0 * (n - 1) * lap - static_cast<double>(n - 1) * (n - 2) * dp * dp);
        };
        Poly vx = p.v.dot_x();
        Poly divv = p.v.divergence_flat();
        const double c = -(n - 2.0) / (4.0 * (n - 1.0));
        std::vector<Piece> pieces;
        pieces.push_back({vx, [&, c](double r) {
                              const double rr = guard_r(r);
                              return c * rg(r) * u(r) * ur(r) / rr;
                          }});
        const double c2 = c * (n - 2.0) / (2.0 * n);
        pieces.push_back({divv, [&, c2](double r) { return c2 * rg(r) * u(r) * u(r); }});
        pieces.push_back({vx, [&, c2, n](double r) {
                              const double rr = guard_r(r);
                              return c2 * rg(r) * u(r) * u(r) * n * phi.dphi(r) / rr;
                          }});
        rep.rg_coupling = integrate_volume(pieces, ball, p.grid_quadrature, phi);
    }

    // Boundary terms at r = a.
    {
        Poly vx = p.v.dot_x();
        Poly divv = p.v.divergence_flat();
        const double ua = u(a), ura = ur(a);
        const double ephi = std::exp(phi.phi(a));
        // <V,grad u><grad u,nu> = (V.xhat) ur * e^{-phi} ur
        rep.bdry_vgradu = integrate_boundary(vx, ura * ura / (a * ephi), ball, phi);
        // -1/2 |grad u|^2 <V,nu> = -1/2 e^{-2phi} ur^2 * e^{phi}(V.xhat)
        rep.bdry_gradsq = integrate_boundary(vx, -0.5 * ura * ura / (a * ephi), ball, phi);
        // (n-2)/(2n) u <grad u,nu> div_g V
        const double c = (n - 2.0) / (2.0 * n) * ua * ura / ephi;
        rep.bdry_divv = integrate_boundary(divv, c, ball, phi) +
                        integrate_boundary(vx, c * n * phi.dphi(a) / a, ball, phi);
        // (n-2)^2/2 u^{2n/(n-2)-delta} <V,nu>
        rep.bdry_power = integrate_boundary(
            vx, 0.5 * (n - 2.0) * (n - 2.0) * std::pow(ua, qexp - p.delta) * ephi / a, ball, phi);
    }

    // RHS: (n-2)/(2n) int u <grad u, grad div_g V>.
    {
        Poly diva = p.v.divergence_flat(); // polynomial part of div_g V
        Poly vx = p.v.dot_x();             // radial part carries n phi'/r
        // grad f . xhat with f = divA + w(r) (V.x), w = n phi'/r:
        //   (x.grad divA)/r + w (x.grad (V.x))/r + w' (V.x)/r * r ... assembled below.
        Poly xgrad_divv = Poly::zero(n);
        for (int i = 0; i < n; ++i)
            xgrad_divv = xgrad_divv.plus(diva.derivative(i).multiply(Poly::coordinate(n, i)));
        Poly xgrad_vx = Poly::zero(n);
        for (int i = 0; i < n; ++i)
            xgrad_vx = xgrad_vx.plus(vx.derivative(i).multiply(Poly::coordinate(n, i)));
        auto wfun = [&](double r) { return n * phi.dphi(r) / guard_r(r); };
        auto wprime = [&](double r) {
            const double rr = guard_r(r);
            return n * (phi.ddphi(r) / rr - phi.dphi(r) / (rr * rr));
        };
        const double c = (n - 2.0) / (2.0 * n);
        std::vector<Piece> pieces;
        // <grad u, grad f> = e^{-2phi} ur [ (x.grad divA)/r + w (x.grad(V.x))/r + w' (V.x) ]
        pieces.push_back({xgrad_divv, [&, c](double r) {
                              const double rr = guard_r(r);
                              return c * em2phi(r) * u(r) * ur(r) / rr;
                          }});
        pieces.push_back({xgrad_vx, [&, c](double r) {
                              const double rr = guard_r(r);
                              return c * em2phi(r) * u(r) * ur(r) * wfun(r) / rr;
                          }});
        pieces.push_back({vx, [&, c](double r) {
                              return c * em2phi(r) * u(r) * ur(r) * wprime(r);
                          }});
        rep.rhs_divgrad = integrate_volume(pieces, ball, p.grid_quadrature, phi);
    }

    // RHS: delta-weighted term (switches off exactly at delta = 0).
    if (p.delta != 0.0) {
        Poly vx = p.v.dot_x();
        const double c = -0.5 * (n - 2.0) * (n - 2.0) * p.delta;
        std::vector<Piece> pieces;
        pieces.push_back({vx, [&, c](double r) {
                              const double rr = guard_r(r);
                              return c * std::pow(u(r), pexp - p.delta) * ur(r) / rr;
                          }});
        rep.rhs_delta = integrate_volume(pieces, ball, p.grid_quadrature, phi);
    }

    // PDE residual of the supplied u (the identity presumes a solution).
    {
        const double kappa = 4.0 * (n - 1) / (n - 2);
        double worst = 0.0;
        const int count = ball.node_count();
        for (int i = 1; i < count - 1; ++i) {
            const double r = ball.nodes()[i];
            double urr;
            if (p.urr)
                urr = p.urr(r);
            else {
                const double h = 1e-5 * std::max(1.0, a);
                urr = (ur(r + h) - ur(r - h)) / (2.0 * h);
            }
            const double lap = em2phi(r) * (urr + ((n - 1) / r + (n - 2) * phi.dphi(r)) * ur(r));
            const double rg = ball.background_scalar_curvature()[i];
            const double res = kappa * lap - rg * u(r) +
                               4.0 * n * (n - 1) * std::pow(u(r), pexp - p.delta);
            worst = std::max(worst, std::abs(res));
        }
        rep.pde_residual = worst;
        const double scale = std::max(1.0, std::abs(u(0.0)));
        if (worst > 1e-4 * scale)
            rep.warning = "supplied u does not solve the equation at the stated tolerance";
    }

    rep.lhs_total = rep.deformation + rep.rg_coupling + rep.bdry_vgradu + rep.bdry_gradsq +
                    rep.bdry_divv + rep.bdry_power;
    rep.rhs_total = rep.rhs_divgrad + rep.rhs_delta;
    rep.residual = std::abs(rep.lhs_total - rep.rhs_total);
    return rep;
}

Eigen::MatrixXd deformation_tensor(const PolyVectorField& v, const RadialProfile& phi,
                                   const Eigen::VectorXd& x) {
    const int n = v.n;
    const double r = x.norm();
    const double dp = phi.dphi(r);
    Eigen::VectorXd gradphi = r > 0 ? Eigen::VectorXd(dp * x / r) : Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd dv(n, n); // dv(i,j) = d_i V^j
    Eigen::VectorXd vx(n);
    for (int j = 0; j < n; ++j) {
        vx[j] = v.comp[j].evaluate(x);
        for (int i = 0; i < n; ++i) dv(i, j) = v.comp[j].derivative(i).evaluate(x);
    }
    // nabla_i V^j = d_i V^j + Gamma^j_{ik} V^k,
    // Gamma^j_{ik} = delta_{ji} d_k phi + delta_{jk} d_i phi - delta_{ik} d_j phi.
    Eigen::MatrixXd nab(n, n);
    const double vdotphi = vx.dot(gradphi);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            nab(i, j) = dv(i, j) + (i == j ? vdotphi : 0.0) + gradphi[i] * vx[j] -
                        gradphi[j] * vx[i];
    const double divg = dv.trace() + n * vdotphi;
    const double em2 = std::exp(-2.0 * phi.phi(r));
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out(i, j) = em2 * (nab(i, j) + nab(j, i)) -
                        (2.0 / n) * divg * em2 * (i == j ? 1.0 : 0.0);
    return out;
}

RefinementStudy refinement_study(const PohozaevProblem& p, int levels) {
    if (levels < 3) throw std::invalid_argument("refinement_study: levels >= 3 required");
    RefinementStudy out;
    double scale = 0.0;
    for (int l = 0; l < levels; ++l) {
        const int grid = (p.ball->node_count() - 1) << l;
        PohozaevProblem q = p;
        q.ball = ModelManifold::conformal_ball(p.ball->dim(), p.phi, p.ball->length(), grid);
        q.grid_quadrature = true;
        PohozaevReport rep = pohozaev_terms(q);
        out.levels.push_back(rep.level);
        out.residuals.push_back(rep.residual);
        scale = std::max({scale, std::abs(rep.lhs_total), std::abs(rep.rhs_total)});
    }
    // Estimated order from successive ratios, unless everything sits at round-off.
    if (out.residuals.front() < 1e-12 * std::max(scale, 1.0)) {
        out.order_measured = false;
        return out;
    }
    double acc = 0.0;
    int used = 0;
    for (int l = 0; l + 1 < levels; ++l) {
        if (out.residuals[l + 1] <= 0.0) break;
        acc += std::log2(out.residuals[l] / out.residuals[l + 1]);
        ++used;
    }
    if (used > 0) {
        out.estimated_order = acc / used;
        out.order_measured = true;
    }
    return out;
}

void write_pohozaev_csv(const std::vector<PohozaevReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_pohozaev_csv: cannot open " + path);
    out << "term,value,level\n";
    out.precision(17);
    for (const PohozaevReport& r : reports) {
        out << "deformation," << r.deformation << ',' << r.level << '\n';
        out << "rg_coupling," << r.rg_coupling << ',' << r.level << '\n';
        out << "bdry_vgradu," << r.bdry_vgradu << ',' << r.level << '\n';
        out << "bdry_gradsq," << r.bdry_gradsq << ',' << r.level << '\n';
        out << "bdry_divv," << r.bdry_divv << ',' << r.level << '\n';
        out << "bdry_power," << r.bdry_power << ',' << r.level << '\n';
        out << "rhs_divgrad," << r.rhs_divgrad << ',' << r.level << '\n';
        out << "rhs_delta," << r.rhs_delta << ',' << r.level << '\n';
        out << "residual," << r.residual << ',' << r.level << '\n';
    }
}

} // namespace conformal
