#include "conformal/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conformal/flow.hpp"
#include "conformal/special.hpp"

namespace conformal {

namespace {

// 16-point Gauss-Legendre on [-1, 1]; enough to make the smooth cell
// integrals exact to machine precision at the grid sizes in use.
constexpr int kGaussN = 16;
constexpr double kGx[kGaussN] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGw[kGaussN] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double gauss_cell(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), s = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kGaussN; ++i) acc += kGw[i] * f(c + s * kGx[i]);
    return acc * s;
}

} // namespace

std::shared_ptr<const ModelManifold> ModelManifold::round_sphere(int n, int grid_size) {
    if (n < 3) throw std::invalid_argument("round_sphere: n >= 3 required");
    if (grid_size < 8) throw std::invalid_argument("round_sphere: grid too coarse (< 8 nodes)");
    auto m = std::shared_ptr<ModelManifold>(new ModelManifold());
    m->kind_ = ManifoldKind::kRoundSphere;
    m->n_ = n;
    m->param_ = kPi;
    m->h_ = kPi / grid_size;
    m->nodes_.resize(grid_size + 1);
    for (int i = 0; i <= grid_size; ++i) m->nodes_[i] = i * m->h_;
    m->build_grid_and_weights();
    return m;
}

std::shared_ptr<const ModelManifold> ModelManifold::product_sl(int n, double length, int grid_size) {
    if (n < 3) throw std::invalid_argument("product_sl: n >= 3 required");
    if (length <= 0.0) throw std::invalid_argument("product_sl: L > 0 required");
    if (grid_size < 8) throw std::invalid_argument("product_sl: grid too coarse (< 8 nodes)");
    auto m = std::shared_ptr<ModelManifold>(new ModelManifold());
    m->kind_ = ManifoldKind::kProductSL;
    m->n_ = n;
    m->param_ = length;
    m->h_ = length / grid_size;
    m->nodes_.resize(grid_size);
    for (int i = 0; i < grid_size; ++i) m->nodes_[i] = i * m->h_;
    m->build_grid_and_weights();
    return m;
}

std::shared_ptr<const ModelManifold> ModelManifold::flat_ball(int n, double radius, int grid_size) {
    RadialProfile flat;
    flat.phi = [](double) { return 0.0; };
    flat.dphi = [](double) { return 0.0; };
    flat.ddphi = [](double) { return 0.0; };
    return conformal_ball(n, std::move(flat), radius, grid_size);
}

std::shared_ptr<const ModelManifold> ModelManifold::conformal_ball(int n, RadialProfile profile,
                                                                   double radius, int grid_size) {
    if (n < 3) throw std::invalid_argument("conformal_ball: n >= 3 required");
    if (radius <= 0.0) throw std::invalid_argument("conformal_ball: radius > 0 required");
    if (grid_size < 8) throw std::invalid_argument("conformal_ball: grid too coarse (< 8 nodes)");
    auto m = std::shared_ptr<ModelManifold>(new ModelManifold());
    m->kind_ = ManifoldKind::kConformallyFlatBall;
    m->n_ = n;
    m->param_ = radius;
    m->h_ = radius / grid_size;
    m->profile_ = std::move(profile);
    m->has_profile_ = true;
    m->nodes_.resize(grid_size + 1);
    for (int i = 0; i <= grid_size; ++i) m->nodes_[i] = i * m->h_;
    m->build_grid_and_weights();
    return m;
}

void ModelManifold::build_grid_and_weights() {
    const int n = n_;
    const double area = sphere_volume(n - 1); // Vol of the orbit sphere S^{n-1}(1)
    const int count = node_count();
    weights_.assign(count, 0.0);
    phi_vals_.assign(count, 0.0);
    inv_metric_.assign(count, 1.0);
    r_g_.assign(count, 0.0);

    std::function<double(double)> vol_j, flux_j;
    switch (kind_) {
        case ManifoldKind::kRoundSphere:
            vol_j = [n, area](double th) { return area * std::pow(std::sin(th), n - 1); };
            flux_j = vol_j;
            std::fill(r_g_.begin(), r_g_.end(), static_cast<double>(n) * (n - 1));
            break;
        case ManifoldKind::kProductSL:
            vol_j = [area](double) { return area; };
            flux_j = vol_j;
            std::fill(r_g_.begin(), r_g_.end(), static_cast<double>(n - 1) * (n - 2));
            break;
        case ManifoldKind::kConformallyFlatBall: {
            const RadialProfile& pr = profile_;
            vol_j = [n, area, &pr](double r) {
                return area * std::pow(r, n - 1) * std::exp(n * pr.phi(r));
            };
            flux_j = [n, area, &pr](double r) {
                return area * std::pow(r, n - 1) * std::exp((n - 2) * pr.phi(r));
            };
            for (int i = 0; i < count; ++i) {
                const double r = nodes_[i];
                const double p = profile_.phi(r);
                const double dp = profile_.dphi(r);
                const double ddp = profile_.ddphi(r);
                phi_vals_[i] = p;
                inv_metric_[i] = std::exp(-2.0 * p);
                const double lap_phi = (r == 0.0) ? n * ddp : ddp + (n - 1) * dp / r;
                r_g_[i] = inv_metric_[i] *
                          (-2.0 * (n - 1) * lap_phi - static_cast<double>(n - 1) * (n - 2) * dp * dp);
            }
            break;
        }
    }

    // Exact cell integrals of the volume element (half cells at the ends of
    // non-periodic domains).
    if (periodic()) {
        for (int i = 0; i < count; ++i)
            weights_[i] = gauss_cell(vol_j, nodes_[i] - 0.5 * h_, nodes_[i] + 0.5 * h_);
    } else {
        for (int i = 0; i < count; ++i) {
            const double a = std::max(0.0, nodes_[i] - 0.5 * h_);
            const double b = std::min(param_, nodes_[i] + 0.5 * h_);
            weights_[i] = gauss_cell(vol_j, a, b);
        }
    }
    volume_ = 0.0;
    for (double w : weights_) volume_ += w;

    // Flux jacobian at cell midpoints (edge i sits between nodes i and i+1).
    const int edges = periodic() ? count : count - 1;
    flux_mid_.assign(edges, 0.0);
    for (int i = 0; i < edges; ++i) flux_mid_[i] = flux_j(nodes_[i] + 0.5 * h_);
}

std::vector<double> ModelManifold::laplacian(const std::vector<double>& u) const {
    const int count = node_count();
    if (static_cast<int>(u.size()) != count)
        throw std::invalid_argument("laplacian: field length mismatch");
    std::vector<double> out(count, 0.0);
    const double h = h_;
    if (periodic()) {
        for (int i = 0; i < count; ++i) {
            const int ip = (i + 1) % count;
            const int im = (i + count - 1) % count;
            const double fp = flux_mid_[i] * (u[ip] - u[i]) / h;
            const double fm = flux_mid_[im] * (u[i] - u[im]) / h;
            out[i] = (fp - fm) / weights_[i];
        }
        return out;
    }
    for (int i = 0; i < count; ++i) {
        const double fp = (i < count - 1) ? flux_mid_[i] * (u[i + 1] - u[i]) / h : 0.0;
        const double fm = (i > 0) ? flux_mid_[i - 1] * (u[i] - u[i - 1]) / h : 0.0;
        out[i] = inv_metric_[i] * (fp - fm) / weights_[i];
    }
    if (kind_ == ManifoldKind::kConformallyFlatBall && count >= 4) {
        // One-sided outer row: the zero-flux closure above is only a
        // boundary-condition statement, not an approximation of Delta.
        const int i = count - 1;
        const double r = nodes_[i];
        const double ur = (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) / (2.0 * h);
        const double urr = (2.0 * u[i] - 5.0 * u[i - 1] + 4.0 * u[i - 2] - u[i - 3]) / (h * h);
        const double dp = has_profile_ ? profile_.dphi(r) : 0.0;
        out[i] = inv_metric_[i] * (urr + ((n_ - 1) / r + (n_ - 2) * dp) * ur);
    }
    return out;
}

void ModelManifold::laplacian_stencil(std::vector<double>& lo, std::vector<double>& di,
                                      std::vector<double>& up) const {
    const int count = node_count();
    lo.assign(count, 0.0);
    di.assign(count, 0.0);
    up.assign(count, 0.0);
    const double h = h_;
    if (periodic()) {
        for (int i = 0; i < count; ++i) {
            const int im = (i + count - 1) % count;
            up[i] = flux_mid_[i] / (h * weights_[i]);
            lo[i] = flux_mid_[im] / (h * weights_[i]);
            di[i] = -(up[i] + lo[i]);
        }
        return;
    }
    for (int i = 0; i < count; ++i) {
        const double fp = (i < count - 1) ? flux_mid_[i] : 0.0;
        const double fm = (i > 0) ? flux_mid_[i - 1] : 0.0;
        up[i] = inv_metric_[i] * fp / (h * weights_[i]);
        lo[i] = inv_metric_[i] * fm / (h * weights_[i]);
        di[i] = -(up[i] + lo[i]);
    }
}

double ModelManifold::gradient_energy(const std::vector<double>& u) const {
    const int count = node_count();
    if (static_cast<int>(u.size()) != count)
        throw std::invalid_argument("gradient_energy: field length mismatch");
    double acc = 0.0;
    const double h = h_;
    const int edges = static_cast<int>(flux_mid_.size());
    for (int i = 0; i < edges; ++i) {
        const int ip = periodic() ? (i + 1) % count : i + 1;
        const double d = (u[ip] - u[i]) / h;
        acc += flux_mid_[i] * d * d * h;
    }
    return acc;
}

double ModelManifold::integrate(const std::vector<double>& nodal) const {
    if (nodal.size() != weights_.size())
        throw std::invalid_argument("integrate: field length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < nodal.size(); ++i) acc += weights_[i] * nodal[i];
    return acc;
}

double ModelManifold::coordinate_distance(double a, double b) const {
    double d = std::abs(a - b);
    if (periodic()) d = std::min(d, param_ - d);
    return d;
}

std::string ModelManifold::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case ManifoldKind::kRoundSphere: os << "S^" << n_; break;
        case ManifoldKind::kProductSL: os << "S^" << (n_ - 1) << "(1)xS^1(" << param_ << ")"; break;
        case ManifoldKind::kConformallyFlatBall: os << "B^" << n_ << "(" << param_ << ")"; break;
    }
    os << ", " << node_count() << " nodes";
    return os.str();
}

double Field::min() const {
    return *std::min_element(values.begin(), values.end());
}
double Field::max() const {
    return *std::max_element(values.begin(), values.end());
}

void Field::require_positive(const char* who) const {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!(values[i] > 0.0)) {
            std::ostringstream os;
            os << who << ": u must be positive; u[" << i << "] = " << values[i]
               << " at coordinate " << manifold->nodes()[i];
            throw std::invalid_argument(os.str());
        }
}

Field laplace_beltrami(const Field& u) {
    return Field(u.manifold, u.manifold->laplacian(u.values));
}

Field conformal_scalar_curvature(const Field& u) {
    u.require_positive("conformal_scalar_curvature");
    const ModelManifold& m = *u.manifold;
    const int n = m.dim();
    const double kappa = 4.0 * (n - 1) / (n - 2);
    const double p = static_cast<double>(n + 2) / (n - 2);
    std::vector<double> lap = m.laplacian(u.values);
    std::vector<double> out(u.values.size());
    const auto& rg = m.background_scalar_curvature();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::pow(u.values[i], -p) * (rg[i] * u.values[i] - kappa * lap[i]);
    return Field(u.manifold, std::move(out));
}

double conformal_volume(const Field& u) {
    u.require_positive("conformal_volume");
    const ModelManifold& m = *u.manifold;
    const double q = 2.0 * m.dim() / (m.dim() - 2.0);
    std::vector<double> dens(u.values.size());
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = std::pow(u.values[i], q);
    return m.integrate(dens);
}

double yamabe_energy(const Field& u) {
    u.require_positive("yamabe_energy");
    const ModelManifold& m = *u.manifold;
    const int n = m.dim();
    const double kappa = 4.0 * (n - 1) / (n - 2);
    std::vector<double> dens(u.values.size());
    const auto& rg = m.background_scalar_curvature();
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = rg[i] * u.values[i] * u.values[i];
    const double num = kappa * m.gradient_energy(u.values) + m.integrate(dens);
    return num / std::pow(conformal_volume(u), (n - 2.0) / n);
}

double mean_scalar_curvature(const Field& u) {
    u.require_positive("mean_scalar_curvature");
    const ModelManifold& m = *u.manifold;
    const int n = m.dim();
    const double kappa = 4.0 * (n - 1) / (n - 2);
    std::vector<double> lap = m.laplacian(u.values);
    std::vector<double> dens(u.values.size());
    const auto& rg = m.background_scalar_curvature();
    for (std::size_t i = 0; i < dens.size(); ++i)
        dens[i] = (rg[i] * u.values[i] - kappa * lap[i]) * u.values[i];
    return m.integrate(dens) / conformal_volume(u);
}

Field normalize_to_star(const Field& u) {
    const int n = u.manifold->dim();
    const double r = mean_scalar_curvature(u);
    const double c = 4.0 * n * (n - 1);
    const double a = std::pow(r / c, (n - 2.0) / 4.0);
    std::vector<double> v(u.values);
    for (double& x : v) x *= a;
    return Field(u.manifold, std::move(v));
}

double yamabe_constant_estimate(const ManifoldPtr& m) {
    const int count = m->node_count();
    std::vector<Field> seeds;
    seeds.push_back(Field::constant(m, 1.0));
    for (double amp : {0.3, -0.3, 0.6}) {
        std::vector<double> v(count);
        for (int i = 0; i < count; ++i) {
            const double c = m->nodes()[i];
            double osc;
            switch (m->kind()) {
                case ManifoldKind::kRoundSphere: osc = std::cos(c); break;
                case ManifoldKind::kProductSL: osc = std::cos(2.0 * kPi * c / m->length()); break;
                default: osc = std::cos(kPi * c / m->length()); break;
            }
            v[i] = 1.0 + amp * osc;
        }
        seeds.emplace_back(m, std::move(v));
    }

    double best = yamabe_energy(seeds.front());
    if (m->kind() == ManifoldKind::kConformallyFlatBall) {
        for (const Field& s : seeds) best = std::min(best, yamabe_energy(s));
        return best; // upper bound only: no flow on manifolds with boundary
    }
    for (const Field& s : seeds) {
        FlowConfig cfg;
        cfg.manifold = m;
        cfg.u0 = s;
        cfg.tol_sup_residual = 1e-7;
        cfg.t_max = 500.0;
        Trajectory tr = run_flow(cfg);
        best = std::min(best, tr.final_state.energy);
    }
    return best;
}

} // namespace conformal
