#pragma once

// Model manifolds with a 1D symmetric reduction: the round sphere S^n in the
// polar angle, the product S^{n-1}(1) x S^1(L) in the circle coordinate, and
// conformally flat balls e^{2 phi} delta in the radius. Each owns its grid,
// exact-cell quadrature weights, and a flux-form Laplacian stencil.

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace conformal {

enum class ManifoldKind { kRoundSphere, kProductSL, kConformallyFlatBall };

// Analytic radial conformal exponent phi(r) with first two derivatives.
struct RadialProfile {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    std::function<double(double)> ddphi;
};

class ModelManifold {
  public:
    static std::shared_ptr<const ModelManifold> round_sphere(int n, int grid_size);
    static std::shared_ptr<const ModelManifold> product_sl(int n, double length, int grid_size);
    static std::shared_ptr<const ModelManifold> flat_ball(int n, double radius, int grid_size);
    static std::shared_ptr<const ModelManifold> conformal_ball(int n, RadialProfile profile,
                                                               double radius, int grid_size);

    ManifoldKind kind() const { return kind_; }
    int dim() const { return n_; }
    double length() const { return param_; }  // L for ProductSL, radius for balls
    bool periodic() const { return kind_ == ManifoldKind::kProductSL; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    double step() const { return h_; }

    const std::vector<double>& nodes() const { return nodes_; }
    // Exact cell integrals of the volume element (sum = Vol(M, g)).
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& background_scalar_curvature() const { return r_g_; }
    double volume_g0() const { return volume_; }

    // phi and e^{-2 phi} at nodes (identity off the ball).
    double conformal_factor(int i) const { return phi_vals_[i]; }
    double inv_metric_factor(int i) const { return inv_metric_[i]; }

    // Flux-form Laplace-Beltrami of nodal values (second order; summation by
    // parts against the quadrature weights on sphere and product).
    std::vector<double> laplacian(const std::vector<double>& u) const;

    // Tridiagonal stencil rows of the Laplacian: lap(u)_i = lo[i] u_{i-1}
    // + di[i] u_i + up[i] u_{i+1}, cyclic on the product. The ball's outer
    // row is handled separately (one-sided) and not represented here.
    void laplacian_stencil(std::vector<double>& lo, std::vector<double>& di,
                           std::vector<double>& up) const;

    // integral of |du|^2 dvol via midpoint fluxes; compatible with the
    // stencil so that discrete integration by parts is exact on sphere and
    // product grids.
    double gradient_energy(const std::vector<double>& u) const;

    double integrate(const std::vector<double>& nodal) const;

    // Geodesic distance between reduced coordinates (axis distance on the
    // sphere, cyclic distance on the product, chart distance on the ball).
    double coordinate_distance(double a, double b) const;

    std::string describe() const;

  private:
    ModelManifold() = default;
    void build_grid_and_weights();

    ManifoldKind kind_ = ManifoldKind::kRoundSphere;
    int n_ = 0;
    double param_ = 0.0; // L or radius (pi for the sphere domain end)
    double h_ = 0.0;
    RadialProfile profile_;
    bool has_profile_ = false;

    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> flux_mid_;   // flux jacobian at cell midpoints
    std::vector<double> r_g_;
    std::vector<double> phi_vals_;
    std::vector<double> inv_metric_;
    double volume_ = 0.0;
};

using ManifoldPtr = std::shared_ptr<const ModelManifold>;

struct Field {
    ManifoldPtr manifold;
    std::vector<double> values;

    Field() = default;
    Field(ManifoldPtr m, std::vector<double> v) : manifold(std::move(m)), values(std::move(v)) {
        if (!manifold || static_cast<int>(values.size()) != manifold->node_count())
            throw std::invalid_argument("Field: length does not match grid");
    }
    static Field constant(const ManifoldPtr& m, double c) {
        return Field(m, std::vector<double>(m->node_count(), c));
    }
    double min() const;
    double max() const;
    // Throws with the offending node location unless u > 0 everywhere.
    void require_positive(const char* who) const;
};

// --- Conformal calculus (scalar curvature convention R(S^n)=n(n-1)) ---

// Delta_g u on the reduced grid; rejects grids with fewer than 8 nodes.
Field laplace_beltrami(const Field& u);

// R_tilde = u^{-(n+2)/(n-2)} (R_g u - (4(n-1)/(n-2)) Delta_g u).
Field conformal_scalar_curvature(const Field& u);

double yamabe_energy(const Field& u);
double conformal_volume(const Field& u);      // integral of u^{2n/(n-2)} dvol_g
double mean_scalar_curvature(const Field& u); // r = int R_tilde dvol_tilde / volume

// Upper-bound estimate of the Yamabe constant: flow relaxation from a seed
// family on closed manifolds, best-seed energy on balls.
double yamabe_constant_estimate(const ManifoldPtr& m);

// Rescale a constant-scalar-curvature u so it solves the c = 4n(n-1)
// normalized equation.
Field normalize_to_star(const Field& u);

} // namespace conformal
