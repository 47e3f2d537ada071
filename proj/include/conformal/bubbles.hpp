#pragma once

// Standard bubbles u_{(xi,eps)}(x) = (eps/(eps^2+|x-xi|^2))^{(n-2)/2} and the
// greedy bubble-decomposition of Palais-Smale-type fields on the reduced
// grids, with energy quantization and separation diagnostics.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "conformal/manifold.hpp"

namespace conformal {

struct BubbleParams {
    Eigen::VectorXd xi;
    double eps = 1.0;
};

double bubble_eval(int n, const BubbleParams& b, const Eigen::VectorXd& x);
double bubble_radial(int n, double eps, double rho);
// Closed-form radial derivatives of the bubble profile.
double bubble_radial_d1(int n, double eps, double rho);
double bubble_radial_d2(int n, double eps, double rho);

// |Delta u + n(n-2) u^{(n+2)/(n-2)}| with Delta assembled from the analytic
// radial derivatives; vanishes to round-off.
double bubble_residual_analytic(int n, double eps, double rho);
// Max analytic residual over a deterministic cloud of sample radii.
double bubble_residual_analytic_max(int n, double eps, int samples, unsigned seed = 1);
// Max residual of the sampled bubble under the grid Laplacian of a flat
// ball manifold (interior nodes); O(h^2).
double bubble_residual_grid(const ManifoldPtr& flat_ball, double eps);

struct BubbleEnergy {
    double value = 0.0;
    bool truncation_flagged = false; // truncation radius < 100 eps
};
// Yamabe energy of the bubble over R^n, truncated at trunc_radius with
// analytic tail corrections; equals Y(S^n) independent of (xi, eps).
BubbleEnergy bubble_energy_flat(int n, const BubbleParams& b, double trunc_radius = 0.0);

struct ExtractedBubble {
    double coordinate = 0.0; // reduced-grid location of the peak
    double epsilon = 0.0;
    double amplitude = 0.0;
};

struct DecompositionResult {
    std::vector<ExtractedBubble> bubbles;
    Field remainder;
    double c = 0.0;            // energy level of the decomposition
    double e_infinity = 0.0;   // energy attributed to the weak limit
    double quantization_error = 0.0;
    Eigen::MatrixXd separation; // pairwise interaction quantities
    int count() const { return static_cast<int>(bubbles.size()); }
};

struct ExtractionError : std::runtime_error {
    DecompositionResult partial;
    ExtractionError(const std::string& msg, DecompositionResult p)
        : std::runtime_error(msg), partial(std::move(p)) {}
};

// Greedy peak extraction: locate the max, infer eps from the amplitude via
// u(p) = (4n(n-1)/c)^{(n-2)/4} eps^{-(n-2)/2}, refine (p, eps) by a local
// least-squares fit on |x-p| <= 5 eps, subtract, repeat. threshold <= 0
// selects 1e-2 of the first peak.
DecompositionResult extract_bubbles(const Field& u, double c, double threshold = 0.0,
                                    int max_bubbles = 16);

// | c - (E_inf^{n/2} + m Y(S^n)^{n/2})^{2/n} |.
double energy_quantization_check(int n, double e_infinity, int m, double c);

Eigen::MatrixXd separation_matrix(const ManifoldPtr& m,
                                  const std::vector<ExtractedBubble>& bubbles);

void write_decomposition(const DecompositionResult& d, const std::string& records_path,
                         const std::string& remainder_csv_path);

} // namespace conformal
