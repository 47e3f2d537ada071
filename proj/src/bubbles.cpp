#include "conformal/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "conformal/quadrature.hpp"
#include "conformal/special.hpp"

namespace conformal {

double bubble_radial(int n, double eps, double rho) {
    const double m = 0.5 * (n - 2);
    return std::pow(eps / (eps * eps + rho * rho), m);
}

double bubble_eval(int n, const BubbleParams& b, const Eigen::VectorXd& x) {
    if (b.eps <= 0.0) throw std::invalid_argument("bubble_eval: eps > 0 required");
    return bubble_radial(n, b.eps, (x - b.xi).norm());
}

double bubble_radial_d1(int n, double eps, double rho) {
    const double m = 0.5 * (n - 2);
    const double w = eps * eps + rho * rho;
    return -2.0 * m * rho * std::pow(eps, m) * std::pow(w, -m - 1.0);
}

double bubble_radial_d2(int n, double eps, double rho) {
    const double m = 0.5 * (n - 2);
    const double w = eps * eps + rho * rho;
    return -2.0 * m * std::pow(eps, m) *
           (std::pow(w, -m - 1.0) - 2.0 * (m + 1.0) * rho * rho * std::pow(w, -m - 2.0));
}

double bubble_residual_analytic(int n, double eps, double rho) {
    const double m = 0.5 * (n - 2);
    const double u = bubble_radial(n, eps, rho);
    double lap;
    if (rho == 0.0) {
        // u_r / rho -> u_rr at the center
        const double w = eps * eps;
        const double urr0 = -2.0 * m * std::pow(eps, m) * std::pow(w, -m - 1.0);
        lap = n * urr0;
    } else {
        lap = bubble_radial_d2(n, eps, rho) + (n - 1) * bubble_radial_d1(n, eps, rho) / rho;
    }
    return std::abs(lap + n * (n - 2) * std::pow(u, (n + 2.0) / (n - 2.0)));
}

double bubble_residual_analytic_max(int n, double eps, int samples, unsigned seed) {
    // Deterministic low-discrepancy radii over several decades around eps.
    double worst = 0.0;
    double x = 0.5 + seed * 1e-3;
    for (int i = 0; i < samples; ++i) {
        x = std::fmod(x + 0.6180339887498949, 1.0); // golden-ratio sequence
        const double rho = eps * std::pow(10.0, 4.0 * x - 2.0); // eps * 10^[-2, 2]
        worst = std::max(worst, bubble_residual_analytic(n, eps, rho));
    }
    worst = std::max(worst, bubble_residual_analytic(n, eps, 0.0));
    return worst;
}

double bubble_residual_grid(const ManifoldPtr& flat_ball, double eps) {
    if (flat_ball->kind() != ManifoldKind::kConformallyFlatBall)
        throw std::invalid_argument("bubble_residual_grid: flat ball manifold required");
    const int n = flat_ball->dim();
    const int count = flat_ball->node_count();
    std::vector<double> u(count);
    for (int i = 0; i < count; ++i) u[i] = bubble_radial(n, eps, flat_ball->nodes()[i]);
    std::vector<double> lap = flat_ball->laplacian(u);
    double worst = 0.0;
    for (int i = 0; i < count - 1; ++i)
        worst = std::max(worst,
                         std::abs(lap[i] + n * (n - 2) * std::pow(u[i], (n + 2.0) / (n - 2.0))));
    return worst;
}

BubbleEnergy bubble_energy_flat(int n, const BubbleParams& b, double trunc_radius) {
    if (b.eps <= 0.0) throw std::invalid_argument("bubble_energy_flat: eps > 0 required");
    if (n < 3) throw std::invalid_argument("bubble_energy_flat: n >= 3 required");
    BubbleEnergy out;
    if (trunc_radius <= 0.0) trunc_radius = 1000.0 * b.eps;
    out.truncation_flagged = trunc_radius < 100.0 * b.eps;
    const double T = trunc_radius / b.eps; // scaled cutoff
    // Numerator integrand t^{n+1} (1+t^2)^{-n}, denominator t^{n-1} (1+t^2)^{-n};
    // the eps factors cancel in the quotient.
    auto num_f = [n](double t) { return std::pow(t, n + 1) * std::pow(1.0 + t * t, -n); };
    auto den_f = [n](double t) { return std::pow(t, n - 1) * std::pow(1.0 + t * t, -n); };
    const double num_core = integrate_adaptive(num_f, 0.0, T, 1e-12).value;
    const double den_core = integrate_adaptive(den_f, 0.0, T, 1e-12).value;
    // Three-term large-t tails of the integrands above.
    const double num_tail = std::pow(T, 2.0 - n) / (n - 2) - std::pow(T, -static_cast<double>(n)) +
                            n * (n + 1.0) / (2.0 * (n + 2)) * std::pow(T, -n - 2.0);
    const double den_tail = std::pow(T, -static_cast<double>(n)) / n -
                            n / (n + 2.0) * std::pow(T, -n - 2.0) +
                            n * (n + 1.0) / (2.0 * (n + 4)) * std::pow(T, -n - 4.0);
    const double area = sphere_area(n);
    const double kappa = 4.0 * (n - 1) / (n - 2);
    const double num = kappa * (n - 2.0) * (n - 2.0) * area * (num_core + num_tail);
    const double den = area * (den_core + den_tail);
    out.value = num / std::pow(den, (n - 2.0) / n);
    return out;
}

double energy_quantization_check(int n, double e_infinity, int m, double c) {
    if (m < 0 || e_infinity < 0.0)
        throw std::invalid_argument("energy_quantization_check: m >= 0 and E >= 0 required");
    const double y = yamabe_constant_sphere(n);
    const double level =
        std::pow(std::pow(e_infinity, 0.5 * n) + m * std::pow(y, 0.5 * n), 2.0 / n);
    return std::abs(c - level);
}

Eigen::MatrixXd separation_matrix(const ManifoldPtr& m,
                                  const std::vector<ExtractedBubble>& bubbles) {
    const int k = static_cast<int>(bubbles.size());
    Eigen::MatrixXd s(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double ei = bubbles[i].epsilon, ej = bubbles[j].epsilon;
            const double d = m->coordinate_distance(bubbles[i].coordinate, bubbles[j].coordinate);
            s(i, j) = ei / ej + ej / ei + d * d / (ei * ej);
        }
    return s;
}

namespace {

// Local least-squares refinement of (p, eps) against the windowed field.
void refine_bubble(const Field& u, double amp_factor, double& p, double& eps) {
    const ModelManifold& m = *u.manifold;
    const int n = m.dim();
    const double mexp = 0.5 * (n - 2);
    for (int iter = 0; iter < 12; ++iter) {
        const double window = 5.0 * eps;
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
        int used = 0;
        for (int i = 0; i < m.node_count(); ++i) {
            const double d = m.coordinate_distance(m.nodes()[i], p);
            if (d > window) continue;
            const double w = m.weights()[i];
            const double q = eps * eps + d * d;
            const double phi = std::pow(eps / q, mexp);
            const double model = amp_factor * phi;
            const double res = u.values[i] - model;
            // d(model)/d(eps), d(model)/dp with d^2 = (x - p)^2 in the local chart
            const double de = amp_factor * mexp * phi * (d * d - eps * eps) / (eps * q);
            double x_minus_p = m.nodes()[i] - p;
            if (m.periodic()) { // wrap to the nearest representative
                const double L = m.length();
                if (x_minus_p > 0.5 * L) x_minus_p -= L;
                if (x_minus_p < -0.5 * L) x_minus_p += L;
            }
            const double dp = amp_factor * 2.0 * mexp * x_minus_p * phi / q;
            jtj00 += w * de * de;
            jtj01 += w * de * dp;
            jtj11 += w * dp * dp;
            jtr0 += w * de * res;
            jtr1 += w * dp * res;
            ++used;
        }
        if (used < 3) return;
        const double det = jtj00 * jtj11 - jtj01 * jtj01;
        double step_e, step_p;
        if (std::abs(det) < 1e-300 * std::max(1.0, jtj00 * jtj11)) {
            if (jtj00 <= 0.0) return;
            step_e = jtr0 / jtj00; // peak at the domain edge: eps only
            step_p = 0.0;
        } else {
            step_e = (jtj11 * jtr0 - jtj01 * jtr1) / det;
            step_p = (jtj00 * jtr1 - jtj01 * jtr0) / det;
        }
        double damp = 1.0;
        while (eps + damp * step_e <= 0.1 * eps) damp *= 0.5;
        eps += damp * step_e;
        p += damp * step_p;
        if (!m.periodic()) p = std::min(std::max(p, 0.0), m.length());
        if (std::abs(step_e) < 1e-12 * eps && std::abs(step_p) < 1e-12 * std::max(1.0, std::abs(p)))
            break;
    }
}

} // namespace

DecompositionResult extract_bubbles(const Field& u, double c, double threshold, int max_bubbles) {
    if (c <= 0.0) throw std::invalid_argument("extract_bubbles: c > 0 required");
    const ModelManifold& m = *u.manifold;
    const int n = m.dim();
    for (double v : u.values)
        if (v < 0.0) throw std::invalid_argument("extract_bubbles: u >= 0 required");

    const double amp_factor = std::pow(4.0 * n * (n - 1) / c, 0.25 * (n - 2));
    const double mexp = 0.5 * (n - 2);
    DecompositionResult out;
    out.c = c;
    out.remainder = u;
    double first_peak = out.remainder.max();
    if (threshold <= 0.0) threshold = 1e-2 * first_peak;

    while (true) {
        const auto it = std::max_element(out.remainder.values.begin(), out.remainder.values.end());
        const double peak = *it;
        if (peak <= threshold) break;
        if (out.count() >= max_bubbles)
            throw ExtractionError("extract_bubbles: max bubble count reached with mass above threshold",
                                  out);
        const int idx = static_cast<int>(it - out.remainder.values.begin());
        double p = m.nodes()[idx];
        double eps = std::pow(amp_factor / peak, 2.0 / (n - 2));
        refine_bubble(out.remainder, amp_factor, p, eps);
        ExtractedBubble b;
        b.coordinate = p;
        b.epsilon = eps;
        b.amplitude = amp_factor * std::pow(eps, -mexp);
        out.bubbles.push_back(b);
        for (int i = 0; i < m.node_count(); ++i) {
            const double d = m.coordinate_distance(m.nodes()[i], p);
            out.remainder.values[i] -= amp_factor * std::pow(eps / (eps * eps + d * d), mexp);
        }
    }

    // Energy attributed to the weak limit: zero when the remainder is below
    // threshold, its Yamabe energy when it is a genuine positive profile.
    double sup_rem = 0.0;
    for (double v : out.remainder.values) sup_rem = std::max(sup_rem, std::abs(v));
    if (sup_rem < threshold || out.remainder.min() <= 0.0)
        out.e_infinity = 0.0;
    else
        out.e_infinity = yamabe_energy(out.remainder);
    out.quantization_error = energy_quantization_check(n, out.e_infinity, out.count(), c);
    out.separation = separation_matrix(u.manifold, out.bubbles);
    return out;
}

void write_decomposition(const DecompositionResult& d, const std::string& records_path,
                         const std::string& remainder_csv_path) {
    std::ofstream rec(records_path);
    if (!rec) throw std::runtime_error("write_decomposition: cannot open " + records_path);
    rec.precision(17);
    rec << "bubble_count " << d.count() << "\n";
    rec << "energy_level " << d.c << "\n";
    rec << "e_infinity " << d.e_infinity << "\n";
    rec << "quantization_error " << d.quantization_error << "\n";
    for (int i = 0; i < d.count(); ++i)
        rec << "bubble " << i << " p " << d.bubbles[i].coordinate << " eps "
            << d.bubbles[i].epsilon << " amplitude " << d.bubbles[i].amplitude << "\n";
    for (int i = 0; i < d.count(); ++i)
        for (int j = i + 1; j < d.count(); ++j)
            rec << "separation " << i << " " << j << " " << d.separation(i, j) << "\n";

    std::ofstream csv(remainder_csv_path);
    if (!csv) throw std::runtime_error("write_decomposition: cannot open " + remainder_csv_path);
    csv.precision(17);
    csv << "coordinate,value\n";
    const auto& nodes = d.remainder.manifold->nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
        csv << nodes[i] << ',' << d.remainder.values[i] << '\n';
}

} // namespace conformal
