#include "conformal/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "conformal/special.hpp"
#include "conformal/tridiag.hpp"

namespace conformal {

namespace {

void fill_caches(FlowState& s) {
    const ModelManifold& m = *s.u.manifold;
    const int n = m.dim();
    s.volume = conformal_volume(s.u);
    s.energy = yamabe_energy(s.u);
    s.r = mean_scalar_curvature(s.u);
    s.sup_u = s.u.max();
    Field rt = conformal_scalar_curvature(s.u);
    double sup = 0.0;
    for (double v : rt.values) sup = std::max(sup, std::abs(v - s.r));
    s.sup_residual = sup;
    (void)n;
}

void renormalize_volume(Field& u) {
    const int n = u.manifold->dim();
    const double vol = conformal_volume(u);
    const double a = std::pow(vol, -(n - 2.0) / (2.0 * n));
    for (double& v : u.values) v *= a;
}

// One raw semi-implicit update (no acceptance logic): implicit Laplacian and
// zeroth-order terms on the new iterate, r and the nonlinear weight frozen.
Field raw_step(const FlowState& s, double dt) {
    const ModelManifold& m = *s.u.manifold;
    const int n = m.dim();
    const int count = m.node_count();
    const double kappa = 4.0 * (n - 1) / (n - 2);
    const double pm1 = 4.0 / (n - 2.0); // p - 1 with p = (n+2)/(n-2)
    std::vector<double> lo, di, up;
    m.laplacian_stencil(lo, di, up);
    const auto& rg = m.background_scalar_curvature();
    std::vector<double> rhs(count);
    for (int i = 0; i < count; ++i) {
        const double w = pm1 * std::pow(s.u.values[i], pm1) / dt;
        rhs[i] = w * s.u.values[i];
        lo[i] = -kappa * lo[i];
        up[i] = -kappa * up[i];
        di[i] = w - kappa * di[i] + rg[i] - s.r * std::pow(s.u.values[i], pm1);
    }
    std::vector<double> next = m.periodic() ? solve_cyclic_tridiagonal(lo, di, up, rhs)
                                            : solve_tridiagonal(lo, di, up, rhs);
    Field out(s.u.manifold, std::move(next));
    return out;
}

double trajectory_r_scale(const FlowState& s) { return std::max(1.0, std::abs(s.r)); }

} // namespace

FlowState make_flow_state(const ManifoldPtr& m, const Field& u0) {
    if (m->kind() == ManifoldKind::kConformallyFlatBall)
        throw std::invalid_argument("flow: closed model manifolds only (sphere or product)");
    u0.require_positive("flow");
    FlowState s;
    s.t = 0.0;
    s.u = u0;
    renormalize_volume(s.u);
    fill_caches(s);
    return s;
}

StepOutcome flow_step(const FlowState& s, double dt) {
    StepOutcome out;
    double trial = dt;
    while (true) {
        if (trial < 1e-14) {
            out.state = s;
            out.dt_used = 0.0;
            out.aborted = true;
            return out;
        }
        Field next = raw_step(s, trial);
        if (next.min() <= 0.0) {
            trial *= 0.5;
            continue;
        }
        renormalize_volume(next);
        FlowState ns;
        ns.t = s.t + trial;
        ns.u = std::move(next);
        fill_caches(ns);
        if (ns.r > s.r + 1e-12 * trajectory_r_scale(s)) {
            trial *= 0.5;
            continue;
        }
        out.state = std::move(ns);
        out.dt_used = trial;
        out.aborted = false;
        return out;
    }
}

namespace {

FlowSample sample_of(const FlowState& s, double monitor_radius) {
    const ModelManifold& m = *s.u.manifold;
    const int n = m.dim();
    FlowSample row;
    row.t = s.t;
    row.r = s.r;
    row.energy = s.energy;
    row.volume = s.volume;
    row.sup_u = s.sup_u;
    row.sup_residual = s.sup_residual;
    Field rt = conformal_scalar_curvature(s.u);
    const double q = 2.0 * n / (n - 2.0);
    const double lp = 2.0 * n / (n + 2.0);
    std::vector<double> d2(rt.values.size()), dp(rt.values.size());
    for (std::size_t i = 0; i < rt.values.size(); ++i) {
        const double dev = rt.values[i] - s.r;
        const double conf = std::pow(s.u.values[i], q);
        d2[i] = dev * dev * conf;
        dp[i] = std::pow(std::abs(dev), lp) * conf;
    }
    row.l2_residual_sq = m.integrate(d2);
    row.lp_residual = m.integrate(dp);
    row.concentration = monitor_radius > 0.0 ? concentration_monitor(s, monitor_radius) : 0.0;
    return row;
}

} // namespace

Trajectory run_flow(const FlowConfig& config) {
    Trajectory tr;
    FlowState s = make_flow_state(config.manifold, config.u0);
    tr.samples.push_back(sample_of(s, config.monitor_radius));
    double dt = config.dt_init;
    int accepted = 0;
    while (s.t < config.t_max && s.sup_residual >= config.tol_sup_residual) {
        StepOutcome o = flow_step(s, dt);
        if (o.aborted) {
            tr.final_state = s;
            tr.converged = false;
            tr.status = "aborted: step-size underflow";
            return tr;
        }
        s = std::move(o.state);
        dt = std::min(config.dt_max, std::max(o.dt_used, o.dt_used * config.growth));
        ++accepted;
        if (accepted % config.sample_every == 0)
            tr.samples.push_back(sample_of(s, config.monitor_radius));
    }
    if (tr.samples.empty() || tr.samples.back().t != s.t)
        tr.samples.push_back(sample_of(s, config.monitor_radius));
    tr.final_state = s;
    tr.converged = s.sup_residual < config.tol_sup_residual;
    tr.status = tr.converged ? "converged" : "t_max reached";
    return tr;
}

double energy_identity_check(const Trajectory& tr) {
    if (!tr.converged) throw std::invalid_argument("energy_identity_check: trajectory not converged");
    const std::size_t m = tr.samples.size();
    if (m < 3) throw std::invalid_argument("energy_identity_check: too few samples");
    const int n = tr.final_state.u.manifold->dim();
    const double r_final = tr.samples.back().r;
    // Cumulative trapezoid of int (R-r)^2 dvol from each sample to the end.
    std::vector<double> tail(m, 0.0);
    for (std::size_t k = m - 1; k-- > 0;) {
        const double dt = tr.samples[k + 1].t - tr.samples[k].t;
        tail[k] = tail[k + 1] +
                  0.5 * dt * (tr.samples[k].l2_residual_sq + tr.samples[k + 1].l2_residual_sq);
    }
    const double scale = std::max(std::abs(tr.samples.front().r - r_final), 1e-30);
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double lhs = tr.samples[k].r - r_final;
        const double rhs = 0.5 * (n - 2) * tail[k];
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

double concentration_monitor(const FlowState& s, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("concentration_monitor: radius > 0 required");
    const ModelManifold& m = *s.u.manifold;
    const int n = m.dim();
    const int count = m.node_count();
    const double q = 2.0 * n / (n - 2.0);
    std::vector<double> mass(count);
    for (int i = 0; i < count; ++i) mass[i] = m.weights()[i] * std::pow(s.u.values[i], q);

    // Fraction of the orbit sphere S^{d}(1) within polar angle psi of a fixed
    // point; d = n-2 on the round sphere orbit S^{n-1}... the orbit of the
    // reduced coordinate is S^{n-1} for both model families.
    const int orbit_dim = n - 1; // orbit sphere S^{n-1} (unit radius on the product)
    static thread_local std::vector<double> cdf;
    static thread_local int cdf_dim = -1;
    const int table = 4096;
    if (cdf_dim != orbit_dim || static_cast<int>(cdf.size()) != table + 1) {
        cdf.assign(table + 1, 0.0);
        double acc = 0.0;
        for (int i = 0; i < table; ++i) {
            const double a = kPi * i / table, b = kPi * (i + 1) / table;
            const double fa = std::pow(std::sin(a), orbit_dim - 1);
            const double fb = std::pow(std::sin(b), orbit_dim - 1);
            acc += 0.5 * (fa + fb) * (b - a);
            cdf[i + 1] = acc;
        }
        for (double& v : cdf) v /= acc;
        cdf_dim = orbit_dim;
    }
    auto cap_fraction = [&](double psi) {
        if (psi <= 0.0) return 0.0;
        if (psi >= kPi) return 1.0;
        const double x = psi / kPi * table;
        const int i = std::min(table - 1, static_cast<int>(x));
        const double f = x - i;
        return cdf[i] * (1.0 - f) + cdf[i + 1] * f;
    };

    double worst = 0.0;
    for (int p = 0; p < count; ++p) {
        double acc = 0.0;
        if (m.kind() == ManifoldKind::kRoundSphere) {
            const double tp = m.nodes()[p];
            for (int j = 0; j < count; ++j) {
                const double tj = m.nodes()[j];
                // Geodesic distance: cos d = cos tp cos tj + sin tp sin tj cos a,
                // a = orbit angle between the two S^{n-1} positions.
                const double cth = std::cos(radius);
                const double c0 = std::cos(tp) * std::cos(tj);
                const double s0 = std::sin(tp) * std::sin(tj);
                double frac;
                if (s0 < 1e-14) {
                    frac = (std::abs(tp - tj) <= radius) ? 1.0 : 0.0;
                } else {
                    const double ca = (cth - c0) / s0; // need cos a >= ca
                    if (ca <= -1.0)
                        frac = 1.0;
                    else if (ca >= 1.0)
                        frac = 0.0;
                    else
                        frac = cap_fraction(std::acos(ca));
                }
                acc += mass[j] * frac;
            }
        } else { // ProductSL: d^2 = (circle distance)^2 + (orbit angle)^2
            const double sp = m.nodes()[p];
            for (int j = 0; j < count; ++j) {
                const double dc = m.coordinate_distance(sp, m.nodes()[j]);
                if (dc >= radius) continue;
                const double psi = std::sqrt(radius * radius - dc * dc);
                acc += mass[j] * cap_fraction(psi);
            }
        }
        worst = std::max(worst, acc);
    }
    return worst;
}

LojasiewiczFit lojasiewicz_fit(const Trajectory& tr) {
    LojasiewiczFit fit;
    if (!tr.converged || tr.samples.size() < 25) return fit;
    const int n = tr.final_state.u.manifold->dim();
    const double r_inf = tr.samples.back().r;
    std::vector<double> xs, ys;
    const std::size_t m = tr.samples.size();
    const std::size_t start = m - std::min<std::size_t>(m - 1, std::max<std::size_t>(20, m / 2));
    for (std::size_t k = start; k + 1 < m; ++k) {
        const double e = tr.samples[k].energy - r_inf;
        const double g = tr.samples[k].lp_residual;
        if (e <= 1e-13 * std::max(1.0, std::abs(r_inf)) || g <= 0.0) continue;
        xs.push_back(std::log(g));
        ys.push_back(std::log(e));
    }
    if (xs.size() < 20) return fit; // degenerate tail: skip
    const std::size_t k = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < k; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = k * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return fit;
    const double slope = (k * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / k;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = ys[i] - slope * xs[i] - intercept;
        rss += d * d;
    }
    fit.valid = true;
    fit.slope = slope;
    fit.gamma_hat = slope * (2.0 * n / (n + 2.0)) - 1.0;
    fit.fit_residual = std::sqrt(rss / k);
    fit.points = static_cast<int>(k);
    return fit;
}

} // namespace conformal
