#include "conformal/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace conformal {

namespace {

// G7-K15 nodes/weights on [-1, 1] (Kronrod 15 embeds Gauss 7).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kXgk[i]);
        fv[14 - i] = f(c + h * kXgk[i]);
    }
    fv[7] = f(c);
    double resk = kWgk[7] * fv[7];
    double resg = kWg[3] * fv[7];
    for (int i = 0; i < 7; ++i) resk += kWgk[i] * (fv[i] + fv[14 - i]);
    for (int i = 0; i < 3; ++i) resg += kWg[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    Panel p;
    p.a = a;
    p.b = b;
    p.value = resk * h;
    p.err = std::abs((resk - resg) * h);
    return p;
}

} // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, int max_subdivisions) {
    QuadResult out;
    std::priority_queue<Panel> heap;
    Panel p0 = eval_panel(f, a, b);
    double total = p0.value;
    double err = p0.err;
    heap.push(p0);
    int splits = 0;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && splits < max_subdivisions) {
        Panel top = heap.top();
        heap.pop();
        const double mid = 0.5 * (top.a + top.b);
        if (mid <= top.a || mid >= top.b) { // interval exhausted at double precision
            heap.push(top);
            break;
        }
        Panel l = eval_panel(f, top.a, mid);
        Panel r = eval_panel(f, mid, top.b);
        total += l.value + r.value - top.value;
        err += l.err + r.err - top.err;
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    out.value = total;
    out.error_estimate = err;
    out.subdivisions = splits;
    out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total)) || err <= abs_tol;
    return out;
}

QuadResult integrate_half_line(const std::function<double(double)>& f, double rel_tol,
                               double abs_tol) {
    auto mapped = [&f](double t) {
        const double om = 1.0 - t;
        const double r = t / om;
        return f(r) / (om * om);
    };
    return integrate_adaptive(mapped, 0.0, 1.0, rel_tol, abs_tol);
}

} // namespace conformal
