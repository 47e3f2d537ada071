#include "conformal/weyl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace conformal {

namespace {

using Tuple = std::array<int, 4>;

// The 8-element symmetry group generated by the two pair swaps (sign -1)
// and the pair exchange (sign +1).
constexpr int kPerm[8][4] = {{0, 1, 2, 3}, {1, 0, 2, 3}, {0, 1, 3, 2}, {1, 0, 3, 2},
                             {2, 3, 0, 1}, {3, 2, 0, 1}, {2, 3, 1, 0}, {3, 2, 1, 0}};
constexpr int kSign[8] = {+1, -1, -1, +1, +1, -1, -1, +1};

inline std::size_t flat(int n, int i, int j, int k, int l) {
    return ((static_cast<std::size_t>(i) * n + j) * n + k) * n + l;
}

// Canonical representative of the orbit of (i,j,k,l): the lexicographically
// smallest image. Returns the sign relating the entry at (i,j,k,l) to the
// entry at the representative, or 0 if the orbit forces the value to vanish
// (a tuple reachable with both signs).
int canonicalize(Tuple& t) {
    const Tuple orig = t;
    Tuple best = orig;
    int best_sign = +1;
    for (int p = 1; p < 8; ++p) {
        Tuple img = {orig[kPerm[p][0]], orig[kPerm[p][1]], orig[kPerm[p][2]], orig[kPerm[p][3]]};
        if (img < best) {
            best = img;
            best_sign = kSign[p];
        }
    }
    // Detect forced zeros: same image tuple reachable with opposite signs.
    for (int p = 0; p < 8; ++p) {
        Tuple img = {orig[kPerm[p][0]], orig[kPerm[p][1]], orig[kPerm[p][2]], orig[kPerm[p][3]]};
        if (img == best && kSign[p] != best_sign) {
            t = best;
            return 0;
        }
    }
    t = best;
    return best_sign;
}

// Rebuild the full array from its canonical entries so every symmetry
// relation holds bit-exactly.
void mirror_from_canonical(std::vector<double>& c, int n) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    Tuple t = {i, j, k, l};
                    const int sign = canonicalize(t);
                    if (t == Tuple{i, j, k, l}) continue;
                    const double v = c[flat(n, t[0], t[1], t[2], t[3])];
                    c[flat(n, i, j, k, l)] = sign == 0 ? 0.0 : sign * v;
                }
}

// splitmix64 + Box-Muller: deterministic normals independent of the
// standard library's distribution internals.
struct NormalStream {
    std::uint64_t state;
    explicit NormalStream(std::uint64_t seed) : state(seed) {}
    double uniform() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
    }
    bool have_spare = false;
    double spare = 0.0;
    double normal() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double u = uniform(), v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * 3.14159265358979323846 * v;
        spare = r * std::sin(a);
        have_spare = true;
        return r * std::cos(a);
    }
};

} // namespace

AlgebraicWeyl::AlgebraicWeyl(int n, std::vector<double> components) : n_(n), c_(std::move(components)) {
    if (n < 3) throw std::invalid_argument("AlgebraicWeyl: n >= 3 required");
    const std::size_t want = static_cast<std::size_t>(n) * n * n * n;
    if (c_.size() != want) throw std::invalid_argument("AlgebraicWeyl: component count mismatch");
}

AlgebraicWeyl AlgebraicWeyl::zero(int n) {
    return AlgebraicWeyl(n, std::vector<double>(static_cast<std::size_t>(n) * n * n * n, 0.0));
}

double AlgebraicWeyl::frobenius_norm() const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return std::sqrt(s);
}

double AlgebraicWeyl::max_antisymmetry_violation() const {
    double worst = 0.0;
    const int n = n_;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double v = (*this)(i, j, k, l);
                    worst = std::max(worst, std::abs(v + (*this)(j, i, k, l)));
                    worst = std::max(worst, std::abs(v + (*this)(i, j, l, k)));
                    worst = std::max(worst, std::abs(v - (*this)(k, l, i, j)));
                }
    return worst;
}

double AlgebraicWeyl::max_bianchi_violation() const {
    double worst = 0.0;
    const int n = n_;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    worst = std::max(worst, std::abs((*this)(i, j, k, l) + (*this)(i, k, l, j) +
                                                     (*this)(i, l, j, k)));
    return worst;
}

double AlgebraicWeyl::max_trace_violation() const {
    double worst = 0.0;
    const int n = n_;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double tr = 0.0;
            for (int i = 0; i < n; ++i) tr += (*this)(i, p, i, q);
            worst = std::max(worst, std::abs(tr));
        }
    return worst;
}

AlgebraicWeyl project_to_weyl(const std::vector<double>& t, int n) {
    if (n < 3) throw std::invalid_argument("project_to_weyl: n >= 3 required");
    const std::size_t sz = static_cast<std::size_t>(n) * n * n * n;
    if (t.size() != sz) throw std::invalid_argument("project_to_weyl: size mismatch");

    // Step 1: average over the 8-element pair-symmetry group (with signs).
    std::vector<double> s(sz, 0.0);
    {
        const int idx[4] = {0, 0, 0, 0};
        (void)idx;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        Tuple tu = {i, j, k, l};
                        Tuple rep = tu;
                        const int sign = canonicalize(rep);
                        if (rep != tu) continue; // fill canonical slots only
                        if (sign == 0) {
                            s[flat(n, i, j, k, l)] = 0.0;
                            continue;
                        }
                        double acc = 0.0;
                        const int a[4] = {i, j, k, l};
                        for (int p = 0; p < 8; ++p)
                            acc += kSign[p] *
                                   t[flat(n, a[kPerm[p][0]], a[kPerm[p][1]], a[kPerm[p][2]],
                                          a[kPerm[p][3]])];
                        s[flat(n, i, j, k, l)] = acc / 8.0;
                    }
        mirror_from_canonical(s, n);
    }

    // Step 2: remove the totally antisymmetric (Bianchi-violating) part:
    // C = S - (S_ijkl + S_iklj + S_iljk)/3.
    std::vector<double> c(sz, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    Tuple tu = {i, j, k, l};
                    Tuple rep = tu;
                    const int sign = canonicalize(rep);
                    if (rep != tu) continue;
                    if (sign == 0) continue;
                    const double cyc = s[flat(n, i, j, k, l)] + s[flat(n, i, k, l, j)] +
                                       s[flat(n, i, l, j, k)];
                    c[flat(n, i, j, k, l)] = s[flat(n, i, j, k, l)] - cyc / 3.0;
                }
    mirror_from_canonical(c, n);
    s.clear();
    s.shrink_to_fit();

    // Step 3: subtract the Ricci and scalar parts (Kulkarni-Nomizu against
    // the identity metric) to land in the totally trace-free subspace.
    std::vector<double> ric(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += c[flat(n, i, j, i, l)];
            ric[j * n + l] = acc;
        }
    double scal = 0.0;
    for (int j = 0; j < n; ++j) scal += ric[j * n + j];
    std::vector<double> e(ric);
    for (int j = 0; j < n; ++j) e[j * n + j] -= scal / n;

    const double ric_coef = 1.0 / (n - 2);
    const double scal_coef = scal / (2.0 * n * (n - 1));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    Tuple tu = {i, j, k, l};
                    Tuple rep = tu;
                    const int sign = canonicalize(rep);
                    if (rep != tu) continue;
                    if (sign == 0) continue;
                    const double eg = e[i * n + k] * (j == l) + e[j * n + l] * (i == k) -
                                      e[i * n + l] * (j == k) - e[j * n + k] * (i == l);
                    const double gg = 2.0 * ((i == k) * (j == l) - (i == l) * (j == k));
                    c[flat(n, i, j, k, l)] -= ric_coef * eg + scal_coef * gg;
                }
    mirror_from_canonical(c, n);
    return AlgebraicWeyl(n, std::move(c));
}

double weyl_coupling_norm(const AlgebraicWeyl& w) {
    const int n = w.dim();
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double v = w(i, j, k, l) + w(i, l, k, j);
                    acc += v * v;
                }
    return acc;
}

AlgebraicWeyl random_weyl(int n, std::uint64_t seed) {
    if (n <= 3) throw std::invalid_argument("random_weyl: class is trivial for n <= 3");
    const std::size_t sz = static_cast<std::size_t>(n) * n * n * n;
    std::vector<double> t(sz);
    NormalStream rng(seed);
    for (double& v : t) v = rng.normal();
    AlgebraicWeyl w = project_to_weyl(t, n);
    if (weyl_coupling_norm(w) <= 0.0)
        throw std::runtime_error("random_weyl: degenerate draw (coupling norm zero)");
    return w;
}

void write_tensor_csv(const AlgebraicWeyl& w, const std::string& path, bool nonzero_only) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_tensor_csv: cannot open " + path);
    out << "i,j,k,l,value\n";
    const int n = w.dim();
    out.precision(17);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double v = w(i, j, k, l);
                    if (nonzero_only && std::abs(v) < 1e-14) continue;
                    out << i << ',' << j << ',' << k << ',' << l << ',' << v << '\n';
                }
}

} // namespace conformal
