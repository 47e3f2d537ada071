#pragma once

// Steady states of the (possibly subcritical) Yamabe equation on
// S^{n-1}(1) x S^1(L), reduced to the even (cosine) class on the half
// period: damped Newton, pseudo-arclength continuation in delta or L,
// constrained Morse indices, and the Morse-inequality tally. An
// independent shooting sweep provides the enumeration oracle.

#include <string>
#include <vector>

#include "conformal/manifold.hpp"

namespace conformal {

struct SteadyProblem {
    int n = 4;
    double length = 1.0;   // L of the circle factor
    double delta = 0.0;    // subcritical offset, in [0, 4/(n-2))
    int grid = 200;        // intervals on the half period (sigma in [0, 1/2])

    double kappa() const { return 4.0 * (n - 1) / (n - 2); }
    double r0() const { return static_cast<double>(n - 1) * (n - 2); }
    double c() const { return 4.0 * n * (n - 1); }
    double p() const { return (n + 2.0) / (n - 2.0); }
    // u with -R0 u + c u^{p-delta} = 0.
    double constant_solution() const;
    void validate() const;
};

struct SolutionRecord {
    std::vector<double> u; // nodal values on the half-period grid (grid+1 nodes)
    double delta = 0.0;
    double length = 0.0;
    double residual = 0.0; // re-verified on the mirrored cyclic grid
    double energy = 0.0;
    double sup_u = 0.0;
    int morse_index = -1;
    bool nondegenerate = false;
    double min_abs_eigenvalue = 0.0;
    int newton_iterations = 0;
};

// Damped Newton from u_init (> 0); throws on divergence or positivity loss.
SolutionRecord newton_solve(const SteadyProblem& p, const std::vector<double>& u_init,
                            double tol = 1e-10, int max_iter = 60);

// Lengths where the linearization at the constant solution crosses zero in
// circle mode j: L_j = 2 pi j / sqrt((n-2)(1 - delta (n-2)/4)).
std::vector<double> bifurcation_points_constant_branch(int n, double delta, int j_max = 4);

// Constrained Morse index: negative directions of the second variation over
// the even class, volume-constrained in the spherical j = 0 sector, summed
// over sphere modes (with multiplicities) up to j_max. Fills the record's
// index/nondegeneracy fields and returns the index.
int morse_index(const SteadyProblem& p, SolutionRecord& rec, int j_max = 8);

enum class SweepKind { kDelta, kLength };

struct Branch {
    std::vector<SolutionRecord> records;
    std::vector<double> turning_points;      // parameter values
    std::vector<double> bifurcation_points;  // parameter values (sign changes located)
};

// Pseudo-arclength continuation from a converged record toward
// parameter = target. Turning points and simple eigenvalue crossings are
// detected and annotated.
Branch continue_branch(const SteadyProblem& p, const SolutionRecord& start, SweepKind kind,
                       double target, double ds = 0.05, int max_steps = 400);

// Newton restart along the critical eigenvector just off a simple crossing.
SolutionRecord switch_branch(const SteadyProblem& p, const SolutionRecord& on_branch,
                             double amplitude);

struct MorseCheckRow {
    int l = 0;
    long alternating_sum = 0;
    bool pass = false;
};

struct MorseCheck {
    std::vector<int> counts; // N_k
    std::vector<MorseCheckRow> rows;
    bool all_pass = false;
    std::string caveat;
};

// Alternating-sum inequalities sum_{k<=l} (-1)^{l-k} N_k >= (-1)^l; refuses
// degenerate records.
MorseCheck morse_inequality_check(const std::vector<SolutionRecord>& records, int l_max = 6);

// Multi-start Newton over a deterministic seed family, deduplicated.
std::vector<SolutionRecord> enumerate_solutions(const SteadyProblem& p, int j_max = 8);

struct ShootingResult {
    std::vector<double> initial_values; // u(0) of each detected solution
    std::vector<double> profiles_sup;
    int count = 0;
};

// Independent enumeration: integrate the radial ODE from u(0)=a, u'(0)=0 and
// count zeros of u'(L/2; a) over the scan range.
ShootingResult shooting_enumeration(const SteadyProblem& p, double a_lo = 0.0, double a_hi = 0.0,
                                    int scan_points = 600);

// Mirror a half-period record onto the full cyclic ProductSL grid.
Field mirror_to_product(const SteadyProblem& p, const std::vector<double>& u_half);

void write_branch_csv(const Branch& b, const std::string& path);

} // namespace conformal
