#pragma once

// Algebraic Weyl-type curvature tensors on R^n: dense rank-4 arrays carrying
// pair antisymmetry, pair exchange, the first Bianchi identity and total
// trace-freeness, plus the orthogonal projection onto that symmetry class.

#include <cstdint>
#include <string>
#include <vector>

namespace conformal {

class AlgebraicWeyl {
  public:
    AlgebraicWeyl() = default;
    AlgebraicWeyl(int n, std::vector<double> components);

    static AlgebraicWeyl zero(int n);

    int dim() const { return n_; }
    double operator()(int i, int j, int k, int l) const {
        return c_[((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double& at(int i, int j, int k, int l) {
        return c_[((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    const std::vector<double>& data() const { return c_; }
    std::vector<double>& data() { return c_; }

    double frobenius_norm() const;

    // Worst-case violations of the defining identities, for diagnostics/tests.
    double max_antisymmetry_violation() const;
    double max_bianchi_violation() const;
    double max_trace_violation() const;

  private:
    int n_ = 0;
    std::vector<double> c_;
};

// Orthogonal projection of a dense rank-4 array onto the Weyl symmetry class.
// Idempotent; rejects n < 3. In dimension 3 the class is trivial and the
// result is the zero tensor.
AlgebraicWeyl project_to_weyl(const std::vector<double>& t, int n);

// Sum over all indices of (W_ijkl + W_ilkj)^2. Positive whenever W != 0.
double weyl_coupling_norm(const AlgebraicWeyl& w);

// Deterministic random element of the symmetry class; requires n >= 4
// (the class is trivial for n <= 3).
AlgebraicWeyl random_weyl(int n, std::uint64_t seed);

// Flat CSV rows (i,j,k,l,value). With nonzero_only, entries below 1e-14 in
// magnitude are skipped.
void write_tensor_csv(const AlgebraicWeyl& w, const std::string& path, bool nonzero_only = true);

} // namespace conformal
