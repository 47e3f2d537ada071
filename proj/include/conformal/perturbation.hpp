#pragma once

// The quadratic field H_ik(x) = sum_pq W_ipkq x_p x_q, its damped version
// Hbar = (1 - |x|^2) H, and the compactly supported trace-free perturbations
// h(x) that seed the blow-up metrics g = exp(h).

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>

#include "conformal/weyl.hpp"

namespace conformal {

class QuadraticHField {
  public:
    explicit QuadraticHField(std::shared_ptr<const AlgebraicWeyl> w) : w_(std::move(w)) {
        if (!w_) throw std::invalid_argument("QuadraticHField: null tensor");
    }

    int dim() const { return w_->dim(); }
    const AlgebraicWeyl& weyl() const { return *w_; }

    // H_ik(x); symmetric, trace-free, and H(x) x = 0 by the W symmetries.
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

    // Hbar_ik(x) = (1 - |x|^2) H_ik(x).
    Eigen::MatrixXd evaluate_bar(const Eigen::VectorXd& x) const;

  private:
    std::shared_ptr<const AlgebraicWeyl> w_;
};

struct PerturbationSpec {
    enum class Mode { kSingleBump, kSequence };
    Mode mode = Mode::kSingleBump;
    // SingleBump: h = mu (lambda^2 - |x|^2) H(x) for |x| <= rho, 0 for |x| >= 1,
    // blended smoothly in between. lambda = 0 gives the concentration-limit
    // field -mu |x|^2 H(x).
    double mu = 1.0;
    double lambda = 0.25;
    double rho = 0.5;
    // Sequence: h = sum_{N >= n0} eta(4 N^2 |x - y_N|) 2^{-N} (2^{-N} - |x - y_N|^2) H(x - y_N),
    // y_N = (1/N, 0, ..., 0).
    int n0 = 2;

    void validate() const {
        if (mu <= 0.0 || mu > 1.0) throw std::invalid_argument("PerturbationSpec: need 0 < mu <= 1");
        if (lambda < 0.0 || rho <= 0.0 || lambda > rho || rho > 1.0)
            throw std::invalid_argument("PerturbationSpec: need 0 <= lambda <= rho <= 1");
        if (mode == Mode::kSequence && n0 < 2)
            throw std::invalid_argument("PerturbationSpec: need N0 >= 2");
    }
};

class PerturbationField {
  public:
    PerturbationField(PerturbationSpec spec, std::shared_ptr<const AlgebraicWeyl> w)
        : spec_(spec), h_(std::move(w)) {
        spec_.validate();
    }

    int dim() const { return h_.dim(); }
    const PerturbationSpec& spec() const { return spec_; }

    // Trace-free symmetric h(x); vanishes for |x| >= 1.
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

    // Metric g(x) = exp(h(x)).
    Eigen::MatrixXd metric(const Eigen::VectorXd& x) const;

    // Measured sup of |h| + |dh| + |d^2 h| over a sample cloud (the paper's
    // alpha is only required "sufficiently small"; we report it).
    double measure_alpha(int samples_per_axis = 9, double fd_step = 1e-4) const;

  private:
    PerturbationSpec spec_;
    QuadraticHField h_;
};

// Symmetric matrix exponential; det(exp h) = exp(tr h).
Eigen::MatrixXd metric_exp(const Eigen::MatrixXd& h);

} // namespace conformal
