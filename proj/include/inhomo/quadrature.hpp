#pragma once

// Gauss-Hermite rules for expectations against N(0, I_kappa), plus a
// seeded Monte Carlo fallback for higher dimensions.

#include "inhomo/core.hpp"

#include <cstdint>
#include <random>

namespace inhomo {

struct QuadratureRule {
    enum class Kind { gauss_hermite_tensor, monte_carlo };
    Kind kind = Kind::gauss_hermite_tensor;
    int nodes = 61;              // per axis; odd so 0 is a node
    long samples = 1000000;      // monte carlo sample count
    std::uint64_t seed = 1;

    void validate() const {
        if (kind == Kind::gauss_hermite_tensor) {
            if (nodes < 1 || nodes % 2 == 0)
                throw SpecError("quadrature: node count must be odd");
        } else if (samples < 1) {
            throw SpecError("quadrature: sample count must be positive");
        }
    }
};

// One-dimensional rule for E_{z~N(0,1)} f(z) = sum_i w_i f(x_i).
// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
// polynomials: off-diagonal sqrt(k), weights from the first eigenvector
// components, normalized to sum to one.
struct Hermite1D {
    Vector x, w;

    static Hermite1D make(int n) {
        Matrix j = Matrix::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            double b = std::sqrt(static_cast<double>(k));
            j(k, k - 1) = b;
            j(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(j);
        Hermite1D q;
        q.x = es.eigenvalues();
        q.w = es.eigenvectors().row(0).transpose().array().square();
        q.w /= q.w.sum();
        // the middle node of an odd rule is 0 up to roundoff
        if (n % 2 == 1) q.x(n / 2) = 0.0;
        return q;
    }
};

// Iterates f(z, weight) over a kappa-dimensional expectation against
// N(0, I): either the tensor Gauss-Hermite grid or seeded Monte Carlo.
template <typename F>
void for_each_gaussian_node(const QuadratureRule& rule, int kappa, F&& f) {
    rule.validate();
    if (rule.kind == QuadratureRule::Kind::monte_carlo) {
        std::mt19937_64 gen(rule.seed);
        std::normal_distribution<double> nd;
        Vector z(kappa);
        double w = 1.0 / static_cast<double>(rule.samples);
        for (long i = 0; i < rule.samples; ++i) {
            for (int k = 0; k < kappa; ++k) z(k) = nd(gen);
            f(z, w);
        }
        return;
    }
    Hermite1D q = Hermite1D::make(rule.nodes);
    std::vector<int> idx(kappa, 0);
    Vector z(kappa);
    while (true) {
        double w = 1.0;
        for (int k = 0; k < kappa; ++k) {
            z(k) = q.x(idx[k]);
            w *= q.w(idx[k]);
        }
        f(z, w);
        int k = 0;
        for (; k < kappa; ++k) {
            if (++idx[k] < rule.nodes) break;
            idx[k] = 0;
        }
        if (k == kappa) break;
    }
}

}  // namespace inhomo
