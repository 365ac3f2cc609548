#pragma once

// Domain types and validators shared by every other header: finitely
// supported priors, block-constant noise profiles and overlap states.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace inhomo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when an input violates a model invariant (bad spec file, bad
// arguments). The CLI maps this to exit code 2.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an iterative solver fails to converge or a numeric
// routine detects divergence. The CLI maps this to exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kPsdTol = 1e-10;    // tolerance on smallest eigenvalue
inline constexpr double kSumTol = 1e-12;    // tolerance on probability sums

// Finitely supported signal distribution on kappa-dimensional points.
// A standard Gaussian prior is represented symbolically via the flag
// (the Gaussian case has closed forms and no atoms).
struct Prior {
    int kappa = 1;
    std::vector<Vector> atoms;
    std::vector<double> weights;
    double support_bound = 1.0;   // C: every atom coordinate has |.| <= C
    bool gaussian = false;

    static Prior finite(int kappa, std::vector<Vector> atoms,
                        std::vector<double> weights) {
        Prior p;
        p.kappa = kappa;
        p.atoms = std::move(atoms);
        p.weights = std::move(weights);
        double c = 0.0;
        for (const auto& a : p.atoms) c = std::max(c, a.cwiseAbs().maxCoeff());
        p.support_bound = c > 0 ? c : 1.0;
        p.validate();
        return p;
    }

    // Scalar prior with P(+a)=P(-a)=p, P(0)=1-2p. p=1/2 is Rademacher.
    static Prior sparse_rademacher(double p, double a = 1.0) {
        std::vector<Vector> atoms;
        std::vector<double> w;
        atoms.push_back(Vector::Constant(1, a));
        w.push_back(p);
        atoms.push_back(Vector::Constant(1, -a));
        w.push_back(p);
        if (p < 0.5) {
            atoms.push_back(Vector::Zero(1));
            w.push_back(1.0 - 2.0 * p);
        }
        return finite(1, std::move(atoms), std::move(w));
    }

    static Prior standard_gaussian(int kappa) {
        Prior p;
        p.kappa = kappa;
        p.gaussian = true;
        p.support_bound = 1.0;  // unused; kept positive for bound formulas
        return p;
    }

    void validate() const {
        if (kappa < 1) throw SpecError("prior: kappa must be >= 1");
        if (gaussian) return;
        if (atoms.empty() || atoms.size() != weights.size())
            throw SpecError("prior: atoms/weights size mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0) throw SpecError("prior: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw SpecError("prior: weights must sum to 1");
        for (const auto& a : atoms) {
            if (a.size() != kappa) throw SpecError("prior: atom dimension != kappa");
            if (a.cwiseAbs().maxCoeff() > support_bound + kSumTol)
                throw SpecError("prior: atom outside support bound");
        }
    }

    Vector mean() const {
        if (gaussian) return Vector::Zero(kappa);
        Vector m = Vector::Zero(kappa);
        for (size_t a = 0; a < atoms.size(); ++a) m += weights[a] * atoms[a];
        return m;
    }

    // E[x x^T]; identity for the standard Gaussian.
    Matrix second_moment() const {
        if (gaussian) return Matrix::Identity(kappa, kappa);
        Matrix m = Matrix::Zero(kappa, kappa);
        for (size_t a = 0; a < atoms.size(); ++a)
            m += weights[a] * atoms[a] * atoms[a].transpose();
        return m;
    }

    bool centered(double tol = 1e-10) const {
        return mean().cwiseAbs().maxCoeff() <= tol;
    }
};

// Block structure of the noise: proportions rho_s and the symmetric
// matrix of inverse variances 1/Delta_{st}.
struct NoiseProfile {
    int n = 1;
    Vector rho;
    Matrix inv_delta;

    NoiseProfile() = default;
    NoiseProfile(Vector rho_, Matrix inv_delta_)
        : n(static_cast<int>(rho_.size())),
          rho(std::move(rho_)),
          inv_delta(std::move(inv_delta_)) {
        validate();
    }

    static NoiseProfile homogeneous(double snr) {
        return NoiseProfile(Vector::Constant(1, 1.0),
                            Matrix::Constant(1, 1, snr));
    }

    void validate() const {
        if (n < 1 || rho.size() != n)
            throw SpecError("profile: need at least one block");
        if (inv_delta.rows() != n || inv_delta.cols() != n)
            throw SpecError("profile: inv_delta must be n x n");
        double sum = 0.0;
        for (int s = 0; s < n; ++s) {
            if (rho(s) <= 0.0 || rho(s) > 1.0 + kSumTol)
                throw SpecError("profile: proportions must lie in (0,1]");
            sum += rho(s);
        }
        if (std::abs(sum - 1.0) > kSumTol)
            throw SpecError("profile: proportions must sum to 1");
        if (!inv_delta.isApprox(inv_delta.transpose(), kSumTol))
            throw SpecError("profile: inv_delta must be symmetric");
    }
};

// Overlap matrices Q_s and their noise-weighted conjugates.
struct OverlapState {
    std::vector<Matrix> Q;
    std::vector<Matrix> Q_tilde;
};

inline bool is_psd(const Matrix& m, double tol = kPsdTol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

inline Matrix psd_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct ProfileValidation {
    bool psd = false;
    double min_eigenvalue = 0.0;
    double max_entry = 0.0;         // entry bound q
    bool irreducible = false;
    int power = 1;                  // L used for the irreducibility check
    double empirical_m_bound = -1;  // max |m(z)| probe; filled by the caller
    bool passed = false;
    std::vector<std::string> failures;
};

// Hypothesis checks on a noise profile: positive semidefiniteness, the
// entry bound, and block irreducibility of (inv_delta * diag(rho))^L.
// Structural defects (asymmetry, negative entries) throw before any
// check runs.
inline ProfileValidation validate_noise_profile(const NoiseProfile& profile,
                                                int qve_power) {
    profile.validate();
    if (qve_power < 1) throw SpecError("validate: qve_power must be >= 1");
    if (profile.inv_delta.minCoeff() < 0.0)
        throw SpecError("validate: inv_delta has a negative entry");

    ProfileValidation rep;
    rep.power = qve_power;
    Eigen::SelfAdjointEigenSolver<Matrix> es(profile.inv_delta,
                                             Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
    rep.psd = rep.min_eigenvalue >= -kPsdTol;
    if (!rep.psd) rep.failures.push_back("inv_delta is not positive semidefinite");

    rep.max_entry = profile.inv_delta.maxCoeff();

    Matrix p = profile.inv_delta * profile.rho.asDiagonal();
    Matrix pw = Matrix::Identity(profile.n, profile.n);
    for (int k = 0; k < qve_power; ++k) pw = pw * p;
    rep.irreducible = pw.minCoeff() > 0.0;
    if (!rep.irreducible)
        rep.failures.push_back("(inv_delta*diag(rho))^L has a zero entry");

    rep.passed = rep.psd && rep.irreducible;
    return rep;
}

// Piecewise-constant approximation of a continuous inverse-variance
// kernel on [0,1]^2: uniform blocks, midpoint evaluation.
inline NoiseProfile discretize_kernel(
    const std::function<double(double, double)>& inv_delta_fn, int n) {
    if (n < 1) throw SpecError("discretize_kernel: n must be >= 1");
    Matrix s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = inv_delta_fn((i + 0.5) / n, (j + 0.5) / n);
            if (!(v > 0.0))
                throw SpecError("discretize_kernel: kernel must be positive");
            s(i, j) = v;
        }
    s = ((s + s.transpose()) / 2.0).eval();  // symmetrize rounding noise
    return NoiseProfile(Vector::Constant(n, 1.0 / n), s);
}

// Largest-magnitude eigenvalue of diag(sqrt(rho)) M diag(sqrt(rho)).
inline double scaled_op_norm(const Matrix& m, const Vector& rho) {
    if (m.rows() != rho.size() || m.cols() != rho.size())
        throw SpecError("scaled_op_norm: dimension mismatch");
    Vector sr = rho.cwiseSqrt();
    Matrix a = sr.asDiagonal() * m * sr.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace inhomo
