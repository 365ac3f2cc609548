#pragma once

// Limiting spectrum of variance-profile Wigner matrices via the
// block-reduced quadratic vector equation (QVE)
//     m_s(z) = -1 / (z + sum_t rho_t (1/Delta_{st}) m_t(z)),
// plus Stieltjes inversion, support detection and finite-rank outlier
// prediction.

#include "inhomo/core.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace inhomo {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

struct QveOptions {
    double tol = 1e-12;      // residual ||m - f(m)||_inf
    int max_iter = 5000;
    double damping = 0.7;    // fallback damped-iteration step
};

struct QveResult {
    CVector m;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline CVector qve_map(const NoiseProfile& p, Complex z, const CVector& m) {
    CVector out(p.n);
    for (int s = 0; s < p.n; ++s) {
        Complex d = z;
        for (int t = 0; t < p.n; ++t)
            d += p.inv_delta(s, t) * p.rho(t) * m(t);
        out(s) = -1.0 / d;
    }
    return out;
}

}  // namespace detail

// Solves the QVE at one point z (Im z > 0). Newton steps with a damped
// fixed-point fallback; the iteration is started at -1/z unless a warm
// start is supplied (continuation keeps the physical branch near the
// real axis).
inline QveResult qve_solve(const NoiseProfile& profile, Complex z,
                           const QveOptions& opt = {},
                           const CVector* warm = nullptr) {
    if (z.imag() <= 0.0) throw SpecError("qve_solve: need Im z > 0");
    int n = profile.n;
    CVector m = warm ? *warm : CVector::Constant(n, -1.0 / z);
    QveResult res;
    CVector f = detail::qve_map(profile, z, m);
    double resid = (m - f).cwiseAbs().maxCoeff();
    for (int it = 1; it <= opt.max_iter; ++it) {
        res.iterations = it;
        if (resid < opt.tol) {
            res.converged = true;
            break;
        }
        // Newton on F(m) = m + 1/(z + S diag(rho) m):
        // J = I - diag(f^2) S diag(rho) since f = -1/(denominator).
        CMatrix j = CMatrix::Identity(n, n);
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t)
                j(s, t) -= f(s) * f(s) * profile.inv_delta(s, t) *
                           profile.rho(t);
        CVector step = j.partialPivLu().solve((f - m).eval());
        CVector m_new = m + step;
        CVector f_new = detail::qve_map(profile, z, m_new);
        double resid_new = (m_new - f_new).cwiseAbs().maxCoeff();
        if (!(resid_new < resid)) {
            // Newton overshot (near-singular Jacobian at an edge);
            // take a damped fixed-point step instead.
            m_new = (1.0 - opt.damping) * m + opt.damping * f;
            f_new = detail::qve_map(profile, z, m_new);
            resid_new = (m_new - f_new).cwiseAbs().maxCoeff();
        }
        m = m_new;
        f = f_new;
        resid = resid_new;
    }
    res.residual = resid;
    res.m = m;
    if (!res.converged)
        throw NumericError("qve_solve: no convergence, residual " +
                           std::to_string(resid));
    for (int s = 0; s < n; ++s)
        if (m(s).imag() < -1e-9)
            throw NumericError("qve_solve: solution left the upper half "
                               "plane (unphysical branch)");
    return res;
}

// QVE solution at x + i*eta for small eta, reached by continuation in
// the imaginary part from eta = 1 (where the solve is contractive).
inline QveResult qve_solve_near_axis(const NoiseProfile& profile, double x,
                                     double eta, const QveOptions& opt = {}) {
    if (eta <= 0.0) throw SpecError("qve_solve_near_axis: eta must be > 0");
    QveResult res;
    const CVector* warm = nullptr;
    double cur = 1.0;
    while (true) {
        if (cur < eta) cur = eta;
        res = qve_solve(profile, Complex(x, cur), opt, warm);
        warm = &res.m;
        if (cur == eta) break;
        cur /= 10.0;
    }
    return res;
}

// Spectral density rho(x) = (1/pi) Im sum_s rho_s m_s(x + i eta).
inline double density_at(const NoiseProfile& profile, double x, double eta,
                         const QveOptions& opt = {}) {
    QveResult r = qve_solve_near_axis(profile, x, eta, opt);
    double im = 0.0;
    for (int s = 0; s < profile.n; ++s)
        im += profile.rho(s) * r.m(s).imag();
    return im / M_PI;
}

struct DensityPoint {
    double x = 0.0;
    double rho = 0.0;
};

inline std::vector<DensityPoint> density(const NoiseProfile& profile,
                                         const std::vector<double>& xs,
                                         double eta,
                                         const QveOptions& opt = {}) {
    std::vector<DensityPoint> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back({x, density_at(profile, x, eta, opt)});
    return out;
}

struct SupportInterval {
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {

// Spectral radius bound: the support lies within [-b, b] for
// b = 2 sqrt(max_s sum_t rho_t / Delta_{st}).
inline double support_bound(const NoiseProfile& profile) {
    double max_row = 0.0;
    for (int s = 0; s < profile.n; ++s)
        max_row = std::max(max_row,
                           (profile.inv_delta.row(s).transpose().array() *
                            profile.rho.array()).sum());
    return 2.0 * std::sqrt(max_row);
}

}  // namespace detail

inline constexpr double kEdgeEta = 1e-9;        // probe height for edges
inline constexpr double kEdgeDensityTol = 1e-6; // inside-support threshold

// Maximal intervals where the density is positive: classify a coarse
// grid at eta = 1e-9, then refine each boundary by bisection to 1e-8.
inline std::vector<SupportInterval> support_edges(
    const NoiseProfile& profile, int coarse_points = 800,
    const QveOptions& opt = {}) {
    double b = detail::support_bound(profile);
    if (!(b > 0.0)) throw SpecError("support_edges: degenerate zero profile");
    double lo = -b - 0.1, hi = b + 0.1;
    auto inside = [&](double x) {
        return density_at(profile, x, kEdgeEta, opt) > kEdgeDensityTol;
    };
    std::vector<double> xs(coarse_points);
    std::vector<bool> in(coarse_points);
    for (int i = 0; i < coarse_points; ++i) {
        xs[i] = lo + (hi - lo) * i / (coarse_points - 1);
        in[i] = inside(xs[i]);
    }
    auto bisect = [&](double out_x, double in_x) {
        // invariant: inside(in_x), !inside(out_x)
        while (std::abs(in_x - out_x) > 1e-8) {
            double mid = (out_x + in_x) / 2.0;
            (inside(mid) ? in_x : out_x) = mid;
        }
        return (out_x + in_x) / 2.0;
    };
    std::vector<SupportInterval> intervals;
    int i = 0;
    while (i < coarse_points) {
        if (!in[i]) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < coarse_points && in[j + 1]) ++j;
        SupportInterval iv;
        iv.lo = (i == 0) ? xs[0] : bisect(xs[i - 1], xs[i]);
        iv.hi = (j == coarse_points - 1) ? xs[j] : bisect(xs[j + 1], xs[j]);
        intervals.push_back(iv);
        i = j + 1;
    }
    if (intervals.empty())
        throw NumericError("support_edges: no support detected");
    return intervals;
}

struct OutlierDirection {
    double theta = 0.0;           // spike strength (eigenvalue of E x x^T)
    Vector gammas;                // eigenvalues of the spike matrix M
    std::vector<double> outliers; // roots above the upper support edge
    bool degenerate = false;      // tangential root (sign change unresolved)
};

struct OutlierReport {
    std::vector<SupportInterval> support;
    std::vector<OutlierDirection> directions;

    bool any_outlier() const {
        for (const auto& d : directions)
            if (!d.outliers.empty()) return true;
        return false;
    }
    double top() const {
        double t = -std::numeric_limits<double>::infinity();
        for (const auto& d : directions)
            for (double x : d.outliers) t = std::max(t, x);
        return t;
    }
};

// Predicted outlier locations: for each eigendirection of E[x x^T]
// with strength theta, the spike matrix M_st = theta sqrt(rho_s rho_t)
// / Delta_{st} produces outliers at the roots of
//     G(lambda) = det(I + diag(m(lambda)) M)
// to the right of the support (m real and negative there, so G -> 1 at
// infinity and dips negative when an eigenvalue pops out of the bulk).
inline OutlierReport outlier_predict(const NoiseProfile& profile,
                                     const Prior& prior,
                                     const QveOptions& opt = {}) {
    OutlierReport rep;
    rep.support = support_edges(profile, 800, opt);
    double edge = rep.support.back().hi;

    auto g_det = [&](const Matrix& spike, double lam) {
        QveResult r = qve_solve_near_axis(profile, lam, kEdgeEta, opt);
        Matrix md = Matrix::Zero(profile.n, profile.n);
        for (int s = 0; s < profile.n; ++s) md(s, s) = r.m(s).real();
        return (Matrix::Identity(profile.n, profile.n) + md * spike)
            .determinant();
    };

    Eigen::SelfAdjointEigenSolver<Matrix> pes(prior.second_moment());
    Vector sr = profile.rho.cwiseSqrt();
    for (int j = 0; j < prior.kappa; ++j) {
        double theta = pes.eigenvalues()(j);
        if (theta <= 1e-14) continue;
        OutlierDirection dir;
        dir.theta = theta;
        Matrix spike =
            theta * (sr.asDiagonal() * profile.inv_delta * sr.asDiagonal());
        Eigen::SelfAdjointEigenSolver<Matrix> ses(spike,
                                                  Eigen::EigenvaluesOnly);
        dir.gammas = ses.eigenvalues();

        double lam_lo = edge + 1e-4;
        double lam_hi = edge + dir.gammas.cwiseAbs().maxCoeff() + 1.0;
        const int grid = 600;
        double prev_lam = lam_lo, prev_g = g_det(spike, lam_lo);
        for (int i = 1; i <= grid; ++i) {
            double lam = lam_lo + (lam_hi - lam_lo) * i / grid;
            double g = g_det(spike, lam);
            if ((prev_g < 0.0) != (g < 0.0)) {
                double a = prev_lam, b = lam, ga = prev_g;
                while (b - a > 1e-10) {
                    double mid = (a + b) / 2.0;
                    double gm = g_det(spike, mid);
                    if ((ga < 0.0) == (gm < 0.0)) {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                }
                dir.outliers.push_back((a + b) / 2.0);
            } else if (g == 0.0) {
                dir.degenerate = true;  // tangential zero, no sign change
            }
            prev_lam = lam;
            prev_g = g;
        }
        rep.directions.push_back(std::move(dir));
    }
    return rep;
}

}  // namespace inhomo
