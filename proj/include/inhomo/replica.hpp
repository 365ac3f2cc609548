#pragma once

// Replica-symmetric functional phi(Q), its fixed-point equation, the
// limiting free energy and the limiting MMSE.

#include "inhomo/core.hpp"
#include "inhomo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace inhomo {

// Conjugate overlaps: Q_tilde_s = sum_t inv_delta[s][t] rho_t Q_t.
inline std::vector<Matrix> tilde_map(const std::vector<Matrix>& q,
                                     const NoiseProfile& profile) {
    if (static_cast<int>(q.size()) != profile.n)
        throw SpecError("tilde_map: block count mismatch");
    std::vector<Matrix> qt(q.size());
    for (int s = 0; s < profile.n; ++s) {
        Matrix acc = Matrix::Zero(q[0].rows(), q[0].cols());
        for (int t = 0; t < profile.n; ++t)
            acc += profile.inv_delta(s, t) * profile.rho(t) * q[t];
        qt[s] = acc;
    }
    return qt;
}

namespace detail {

// Per-atom cached quantities for the single-site Gibbs measure with
// Hamiltonian (Qt x0 + sqrt(Qt) z)^T x - x^T Qt x / 2.
struct GibbsCache {
    const Prior* prior;
    Matrix qt, sqrt_qt;
    std::vector<double> log_w;      // ln weight - x_a^T Qt x_a / 2
    std::vector<const Vector*> xs;  // atoms with nonzero weight

    GibbsCache(const Matrix& qt_, const Prior& p) : prior(&p), qt(qt_) {
        if (!is_psd(qt)) throw SpecError("gibbs: Q_tilde must be PSD");
        sqrt_qt = psd_sqrt(qt);
        if (p.gaussian) return;
        for (size_t a = 0; a < p.atoms.size(); ++a) {
            if (p.weights[a] <= 0.0) continue;
            xs.push_back(&p.atoms[a]);
            log_w.push_back(std::log(p.weights[a]) -
                            0.5 * p.atoms[a].dot(qt * p.atoms[a]));
        }
    }

    // log Z(h) and the Gibbs mean <x> for the local field h.
    double log_z(const Vector& h, Vector* mean) const {
        double lmax = -std::numeric_limits<double>::infinity();
        thread_local std::vector<double> ls;
        ls.resize(xs.size());
        for (size_t a = 0; a < xs.size(); ++a) {
            ls[a] = h.dot(*xs[a]) + log_w[a];
            lmax = std::max(lmax, ls[a]);
        }
        double z = 0.0;
        if (mean) mean->setZero();
        for (size_t a = 0; a < xs.size(); ++a) {
            double e = std::exp(ls[a] - lmax);
            z += e;
            if (mean) *mean += e * (*xs[a]);
        }
        if (mean) *mean /= z;
        return lmax + std::log(z);
    }
};

}  // namespace detail

// E_{z,x0}[<x><x>^T] for the single-site Gibbs measure at Q_tilde_s.
// Closed form I - (Qt + I)^{-1} for the standard Gaussian prior; exact
// sums over the finite prior otherwise, with quadrature over z.
inline Matrix gibbs_moment(const Matrix& q_tilde, const Prior& prior,
                           const QuadratureRule& quad = {}) {
    int kappa = prior.kappa;
    if (q_tilde.rows() != kappa || q_tilde.cols() != kappa)
        throw SpecError("gibbs_moment: dimension mismatch");
    if (prior.gaussian) {
        if (!is_psd(q_tilde)) throw SpecError("gibbs: Q_tilde must be PSD");
        Matrix id = Matrix::Identity(kappa, kappa);
        return id - (q_tilde + id).inverse();
    }
    detail::GibbsCache g(q_tilde, prior);
    Matrix acc = Matrix::Zero(kappa, kappa);
    Vector mean(kappa);
    for (size_t a0 = 0; a0 < prior.atoms.size(); ++a0) {
        double w0 = prior.weights[a0];
        if (w0 <= 0.0) continue;
        Vector base = q_tilde * prior.atoms[a0];
        for_each_gaussian_node(quad, kappa, [&](const Vector& z, double wz) {
            Vector h = base + g.sqrt_qt * z;
            g.log_z(h, &mean);
            acc += (w0 * wz) * (mean * mean.transpose());
        });
    }
    return acc;
}

// E_{z,x0}[x0 <x>^T]; equals gibbs_moment at any fixed point (Nishimori).
inline Matrix gibbs_cross_moment(const Matrix& q_tilde, const Prior& prior,
                                 const QuadratureRule& quad = {}) {
    if (prior.gaussian) return gibbs_moment(q_tilde, prior, quad);
    detail::GibbsCache g(q_tilde, prior);
    Matrix acc = Matrix::Zero(prior.kappa, prior.kappa);
    Vector mean(prior.kappa);
    for (size_t a0 = 0; a0 < prior.atoms.size(); ++a0) {
        double w0 = prior.weights[a0];
        if (w0 <= 0.0) continue;
        Vector base = q_tilde * prior.atoms[a0];
        for_each_gaussian_node(quad, prior.kappa,
                               [&](const Vector& z, double wz) {
            Vector h = base + g.sqrt_qt * z;
            g.log_z(h, &mean);
            acc += (w0 * wz) * (prior.atoms[a0] * mean.transpose());
        });
    }
    return acc;
}

// Replica-symmetric functional
//   phi(Q) = -sum_{s,t} (rho_s rho_t / 4 Delta_st) Tr(Q_s Q_t)
//          + sum_s rho_s E ln Int exp((Qt x0 + sqrt(Qt) z)^T x
//                                     - x^T Qt x / 2) dP0(x).
// For the Gaussian prior the inner integral is carried out in closed
// form and only the outer expectation is done by quadrature.
inline double phi(const std::vector<Matrix>& q, const NoiseProfile& profile,
                  const Prior& prior, const QuadratureRule& quad = {}) {
    if (static_cast<int>(q.size()) != profile.n)
        throw SpecError("phi: block count mismatch");
    for (const auto& qs : q)
        if (!is_psd(qs)) throw SpecError("phi: Q_s must be PSD");
    double quadratic = 0.0;
    for (int s = 0; s < profile.n; ++s)
        for (int t = 0; t < profile.n; ++t)
            quadratic += profile.rho(s) * profile.rho(t) *
                         profile.inv_delta(s, t) * (q[s] * q[t]).trace() / 4.0;

    std::vector<Matrix> qt = tilde_map(q, profile);
    int kappa = prior.kappa;
    Matrix id = Matrix::Identity(kappa, kappa);
    double entropy = 0.0;
    for (int s = 0; s < profile.n; ++s) {
        double es = 0.0;
        if (prior.gaussian) {
            // Int over the Gaussian prior is itself Gaussian; the field
            // h = Qt x0 + sqrt(Qt) z has covariance Qt^2 + Qt, so the
            // remaining expectation is over a single kappa-dim normal.
            Matrix a = qt[s] + id;
            Eigen::LLT<Matrix> llt(a);
            double logdet = 0.0;
            for (int k = 0; k < kappa; ++k)
                logdet += 2.0 * std::log(llt.matrixL()(k, k));
            Matrix field_cov_sqrt = psd_sqrt(qt[s] * qt[s] + qt[s]);
            Matrix ainv = a.inverse();
            for_each_gaussian_node(quad, kappa,
                                   [&](const Vector& u, double wu) {
                Vector h = field_cov_sqrt * u;
                es += wu * 0.5 * h.dot(ainv * h);
            });
            es -= 0.5 * logdet;
        } else {
            detail::GibbsCache g(qt[s], prior);
            for (size_t a0 = 0; a0 < prior.atoms.size(); ++a0) {
                double w0 = prior.weights[a0];
                if (w0 <= 0.0) continue;
                Vector base = qt[s] * prior.atoms[a0];
                for_each_gaussian_node(quad, kappa,
                                       [&](const Vector& z, double wz) {
                    Vector h = base + g.sqrt_qt * z;
                    es += w0 * wz * g.log_z(h, nullptr);
                });
            }
        }
        entropy += profile.rho(s) * es;
    }
    return -quadratic + entropy;
}

inline double phi(const OverlapState& state, const NoiseProfile& profile,
                  const Prior& prior, const QuadratureRule& quad = {}) {
    return phi(state.Q, profile, prior, quad);
}

// Closed form for the standard Gaussian prior:
//   phi_g(Q) = -sum (rho rho / 4 Delta) Tr(Q_s Q_t)
//            + sum_s (rho_s/2) (Tr Qt_s - ln det(Qt_s + I)).
inline double phi_gaussian(const std::vector<Matrix>& q,
                           const NoiseProfile& profile) {
    for (const auto& qs : q)
        if (!is_psd(qs)) throw SpecError("phi_gaussian: Q_s must be PSD");
    double quadratic = 0.0;
    for (int s = 0; s < profile.n; ++s)
        for (int t = 0; t < profile.n; ++t)
            quadratic += profile.rho(s) * profile.rho(t) *
                         profile.inv_delta(s, t) * (q[s] * q[t]).trace() / 4.0;
    std::vector<Matrix> qt = tilde_map(q, profile);
    int kappa = static_cast<int>(q[0].rows());
    Matrix id = Matrix::Identity(kappa, kappa);
    double entropy = 0.0;
    for (int s = 0; s < profile.n; ++s) {
        Eigen::LLT<Matrix> llt(qt[s] + id);
        if (llt.info() != Eigen::Success)
            throw NumericError("phi_gaussian: Qt + I not positive definite");
        double logdet = 0.0;
        for (int k = 0; k < kappa; ++k)
            logdet += 2.0 * std::log(llt.matrixL()(k, k));
        entropy += profile.rho(s) / 2.0 * (qt[s].trace() - logdet);
    }
    return -quadratic + entropy;
}

struct FixedPointResult {
    OverlapState state;
    double residual = 0.0;   // max-entry mismatch of the undamped map
    int iterations = 0;
    bool converged = false;
};

struct FixedPointOptions {
    double damping = 0.5;
    int max_iter = 10000;
    double tol = 1e-10;
    QuadratureRule quad;
};

// Damped iteration of Qt_s <- sum_t (rho_t/Delta_st) f(Qt_t) with
// f = gibbs_moment. On exit Q_t = f(Qt_t) so the state is consistent.
inline FixedPointResult fixed_point(const NoiseProfile& profile,
                                    const Prior& prior,
                                    const OverlapState& init,
                                    const FixedPointOptions& opt = {}) {
    if (opt.damping <= 0.0 || opt.damping > 1.0)
        throw SpecError("fixed_point: damping must be in (0,1]");
    int n = profile.n;
    std::vector<Matrix> qt;
    if (!init.Q_tilde.empty())
        qt = init.Q_tilde;
    else
        qt = tilde_map(init.Q, profile);
    for (const auto& m : qt)
        if (!is_psd(m)) throw SpecError("fixed_point: init must be PSD");

    double c2 = prior.gaussian
                    ? 1.0
                    : prior.support_bound * prior.support_bound;
    double max_row = 0.0;
    for (int s = 0; s < n; ++s)
        max_row = std::max(max_row,
                           (profile.inv_delta.row(s).transpose().array() *
                            profile.rho.array()).sum());
    double divergence_bound = 10.0 * prior.kappa * c2 * std::max(max_row, 1.0);

    FixedPointResult res;
    std::vector<Matrix> f(n), target(n);
    for (int it = 1; it <= opt.max_iter; ++it) {
        for (int t = 0; t < n; ++t)
            f[t] = gibbs_moment(qt[t], prior, opt.quad);
        double change = 0.0;
        for (int s = 0; s < n; ++s) {
            Matrix acc = Matrix::Zero(prior.kappa, prior.kappa);
            for (int t = 0; t < n; ++t)
                acc += profile.inv_delta(s, t) * profile.rho(t) * f[t];
            target[s] = acc;
            change = std::max(change,
                              (target[s] - qt[s]).cwiseAbs().maxCoeff());
        }
        for (int s = 0; s < n; ++s) {
            qt[s] = (1.0 - opt.damping) * qt[s] + opt.damping * target[s];
            if (qt[s].cwiseAbs().maxCoeff() > divergence_bound)
                throw NumericError("fixed_point: iterate diverged");
        }
        res.iterations = it;
        res.residual = change;
        if (change < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.state.Q_tilde = qt;
    res.state.Q.resize(n);
    for (int t = 0; t < n; ++t)
        res.state.Q[t] = gibbs_moment(qt[t], prior, opt.quad);
    return res;
}

struct Branch {
    double phi = 0.0;
    OverlapState state;
    double residual = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct FreeEnergyResult {
    double phi_star = 0.0;
    OverlapState q_star;
    std::vector<Branch> branches;  // distinct local maxima, phi descending
};

namespace detail {

inline double state_distance(const OverlapState& a, const OverlapState& b) {
    double d = 0.0;
    for (size_t s = 0; s < a.Q.size(); ++s)
        d = std::max(d, (a.Q[s] - b.Q[s]).cwiseAbs().maxCoeff());
    return d;
}

// Lexicographic comparison of flattened Q entries, for deterministic
// tie-breaking independent of start ordering.
inline bool state_less(const OverlapState& a, const OverlapState& b) {
    for (size_t s = 0; s < a.Q.size(); ++s)
        for (int i = 0; i < a.Q[s].rows(); ++i)
            for (int j = 0; j < a.Q[s].cols(); ++j) {
                if (a.Q[s](i, j) < b.Q[s](i, j)) return true;
                if (a.Q[s](i, j) > b.Q[s](i, j)) return false;
            }
    return false;
}

}  // namespace detail

inline std::vector<OverlapState> default_starts(const NoiseProfile& profile,
                                                const Prior& prior) {
    int n = profile.n, kappa = prior.kappa;
    OverlapState eps, informative;
    eps.Q.assign(n, 1e-2 * Matrix::Identity(kappa, kappa));
    informative.Q.assign(n, prior.second_moment());
    return {eps, informative};
}

// sup_Q phi(Q) by multistart fixed-point iteration. Always evaluates the
// trivial point Q = 0 as well, and reports every distinct local maximum
// found (the two-branch structure near a first-order transition).
inline FreeEnergyResult free_energy(const NoiseProfile& profile,
                                    const Prior& prior,
                                    const FixedPointOptions& opt = {},
                                    std::vector<OverlapState> starts = {}) {
    if (starts.empty()) starts = default_starts(profile, prior);
    int n = profile.n, kappa = prior.kappa;

    FreeEnergyResult out;
    std::vector<Branch> branches;

    Branch zero;
    zero.state.Q.assign(n, Matrix::Zero(kappa, kappa));
    zero.state.Q_tilde.assign(n, Matrix::Zero(kappa, kappa));
    zero.phi = phi(zero.state.Q, profile, prior, opt.quad);
    branches.push_back(zero);

    for (const auto& start : starts) {
        FixedPointResult fp = fixed_point(profile, prior, start, opt);
        Branch b;
        b.state = fp.state;
        b.residual = fp.residual;
        b.iterations = fp.iterations;
        b.converged = fp.converged;
        b.phi = phi(fp.state.Q, profile, prior, opt.quad);
        bool dup = false;
        for (auto& existing : branches)
            if (detail::state_distance(existing.state, b.state) < 1e-6) {
                dup = true;
                break;
            }
        if (!dup) branches.push_back(b);
    }

    std::sort(branches.begin(), branches.end(),
              [](const Branch& a, const Branch& b) {
                  if (a.phi != b.phi) return a.phi > b.phi;
                  return detail::state_less(a.state, b.state);
              });
    out.branches = branches;
    out.phi_star = branches.front().phi;
    out.q_star = branches.front().state;
    return out;
}

// Limiting matrix MMSE: baseline ||E[x x^T]||_F^2 minus the overlap
// term, clamped to [0, baseline].
inline double mmse(const OverlapState& q_star, const Prior& prior,
                   const NoiseProfile& profile) {
    Matrix m0 = prior.second_moment();
    double baseline = m0.squaredNorm();
    double overlap = 0.0;
    for (int s = 0; s < profile.n; ++s)
        for (int t = 0; t < profile.n; ++t)
            overlap += profile.rho(s) * profile.rho(t) *
                       (q_star.Q[s] * q_star.Q[t]).trace();
    return std::clamp(baseline - overlap, 0.0, baseline);
}

}  // namespace inhomo
