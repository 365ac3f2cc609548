#pragma once

// Closed-form detectability bounds, the BBP comparison, the threshold
// gap inequality, and phase-diagram scans along profile families.

#include "inhomo/core.hpp"
#include "inhomo/replica.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace inhomo {

enum class Detectability { undetectable, detectable, undetermined };

inline const char* to_string(Detectability c) {
    switch (c) {
        case Detectability::undetectable: return "undetectable";
        case Detectability::detectable: return "detectable";
        case Detectability::undetermined: return "undetermined";
    }
    return "?";
}

struct ThresholdReport {
    double op_norm_it = 0.0;    // ||sqrt(rho) (1/Delta) sqrt(rho)||_op
    double lower_bound = 0.0;   // 1/(9 kappa^4 C^6): below this, phi* = 0
    double upper_bound = 0.0;   // 1/||Cov(x)||_op^2: above this, phi* > 0
    double bbp_norm = 0.0;      // same norm of the entrywise sqrt
    double bbp_threshold = 0.0; // 1/||Cov(x)||_op
    Detectability classification = Detectability::undetermined;
    bool centered = true;
};

// Information-theoretic bounds on the detectability transition in
// terms of the scaled operator norm of 1/Delta.
inline ThresholdReport recovery_bounds(const NoiseProfile& profile,
                                       const Prior& prior) {
    ThresholdReport rep;
    rep.op_norm_it = scaled_op_norm(profile.inv_delta, profile.rho);
    double c = prior.support_bound;
    double k = prior.kappa;
    rep.lower_bound = 1.0 / (9.0 * k * k * k * k * c * c * c * c * c * c);
    Matrix cov = prior.second_moment();  // = Cov(x) for centered priors
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    double cov_norm = es.eigenvalues().cwiseAbs().maxCoeff();
    rep.upper_bound = 1.0 / (cov_norm * cov_norm);
    rep.bbp_norm = scaled_op_norm(profile.inv_delta.cwiseSqrt(), profile.rho);
    rep.bbp_threshold = 1.0 / cov_norm;
    rep.centered = prior.gaussian || prior.centered();
    if (!rep.centered)
        rep.classification = Detectability::undetermined;
    else if (rep.op_norm_it < rep.lower_bound)
        rep.classification = Detectability::undetectable;
    else if (rep.op_norm_it > rep.upper_bound)
        rep.classification = Detectability::detectable;
    else
        rep.classification = Detectability::undetermined;
    return rep;
}

struct BbpResult {
    double bbp_norm = 0.0;
    double threshold = 0.0;
    bool outlier_predicted = false;
};

// Spectral detectability: an outlier leaves the bulk when the scaled
// op-norm of the entrywise sqrt of 1/Delta exceeds 1/||Cov(x)||_op.
inline BbpResult bbp_threshold(const NoiseProfile& profile,
                               const Prior& prior) {
    BbpResult r;
    r.bbp_norm = scaled_op_norm(profile.inv_delta.cwiseSqrt(), profile.rho);
    Matrix cov = prior.second_moment();
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    r.threshold = 1.0 / es.eigenvalues().cwiseAbs().maxCoeff();
    r.outlier_predicted = r.bbp_norm > r.threshold;
    return r;
}

struct GapResult {
    double lhs = 0.0;  // bbp_norm^2
    double rhs = 0.0;  // op_norm_it
    bool equality = false;
};

// bbp_norm^2 <= op_norm_it for every nonnegative profile, with equality
// exactly for constant 1/Delta: the spectrally detectable regime sits
// inside the information-theoretically detectable one.
inline GapResult gap_check(const NoiseProfile& profile) {
    if (profile.inv_delta.minCoeff() < 0.0)
        throw SpecError("gap_check: inv_delta entries must be nonnegative");
    GapResult g;
    double b = scaled_op_norm(profile.inv_delta.cwiseSqrt(), profile.rho);
    g.lhs = b * b;
    g.rhs = scaled_op_norm(profile.inv_delta, profile.rho);
    if (g.lhs > g.rhs + 1e-12)
        throw NumericError("gap_check: inequality violated (library bug)");
    g.equality = std::abs(g.lhs - g.rhs) < 1e-10;
    return g;
}

// One-parameter family of noise profiles: inv_delta(t) = t * shape.
struct ProfileFamily {
    Vector rho;
    Matrix shape;

    NoiseProfile at(double t) const {
        if (t < 0.0) throw SpecError("profile family: t must be >= 0");
        return NoiseProfile(rho, t * shape);
    }
};

struct ScanRow {
    double t = 0.0;
    double op_norm = 0.0;
    double phi_star = 0.0;
    std::vector<double> phi_branches;  // distinct local maxima, descending
    double mmse = 0.0;
    double q_norm = 0.0;               // rho-weighted ||Q*||_F
    Detectability classification = Detectability::undetermined;
    bool bbp_outlier = false;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    bool transition_found = false;
    double t_star = 0.0;        // first t with phi* > threshold, refined
    double op_norm_star = 0.0;  // op-norm at t_star
    bool first_order = false;   // jump in Q* at the transition
    double q_jump = 0.0;        // normalized ||Q*||_F jump across t_star
};

namespace detail {

inline ScanRow scan_point(const ProfileFamily& family, double t,
                          const Prior& prior, const FixedPointOptions& opt) {
    NoiseProfile profile = family.at(t);
    ScanRow row;
    row.t = t;
    row.op_norm = scaled_op_norm(profile.inv_delta, profile.rho);
    FreeEnergyResult fe = free_energy(profile, prior, opt);
    row.phi_star = fe.phi_star;
    for (const auto& b : fe.branches) row.phi_branches.push_back(b.phi);
    row.mmse = mmse(fe.q_star, prior, profile);
    double qn = 0.0;
    for (int s = 0; s < profile.n; ++s)
        qn += profile.rho(s) * fe.q_star.Q[s].squaredNorm();
    row.q_norm = std::sqrt(qn);
    ThresholdReport rep = recovery_bounds(profile, prior);
    row.classification = rep.classification;
    row.bbp_outlier = rep.bbp_norm > rep.bbp_threshold;
    return row;
}

}  // namespace detail

inline constexpr double kTransitionPhiTol = 1e-8;  // quadrature noise floor

// Sweeps phi* along the family, locates the first grid point where the
// free energy leaves zero, and refines the transition by bisection to
// 1e-4 relative in t. A jump in ||Q*||_F across the refined transition
// larger than 5% of ||E x x^T||_F marks the transition first-order.
inline ScanResult phase_scan(const ProfileFamily& family, const Prior& prior,
                             const std::vector<double>& grid,
                             const FixedPointOptions& opt = {}) {
    if (grid.empty()) throw SpecError("phase_scan: empty grid");
    ScanResult res;
    for (double t : grid)
        res.rows.push_back(detail::scan_point(family, t, prior, opt));

    size_t first_on = res.rows.size();
    for (size_t i = 0; i < res.rows.size(); ++i)
        if (res.rows[i].phi_star > kTransitionPhiTol) {
            first_on = i;
            break;
        }
    if (first_on == res.rows.size() || first_on == 0) return res;

    double lo = res.rows[first_on - 1].t;
    double hi = res.rows[first_on].t;
    ScanRow row_lo = res.rows[first_on - 1];
    ScanRow row_hi = res.rows[first_on];
    while (hi - lo > 1e-4 * std::max(1.0, std::abs(hi))) {
        double mid = (lo + hi) / 2.0;
        ScanRow row_mid = detail::scan_point(family, mid, prior, opt);
        if (row_mid.phi_star > kTransitionPhiTol) {
            hi = mid;
            row_hi = row_mid;
        } else {
            lo = mid;
            row_lo = row_mid;
        }
    }
    res.transition_found = true;
    res.t_star = hi;
    res.op_norm_star = row_hi.op_norm;
    double scale = prior.second_moment().norm();
    res.q_jump = (row_hi.q_norm - row_lo.q_norm) / std::max(scale, 1e-12);
    res.first_order = res.q_jump > 0.05;
    return res;
}

}  // namespace inhomo
