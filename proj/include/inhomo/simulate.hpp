#pragma once

// Finite-N Monte Carlo: signal and matrix sampling, channel data,
// score-transformed effective matrices, and empirical spectra.

#include "inhomo/channels.hpp"
#include "inhomo/core.hpp"
#include "inhomo/rng.hpp"
#include "inhomo/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace inhomo {

struct SimConfig {
    int N = 1000;
    std::uint64_t seed = 1;
};

// reserved Philox stream ids per sampled object
namespace stream {
inline constexpr std::uint32_t signal = 0;
inline constexpr std::uint32_t noise = 1;
inline constexpr std::uint32_t data = 2;
}  // namespace stream

// Contiguous block sizes round(rho_s * N) with largest-remainder
// correction so they sum exactly to N.
inline std::vector<int> block_sizes(const Vector& rho, int N) {
    int n = static_cast<int>(rho.size());
    std::vector<int> sizes(n);
    std::vector<std::pair<double, int>> rem(n);
    int total = 0;
    for (int s = 0; s < n; ++s) {
        double exact = rho(s) * N;
        sizes[s] = static_cast<int>(std::floor(exact));
        rem[s] = {exact - sizes[s], s};
        total += sizes[s];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int k = 0; k < N - total; ++k) ++sizes[rem[k].second];
    return sizes;
}

// b(i): block index of row i under contiguous assignment.
inline std::vector<int> block_index(const Vector& rho, int N) {
    std::vector<int> idx(N);
    std::vector<int> sizes = block_sizes(rho, N);
    int i = 0;
    for (size_t s = 0; s < sizes.size(); ++s)
        for (int k = 0; k < sizes[s]; ++k) idx[i++] = static_cast<int>(s);
    return idx;
}

// N x kappa matrix of i.i.d. prior draws, deterministic in the seed.
inline Matrix sample_signal(const Prior& prior, const SimConfig& config) {
    prior.validate();
    Matrix x(config.N, prior.kappa);
    if (prior.gaussian) {
        for (int i = 0; i < config.N; ++i)
            for (int k = 0; k < prior.kappa; ++k)
                x(i, k) = gaussian_at(config.seed, stream::signal, i, k).a;
        return x;
    }
    for (int i = 0; i < config.N; ++i) {
        double u = uniform_at(config.seed, stream::signal, i, 0);
        double acc = 0.0;
        size_t pick = prior.atoms.size() - 1;
        for (size_t a = 0; a < prior.atoms.size(); ++a) {
            acc += prior.weights[a];
            if (u <= acc) {
                pick = a;
                break;
            }
        }
        x.row(i) = prior.atoms[pick].transpose();
    }
    return x;
}

// Y_ij = sqrt(Delta_{b(i)b(j)}) W_ij + x_i . x_j / sqrt(N) with
// W_ij ~ N(0,1); spectra of Y/sqrt(N) are order one. The diagonal is
// pure noise.
inline Matrix sample_spiked(const NoiseProfile& profile, const Matrix& signal,
                            const SimConfig& config) {
    int N = config.N;
    if (signal.rows() != N) throw SpecError("sample_spiked: signal size");
    std::vector<int> b = block_index(profile.rho, N);
    Matrix delta_sqrt = profile.inv_delta.cwiseInverse().cwiseSqrt();
    Matrix y(N, N);
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            double w = gaussian_at(config.seed, stream::noise, i, j).a;
            double v = delta_sqrt(b[i], b[j]) * w;
            if (j > i) v += signal.row(i).dot(signal.row(j)) * inv_sqrt_n;
            y(i, j) = v;
            y(j, i) = v;
        }
    }
    return y;
}

// Independent channel observations at w_ij = x_i . x_j / sqrt(N),
// symmetrized. dcsbm yields an adjacency matrix; gaussian yields
// w + sqrt(Delta) noise.
inline Matrix sample_channel_data(const ChannelFamily& ch,
                                  const Matrix& signal,
                                  const SimConfig& config) {
    int N = config.N;
    if (signal.rows() != N)
        throw SpecError("sample_channel_data: signal size");
    std::vector<int> b = block_index(ch.rho, N);
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    Matrix d(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            double w = (j > i) ? signal.row(i).dot(signal.row(j)) * inv_sqrt_n
                               : 0.0;
            double v = 0.0;
            switch (ch.kind) {
                case ChannelKind::dcsbm: {
                    double p = ch.theta(b[i]) * ch.theta(b[j]) + ch.lambda * w;
                    if (p < 0.0 || p > 1.0)
                        throw SpecError(
                            "sample_channel_data: edge probability outside "
                            "[0,1] in block pair (" + std::to_string(b[i]) +
                            "," + std::to_string(b[j]) + ")");
                    v = uniform_at(config.seed, stream::data, i, j) <= p
                            ? 1.0
                            : 0.0;
                    break;
                }
                case ChannelKind::gaussian:
                    v = w + std::sqrt(ch.delta(b[i], b[j])) *
                                gaussian_at(config.seed, stream::data, i, j).a;
                    break;
                case ChannelKind::custom:
                    throw SpecError(
                        "sample_channel_data: custom channels are tabulated "
                        "descriptions, not samplable distributions");
            }
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

// Entrywise Fisher score of the data, scaled by 1/sqrt(N) so that the
// spectrum is order one; with scale_by_delta the score is multiplied
// by Delta_{st} first.
inline Matrix effective_matrix(const ChannelFamily& ch, const Matrix& data,
                               const SimConfig& config,
                               bool scale_by_delta = false) {
    int N = config.N;
    if (data.rows() != N || data.cols() != N)
        throw SpecError("effective_matrix: data size");
    std::vector<int> b = block_index(ch.rho, N);
    double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    Matrix out(N, N);
    if (ch.kind == ChannelKind::dcsbm) {
        // precompute the two score values per block pair
        NoiseProfile fi = fisher_information(ch);
        Matrix s0(ch.n, ch.n), s1(ch.n, ch.n);
        for (int s = 0; s < ch.n; ++s)
            for (int t = 0; t < ch.n; ++t) {
                double scale =
                    scale_by_delta ? 1.0 / fi.inv_delta(s, t) : 1.0;
                s1(s, t) = scale * ch.score(1.0, s, t);
                s0(s, t) = scale * ch.score(0.0, s, t);
            }
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double d = data(i, j);
                if (d != 0.0 && d != 1.0)
                    throw SpecError("effective_matrix: dcsbm entry not 0/1");
                out(i, j) = (d == 1.0 ? s1(b[i], b[j]) : s0(b[i], b[j])) *
                            inv_sqrt_n;
            }
        return out;
    }
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            out(i, j) = score_transform(ch, data(i, j), b[i], b[j],
                                        scale_by_delta) *
                        inv_sqrt_n;
    return out;
}

// All eigenvalues, ascending (divide-and-conquer LAPACK solver).
inline Vector empirical_spectrum(Matrix m) {
    if (m.rows() != m.cols())
        throw SpecError("empirical_spectrum: matrix not square");
    int n = static_cast<int>(m.rows());
    Vector ev(n);
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, m.data(), n,
                              ev.data());
    if (info != 0)
        throw NumericError("empirical_spectrum: dsyevd failed, info " +
                           std::to_string(info));
    return ev;
}

// Largest eigenvalue by Lanczos with full reorthogonalization;
// deterministic start vector.
inline double top_eigenvalue(const Matrix& m, int max_steps = 200,
                             double tol = 1e-10) {
    int n = static_cast<int>(m.rows());
    max_steps = std::min(max_steps, n);
    std::vector<Vector> basis;
    Vector v = Vector::Ones(n);
    for (int i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(1.0 + i);
    v.normalize();
    basis.push_back(v);
    std::vector<double> alpha, beta;
    double prev_top = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < max_steps; ++k) {
        Vector w = m.selfadjointView<Eigen::Lower>() * basis[k];
        double a = basis[k].dot(w);
        alpha.push_back(a);
        w -= a * basis[k];
        if (k > 0) w -= beta[k - 1] * basis[k - 1];
        for (const auto& q : basis) w -= q.dot(w) * q;  // reorthogonalize
        double bnorm = w.norm();

        int kk = static_cast<int>(alpha.size());
        Matrix tri = Matrix::Zero(kk, kk);
        for (int i = 0; i < kk; ++i) {
            tri(i, i) = alpha[i];
            if (i > 0) {
                tri(i, i - 1) = beta[i - 1];
                tri(i - 1, i) = beta[i - 1];
            }
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(tri,
                                                 Eigen::EigenvaluesOnly);
        double top = es.eigenvalues().maxCoeff();
        if (bnorm < 1e-12 ||
            (k > 10 && std::abs(top - prev_top) < tol))
            return top;
        prev_top = top;
        beta.push_back(bnorm);
        basis.push_back(w / bnorm);
    }
    return prev_top;
}

// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
inline double ks_distance(const Vector& a, const Vector& b) {
    if (a.size() == 0 || b.size() == 0)
        throw SpecError("ks_distance: empty spectrum");
    std::vector<double> x(a.data(), a.data() + a.size());
    std::vector<double> y(b.data(), b.data() + b.size());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        // advance past the full tie group so equal jumps cancel
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        double fi = static_cast<double>(i) / x.size();
        double fj = static_cast<double>(j) / y.size();
        d = std::max(d, std::abs(fi - fj));
    }
    return d;
}

struct Outlier {
    double value = 0.0;
    double gap = 0.0;  // distance above the upper support edge
};

// Largest eigenvalue if it clears the bulk edge by more than the
// finite-N fluctuation allowance max(0.02, 2 N^{-2/3}).
inline std::optional<Outlier> top_outlier(
    const Vector& spectrum, const std::vector<SupportInterval>& support) {
    if (spectrum.size() == 0 || support.empty())
        throw SpecError("top_outlier: empty input");
    double n = static_cast<double>(spectrum.size());
    double allowance = std::max(0.02, 2.0 * std::pow(n, -2.0 / 3.0));
    double edge = support.back().hi;
    double top = spectrum.maxCoeff();
    if (top > edge + allowance) return Outlier{top, top - edge};
    return std::nullopt;
}

}  // namespace inhomo
