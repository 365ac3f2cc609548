#pragma once

// Output-channel abstraction: per-block log-likelihoods g_{st}(D,w),
// their Fisher scores at w=0, and the score transform that reduces any
// channel to the Gaussian spiked model.

#include "inhomo/core.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace inhomo {

enum class ChannelKind { gaussian, dcsbm, custom };

// One row of a tabulated custom channel: an observable value with its
// null probability and the score/curvature of the log-likelihood there.
struct ChannelEntry {
    double value = 0.0;
    double prob = 0.0;
    double score = 0.0;
    double curvature = 0.0;
};

struct ChannelFamily {
    ChannelKind kind = ChannelKind::gaussian;
    int n = 1;
    Vector rho;

    // gaussian
    Matrix delta;           // per-block variances Delta_{st}

    // dcsbm
    Vector theta;
    double lambda = 0.0;

    // custom: table[s][t] lists (value, prob, score, curvature) tuples
    std::vector<std::vector<std::vector<ChannelEntry>>> table;

    double score(double d, int s, int t) const {
        switch (kind) {
            case ChannelKind::gaussian:
                return d / delta(s, t);
            case ChannelKind::dcsbm: {
                double p = theta(s) * theta(t);
                if (d == 1.0) return lambda / p;
                if (d == 0.0) return -lambda / (1.0 - p);
                throw SpecError("dcsbm: data entry must be 0 or 1");
            }
            case ChannelKind::custom: {
                for (const auto& e : table[s][t])
                    if (e.value == d) return e.score;
                throw SpecError("custom channel: value not in table");
            }
        }
        throw SpecError("unknown channel kind");
    }

    double curvature(double d, int s, int t) const {
        switch (kind) {
            case ChannelKind::gaussian:
                return -1.0 / delta(s, t);
            case ChannelKind::dcsbm: {
                double p = theta(s) * theta(t);
                double l2 = lambda * lambda;
                if (d == 1.0) return -l2 / (p * p);
                if (d == 0.0) return -l2 / ((1.0 - p) * (1.0 - p));
                throw SpecError("dcsbm: data entry must be 0 or 1");
            }
            case ChannelKind::custom: {
                for (const auto& e : table[s][t])
                    if (e.value == d) return e.curvature;
                throw SpecError("custom channel: value not in table");
            }
        }
        throw SpecError("unknown channel kind");
    }

    // E[score] under the null channel; should vanish for any valid
    // log-likelihood family. Gaussian and dcsbm are exactly centered.
    double null_score_mean(int s, int t) const {
        switch (kind) {
            case ChannelKind::gaussian:
                return 0.0;
            case ChannelKind::dcsbm: {
                double p = theta(s) * theta(t);
                return p * score(1.0, s, t) + (1.0 - p) * score(0.0, s, t);
            }
            case ChannelKind::custom: {
                double m = 0.0;
                for (const auto& e : table[s][t]) m += e.prob * e.score;
                return m;
            }
        }
        throw SpecError("unknown channel kind");
    }
};

inline ChannelFamily dcsbm_channel(const Vector& theta, double lambda,
                                   const Vector& rho) {
    if (theta.size() != rho.size())
        throw SpecError("dcsbm: theta and rho sizes differ");
    for (int s = 0; s < theta.size(); ++s)
        if (theta(s) <= 0.0 || theta(s) >= 1.0)
            throw SpecError("dcsbm: theta entries must lie in (0,1)");
    ChannelFamily ch;
    ch.kind = ChannelKind::dcsbm;
    ch.n = static_cast<int>(theta.size());
    ch.rho = rho;
    ch.theta = theta;
    ch.lambda = lambda;
    return ch;
}

inline ChannelFamily gaussian_channel(const NoiseProfile& profile) {
    profile.validate();
    if (profile.inv_delta.minCoeff() <= 0.0)
        throw SpecError("gaussian channel: inv_delta entries must be positive");
    ChannelFamily ch;
    ch.kind = ChannelKind::gaussian;
    ch.n = profile.n;
    ch.rho = profile.rho;
    ch.delta = profile.inv_delta.cwiseInverse();
    return ch;
}

inline ChannelFamily custom_channel(
    std::vector<std::vector<std::vector<ChannelEntry>>> table,
    const Vector& rho) {
    ChannelFamily ch;
    ch.kind = ChannelKind::custom;
    ch.n = static_cast<int>(rho.size());
    ch.rho = rho;
    ch.table = std::move(table);
    if (static_cast<int>(ch.table.size()) != ch.n)
        throw SpecError("custom channel: table must be n x n");
    return ch;
}

// Fisher information per block pair: 1/Delta_{st} = E[score^2] under the
// null channel. Closed form for dcsbm, exact for gaussian, a weighted
// sum over the table for custom channels.
inline NoiseProfile fisher_information(const ChannelFamily& ch) {
    Matrix s(ch.n, ch.n);
    switch (ch.kind) {
        case ChannelKind::gaussian:
            s = ch.delta.cwiseInverse();
            break;
        case ChannelKind::dcsbm: {
            double l2 = ch.lambda * ch.lambda;
            for (int a = 0; a < ch.n; ++a)
                for (int b = 0; b < ch.n; ++b) {
                    double p = ch.theta(a) * ch.theta(b);
                    s(a, b) = l2 / p + l2 / (1.0 - p);
                }
            break;
        }
        case ChannelKind::custom: {
            for (int a = 0; a < ch.n; ++a)
                for (int b = 0; b < ch.n; ++b) {
                    double v = 0.0, psum = 0.0;
                    for (const auto& e : ch.table[a][b]) {
                        v += e.prob * e.score * e.score;
                        psum += e.prob;
                    }
                    if (!std::isfinite(v) || std::abs(psum - 1.0) > 1e-9)
                        throw NumericError(
                            "custom channel: null distribution does not "
                            "normalize or score is non-integrable");
                    s(a, b) = v;
                }
            break;
        }
    }
    return NoiseProfile(ch.rho, s);
}

// Fisher score of one data entry; with scale_by_delta the entry of the
// effective Gaussian-model matrix Delta_{st} * score.
inline double score_transform(const ChannelFamily& ch, double d, int s, int t,
                              bool scale_by_delta = false) {
    double v = ch.score(d, s, t);
    if (scale_by_delta) {
        NoiseProfile fi = fisher_information(ch);
        double inv = fi.inv_delta(s, t);
        if (inv <= 0.0)
            throw NumericError("score_transform: degenerate channel (zero "
                               "Fisher information)");
        v /= inv;
    }
    return v;
}

}  // namespace inhomo
