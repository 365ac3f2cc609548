#include "inhomo/simulate.hpp"

#include <doctest.h>

#include <random>

using namespace inhomo;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("block assignment") {
    SUBCASE("largest remainder sums to N") {
        Vector rho(3);
        rho << 1.0 / 3, 1.0 / 3, 1.0 / 3;
        auto sizes = block_sizes(rho, 10);
        CHECK(sizes[0] + sizes[1] + sizes[2] == 10);
        CHECK(sizes[0] == 4);  // first block takes the remainder
        CHECK(sizes[1] == 3);
        CHECK(sizes[2] == 3);
    }
    SUBCASE("proportions respected") {
        auto sizes = block_sizes(vec2(0.4, 0.6), 1000);
        CHECK(sizes[0] == 400);
        CHECK(sizes[1] == 600);
        auto idx = block_index(vec2(0.4, 0.6), 1000);
        CHECK(idx[0] == 0);
        CHECK(idx[399] == 0);
        CHECK(idx[400] == 1);
        CHECK(idx[999] == 1);
    }
}

TEST_CASE("signal sampling") {
    SUBCASE("point mass gives constant column") {
        Prior one = Prior::finite(1, {Vector::Constant(1, 1.0)}, {1.0});
        Matrix x = sample_signal(one, {50, 7});
        CHECK(x.rows() == 50);
        CHECK((x.array() == 1.0).all());
    }
    SUBCASE("determinism and seed sensitivity") {
        Prior r = Prior::sparse_rademacher(0.5);
        Matrix a = sample_signal(r, {200, 42});
        Matrix b = sample_signal(r, {200, 42});
        Matrix c = sample_signal(r, {200, 43});
        CHECK(a == b);
        CHECK(a != c);
    }
    SUBCASE("rademacher empirical mean within 4 sigma") {
        Prior r = Prior::sparse_rademacher(0.5);
        int n = 100000;
        Matrix x = sample_signal(r, {n, 5});
        CHECK(std::abs(x.col(0).mean()) < 4.0 / std::sqrt(double(n)));
    }
    SUBCASE("gaussian prior moments") {
        Prior g = Prior::standard_gaussian(2);
        int n = 50000;
        Matrix x = sample_signal(g, {n, 9});
        CHECK(std::abs(x.col(0).mean()) < 4.0 / std::sqrt(double(n)));
        CHECK(x.col(1).squaredNorm() / n ==
              doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("spiked matrix sampling") {
    NoiseProfile p = NoiseProfile::homogeneous(1.0);
    Prior r = Prior::sparse_rademacher(0.5);
    SUBCASE("symmetry") {
        SimConfig cfg{40, 3};
        Matrix y = sample_spiked(p, sample_signal(r, cfg), cfg);
        CHECK(y.isApprox(y.transpose()));
    }
    SUBCASE("pure noise edge at 2") {
        SimConfig cfg{2000, 11};
        Prior zero = Prior::finite(1, {Vector::Zero(1)}, {1.0});
        Matrix y = sample_spiked(p, sample_signal(zero, cfg), cfg) /
                   std::sqrt(2000.0);
        CHECK(top_eigenvalue(y) == doctest::Approx(2.0).epsilon(0.025));
    }
    SUBCASE("strong spike dominates weak noise") {
        // inv_delta huge means the noise is nearly zero: Y/sqrt(N) is
        // close to the rank-one spike with eigenvalue E x^2 = 1
        SimConfig cfg{500, 2};
        NoiseProfile quiet = NoiseProfile::homogeneous(1e8);
        Matrix y = sample_spiked(quiet, sample_signal(r, cfg), cfg) /
                   std::sqrt(500.0);
        CHECK(top_eigenvalue(y) == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("channel data sampling") {
    Vector rho = vec2(0.5, 0.5);
    SUBCASE("lambda 0 reduces to inhomogeneous erdos-renyi") {
        ChannelFamily ch = dcsbm_channel(vec2(0.3, 0.7), 0.0, rho);
        Prior r = Prior::sparse_rademacher(0.5);
        SimConfig cfg{2000, 17};
        Matrix d = sample_channel_data(ch, sample_signal(r, cfg), cfg);
        CHECK(d.isApprox(d.transpose()));
        auto idx = block_index(rho, cfg.N);
        double sum = 0.0;
        long count = 0;
        for (int i = 0; i < cfg.N; ++i)
            for (int j = i + 1; j < cfg.N; ++j)
                if (idx[i] == 0 && idx[j] == 1) {
                    sum += d(i, j);
                    ++count;
                }
        double phat = sum / count;
        double sigma = std::sqrt(0.21 * 0.79 / count);
        CHECK(std::abs(phat - 0.21) < 4.0 * sigma);
    }
    SUBCASE("probability out of range throws") {
        ChannelFamily ch = dcsbm_channel(vec2(0.999, 0.999), 10.0, rho);
        Prior big = Prior::finite(1, {Vector::Constant(1, 1.0)}, {1.0});
        SimConfig cfg{16, 1};  // lambda w = 10/4 pushes p above 1
        CHECK_THROWS_AS(sample_channel_data(ch, sample_signal(big, cfg), cfg),
                        SpecError);
    }
    SUBCASE("custom channels are not samplable") {
        std::vector<std::vector<std::vector<ChannelEntry>>> table(1);
        table[0].resize(1);
        table[0][0] = {{0.0, 1.0, 0.0, 0.0}};
        ChannelFamily ch = custom_channel(table, Vector::Constant(1, 1.0));
        Prior r = Prior::sparse_rademacher(0.5);
        SimConfig cfg{10, 1};
        CHECK_THROWS_AS(sample_channel_data(ch, sample_signal(r, cfg), cfg),
                        SpecError);
    }
}

TEST_CASE("effective matrix") {
    Vector rho = vec2(0.5, 0.5);
    ChannelFamily ch = dcsbm_channel(vec2(0.5, 0.5), 1.0, rho);
    SimConfig cfg{100, 1};
    Matrix d = Matrix::Zero(cfg.N, cfg.N);
    d(0, 1) = 1.0;
    d(1, 0) = 1.0;
    Matrix eff = effective_matrix(ch, d, cfg);
    CHECK(eff(0, 1) == doctest::Approx(4.0 / 10.0));        // score / sqrt(N)
    CHECK(eff(0, 2) == doctest::Approx(-4.0 / 3.0 / 10.0));
    Matrix scaled = effective_matrix(ch, d, cfg, true);
    CHECK(scaled(0, 1) == doctest::Approx(0.75 / 10.0));    // Delta * score

    SUBCASE("gaussian channel self-reduction") {
        ChannelFamily g = gaussian_channel(
            NoiseProfile(Vector::Constant(1, 1.0),
                         Matrix::Constant(1, 1, 4.0)));  // Delta = 1/4
        SimConfig c1{4, 1};
        Matrix data = Matrix::Constant(4, 4, 0.5);
        Matrix e = effective_matrix(g, data, c1);
        CHECK(e(1, 2) == doctest::Approx(0.5 * 4.0 / 2.0));  // D/Delta/sqrt(N)
    }
}

TEST_CASE("empirical spectrum") {
    SUBCASE("identity and diagonal") {
        Vector s = empirical_spectrum(Matrix::Identity(3, 3));
        CHECK(s.isApproxToConstant(1.0));
        Matrix d = Vector::LinSpaced(3, 1.0, 3.0).asDiagonal();
        Vector sd = empirical_spectrum(d);
        CHECK(sd(0) == doctest::Approx(1.0));
        CHECK(sd(2) == doctest::Approx(3.0));
    }
    SUBCASE("trace preserved") {
        std::mt19937 gen(1);
        std::normal_distribution<double> nd;
        int n = 60;
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = nd(gen);
        Matrix sym = (a + a.transpose()) / 2.0;
        Vector ev = empirical_spectrum(sym);
        CHECK(ev.sum() == doctest::Approx(sym.trace()).epsilon(1e-10));
        CHECK(std::is_sorted(ev.data(), ev.data() + n));
        CHECK(top_eigenvalue(sym) ==
              doctest::Approx(ev(n - 1)).epsilon(1e-8));
    }
}

TEST_CASE("ks distance") {
    Vector a = Vector::Zero(5), b = Vector::Ones(5);
    CHECK(ks_distance(a, a) == doctest::Approx(0.0));
    CHECK(ks_distance(a, b) == doctest::Approx(1.0));
    Vector c(4);
    c << 0.0, 0.0, 1.0, 1.0;
    CHECK(ks_distance(a, c) == doctest::Approx(0.5));
}

TEST_CASE("top outlier rule") {
    // at N=1000 the fluctuation allowance is max(0.02, 2 N^{-2/3}) = 0.02
    std::vector<SupportInterval> edges = {{-2.0, 2.0}};
    Vector spec = Vector::Zero(1000);
    spec(999) = 2.6;
    auto o = top_outlier(spec, edges);
    REQUIRE(o.has_value());
    CHECK(o->value == doctest::Approx(2.6));
    CHECK(o->gap == doctest::Approx(0.6));
    Vector bulk = Vector::Zero(1000);
    bulk(999) = 2.005;
    CHECK(!top_outlier(bulk, edges).has_value());
}

TEST_CASE("within-block exchangeability of spectra") {
    // permuting signal entries inside a block changes the sample but
    // not the spectral law; at N=500 the two spectra stay KS-close
    Vector rho = vec2(0.5, 0.5);
    ChannelFamily ch = dcsbm_channel(vec2(0.4, 0.8), 1.0, rho);
    SimConfig cfg{500, 21};
    Matrix x = sample_signal(Prior::sparse_rademacher(0.5), cfg);
    Matrix xp = x;
    for (int i = 0; i < 250; i += 2) xp.row(i).swap(xp.row(249 - i));
    Vector s1 = empirical_spectrum(
        effective_matrix(ch, sample_channel_data(ch, x, cfg), cfg));
    Vector s2 = empirical_spectrum(
        effective_matrix(ch, sample_channel_data(ch, xp, cfg), cfg));
    CHECK(ks_distance(s1, s2) < 0.1);
}
