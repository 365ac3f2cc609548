#include "inhomo/spectral.hpp"

#include <doctest.h>

using namespace inhomo;

namespace {

NoiseProfile two_block_profile() {
    Vector rho(2);
    rho << 0.4, 0.6;
    Matrix s(2, 2);
    s << 2.0, 0.5, 0.5, 1.0;
    return NoiseProfile(rho, s);
}

}  // namespace

TEST_CASE("qve closed forms") {
    SUBCASE("homogeneous at z = i: scalar quadratic root") {
        QveResult r =
            qve_solve(NoiseProfile::homogeneous(1.0), Complex(0.0, 1.0));
        CHECK(r.converged);
        CHECK(r.m(0).real() == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(r.m(0).imag() ==
              doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-10));
    }
    SUBCASE("decay at large imaginary part") {
        QveResult r =
            qve_solve(two_block_profile(), Complex(0.0, 1000.0));
        CHECK(r.m.cwiseAbs().maxCoeff() < 1.1e-3);
    }
    SUBCASE("lower half plane rejected") {
        CHECK_THROWS_AS(
            qve_solve(NoiseProfile::homogeneous(1.0), Complex(0.0, -1.0)),
            SpecError);
    }
}

TEST_CASE("herglotz and monotonicity") {
    NoiseProfile p = two_block_profile();
    for (double x : {-1.5, 0.0, 0.7, 2.0}) {
        double prev = 1e300;
        for (double eta : {0.25, 0.5, 1.0, 2.0}) {
            QveResult r = qve_solve(p, Complex(x, eta));
            for (int s = 0; s < p.n; ++s) CHECK(r.m(s).imag() > 0.0);
            double bound = r.m.cwiseAbs().maxCoeff();
            CHECK(bound <= prev + 1e-12);  // nonincreasing up the line
            prev = bound;
        }
    }
}

TEST_CASE("density") {
    NoiseProfile h = NoiseProfile::homogeneous(1.0);
    SUBCASE("semicircle center") {
        CHECK(density_at(h, 0.0, 1e-6) ==
              doctest::Approx(1.0 / M_PI).epsilon(1e-5));
    }
    SUBCASE("outside support") {
        CHECK(density_at(h, 3.0, 1e-4) < 1e-3);
    }
    SUBCASE("symmetry of the density") {
        NoiseProfile p = two_block_profile();
        for (double x : {0.3, 0.9, 1.7}) {
            double a = density_at(p, x, 1e-6);
            double b = density_at(p, -x, 1e-6);
            CHECK(a == doctest::Approx(b).epsilon(1e-8));
        }
    }
    SUBCASE("normalization") {
        std::vector<double> xs;
        int m = 2001;
        for (int i = 0; i < m; ++i)
            xs.push_back(-2.2 + 4.4 * i / (m - 1));
        auto table = density(h, xs, 1e-6);
        double integral = 0.0;
        for (int i = 1; i < m; ++i)
            integral += 0.5 * (table[i].rho + table[i - 1].rho) *
                        (table[i].x - table[i - 1].x);
        CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("support edges") {
    SUBCASE("homogeneous semicircle edges, scaling law") {
        for (double s : {1.0, 4.0}) {
            auto edges = support_edges(NoiseProfile::homogeneous(s));
            REQUIRE(edges.size() == 1);
            CHECK(edges[0].lo ==
                  doctest::Approx(-2.0 * std::sqrt(s)).epsilon(1e-4));
            CHECK(edges[0].hi ==
                  doctest::Approx(2.0 * std::sqrt(s)).epsilon(1e-4));
        }
    }
    SUBCASE("two-block support is symmetric") {
        auto edges = support_edges(two_block_profile());
        REQUIRE(!edges.empty());
        CHECK(edges.front().lo == doctest::Approx(-edges.back().hi)
                                      .epsilon(1e-6));
    }
}

TEST_CASE("stieltjes transform consistent with density") {
    // reconstruct sum_s rho_s m_s(x0 + i/2) by the Cauchy integral of
    // the density and compare against the direct solve
    NoiseProfile p = two_block_profile();
    auto edges = support_edges(p);
    double lo = edges.front().lo - 0.3, hi = edges.back().hi + 0.3;
    int m = 4001;
    std::vector<double> xs;
    for (int i = 0; i < m; ++i) xs.push_back(lo + (hi - lo) * i / (m - 1));
    auto table = density(p, xs, 1e-6);
    Complex z(0.4, 0.5);
    Complex integral = 0.0;
    for (int i = 1; i < m; ++i) {
        double dx = table[i].x - table[i - 1].x;
        integral += 0.5 * (table[i].rho / (table[i].x - z) +
                           table[i - 1].rho / (table[i - 1].x - z)) * dx;
    }
    QveResult r = qve_solve(p, z);
    Complex direct = 0.0;
    for (int s = 0; s < p.n; ++s) direct += p.rho(s) * r.m(s);
    CHECK(std::abs(integral - direct) < 1e-3);
}

TEST_CASE("outlier prediction") {
    SUBCASE("homogeneous gamma = 2 pops at 2.5") {
        Prior spike =
            Prior::finite(1,
                          {Vector::Constant(1, std::sqrt(2.0)),
                           Vector::Constant(1, -std::sqrt(2.0))},
                          {0.5, 0.5});
        OutlierReport rep =
            outlier_predict(NoiseProfile::homogeneous(1.0), spike);
        REQUIRE(rep.directions.size() == 1);
        REQUIRE(rep.directions[0].outliers.size() == 1);
        CHECK(rep.directions[0].outliers[0] ==
              doctest::Approx(2.5).epsilon(1e-6));
    }
    SUBCASE("gamma = 1/2 stays in the bulk") {
        Prior spike =
            Prior::finite(1,
                          {Vector::Constant(1, std::sqrt(0.5)),
                           Vector::Constant(1, -std::sqrt(0.5))},
                          {0.5, 0.5});
        OutlierReport rep =
            outlier_predict(NoiseProfile::homogeneous(1.0), spike);
        CHECK(!rep.any_outlier());
    }
    SUBCASE("gamma formula across strengths") {
        for (double gamma : {1.5, 3.0}) {
            Prior spike =
                Prior::finite(1,
                              {Vector::Constant(1, std::sqrt(gamma)),
                               Vector::Constant(1, -std::sqrt(gamma))},
                              {0.5, 0.5});
            OutlierReport rep =
                outlier_predict(NoiseProfile::homogeneous(1.0), spike);
            REQUIRE(rep.any_outlier());
            CHECK(rep.top() ==
                  doctest::Approx(gamma + 1.0 / gamma).epsilon(1e-6));
        }
    }
}
