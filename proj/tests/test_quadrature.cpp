#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <bitap/quadrature.hpp>

#include "oracles.hpp"

using namespace bitap;

TEST_CASE("legendre rule integrates polynomials exactly", "[quadrature]") {
    std::vector<double> x, w;
    legendre_nodes(8, x, w);
    REQUIRE(x.size() == 8);
    // integral of t^k over [-1, 1]: 0 for odd k, 2/(k+1) for even k; exact up to k = 15
    for (int k = 0; k <= 15; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::pow(x[i], k);
        double expect = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
        REQUIRE(acc == Catch::Approx(expect).margin(1e-14));
    }
}

TEST_CASE("gaussian rule normalizes and reproduces moments", "[quadrature]") {
    for (double s : {0.3, 1.0, 2.5, 5.4}) {
        const GaussianRule& r = gaussian_rule(s);
        REQUIRE(r.w.sum() == Catch::Approx(1.0).margin(1e-13));
        REQUIRE((r.w * r.u).sum() == Catch::Approx(0.0).margin(1e-13));
        REQUIRE((r.w * r.u.square()).sum() == Catch::Approx(1.0).margin(1e-12));
        REQUIRE((r.w * r.u.square().square()).sum() == Catch::Approx(3.0).margin(1e-11));
    }
}

TEST_CASE("gauss_expect degenerate and polynomial cases", "[quadrature]") {
    // qhat = 0 collapses to a point evaluation
    double t = std::tanh(1.3);
    REQUIRE(gauss_expect(Integrand::TanhPrime, 1.3, 0.0) == Catch::Approx(1.0 - t * t));
    // E[(h + sqrt(q) u)^2] = h^2 + q exactly
    double val = gauss_expect_f([](double y) { return y * y; }, 0.7, 3.2);
    REQUIRE(val == Catch::Approx(0.7 * 0.7 + 3.2).margin(1e-12));
    // odd symmetry at h = 0
    REQUIRE(gauss_expect(Integrand::Tanh, 0.0, 2.0) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("gaussian integration by parts identity", "[quadrature]") {
    // E[u tanh(h + s u)] = s E[tanh'(h + s u)] for u ~ N(0,1), any h and s
    for (double qhat : {0.5, 4.0, 12.0, 25.0}) {
        for (double h : {-2.0, 0.4, 1.0}) {
            double s = std::sqrt(qhat);
            double lhs = gauss_expect_f(
                [&](double y) { return (y - h) / s * std::tanh(y); }, h, qhat);
            double rhs = s * gauss_expect(Integrand::TanhPrime, h, qhat);
            REQUIRE(lhs == Catch::Approx(rhs).margin(1e-12));
        }
    }
}

TEST_CASE("gauss_expect matches Monte Carlo at small and large variance", "[quadrature]") {
    const std::int64_t n = 2'000'000;
    struct Point {
        Integrand tag;
        double h, qhat;
        std::uint64_t seed;
    };
    const Point pts[] = {
        {Integrand::TanhPrime, 2.0, 0.6, 101},  {Integrand::Tanh, -1.0, 3.0, 102},
        {Integrand::TanhSq, 0.5, 12.0, 103},    {Integrand::TanhPrimeSq, 1.0, 20.0, 104},
        {Integrand::TanhPrime, 2.0, 29.0, 105},
    };
    for (const Point& p : pts) {
        auto f = [&](double y) {
            double t = std::tanh(y), d = 1.0 - t * t;
            switch (p.tag) {
                case Integrand::TanhPrime: return d;
                case Integrand::TanhPrimeSq: return d * d;
                case Integrand::Tanh: return t;
                case Integrand::TanhSq: return t * t;
            }
            return 0.0;
        };
        oracle::McEstimate mc = oracle::mc_gauss_expect(f, p.h, p.qhat, n, p.seed);
        double quad = gauss_expect(p.tag, p.h, p.qhat);
        INFO("h=" << p.h << " qhat=" << p.qhat << " mc=" << mc.mean << "+-" << mc.se);
        REQUIRE(std::abs(quad - mc.mean) < 4.0 * mc.se + 1e-12);
    }
}

TEST_CASE("gauss_expect argument validation", "[quadrature]") {
    REQUIRE_THROWS_AS(gauss_expect(Integrand::Tanh, 0.5, -1.0), usage_error);
    REQUIRE_THROWS_AS(gauss_expect(Integrand::Tanh, 0.5, 1.0, 4), usage_error);
    REQUIRE_THROWS_AS(gaussian_rule(1.0, 1), usage_error);
}
